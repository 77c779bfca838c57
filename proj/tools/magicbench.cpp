// magicbench command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "magicbench/magicbench.hpp"

namespace mb = magicbench;
namespace fs = std::filesystem;

namespace {

int cmd_sweep(const std::string& config_path, unsigned workers, std::optional<std::uint64_t> seed,
              const std::string& output) {
    auto cfg = mb::bench::load_sweep_config(config_path);
    if (workers > 0)
        cfg.workers = workers;
    if (seed)
        cfg.seed_base = *seed;
    if (!output.empty())
        cfg.output_dir = output;
    mb::bench::SweepOptions opt;
    opt.log = &std::cerr;
    const auto out = mb::bench::run_sweep(cfg, opt);
    std::cout << "records: " << out.records.size() << " (computed " << out.computed << ", resumed " << out.resumed
              << ", failed " << out.failed << ")\n"
              << "output: " << cfg.output_dir << "\n";
    return out.failed > 0 ? 2 : 0;
}

int cmd_report(const std::string& records_path, const std::string& output) {
    const auto records = mb::bench::load_records(records_path);
    const auto rows = mb::bench::aggregate(records, &std::cerr);
    const fs::path dir = output.empty() ? fs::path(records_path).parent_path() : fs::path(output);
    const auto files = mb::bench::emit_report(dir.empty() ? fs::path(".") : dir, rows, records);
    for (const auto& f : files)
        std::cout << f.string() << "\n";
    std::size_t failed = 0;
    for (const auto& r : records)
        failed += r.failed ? 1 : 0;
    return failed > 0 ? 2 : 0;
}

int cmd_ed(int n, double h, double J, bool open, const std::string& write_state, unsigned workers) {
    const mb::TfimModel model{n, J, h, !open};
    const auto r = mb::ground_state_ed(model);
    const auto m = mb::m2_fast(r.state, workers);
    std::printf("n=%d J=%g h=%g %s\n", n, J, h, open ? "open" : "periodic");
    std::printf("energy        %.15g\n", r.energy);
    std::printf("first_excited %.15g\n", r.first_excited);
    std::printf("gap           %.6e%s\n", r.gap, r.parity_projected ? "  (degenerate: even-parity representative)" : "");
    std::printf("m2            %.15g\n", m.m2);
    std::printf("solver        %s  residual %.3e\n", r.solver.c_str(), r.residual);
    if (!write_state.empty())
        mb::bench::write_state_file(write_state, r.state);
    return 0;
}

int cmd_magic(const std::string& path, unsigned workers) {
    const auto psi = mb::bench::read_state_file(path);
    if (!psi.is_normalized())
        throw mb::ContractError("state in " + path + " is not normalized (norm^2 = " +
                                std::to_string(psi.norm_squared()) + ")");
    const auto m = mb::m2_fast(psi, workers);
    std::printf("n=%d\nm2 %.15g\npauli_fourth_moment %.15g\n", psi.num_qubits(), m.m2, m.pauli_fourth_moment);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-state and stabilizer-entropy benchmarks for the transverse-field Ising chain"};
    app.require_subcommand(1);
    unsigned workers = 0;
    std::optional<std::uint64_t> seed;
    std::string output;
    app.add_option("--workers", workers, "worker threads (default: config value, or 1)");
    app.add_option("--seed", seed, "override seed_base");
    app.add_option("--output", output, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a benchmark sweep");
    std::string config_path;
    sweep->add_option("--config", config_path, "sweep configuration file")->required()->check(CLI::ExistingFile);

    auto* report = app.add_subcommand("report", "aggregate records and regenerate tables and plots");
    std::string records_path;
    report->add_option("--records", records_path, "records.json or records.jsonl")->required()->check(CLI::ExistingFile);

    auto* ed = app.add_subcommand("ed", "exact ground state of one model");
    ed->set_help_flag("--help", "print this help message and exit");
    int n = 8;
    double h = 1.0, J = -1.0;
    bool open = false;
    std::string write_state;
    ed->add_option("--n", n, "number of spins")->required();
    ed->add_option("--h", h, "transverse field")->required();
    ed->add_option("--J", J, "coupling");
    ed->add_flag("--open", open, "open boundary conditions");
    ed->add_option("--write-state", write_state, "write the ground state in statevector file format");

    auto* magic = app.add_subcommand("magic", "stabilizer Renyi entropy of a stored state");
    std::string state_path;
    magic->add_option("--state", state_path, "statevector file")->required()->check(CLI::ExistingFile);

    for (auto* sub : {sweep, report, ed, magic}) {
        sub->add_option("--workers", workers, "worker threads");
        sub->add_option("--seed", seed, "override seed_base");
        sub->add_option("--output", output, "output directory");
    }

    CLI11_PARSE(app, argc, argv);
    try {
        const unsigned w = workers > 0 ? workers : 1;
        if (*sweep)
            return cmd_sweep(config_path, workers, seed, output);
        if (*report)
            return cmd_report(records_path, output);
        if (*ed)
            return cmd_ed(n, h, J, open, write_state, w);
        if (*magic)
            return cmd_magic(state_path, w);
    } catch (const mb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
