#pragma once

// Sweep orchestration: runs every (h, method, repeat) job, scores the result
// against exact diagonalization, journals records so an interrupted sweep can
// resume, and writes CSV/JSON tables plus SVG plots.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magicbench/core.hpp"
#include "magicbench/dmrg.hpp"
#include "magicbench/exact.hpp"
#include "magicbench/magic.hpp"
#include "magicbench/nqs.hpp"
#include "magicbench/parallel.hpp"
#include "magicbench/random.hpp"
#include "magicbench/vqe.hpp"

namespace magicbench::bench {

namespace fs = std::filesystem;

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"ed", "rbm", "rbm_symmetric", "dmrg", "vqe"};
    return m;
}
inline bool is_deterministic_method(const std::string& m) { return m == "ed" || m == "dmrg"; }

// ---------------------------------------------------------------- config

using KeyValues = std::map<std::string, std::string>;

enum class RbmExpectation { automatic, monte_carlo, full_sum };

struct RbmMethodConfig {
    int alpha = 1;
    nqs::TrainConfig train;
    nqs::SamplerConfig sampler;
    RbmExpectation expectation = RbmExpectation::automatic;
};

struct DmrgMethodConfig {
    dmrg::DmrgConfig dmrg;
};

struct VqeMethodConfig {
    vqe::AnsatzConfig ansatz;
    vqe::VqeTrainConfig train;
};

struct SweepConfig {
    int n = 8;
    double J = -1.0;
    bool periodic = true;
    std::vector<double> h_grid;
    std::vector<std::string> methods = known_methods();
    int repeats = 10;
    std::string output_dir = "magicbench-out";
    std::uint64_t seed_base = 0;
    unsigned workers = 1;

    // Raw per-method settings: section -> key -> value, and the same keyed by h.
    std::map<std::string, KeyValues> sections;
    std::map<std::string, std::map<double, KeyValues>> h_overrides;

    void validate() const;
    RbmMethodConfig rbm_config(double h) const;
    DmrgMethodConfig dmrg_config(double h) const;
    VqeMethodConfig vqe_config(double h) const;
};

// Benchmark grid: step 0.125 up to n = 8, 0.25 beyond, over [0, 3].
inline std::vector<double> default_h_grid(int n) {
    const double step = n <= 8 ? 0.125 : 0.25;
    std::vector<double> g;
    const int count = static_cast<int>(std::lround(3.0 / step)) + 1;
    for (int k = 0; k < count; ++k)
        g.push_back(k * step);
    return g;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos, 0);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos, 0);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

// "a:step:b" (inclusive) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& v) {
    if (v.find(':') != std::string::npos) {
        const auto parts = split(v, ':');
        if (parts.size() != 3)
            throw ConfigError("h_grid range must be start:step:stop");
        const double a = to_double("h_grid", parts[0]), step = to_double("h_grid", parts[1]),
                     b = to_double("h_grid", parts[2]);
        if (!(step > 0.0) || b < a)
            throw ConfigError("h_grid range must have positive step and stop >= start");
        const long count = std::lround((b - a) / step) + 1;
        std::vector<double> g;
        for (long k = 0; k < count; ++k)
            g.push_back(a + static_cast<double>(k) * step);
        return g;
    }
    std::vector<double> g;
    for (const auto& p : split(v, ','))
        g.push_back(to_double("h_grid", p));
    return g;
}

inline void apply_rbm_key(RbmMethodConfig& c, const std::string& k, const std::string& v) {
    if (k == "alpha") c.alpha = static_cast<int>(to_int(k, v));
    else if (k == "learning_rate") c.train.learning_rate = to_double(k, v);
    else if (k == "sr_shift") c.train.sr_shift = to_double(k, v);
    else if (k == "max_epochs") c.train.max_epochs = static_cast<int>(to_int(k, v));
    else if (k == "stop_tol") c.train.stop_tol = to_double(k, v);
    else if (k == "stop_patience") c.train.stop_patience = static_cast<int>(to_int(k, v));
    else if (k == "use_sr") c.train.use_sr = to_bool(k, v);
    else if (k == "init_stddev") c.train.init_stddev = to_double(k, v);
    else if (k == "n_samples") c.sampler.n_samples = static_cast<int>(to_int(k, v));
    else if (k == "n_chains") c.sampler.n_chains = static_cast<int>(to_int(k, v));
    else if (k == "burn_in") c.sampler.burn_in = static_cast<int>(to_int(k, v));
    else if (k == "expectation_mode") {
        if (v == "auto") c.expectation = RbmExpectation::automatic;
        else if (v == "monte_carlo") c.expectation = RbmExpectation::monte_carlo;
        else if (v == "full_sum") c.expectation = RbmExpectation::full_sum;
        else throw ConfigError("rbm expectation_mode must be auto, monte_carlo or full_sum");
    } else
        throw ConfigError("unknown [rbm] key '" + k + "'");
}

inline void apply_dmrg_key(DmrgMethodConfig& c, const std::string& k, const std::string& v) {
    if (k == "max_bond") c.dmrg.max_bond = static_cast<int>(to_int(k, v));
    else if (k == "svd_cutoff") c.dmrg.svd_cutoff = to_double(k, v);
    else if (k == "max_sweeps") c.dmrg.max_sweeps = static_cast<int>(to_int(k, v));
    else if (k == "energy_tol") c.dmrg.energy_tol = to_double(k, v);
    else if (k == "local_solver_iters") c.dmrg.local_solver_iters = static_cast<int>(to_int(k, v));
    else
        throw ConfigError("unknown [dmrg] key '" + k + "'");
}

inline void apply_vqe_key(VqeMethodConfig& c, const std::string& k, const std::string& v) {
    if (k == "layers") c.ansatz.layers = static_cast<int>(to_int(k, v));
    else if (k == "entangler") c.ansatz.entangler = vqe::entangler_from_string(v);
    else if (k == "learning_rate") c.train.learning_rate = to_double(k, v);
    else if (k == "inner_tol") c.train.inner_tol = to_double(k, v);
    else if (k == "inner_window") c.train.inner_window = static_cast<int>(to_int(k, v));
    else if (k == "restart_tol") c.train.restart_tol = to_double(k, v);
    else if (k == "max_restarts") c.train.max_restarts = static_cast<int>(to_int(k, v));
    else if (k == "max_epochs") c.train.max_epochs = static_cast<int>(to_int(k, v));
    else if (k == "shots") c.train.shots = static_cast<int>(to_int(k, v));
    else if (k == "init_stddev") c.train.init_stddev = to_double(k, v);
    else if (k == "expectation_mode") {
        if (v == "exact") c.train.expectation_mode = vqe::EnergyMode::exact;
        else if (v == "shots") c.train.expectation_mode = vqe::EnergyMode::shots;
        else throw ConfigError("vqe expectation_mode must be exact or shots");
    } else if (k == "gradient") {
        if (v == "adjoint") c.train.gradient = vqe::GradientMethod::adjoint;
        else if (v == "parameter_shift") c.train.gradient = vqe::GradientMethod::parameter_shift;
        else throw ConfigError("vqe gradient must be adjoint or parameter_shift");
    } else
        throw ConfigError("unknown [vqe] key '" + k + "'");
}

template <typename Cfg, typename Apply>
Cfg build_method_config(const SweepConfig& sc, const std::string& section, double h, Cfg c, Apply apply) {
    if (auto it = sc.sections.find(section); it != sc.sections.end())
        for (const auto& [k, v] : it->second)
            apply(c, k, v);
    if (auto it = sc.h_overrides.find(section); it != sc.h_overrides.end())
        if (auto jt = it->second.find(h); jt != it->second.end())
            for (const auto& [k, v] : jt->second)
                apply(c, k, v);
    return c;
}

} // namespace detail

inline RbmMethodConfig SweepConfig::rbm_config(double h) const {
    RbmMethodConfig c;
    c.sampler.n_samples = n <= 8 ? 1000 : 5000;
    c = detail::build_method_config(*this, "rbm", h, c, detail::apply_rbm_key);
    const bool full = c.expectation == RbmExpectation::full_sum ||
                      (c.expectation == RbmExpectation::automatic && n <= 8);
    c.train.expectation_mode = full ? nqs::ExpectationMode::full_sum : nqs::ExpectationMode::monte_carlo;
    return c;
}

inline DmrgMethodConfig SweepConfig::dmrg_config(double h) const {
    return detail::build_method_config(*this, "dmrg", h, DmrgMethodConfig{}, detail::apply_dmrg_key);
}

inline VqeMethodConfig SweepConfig::vqe_config(double h) const {
    VqeMethodConfig c;
    c.ansatz.n = n;
    return detail::build_method_config(*this, "vqe", h, c, detail::apply_vqe_key);
}

inline void SweepConfig::validate() const {
    TfimModel{n, J, 0.0, periodic}.validate();
    if (repeats < 1)
        throw ConfigError("repeats must be at least 1");
    if (h_grid.empty())
        throw ConfigError("h_grid is empty");
    for (std::size_t i = 1; i < h_grid.size(); ++i)
        if (!(h_grid[i] > h_grid[i - 1]))
            throw ConfigError("h_grid must be strictly increasing");
    if (methods.empty())
        throw ConfigError("no methods selected");
    for (const auto& m : methods)
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
            throw ConfigError("unknown method '" + m + "'");
    if (n > kMaxDenseQubits)
        throw ConfigError("sweeps are limited to n <= " + std::to_string(kMaxDenseQubits));
    // surface bad per-method keys before any work starts
    for (double h : h_grid) {
        auto r = rbm_config(h);
        r.train.validate();
        if (r.train.expectation_mode == nqs::ExpectationMode::monte_carlo)
            r.sampler.validate();
        dmrg_config(h).dmrg.validate();
        auto v = vqe_config(h);
        v.ansatz.validate();
        v.train.validate();
    }
}

// Plain-text format: `key = value` lines, `#` comments, optional sections
// [rbm], [dmrg], [vqe] and per-field overrides such as [rbm h=0.5].
inline SweepConfig parse_sweep_config(std::istream& in) {
    SweepConfig c;
    bool grid_set = false;
    std::string section;
    std::optional<double> section_h;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            const auto words = detail::split(line.substr(1, line.size() - 2), ' ');
            if (words.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section header");
            section = words[0];
            if (section != "rbm" && section != "dmrg" && section != "vqe")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section '" + section + "'");
            section_h.reset();
            if (words.size() == 2 && words[1].rfind("h=", 0) == 0)
                section_h = detail::to_double("h", words[1].substr(2));
            else if (words.size() != 1)
                throw ConfigError("line " + std::to_string(lineno) + ": section qualifier must be h=<value>");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string k = detail::trim(line.substr(0, eq)), v = detail::trim(line.substr(eq + 1));
        if (!section.empty()) {
            if (section_h)
                c.h_overrides[section][*section_h][k] = v;
            else
                c.sections[section][k] = v;
            continue;
        }
        if (k == "n") c.n = static_cast<int>(detail::to_int(k, v));
        else if (k == "J") c.J = detail::to_double(k, v);
        else if (k == "periodic") c.periodic = detail::to_bool(k, v);
        else if (k == "h_grid") { c.h_grid = detail::parse_grid(v); grid_set = true; }
        else if (k == "methods") c.methods = detail::split(v, ',');
        else if (k == "repeats") c.repeats = static_cast<int>(detail::to_int(k, v));
        else if (k == "output_dir") c.output_dir = v;
        else if (k == "seed_base") c.seed_base = detail::to_u64(k, v);
        else if (k == "workers") c.workers = static_cast<unsigned>(detail::to_int(k, v));
        else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + k + "'");
    }
    if (!grid_set)
        c.h_grid = default_h_grid(c.n);
    return c;
}

inline SweepConfig load_sweep_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    return parse_sweep_config(in);
}

// ---------------------------------------------------------------- records

struct BenchmarkRecord {
    std::string method;
    int n = 0;
    double J = -1.0;
    double h = 0.0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double energy = std::nan("");
    double m2 = std::nan("");
    double infidelity = std::nan("");
    double energy_error_abs = std::nan("");
    double energy_error_rel = std::nan("");
    double m2_error_abs = std::nan("");
    double wall_time_s = 0.0;
    bool converged = false;
    bool failed = false;
    nlohmann::json metadata = nlohmann::json::object();
};

inline std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Seed for one job, a pure function of its identity.
inline std::uint64_t job_seed(std::uint64_t seed_base, double h, const std::string& method, int repeat) {
    const std::string key = format_double(h) + "|" + method + "|" + std::to_string(repeat);
    return seed_base ^ fnv1a(key);
}

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
inline double number_from(const nlohmann::json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

} // namespace detail

inline nlohmann::json to_json(const BenchmarkRecord& r, bool with_timing) {
    nlohmann::json j = {{"method", r.method},
                        {"n", r.n},
                        {"J", r.J},
                        {"h", r.h},
                        {"repeat", r.repeat},
                        {"seed", r.seed},
                        {"energy", detail::number_or_null(r.energy)},
                        {"m2", detail::number_or_null(r.m2)},
                        {"infidelity", detail::number_or_null(r.infidelity)},
                        {"energy_error_abs", detail::number_or_null(r.energy_error_abs)},
                        {"energy_error_rel", detail::number_or_null(r.energy_error_rel)},
                        {"m2_error_abs", detail::number_or_null(r.m2_error_abs)},
                        {"converged", r.converged},
                        {"failed", r.failed},
                        {"metadata", r.metadata}};
    if (with_timing)
        j["wall_time_s"] = r.wall_time_s;
    return j;
}

inline BenchmarkRecord record_from_json(const nlohmann::json& j) {
    BenchmarkRecord r;
    r.method = j.at("method").get<std::string>();
    r.n = j.at("n").get<int>();
    r.J = j.at("J").get<double>();
    r.h = j.at("h").get<double>();
    r.repeat = j.at("repeat").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.energy = detail::number_from(j.at("energy"));
    r.m2 = detail::number_from(j.at("m2"));
    r.infidelity = detail::number_from(j.at("infidelity"));
    r.energy_error_abs = detail::number_from(j.at("energy_error_abs"));
    r.energy_error_rel = detail::number_from(j.at("energy_error_rel"));
    r.m2_error_abs = detail::number_from(j.at("m2_error_abs"));
    r.converged = j.at("converged").get<bool>();
    r.failed = j.value("failed", false);
    r.wall_time_s = j.value("wall_time_s", 0.0);
    r.metadata = j.value("metadata", nlohmann::json::object());
    return r;
}

// ---------------------------------------------------------------- file output

// Writes through a sibling temporary file and renames it into place, so a
// failed write never leaves a partial file at `path`.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " into place");
    }
}

inline void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
    const fs::path probe = dir / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out)
            throw IoError("output directory not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

// ---------------------------------------------------------------- aggregate

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> m{"energy",           "m2",          "infidelity", "energy_error_abs",
                                            "energy_error_rel", "m2_error_abs", "wall_time_s"};
    return m;
}

inline double metric_value(const BenchmarkRecord& r, std::size_t k) {
    switch (k) {
    case 0: return r.energy;
    case 1: return r.m2;
    case 2: return r.infidelity;
    case 3: return r.energy_error_abs;
    case 4: return r.energy_error_rel;
    case 5: return r.m2_error_abs;
    default: return r.wall_time_s;
    }
}

struct AggregateRow {
    std::string method;
    int n = 0;
    double h = 0.0;
    int count = 0;  // records used
    int failed = 0; // records excluded
    std::vector<double> mean;     // per metric_names()
    std::vector<double> stat_err; // sample standard deviation / sqrt(count)

    double mean_of(const std::string& metric) const { return mean.at(index(metric)); }
    double err_of(const std::string& metric) const { return stat_err.at(index(metric)); }

  private:
    static std::size_t index(const std::string& metric) {
        const auto& m = metric_names();
        const auto it = std::find(m.begin(), m.end(), metric);
        if (it == m.end())
            throw ContractError("unknown metric " + metric);
        return static_cast<std::size_t>(it - m.begin());
    }
};

// Mean and standard error of the mean (sample std / sqrt(k); zero for k = 1).
inline std::pair<double, double> mean_and_error(const std::vector<double>& v) {
    if (v.empty())
        return {std::nan(""), std::nan("")};
    const double k = static_cast<double>(v.size());
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi)
        return {*lo, 0.0}; // exact, free of summation rounding
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / k;
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (k - 1.0)) / std::sqrt(k)};
}

// Groups by (method, n, h) in first-appearance order.
inline std::vector<AggregateRow> aggregate(const std::vector<BenchmarkRecord>& records,
                                           std::ostream* warnings = nullptr) {
    std::vector<AggregateRow> rows;
    std::map<std::tuple<std::string, int, double>, std::size_t> index;
    std::vector<std::vector<const BenchmarkRecord*>> members;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.method, r.n, r.h);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            AggregateRow row;
            row.method = r.method;
            row.n = r.n;
            row.h = r.h;
            rows.push_back(row);
            members.emplace_back();
        }
        if (r.failed)
            ++rows[it->second].failed;
        else
            members[it->second].push_back(&r);
    }
    std::vector<AggregateRow> out;
    for (std::size_t g = 0; g < rows.size(); ++g) {
        auto row = rows[g];
        if (members[g].empty()) {
            if (warnings)
                *warnings << "warning: no successful records for " << row.method << " n=" << row.n
                          << " h=" << row.h << "; group skipped\n";
            continue;
        }
        row.count = static_cast<int>(members[g].size());
        for (std::size_t k = 0; k < metric_names().size(); ++k) {
            std::vector<double> vals;
            for (const auto* r : members[g])
                vals.push_back(metric_value(*r, k));
            const auto [m, e] = mean_and_error(vals);
            row.mean.push_back(m);
            row.stat_err.push_back(e);
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline double median(std::vector<double> v) {
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("spearman needs two equal-length samples of size >= 2");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
                ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const auto [mx, ex] = mean_and_error(rx);
    const auto [my, ey] = mean_and_error(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------- report

inline const char* kRecordsCsvHeader =
    "method,n,J,h,repeat,seed,energy,m2,infidelity,energy_error_abs,energy_error_rel,m2_error_abs,wall_time_s,converged";

inline std::string records_csv(const std::vector<BenchmarkRecord>& records) {
    std::string s = std::string(kRecordsCsvHeader) + "\n";
    for (const auto& r : records) {
        s += r.method + "," + std::to_string(r.n) + "," + format_double(r.J) + "," + format_double(r.h) + "," +
             std::to_string(r.repeat) + "," + std::to_string(r.seed) + "," + format_double(r.energy) + "," +
             format_double(r.m2) + "," + format_double(r.infidelity) + "," + format_double(r.energy_error_abs) +
             "," + format_double(r.energy_error_rel) + "," + format_double(r.m2_error_abs) + "," +
             format_double(r.wall_time_s) + "," + (r.converged ? "true" : "false") + "\n";
    }
    return s;
}

// Timing is left out so that identical configurations give identical bytes.
inline std::string records_json(const std::vector<BenchmarkRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records)
        arr.push_back(to_json(r, false));
    return nlohmann::json{{"format", "magicbench-records v1"}, {"records", arr}}.dump(1) + "\n";
}

inline std::vector<BenchmarkRecord> load_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open records file " + path.string());
    std::vector<BenchmarkRecord> out;
    if (path.extension() == ".jsonl") {
        std::string line;
        while (std::getline(in, line)) {
            if (detail::trim(line).empty())
                continue;
            try {
                out.push_back(record_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception&) {
                break; // torn final line from an interrupted run
            }
        }
        return out;
    }
    const auto j = nlohmann::json::parse(in);
    for (const auto& r : j.at("records"))
        out.push_back(record_from_json(r));
    return out;
}

inline std::string aggregates_csv(const std::vector<AggregateRow>& rows) {
    std::string s = "method,n,h,count,failed";
    for (const auto& m : metric_names())
        s += "," + m + "_mean," + m + "_stat_err";
    s += "\n";
    for (const auto& r : rows) {
        s += r.method + "," + std::to_string(r.n) + "," + format_double(r.h) + "," + std::to_string(r.count) + "," +
             std::to_string(r.failed);
        for (std::size_t k = 0; k < r.mean.size(); ++k)
            s += "," + format_double(r.mean[k]) + "," + format_double(r.stat_err[k]);
        s += "\n";
    }
    return s;
}

struct PlotSpec {
    std::string file_metric; // file name component
    std::string metric;      // aggregate metric name
    bool stat_error;         // plot the statistical error instead of the mean
    std::string title;
};

inline const std::vector<PlotSpec>& plot_specs() {
    static const std::vector<PlotSpec> p{
        {"energy_error", "energy_error_abs", false, "|E - E_ED|"},
        {"m2_error", "m2_error_abs", false, "|M2 - M2_ED|"},
        {"infidelity", "infidelity", false, "1 - |<psi|psi_ED>|^2"},
        {"energy_stat_error", "energy", true, "statistical error of E"},
        {"m2_stat_error", "m2", true, "statistical error of M2"},
    };
    return p;
}

inline std::string plot_file_name(int n, const PlotSpec& spec) { return "n" + std::to_string(n) + "_" + spec.file_metric + ".svg"; }

namespace detail {

inline std::string fmt(double v, const char* f = "%.2f") {
    char b[48];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

inline std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        default: o += c;
        }
    }
    return o;
}

} // namespace detail

// Log-scale line plot of one metric against h, one series per method.
// Non-positive values cannot be drawn on a log axis and are skipped.
inline std::string render_svg(const std::vector<AggregateRow>& rows, int n, const PlotSpec& spec) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::vector<std::string> methods;
    for (const auto& r : rows)
        if (r.n == n && std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double hmin = 1e300, hmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& r : rows) {
        if (r.n != n)
            continue;
        hmin = std::min(hmin, r.h);
        hmax = std::max(hmax, r.h);
        const double v = spec.stat_error ? r.err_of(spec.metric) : r.mean_of(spec.metric);
        if (!(v > 0.0) || !std::isfinite(v))
            continue;
        series[r.method].emplace_back(r.h, v);
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (hmax <= hmin) {
        hmin -= 0.5;
        hmax += 0.5;
    }
    int dlo = -16, dhi = 0;
    if (ymax >= ymin) {
        dlo = static_cast<int>(std::floor(std::log10(ymin)));
        dhi = static_cast<int>(std::ceil(std::log10(ymax)));
        if (dhi == dlo)
            ++dhi;
    }
    const double W = 720, H = 440, L = 80, R = 170, T = 40, B = 50;
    auto px = [&](double h) { return L + (h - hmin) / (hmax - hmin) * (W - L - R); };
    auto py = [&](double v) { return T + (dhi - std::log10(v)) / (dhi - dlo) * (H - T - B); };
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" viewBox=\"0 0 720 440\">\n";
    s += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::fmt(L) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">n = " + std::to_string(n) +
         ": " + detail::xml_escape(spec.title) + "</text>\n";
    s += "<rect x=\"" + detail::fmt(L) + "\" y=\"" + detail::fmt(T) + "\" width=\"" + detail::fmt(W - L - R) + "\" height=\"" +
         detail::fmt(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
    const int step = std::max(1, (dhi - dlo) / 8);
    for (int d = dlo; d <= dhi; d += step) {
        const double y = py(std::pow(10.0, d));
        s += "<line x1=\"" + detail::fmt(L - 4) + "\" y1=\"" + detail::fmt(y) + "\" x2=\"" + detail::fmt(L) + "\" y2=\"" +
             detail::fmt(y) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::fmt(L - 8) + "\" y=\"" + detail::fmt(y + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e" + std::to_string(d) + "</text>\n";
    }
    for (int k = 0; k <= 6; ++k) {
        const double h = hmin + (hmax - hmin) * k / 6.0;
        const double x = px(h);
        s += "<line x1=\"" + detail::fmt(x) + "\" y1=\"" + detail::fmt(H - B) + "\" x2=\"" + detail::fmt(x) + "\" y2=\"" +
             detail::fmt(H - B + 4) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(H - B + 18) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + detail::fmt(h, "%.3g") + "</text>\n";
    }
    s += "<text x=\"" + detail::fmt((L + W - R) / 2) + "\" y=\"" + detail::fmt(H - 10) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">h</text>\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const char* col = colors[mi % 6];
        const auto& pts = series[methods[mi]];
        if (!pts.empty()) {
            s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i)
                s += (i ? " " : "") + detail::fmt(px(pts[i].first)) + "," + detail::fmt(py(pts[i].second));
            s += "\"/>\n";
            for (const auto& p : pts)
                s += "<circle cx=\"" + detail::fmt(px(p.first)) + "\" cy=\"" + detail::fmt(py(p.second)) +
                     "\" r=\"2.5\" fill=\"" + col + "\"/>\n";
        }
        const double ly = T + 16 + 18.0 * static_cast<double>(mi);
        s += "<line x1=\"" + detail::fmt(W - R + 14) + "\" y1=\"" + detail::fmt(ly - 4) + "\" x2=\"" + detail::fmt(W - R + 38) +
             "\" y2=\"" + detail::fmt(ly - 4) + "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + detail::fmt(W - R + 44) + "\" y=\"" + detail::fmt(ly) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(methods[mi]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

// records.csv, records.json, aggregates.csv, and one SVG per (n, plot).
inline std::vector<fs::path> emit_report(const fs::path& dir, const std::vector<AggregateRow>& rows,
                                         const std::vector<BenchmarkRecord>& records) {
    ensure_directory(dir);
    std::vector<fs::path> written;
    auto put = [&](const fs::path& p, const std::string& content) {
        write_file_atomic(p, content);
        written.push_back(p);
    };
    put(dir / "records.csv", records_csv(records));
    put(dir / "records.json", records_json(records));
    put(dir / "aggregates.csv", aggregates_csv(rows));
    std::set<int> sizes;
    for (const auto& r : rows)
        sizes.insert(r.n);
    for (int n : sizes)
        for (const auto& spec : plot_specs())
            put(dir / plot_file_name(n, spec), render_svg(rows, n, spec));
    return written;
}

// ---------------------------------------------------------------- statevector files

inline void write_state_file(const fs::path& path, const StateVector& psi) {
    std::string s = "magicbench-state v1 n=" + std::to_string(psi.num_qubits()) + "\n";
    for (std::size_t i = 0; i < psi.size(); ++i)
        s += format_double(psi[i].real()) + " " + format_double(psi[i].imag()) + "\n";
    write_file_atomic(path, s);
}

inline StateVector read_state_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open state file " + path.string());
    std::string header;
    std::getline(in, header);
    const std::string prefix = "magicbench-state v1 n=";
    if (header.rfind(prefix, 0) != 0)
        throw IoError("state file header must be '" + prefix + "<n>'");
    const int n = static_cast<int>(detail::to_int("n", detail::trim(header.substr(prefix.size()))));
    magicbench::detail::check_qubits(n);
    std::vector<Complex> amps(std::size_t{1} << n);
    for (auto& a : amps) {
        double re = 0, im = 0;
        if (!(in >> re >> im))
            throw IoError("state file has fewer than 2^n amplitude lines");
        a = {re, im};
    }
    double extra;
    if (in >> extra)
        throw IoError("state file has more than 2^n amplitude lines");
    return StateVector(n, std::move(amps));
}

// ---------------------------------------------------------------- sweep

struct Reference {
    double h = 0.0;
    EdResult ed;
    double m2 = 0.0;
};

struct SweepOptions {
    std::ostream* log = nullptr;
    // Stop after this many new jobs (0 = no limit); used to exercise resume.
    std::size_t max_new_jobs = 0;
};

struct SweepOutcome {
    std::vector<BenchmarkRecord> records;
    std::vector<AggregateRow> rows;
    std::size_t computed = 0; // jobs run in this invocation
    std::size_t resumed = 0;  // jobs taken from the journal
    std::size_t failed = 0;
    bool complete = true;
};

namespace detail {

inline std::string job_key(const std::string& method, int n, double h, int repeat) {
    return method + "|" + std::to_string(n) + "|" + format_double(h) + "|" + std::to_string(repeat);
}

inline void score(BenchmarkRecord& rec, const StateVector& psi, const TfimModel& model, const Reference& ref) {
    const auto terms = tfim_terms(model);
    rec.energy = expectation_of_terms(terms, psi).value;
    rec.m2 = m2_fast(psi).m2;
    rec.infidelity = magicbench::infidelity(psi, ref.ed.state);
    rec.energy_error_abs = std::abs(rec.energy - ref.ed.energy);
    rec.energy_error_rel = rec.energy_error_abs / std::max(std::abs(ref.ed.energy), 1e-300);
    rec.m2_error_abs = std::abs(rec.m2 - ref.m2);
}

inline BenchmarkRecord run_job(const SweepConfig& cfg, const Reference& ref, const std::string& method, int repeat) {
    BenchmarkRecord rec;
    rec.method = method;
    rec.n = cfg.n;
    rec.J = cfg.J;
    rec.h = ref.h;
    rec.repeat = repeat;
    rec.seed = job_seed(cfg.seed_base, ref.h, method, repeat);
    const TfimModel model{cfg.n, cfg.J, ref.h, cfg.periodic};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (method == "ed") {
            score(rec, ref.ed.state, model, ref);
            rec.converged = true;
            rec.metadata = {{"solver", ref.ed.solver},
                            {"gap", ref.ed.gap},
                            {"parity_projected", ref.ed.parity_projected}};
        } else if (method == "rbm" || method == "rbm_symmetric") {
            auto mc = cfg.rbm_config(ref.h);
            mc.train.symmetric = method == "rbm_symmetric";
            auto tr = nqs::train_rbm(model, mc.alpha, mc.train, mc.sampler, rec.seed);
            score(rec, nqs::rbm_statevector(tr.params, mc.train.kind()), model, ref);
            rec.converged = tr.converged;
            rec.metadata = {{"epochs", tr.epochs},
                            {"alpha", mc.alpha},
                            {"expectation_mode", mc.train.expectation_mode == nqs::ExpectationMode::full_sum
                                                     ? "full_sum"
                                                     : "monte_carlo"},
                            {"final_estimate", tr.history.empty() ? 0.0 : tr.history.back()},
                            {"sr_shift", tr.final_shift}};
        } else if (method == "dmrg") {
            auto dc = cfg.dmrg_config(ref.h);
            dc.dmrg.seed = rec.seed;
            auto res = dmrg::dmrg_ground_state(model, dc.dmrg);
            score(rec, dmrg::mps_statevector(res.mps), model, ref);
            rec.converged = res.diagnostics.converged;
            rec.metadata = {{"sweeps", res.diagnostics.sweeps},
                            {"dmrg_energy", res.energy},
                            {"max_bond", res.diagnostics.max_bond_used},
                            {"max_discarded_weight", res.diagnostics.max_discarded_weight},
                            {"non_monotone", res.diagnostics.non_monotone}};
        } else if (method == "vqe") {
            auto vc = cfg.vqe_config(ref.h);
            vc.train.seed = rec.seed;
            auto res = vqe::train_vqe(model, vc.ansatz, vc.train);
            score(rec, vqe::ansatz_state(vc.ansatz, res.angles), model, ref);
            rec.converged = res.converged;
            nlohmann::json runs = nlohmann::json::array();
            for (const auto& r : res.diagnostics.runs)
                runs.push_back({{"energy", r.energy}, {"epochs", r.epochs}, {"converged", r.converged}});
            rec.metadata = {{"layers", vc.ansatz.layers},
                            {"entangler", vqe::to_string(vc.ansatz.entangler)},
                            {"runs", runs},
                            {"agreement", res.diagnostics.agreement}};
        } else {
            throw ConfigError("unknown method " + method);
        }
        if (ref.ed.parity_projected)
            rec.metadata["reference_parity_projected"] = true;
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.converged = false;
        rec.metadata = {{"error", e.what()}};
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

} // namespace detail

// Reference ground states for every field value, with energies and M2 cached in
// <output_dir>/golden.json.
inline std::vector<Reference> compute_references(const SweepConfig& cfg) {
    const fs::path golden_path = fs::path(cfg.output_dir) / "golden.json";
    GoldenCache cache = fs::exists(golden_path) ? GoldenCache::load(golden_path) : GoldenCache{};
    std::vector<Reference> refs(cfg.h_grid.size());
    parallel_for(refs.size(), cfg.workers, [&](std::size_t i) {
        refs[i].h = cfg.h_grid[i];
        refs[i].ed = ground_state_ed({cfg.n, cfg.J, cfg.h_grid[i], cfg.periodic});
    });
    for (auto& r : refs) {
        if (auto hit = cache.find(cfg.n, cfg.J, r.h, cfg.periodic); hit && std::abs(hit->energy - r.ed.energy) < 1e-9) {
            r.m2 = hit->m2;
            continue;
        }
        r.m2 = m2_fast(r.ed.state, cfg.workers).m2;
        cache.insert({cfg.n, cfg.J, r.h, cfg.periodic, r.ed.energy, r.m2});
    }
    cache.save(golden_path);
    return refs;
}

inline SweepOutcome run_sweep(const SweepConfig& cfg, const SweepOptions& opt = {}) {
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    ensure_directory(dir);
    const fs::path journal_path = dir / "records.jsonl";

    std::map<std::string, BenchmarkRecord> done;
    std::size_t valid_bytes = 0;
    if (fs::exists(journal_path)) {
        std::ifstream in(journal_path, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (in.eof())
                break; // no trailing newline: torn write
            try {
                auto r = record_from_json(nlohmann::json::parse(line));
                done.emplace(detail::job_key(r.method, r.n, r.h, r.repeat), std::move(r));
                valid_bytes += line.size() + 1;
            } catch (const std::exception&) {
                break;
            }
        }
    }
    // Drop any torn tail so appended lines start cleanly.
    if (fs::exists(journal_path) && fs::file_size(journal_path) != valid_bytes)
        fs::resize_file(journal_path, valid_bytes);

    const auto refs = compute_references(cfg);

    struct Job {
        std::size_t ref;
        std::string method;
        int repeat;
    };
    std::vector<Job> order, pending;
    for (std::size_t i = 0; i < refs.size(); ++i)
        for (const auto& m : cfg.methods) {
            const int reps = is_deterministic_method(m) ? 1 : cfg.repeats;
            for (int r = 0; r < reps; ++r) {
                order.push_back({i, m, r});
                if (!done.count(detail::job_key(m, cfg.n, refs[i].h, r)))
                    pending.push_back({i, m, r});
            }
        }
    SweepOutcome out;
    out.resumed = order.size() - pending.size();
    if (opt.max_new_jobs > 0 && pending.size() > opt.max_new_jobs) {
        pending.resize(opt.max_new_jobs);
        out.complete = false;
    }

    std::ofstream journal(journal_path, std::ios::app | std::ios::binary);
    if (!journal)
        throw IoError("cannot open journal " + journal_path.string());
    std::mutex mu;
    std::size_t finished = 0;
    parallel_for(pending.size(), cfg.workers, [&](std::size_t k) {
        const auto& job = pending[k];
        auto rec = detail::run_job(cfg, refs[job.ref], job.method, job.repeat);
        std::lock_guard<std::mutex> lock(mu);
        journal << to_json(rec, true).dump() << '\n';
        journal.flush();
        ++finished;
        if (opt.log)
            *opt.log << "[" << finished << "/" << pending.size() << "] " << rec.method << " h=" << rec.h
                     << " repeat=" << rec.repeat << (rec.failed ? " FAILED" : "") << " dE=" << rec.energy_error_abs
                     << " dM2=" << rec.m2_error_abs << " t=" << rec.wall_time_s << "s\n";
        done[detail::job_key(rec.method, rec.n, rec.h, rec.repeat)] = std::move(rec);
    });
    out.computed = pending.size();

    for (const auto& job : order) {
        auto it = done.find(detail::job_key(job.method, cfg.n, refs[job.ref].h, job.repeat));
        if (it == done.end())
            continue;
        out.records.push_back(it->second);
        if (it->second.failed)
            ++out.failed;
    }
    out.rows = aggregate(out.records, opt.log);
    if (out.complete)
        emit_report(dir, out.rows, out.records);
    return out;
}

} // namespace magicbench::bench
