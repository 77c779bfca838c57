#pragma once

#include "magicbench/bench.hpp"
#include "magicbench/core.hpp"
#include "magicbench/dmrg.hpp"
#include "magicbench/error.hpp"
#include "magicbench/exact.hpp"
#include "magicbench/gates.hpp"
#include "magicbench/magic.hpp"
#include "magicbench/nqs.hpp"
#include "magicbench/parallel.hpp"
#include "magicbench/random.hpp"
#include "magicbench/vqe.hpp"
