#pragma once

#include "feemarket/accounting.hpp"
#include "feemarket/adversary.hpp"
#include "feemarket/benchmarks.hpp"
#include "feemarket/io.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/rng.hpp"
#include "feemarket/scenario.hpp"
#include "feemarket/scenarios.hpp"
#include "feemarket/suite.hpp"
#include "feemarket/types.hpp"
