#pragma once

#include "knockoff/config.hpp"
#include "knockoff/csv.hpp"
#include "knockoff/errors.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/knockoffs.hpp"
#include "knockoff/metrics.hpp"
#include "knockoff/model.hpp"
#include "knockoff/oracles.hpp"
#include "knockoff/pipeline.hpp"
#include "knockoff/random.hpp"
#include "knockoff/report.hpp"
#include "knockoff/screening.hpp"
#include "knockoff/simulate.hpp"
#include "knockoff/solvers.hpp"
#include "knockoff/verify.hpp"
