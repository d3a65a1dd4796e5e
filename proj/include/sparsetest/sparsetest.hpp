#pragma once

// Umbrella header: sparsity testing for noisy linear measurements
// y = w . x + eta via cumulant-based power-sum estimation, plus the
// indistinguishability constructions that delimit when testing is possible.

#include "sparsetest/batch.hpp"
#include "sparsetest/bell.hpp"
#include "sparsetest/config.hpp"
#include "sparsetest/cumulant_scan.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/estimation.hpp"
#include "sparsetest/experiment.hpp"
#include "sparsetest/lowerbounds.hpp"
#include "sparsetest/models.hpp"
#include "sparsetest/numeric.hpp"
#include "sparsetest/rational.hpp"
#include "sparsetest/rng.hpp"
#include "sparsetest/testers.hpp"
