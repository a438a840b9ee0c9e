#pragma once

// Umbrella header: exact Bayes-optimal and maximum-likelihood estimation for
// the sparse Bernoulli tensor-PCA model at desk scale, plus the Monte-Carlo
// machinery for charting the all-or-nothing transition curves.

#include "stpca/combinatorics.hpp"
#include "stpca/experiment.hpp"
#include "stpca/information.hpp"
#include "stpca/model.hpp"
#include "stpca/numeric.hpp"
#include "stpca/oracle.hpp"
#include "stpca/posterior.hpp"
#include "stpca/rng.hpp"
#include "stpca/verify.hpp"
#include "stpca/version.hpp"
