#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "rgm/dataset.hpp"
#include "rgm/graph_prior.hpp"
#include "rgm/marginals.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// Everything the deviance depends on at one point of the chain.
struct ChainSnapshot {
    PriorParams params;
    GraphFamily family;
    std::vector<Eigen::MatrixXd> omega;
};

struct DevianceTrace {
    std::vector<double> draws;
    double at_mean = 0.0;  // D evaluated at the posterior-mean parameters
};

// D(theta_hat) + 2 Var(D); sample variance with n - 1.
double dic(const DevianceTrace& trace);

struct DevianceOptions {
    double rel_tol = 1e-3;        // QMC relative error target per respondent
    int min_points = 32;          // lattice points per shift, first round
    int max_points = 1 << 14;
    int n_shifts = 8;
    std::uint64_t seed = 0x5eed;  // QMC shifts are derived from this and the row
};

// P(lo < X <= hi) for X ~ N(0, R) with R a correlation matrix. Coordinates with
// a doubly infinite interval are integrated out. One dimension is exact; more
// use Genz's sequential conditioning with randomly shifted lattice rules.
double rectangle_prob(const Eigen::MatrixXd& R, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                      Rng& rng, const DevianceOptions& options = {});

struct DevianceParts {
    double data = 0.0;   // -2 sum_k sum_i log P(y_i | Omega_k) through the copula
    double graph = 0.0;  // -2 composite log-likelihood of the graphs under the prior
    double total() const { return data + graph; }
};

// Data term uses the correlation form of Omega_k^{-1}.
DevianceParts deviance(const ChainSnapshot& snapshot, const std::vector<IntervalMatrix>& intervals,
                       const ProximityData* prox, const DevianceOptions& options = {});

DevianceParts deviance(const ChainSnapshot& snapshot, const SurveyDataset& data,
                       const MarginalSet& marginals, const ProximityData* prox,
                       const DevianceOptions& options = {});

struct AlignedLatentSpace {
    Eigen::MatrixXd mean;                  // K x 2 mean of aligned draws
    std::vector<Eigen::MatrixXd> aligned;  // each draw after rotation
    std::vector<Eigen::Matrix2d> rotations;
    std::size_t reference = 0;             // index of the reference draw
};

// Rotate/reflect each draw onto the first one (orthogonal Procrustes).
AlignedLatentSpace procrustes_align(const std::vector<Eigen::MatrixXd>& draws);

}  // namespace rgm
