#pragma once

#include <Eigen/Dense>

#include "rgm/marginals.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// Draw from N(mu, sigma^2) restricted to (lo, hi). Bounds may be infinite.
// Inverse-CDF in the body; exponential or uniform rejection once the interval
// sits more than five standard deviations into a tail.
double truncated_normal_sample(double mu, double sigma, double lo, double hi, Rng& rng);

// Starting values: Phi^-1 of the midpoint of each interval on the probability
// scale, 0 for a doubly infinite interval.
Eigen::MatrixXd initial_latent(const IntervalMatrix& intervals);

// One systematic-scan Gibbs sweep over Z (rows in order, coordinates 0..p-1),
// each coordinate drawn from its conditional under N(0, Omega^{-1}) truncated
// to its interval.
void gibbs_sweep_latent(Eigen::MatrixXd& Z, const Eigen::MatrixXd& omega,
                        const IntervalMatrix& intervals, Rng& rng);

}  // namespace rgm
