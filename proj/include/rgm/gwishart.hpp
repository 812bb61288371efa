#pragma once

#include <Eigen/Dense>

#include "rgm/graph.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// W_G(b, D): density proportional to |K|^{(b-2)/2} exp(-tr(D K)/2) on the
// SPD matrices whose off-diagonal zeros match the non-edges of G.
struct GWishartParams {
    double b = 3.0;
    Eigen::MatrixXd D;
};

GWishartParams default_gwishart_prior(int p);

// Conjugate update with zero-mean data rows Z: (b + n, D + Z'Z).
GWishartParams posterior_params(const GWishartParams& prior, const Eigen::MatrixXd& Z);

struct GWishartSamplerOptions {
    int max_sweeps = 1000;      // completion sweeps before giving up on convergence
    double tolerance = 1e-10;   // max abs change of the completed covariance
    int max_retries = 3;        // jittered Cholesky retries
};

// Unconstrained Wishart with the same convention (complete graph): df b + p - 1,
// scale D^{-1}. Bartlett decomposition.
Eigen::MatrixXd sample_wishart(const GWishartParams& params, Rng& rng);

// Given a covariance Sigma, returns the precision K with K_ij = 0 on non-edges
// and (K^{-1})_ij = Sigma_ij on edges and the diagonal (iterative
// regression completion).
Eigen::MatrixXd complete_precision(const Graph& g, const Eigen::MatrixXd& sigma,
                                   const GWishartSamplerOptions& options = {});

// Exact draw from W_G(b, D): a Wishart draw mapped through the completion
// above (Lenkoski 2013). Non-edge entries of the result are exactly zero.
Eigen::MatrixXd sample_gwishart(const Graph& g, const GWishartParams& params, Rng& rng,
                                const GWishartSamplerOptions& options = {});

// log of the normalizing constant of the complete-graph case on D's dimension:
// 2^{(b+m-1)m/2} Gamma_m((b+m-1)/2) |D|^{-(b+m-1)/2}. Zero for m = 0.
double log_wishart_constant(double b, const Eigen::MatrixXd& D);

// log I_G(b, D) for decomposable G via clique/separator factorisation.
// Throws ValidationError when G is not decomposable.
double log_gwishart_constant(const Graph& g, double b, const Eigen::MatrixXd& D);

// log I_{G+e}(b, D) - log I_{G-e}(b, D) for e = (i, j), using the clique formed
// by i, j and their common neighbours. Exact when both graphs are decomposable;
// a local approximation otherwise.
double log_edge_constant_ratio(const Graph& g, int i, int j, double b, const Eigen::MatrixXd& D);

bool is_spd(const Eigen::MatrixXd& m);

}  // namespace rgm
