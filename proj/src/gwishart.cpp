#include "rgm/gwishart.hpp"

#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rgm/error.hpp"

namespace rgm {

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& M, const std::vector<int>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) out(a, b) = M(idx[a], idx[b]);
    return out;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& M) {
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw RuntimeError("matrix is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
}

double log_subset_constant(double b, const Eigen::MatrixXd& D, const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    return log_wishart_constant(b, submatrix(D, idx));
}

}  // namespace

bool is_spd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

GWishartParams default_gwishart_prior(int p) { return {3.0, Eigen::MatrixXd::Identity(p, p)}; }

GWishartParams posterior_params(const GWishartParams& prior, const Eigen::MatrixXd& Z) {
    if (Z.rows() == 0) return prior;
    if (Z.cols() != prior.D.cols()) throw ValidationError("posterior_params: dimension mismatch");
    if (!Z.allFinite()) throw ValidationError("posterior_params: latent data not finite");
    GWishartParams post;
    post.b = prior.b + static_cast<double>(Z.rows());
    post.D = prior.D;
    post.D.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
    post.D = post.D.selfadjointView<Eigen::Lower>();
    return post;
}

Eigen::MatrixXd sample_wishart(const GWishartParams& params, Rng& rng) {
    const Eigen::Index p = params.D.rows();
    const double df = params.b + static_cast<double>(p) - 1.0;
    // scale = D^{-1} = L L'
    Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(spd_inverse(params.D)).matrixL();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        A(i, i) = std::sqrt(rchisq(rng, df - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rnorm(rng);
    }
    Eigen::MatrixXd LA = L * A.triangularView<Eigen::Lower>();
    Eigen::MatrixXd K = LA * LA.transpose();
    return 0.5 * (K + K.transpose());
}

Eigen::MatrixXd complete_precision(const Graph& g, const Eigen::MatrixXd& sigma,
                                   const GWishartSamplerOptions& options) {
    const int p = g.p();
    if (sigma.rows() != p || sigma.cols() != p) throw ValidationError("complete_precision: dimension mismatch");
    Eigen::MatrixXd K;
    if (g.n_edges() == edge_slot_count(p)) {
        K = spd_inverse(sigma);
    } else {
        std::vector<std::vector<int>> nbrs(p);
        for (int j = 0; j < p; ++j) nbrs[j] = g.neighbors(j);

        Eigen::MatrixXd W = sigma;
        const double scale = sigma.diagonal().cwiseAbs().maxCoeff();
        bool converged = false;
        for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
            double change = 0.0;
            for (int j = 0; j < p; ++j) {
                Eigen::VectorXd col = Eigen::VectorXd::Zero(p);
                const auto& N = nbrs[j];
                if (!N.empty()) {
                    const auto n = static_cast<Eigen::Index>(N.size());
                    Eigen::MatrixXd WN(n, n);
                    Eigen::VectorXd sN(n);
                    for (Eigen::Index a = 0; a < n; ++a) {
                        sN(a) = sigma(N[a], j);
                        for (Eigen::Index b = 0; b < n; ++b) WN(a, b) = W(N[a], N[b]);
                    }
                    Eigen::VectorXd beta_N = WN.llt().solve(sN);
                    for (int r = 0; r < p; ++r) {
                        if (r == j) continue;
                        double v = 0.0;
                        for (Eigen::Index a = 0; a < n; ++a) v += W(r, N[a]) * beta_N(a);
                        col(r) = v;
                    }
                }
                for (int r = 0; r < p; ++r) {
                    if (r == j) continue;
                    change = std::max(change, std::abs(W(r, j) - col(r)));
                    W(r, j) = W(j, r) = col(r);
                }
            }
            converged = change <= options.tolerance * scale;
        }
        if (!converged) throw RuntimeError("complete_precision: completion did not converge");
        K = spd_inverse(W);
    }
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            double v = g.has(i, j) ? 0.5 * (K(i, j) + K(j, i)) : 0.0;
            K(i, j) = K(j, i) = v;
        }
    return K;
}

Eigen::MatrixXd sample_gwishart(const Graph& g, const GWishartParams& params, Rng& rng,
                                const GWishartSamplerOptions& options) {
    const int p = g.p();
    if (params.D.rows() != p || params.D.cols() != p)
        throw ValidationError("sample_gwishart: scale matrix does not match the graph");
    if (!(params.b > 2.0)) throw ValidationError("sample_gwishart: degrees of freedom must exceed 2");

    Eigen::MatrixXd K = sample_wishart(params, rng);
    if (g.n_edges() == edge_slot_count(p)) return K;
    Eigen::MatrixXd omega = complete_precision(g, spd_inverse(K), options);
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        if (is_spd(omega)) return omega;
        omega.diagonal().array() += 1e-10;
    }
    throw RuntimeError("sample_gwishart: Cholesky failed after jitter retries");
}

double log_wishart_constant(double b, const Eigen::MatrixXd& D) {
    const double m = static_cast<double>(D.rows());
    if (D.rows() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(D);
    if (llt.info() != Eigen::Success) throw RuntimeError("log_wishart_constant: scale is not SPD");
    double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double a = 0.5 * (b + m - 1.0);
    double log_gamma_m = 0.25 * m * (m - 1.0) * std::log(M_PI);
    for (int l = 0; l < static_cast<int>(m); ++l) log_gamma_m += boost::math::lgamma(a - 0.5 * l);
    return a * m * std::log(2.0) + log_gamma_m - a * logdet;
}

double log_gwishart_constant(const Graph& g, double b, const Eigen::MatrixXd& D) {
    std::vector<int> order = perfect_ordering(g);
    if (g.p() > 0 && order.empty())
        throw ValidationError("log_gwishart_constant: graph is not decomposable");
    // Product over the elimination order of I(F_t + v_t) / I(F_t), F_t being
    // the earlier neighbours of v_t (a clique in a perfect ordering).
    double total = 0.0;
    for (std::size_t t = 0; t < order.size(); ++t) {
        std::vector<int> F;
        for (std::size_t s = 0; s < t; ++s)
            if (g.has(order[t], order[s])) F.push_back(order[s]);
        std::vector<int> C = F;
        C.push_back(order[t]);
        total += log_subset_constant(b, D, C) - log_subset_constant(b, D, F);
    }
    return total;
}

double log_edge_constant_ratio(const Graph& g, int i, int j, double b, const Eigen::MatrixXd& D) {
    std::vector<int> S = g.common_neighbors(i, j);
    std::vector<int> Si = S, Sj = S, C = S;
    Si.push_back(i);
    Sj.push_back(j);
    C.push_back(i);
    C.push_back(j);
    return log_subset_constant(b, D, C) + log_subset_constant(b, D, S) -
           log_subset_constant(b, D, Si) - log_subset_constant(b, D, Sj);
}

}  // namespace rgm
