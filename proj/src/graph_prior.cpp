#include "rgm/graph_prior.hpp"

#include <algorithm>
#include <cmath>

#include "rgm/copula_latent.hpp"
#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

namespace {

// Draw from N(mean, precision^{-1}).
Eigen::VectorXd draw_normal(const NormalConditional& nc, Rng& rng, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(nc.precision);
    if (llt.info() != Eigen::Success)
        throw RuntimeError(std::string("gibbs_update_params: singular conditional for ") + what +
                           " (min diagonal " + std::to_string(nc.precision.diagonal().minCoeff()) + ")");
    Eigen::VectorXd xi(nc.mean.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rnorm(rng);
    // precision = L L'  =>  L'^{-1} xi ~ N(0, precision^{-1})
    return nc.mean + llt.matrixU().solve(xi);
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::intercepts: return "int";
        case Variant::intercepts_ls: return "int+ls";
        case Variant::intercepts_prox: return "int+prox";
        case Variant::full: return "full";
    }
    return "int";
}

Variant parse_variant(const std::string& s) {
    if (s == "int" || s == "intercepts") return Variant::intercepts;
    if (s == "int+ls" || s == "intercepts+ls") return Variant::intercepts_ls;
    if (s == "int+prox" || s == "intercepts+prox") return Variant::intercepts_prox;
    if (s == "full" || s == "intercepts+prox+ls") return Variant::full;
    throw ValidationError("unknown variant '" + s + "' (expected int, int+ls, int+prox or full)");
}

bool uses_latent(Variant v) { return v == Variant::intercepts_ls || v == Variant::full; }
bool uses_proximity(Variant v) { return v == Variant::intercepts_prox || v == Variant::full; }

void PriorParams::validate(int K, int d) const {
    if (alpha.size() != K) throw ValidationError("prior parameters: alpha must have one entry per group");
    if (uses_proximity(variant) && beta.size() != d)
        throw ValidationError("prior parameters: beta must match the proximity dimension");
    if (uses_latent(variant) && (C.rows() != K || C.cols() != kLatentDim))
        throw ValidationError("prior parameters: latent positions must be K x 2");
    if (!alpha.allFinite() || !beta.allFinite() || !C.allFinite())
        throw ValidationError("prior parameters must be finite");
}

GraphFamily GraphFamily::empty(int K, int p) {
    GraphFamily f;
    f.graphs.assign(K, Graph(p));
    return f;
}

Eigen::MatrixXd GraphFamily::signs() const {
    Eigen::MatrixXd S(K(), n_slots());
    for (int k = 0; k < K(); ++k)
        for (int e = 0; e < n_slots(); ++e) S(k, e) = graphs[k].has_slot(e) ? 1.0 : -1.0;
    return S;
}

EdgeDesign::EdgeDesign(const GraphFamily& family, const ProximityData* prox_data, Variant variant)
    : signs(family.signs()) {
    if (!uses_proximity(variant)) return;
    if (!prox_data) throw ValidationError("variant " + to_string(variant) + " needs proximity data");
    if (prox_data->K() != family.K())
        throw ValidationError("proximity data covers " + std::to_string(prox_data->K()) +
                              " groups, graph family has " + std::to_string(family.K()));
    for (const auto& sim : prox_data->sim) {
        Eigen::MatrixXd off = sim;
        off.diagonal().setZero();
        prox.push_back(off * signs);
    }
}

Eigen::MatrixXd EdgeDesign::scores(const PriorParams& params) const {
    const Eigen::Index K = signs.rows(), E = signs.cols();
    Eigen::MatrixXd out = params.alpha.replicate(1, E);
    if (uses_proximity(params.variant))
        for (std::size_t d = 0; d < prox.size(); ++d) out += params.beta(static_cast<Eigen::Index>(d)) * prox[d];
    if (uses_latent(params.variant)) {
        Eigen::MatrixXd T = params.C.transpose() * signs;  // 2 x E
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index e = 0; e < E; ++e) {
                Eigen::Vector2d w = T.col(e) - params.C.row(k).transpose() * signs(k, e);
                out(k, e) += params.C.row(k).dot(w);
            }
    }
    return out;
}

double edge_score(int k, int e, const GraphFamily& family, const PriorParams& params,
                  const ProximityData* prox) {
    if (k < 0 || k >= family.K() || e < 0 || e >= family.n_slots())
        throw ValidationError("edge_score: group or edge slot out of range");
    double score = params.alpha(k);
    if (uses_proximity(params.variant)) {
        if (!prox) throw ValidationError("edge_score: variant needs proximity data");
        for (int kk = 0; kk < family.K(); ++kk) {
            if (kk == k) continue;
            double s = family.graphs[kk].has_slot(e) ? 1.0 : -1.0;
            for (int d = 0; d < prox->dim(); ++d) score += params.beta(d) * prox->sim[d](k, kk) * s;
        }
    }
    if (uses_latent(params.variant)) {
        for (int kk = 0; kk < family.K(); ++kk) {
            if (kk == k) continue;
            double s = family.graphs[kk].has_slot(e) ? 1.0 : -1.0;
            score += params.C.row(k).dot(params.C.row(kk)) * s;
        }
    }
    return score;
}

double edge_prior_prob(int k, int e, const GraphFamily& family, const PriorParams& params,
                       const ProximityData* prox) {
    return norm_cdf(edge_score(k, e, family, params, prox));
}

Eigen::MatrixXd edge_prior_probs(const GraphFamily& family, const PriorParams& params,
                                 const ProximityData* prox) {
    EdgeDesign design(family, prox, params.variant);
    return design.scores(params).unaryExpr([](double s) { return norm_cdf(s); });
}

double graph_composite_loglik(const GraphFamily& family, const PriorParams& params,
                              const ProximityData* prox) {
    EdgeDesign design(family, prox, params.variant);
    Eigen::MatrixXd scores = design.scores(params);
    double ll = 0.0;
    for (Eigen::Index k = 0; k < scores.rows(); ++k)
        for (Eigen::Index e = 0; e < scores.cols(); ++e)
            ll += log_norm_cdf(design.signs(k, e) * scores(k, e));
    return ll;
}

namespace {

NormalConditional beta_conditional_impl(const EdgeDesign& design, const PriorParams& params,
                                        const Eigen::MatrixXd& z, double prior_variance) {
    const Eigen::Index d = static_cast<Eigen::Index>(design.prox.size());
    PriorParams no_beta = params;
    no_beta.beta = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd resid = z - design.scores(no_beta);
    NormalConditional nc;
    nc.precision = Eigen::MatrixXd::Identity(d, d) / prior_variance;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (Eigen::Index a = 0; a < d; ++a) {
        rhs(a) = design.prox[a].cwiseProduct(resid).sum();
        for (Eigen::Index b = 0; b < d; ++b) nc.precision(a, b) += design.prox[a].cwiseProduct(design.prox[b]).sum();
    }
    nc.mean = nc.precision.ldlt().solve(rhs);
    return nc;
}

}  // namespace

NormalConditional beta_conditional(const GraphFamily& family, const PriorParams& params,
                                   const ProximityData& prox, const Eigen::MatrixXd& z,
                                   double prior_variance) {
    PriorParams with_prox = params;
    if (!uses_proximity(with_prox.variant))
        with_prox.variant = uses_latent(params.variant) ? Variant::full : Variant::intercepts_prox;
    if (with_prox.beta.size() != prox.dim()) with_prox.beta = Eigen::VectorXd::Zero(prox.dim());
    EdgeDesign design(family, &prox, with_prox.variant);
    return beta_conditional_impl(design, with_prox, z, prior_variance);
}

PriorParams gibbs_update_params(const GraphFamily& family, const PriorParams& params,
                                const ProximityData* prox, double prior_variance, Rng& rng,
                                Eigen::MatrixXd* z_out) {
    if (!(prior_variance > 0.0)) throw ValidationError("gibbs_update_params: prior variance must be positive");
    const int K = family.K();
    const int E = family.n_slots();
    params.validate(K, prox ? prox->dim() : 0);
    EdgeDesign design(family, prox, params.variant);
    PriorParams out = params;

    // (a) augmented utilities
    Eigen::MatrixXd scores = design.scores(out);
    Eigen::MatrixXd z(K, E);
    for (int k = 0; k < K; ++k)
        for (int e = 0; e < E; ++e)
            z(k, e) = design.signs(k, e) > 0
                          ? truncated_normal_sample(scores(k, e), 1.0, 0.0, kInf, rng)
                          : -truncated_normal_sample(-scores(k, e), 1.0, 0.0, kInf, rng);

    // (b) intercepts
    const double alpha_var = 1.0 / (static_cast<double>(E) + 1.0 / prior_variance);
    for (int k = 0; k < K; ++k) {
        double resid = (z.row(k) - scores.row(k)).sum() + static_cast<double>(E) * out.alpha(k);
        double a = alpha_var * resid + std::sqrt(alpha_var) * rnorm(rng);
        scores.row(k).array() += a - out.alpha(k);
        out.alpha(k) = a;
    }

    // (c) proximity effects, jointly
    if (uses_proximity(out.variant)) {
        NormalConditional nc = beta_conditional_impl(design, out, z, prior_variance);
        out.beta = draw_normal(nc, rng, "beta");
    }

    // (d) latent positions, one group at a time
    if (uses_latent(out.variant)) {
        PriorParams base = out;
        base.variant = uses_proximity(out.variant) ? Variant::intercepts_prox : Variant::intercepts;
        Eigen::MatrixXd offset = z - design.scores(base);  // what the latent term must explain
        const Eigen::MatrixXd& S = design.signs;
        Eigen::MatrixXd T = out.C.transpose() * S;  // 2 x E, sum_k c_k s(k, e)
        for (int k = 0; k < K; ++k) {
            Eigen::Vector2d ck = out.C.row(k).transpose();
            NormalConditional nc;
            nc.precision = Eigen::Matrix2d::Identity() / prior_variance;
            Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
            for (int e = 0; e < E; ++e) {
                // own edge: regressor W(k, e)
                Eigen::Vector2d w = T.col(e) - ck * S(k, e);
                nc.precision += w * w.transpose();
                rhs += w * offset(k, e);
                // other groups: c_k enters c_{k'}' W(k', e) through c_{k'} s(k, e)
                for (int kk = 0; kk < K; ++kk) {
                    if (kk == k) continue;
                    Eigen::Vector2d ckk = out.C.row(kk).transpose();
                    Eigen::Vector2d w_other = T.col(e) - ckk * S(kk, e) - ck * S(k, e);
                    double y = offset(kk, e) - ckk.dot(w_other);
                    Eigen::Vector2d v = ckk * S(k, e);
                    nc.precision += v * v.transpose();
                    rhs += v * y;
                }
            }
            nc.mean = nc.precision.ldlt().solve(rhs);
            Eigen::Vector2d c_new = draw_normal(nc, rng, "latent position");
            T += (c_new - ck) * S.row(k);
            out.C.row(k) = c_new.transpose();
        }
    }

    if (z_out) *z_out = std::move(z);
    return out;
}

PriorParams initial_params(Variant variant, const GraphFamily& family, int d, Rng& rng) {
    const int K = family.K();
    const int E = family.n_slots();
    PriorParams params;
    params.variant = variant;
    params.alpha = Eigen::VectorXd::Zero(K);
    if (E > 0) {
        const double floor = 1.0 / E;
        for (int k = 0; k < K; ++k) {
            double density = static_cast<double>(family.graphs[k].n_edges()) / E;
            params.alpha(k) = norm_quantile(std::clamp(density, floor, 1.0 - floor / 2.0));
        }
    }
    if (uses_proximity(variant)) params.beta = Eigen::VectorXd::Zero(d);
    if (uses_latent(variant)) {
        params.C.resize(K, kLatentDim);
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < kLatentDim; ++c) params.C(k, c) = 0.1 * rnorm(rng);
    }
    return params;
}

}  // namespace rgm
