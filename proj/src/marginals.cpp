#include "rgm/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;
// Offset, on the link scale, for thresholds of categories absent from the data.
constexpr double kEmptyEndGap = 10.0;
constexpr double kEmptyInteriorGap = 1e-6;

double link_pdf(Link link, double a) {
    if (link == Link::probit) return norm_pdf(a);
    double F = link_cdf(link, a);
    return F * (1.0 - F);
}

double link_pdf_deriv(Link link, double a) {
    if (link == Link::probit) return -a * norm_pdf(a);
    double F = link_cdf(link, a);
    return F * (1.0 - F) * (1.0 - 2.0 * F);
}

// P(l < latent <= u) for a symmetric link, computed on the side that avoids
// cancellation.
double interval_prob(Link link, double l, double u) {
    if (l == -kInf) return link_cdf(link, u);
    if (u == kInf) return link_cdf(link, -l);
    if (l > 0.0) return link_cdf(link, -l) - link_cdf(link, -u);
    return link_cdf(link, u) - link_cdf(link, l);
}

struct Objective {
    double nll = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    bool finite = true;
};

// Negative log-likelihood with gradient and Hessian in (eta, gamma).
// y holds compressed categories 1..C.
Objective evaluate(Link link, const std::vector<int>& y, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& theta, int C, bool derivatives) {
    const int nt = C - 1;
    const Eigen::Index m = X.cols();
    const Eigen::Index dim = nt + m;
    Objective obj;
    if (derivatives) {
        obj.grad = Eigen::VectorXd::Zero(dim);
        obj.hess = Eigen::MatrixXd::Zero(dim, dim);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        const int c = y[i];
        double xg = m > 0 ? X.row(static_cast<Eigen::Index>(i)).dot(theta.tail(m)) : 0.0;
        double u = c < C ? theta(c - 1) - xg : kInf;
        double l = c > 1 ? theta(c - 2) - xg : -kInf;
        double P = interval_prob(link, l, u);
        if (!(P > 0.0)) {
            obj.finite = false;
            obj.nll = kInf;
            return obj;
        }
        obj.nll -= std::log(P);
        if (!derivatives) continue;

        double fu = c < C ? link_pdf(link, u) : 0.0;
        double fl = c > 1 ? link_pdf(link, l) : 0.0;
        double dfu = c < C ? link_pdf_deriv(link, u) : 0.0;
        double dfl = c > 1 ? link_pdf_deriv(link, l) : 0.0;
        double gu = fu / P, gl = -fl / P;
        double huu = dfu / P - gu * gu;
        double hll = -dfl / P - gl * gl;
        double hul = fu * fl / (P * P);

        // Accumulate -d/dtheta and -d2/dtheta2 of log P.
        if (c < C) {
            obj.grad(c - 1) -= gu;
            obj.hess(c - 1, c - 1) -= huu;
        }
        if (c > 1) {
            obj.grad(c - 2) -= gl;
            obj.hess(c - 2, c - 2) -= hll;
        }
        if (c > 1 && c < C) {
            obj.hess(c - 1, c - 2) -= hul;
            obj.hess(c - 2, c - 1) -= hul;
        }
        if (m > 0) {
            Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
            obj.grad.tail(m) += x * (gu + gl);
            obj.hess.bottomRightCorner(m, m) -= x * x.transpose() * (huu + 2.0 * hul + hll);
            if (c < C) {
                Eigen::VectorXd cross = x * (huu + hul);
                obj.hess.block(c - 1, nt, 1, m) += cross.transpose();
                obj.hess.block(nt, c - 1, m, 1) += cross;
            }
            if (c > 1) {
                Eigen::VectorXd cross = x * (hul + hll);
                obj.hess.block(c - 2, nt, 1, m) += cross.transpose();
                obj.hess.block(nt, c - 2, m, 1) += cross;
            }
        }
    }
    return obj;
}

bool increasing(const Eigen::VectorXd& theta, int nt) {
    for (int c = 1; c < nt; ++c)
        if (!(theta(c) > theta(c - 1))) return false;
    return true;
}

}  // namespace

std::string to_string(Link link) { return link == Link::logit ? "logit" : "probit"; }

Link parse_link(const std::string& s) {
    if (s == "logit") return Link::logit;
    if (s == "probit") return Link::probit;
    throw ValidationError("unknown link '" + s + "' (expected logit or probit)");
}

double link_cdf(Link link, double a) {
    if (link == Link::probit) return norm_cdf(a);
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    double e = std::exp(a);
    return e / (1.0 + e);
}

double link_quantile(Link link, double u) {
    if (link == Link::probit) return norm_quantile(u);
    if (u <= 0.0) return -kInf;
    if (u >= 1.0) return kInf;
    return std::log(u / (1.0 - u));
}

OrdinalMarginalModel fit_ordinal(std::span<const int> responses, const Eigen::MatrixXd& covariates,
                                 int n_categories, const FitOptions& options) {
    if (static_cast<Eigen::Index>(responses.size()) != covariates.rows())
        throw ValidationError("fit_ordinal: responses and covariates differ in length");
    if (n_categories < 2) throw ValidationError("fit_ordinal: need at least 2 categories");

    std::set<int> levels;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        int v = responses[i];
        if (v == kMissing) continue;
        if (v < 1 || v > n_categories)
            throw ValidationError("fit_ordinal: category " + std::to_string(v) + " out of range");
        levels.insert(v);
        rows.push_back(i);
    }
    if (levels.size() < 2)
        throw FitError("fit_ordinal: fewer than two distinct observed categories", {});

    const std::vector<int> level_list(levels.begin(), levels.end());
    const int C = static_cast<int>(level_list.size());
    const int nt = C - 1;
    const Eigen::Index m = covariates.cols();
    if (static_cast<Eigen::Index>(rows.size()) < m + nt)
        throw FitError("fit_ordinal: not enough observed rows for the number of parameters", {});

    std::vector<int> y(rows.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), m);
    std::vector<double> counts(C, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        int code = responses[rows[r]];
        int c = static_cast<int>(std::lower_bound(level_list.begin(), level_list.end(), code) -
                                 level_list.begin()) + 1;
        y[r] = c;
        counts[c - 1] += 1.0;
        if (m > 0) X.row(static_cast<Eigen::Index>(r)) = covariates.row(static_cast<Eigen::Index>(rows[r]));
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(nt + m);
    double cum = 0.0;
    for (int c = 0; c < nt; ++c) {
        cum += counts[c];
        theta(c) = link_quantile(options.link, cum / static_cast<double>(rows.size()));
    }

    std::vector<FitTraceEntry> trace;
    Objective obj = evaluate(options.link, y, X, theta, C, true);
    int iter = 0;
    for (;; ++iter) {
        double gnorm = obj.grad.norm();
        trace.push_back({iter, obj.nll, gnorm});
        if (gnorm < options.grad_tol) break;
        if (iter >= options.max_iter)
            throw FitError("fit_ordinal: no convergence after " + std::to_string(iter) +
                               " iterations (gradient norm " + std::to_string(gnorm) +
                               "); possible separation",
                           trace);

        Eigen::VectorXd step;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(obj.hess);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0) {
            step = ldlt.solve(obj.grad);
        } else {
            double ridge = 1e-8 * std::max(1.0, obj.hess.diagonal().cwiseAbs().maxCoeff());
            Eigen::MatrixXd H = obj.hess;
            for (;;) {
                H.diagonal().array() = obj.hess.diagonal().array() + ridge;
                Eigen::LLT<Eigen::MatrixXd> llt(H);
                if (llt.info() == Eigen::Success) {
                    step = llt.solve(obj.grad);
                    break;
                }
                ridge *= 10.0;
            }
        }

        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            Eigen::VectorXd cand = theta - t * step;
            if (!increasing(cand, nt)) continue;
            Objective next = evaluate(options.link, y, X, cand, C, false);
            if (next.finite && next.nll <= obj.nll + 1e-12 * std::abs(obj.nll)) {
                theta = cand;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw FitError("fit_ordinal: line search failed (gradient norm " +
                               std::to_string(gnorm) + ")",
                           trace);
        obj = evaluate(options.link, y, X, theta, C, true);
    }

    OrdinalMarginalModel model;
    model.link = options.link;
    model.gamma = theta.tail(m);
    model.loglik = -obj.nll;
    model.iterations = iter;

    Eigen::VectorXd se_compressed = Eigen::VectorXd::Constant(nt + m, std::nan(""));
    Eigen::LLT<Eigen::MatrixXd> llt(obj.hess);
    if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(nt + m, nt + m));
        se_compressed = inv.diagonal().cwiseSqrt();
    }

    // Expand to the full category range. Boundary c separates codes <= c from
    // codes > c; r counts observed levels at or below it.
    model.thresholds.resize(n_categories - 1);
    model.std_errors = Eigen::VectorXd::Constant(n_categories - 1 + m, std::nan(""));
    for (int c = 1; c < n_categories; ++c) {
        int r = static_cast<int>(std::upper_bound(level_list.begin(), level_list.end(), c) -
                                 level_list.begin());
        double eta;
        if (r == 0) {
            eta = theta(0) - kEmptyEndGap * (level_list.front() - c);
        } else if (r == C) {
            eta = theta(nt - 1) + kEmptyEndGap * (c - level_list.back() + 1);
        } else {
            // Empty interior categories collapse onto the same boundary.
            int first_code_at_r = level_list[r - 1];
            eta = theta(r - 1) + kEmptyInteriorGap * (c - first_code_at_r);
            if (c == first_code_at_r) model.std_errors(c - 1) = se_compressed(r - 1);
        }
        model.thresholds[c - 1] = eta;
    }
    for (Eigen::Index i = 0; i < m; ++i) model.std_errors(n_categories - 1 + i) = se_compressed(nt + i);
    return model;
}

double ordinal_loglik(const OrdinalMarginalModel& model, std::span<const int> responses,
                      const Eigen::MatrixXd& covariates) {
    double ll = 0.0;
    const int C = model.n_categories();
    for (std::size_t i = 0; i < responses.size(); ++i) {
        int y = responses[i];
        if (y == kMissing) continue;
        double xg = covariates.cols() > 0
                        ? covariates.row(static_cast<Eigen::Index>(i)).dot(model.gamma)
                        : 0.0;
        double u = y < C ? model.thresholds[y - 1] - xg : kInf;
        double l = y > 1 ? model.thresholds[y - 2] - xg : -kInf;
        ll += std::log(interval_prob(model.link, l, u));
    }
    return ll;
}

Eigen::VectorXd standardized_coefficients(const OrdinalMarginalModel& model,
                                          const Eigen::VectorXd& covariate_sds) {
    if (covariate_sds.size() != model.gamma.size())
        throw ValidationError("standardized_coefficients: expected " +
                              std::to_string(model.gamma.size()) + " standard deviations");
    for (Eigen::Index i = 0; i < covariate_sds.size(); ++i)
        if (!(covariate_sds(i) > 0.0))
            throw ValidationError("standardized_coefficients: covariate standard deviation must be positive");
    return model.gamma.cwiseProduct(covariate_sds);
}

double cumulative_prob(const OrdinalMarginalModel& model, int c,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
    const int C = model.n_categories();
    if (c < 0 || c > C)
        throw ValidationError("cumulative_prob: category index " + std::to_string(c) +
                              " outside 0.." + std::to_string(C));
    if (c == 0) return 0.0;
    if (c == C) return 1.0;
    double xg = model.gamma.size() > 0 ? x.dot(model.gamma) : 0.0;
    return link_cdf(model.link, model.thresholds[c - 1] - xg);
}

CopulaInterval copula_interval(const OrdinalMarginalModel& model, int y,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (y == kMissing) return {-kInf, kInf};
    const int C = model.n_categories();
    if (y < 1 || y > C)
        throw ValidationError("copula_interval: category " + std::to_string(y) + " out of range");
    auto bound = [&](int c) {
        if (c == 0) return -kInf;
        if (c == C) return kInf;
        return norm_quantile(std::clamp(cumulative_prob(model, c, x), kClampLo, kClampHi));
    };
    return {bound(y - 1), bound(y)};
}

MarginalSet fit_all_marginals(const SurveyDataset& data, const FitOptions& options) {
    MarginalSet out(data.K());
    for (int k = 0; k < data.K(); ++k) {
        const auto& g = data.groups[k];
        for (int j = 0; j < data.p(); ++j) {
            std::vector<int> col(g.n());
            for (Eigen::Index i = 0; i < g.n(); ++i) col[i] = g.responses(i, j);
            try {
                auto model = fit_ordinal(col, g.covariates, data.traits[j].n_categories, options);
                model.trait_id = data.traits[j].trait_id;
                model.covariate_names = data.covariate_names;
                out[k].push_back(std::move(model));
            } catch (const FitError& e) {
                throw FitError("group " + g.id + ", trait " + data.traits[j].trait_id + ": " + e.what(),
                               e.trace());
            }
        }
    }
    return out;
}

IntervalMatrix group_intervals(const GroupData& group, const std::vector<OrdinalMarginalModel>& models) {
    const Eigen::Index n = group.n();
    const Eigen::Index p = static_cast<Eigen::Index>(models.size());
    IntervalMatrix iv{Eigen::MatrixXd(n, p), Eigen::MatrixXd(n, p)};
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd x = group.covariates.row(i).transpose();
        for (Eigen::Index j = 0; j < p; ++j) {
            auto ci = copula_interval(models[j], group.responses(i, j), x);
            iv.lo(i, j) = ci.lo;
            iv.hi(i, j) = ci.hi;
        }
    }
    return iv;
}

nlohmann::json marginals_to_json(const SurveyDataset& data, const MarginalSet& models) {
    nlohmann::json arr = nlohmann::json::array();
    for (int k = 0; k < data.K(); ++k)
        for (const auto& mdl : models[k]) {
            std::vector<double> gamma(mdl.gamma.data(), mdl.gamma.data() + mdl.gamma.size());
            arr.push_back({{"group", data.groups[k].id},
                           {"trait", mdl.trait_id},
                           {"link", to_string(mdl.link)},
                           {"thresholds", mdl.thresholds},
                           {"gamma", gamma},
                           {"loglik", mdl.loglik}});
        }
    return arr;
}

MarginalSet marginals_from_json(const SurveyDataset& data, const nlohmann::json& j) {
    MarginalSet out(data.K(), std::vector<OrdinalMarginalModel>(data.p()));
    std::vector<std::vector<bool>> seen(data.K(), std::vector<bool>(data.p(), false));
    for (const auto& item : j) {
        auto k = data.group_index(item.at("group").get<std::string>());
        if (!k) throw ValidationError("marginals: unknown group " + item.at("group").get<std::string>());
        const auto trait = item.at("trait").get<std::string>();
        int jj = -1;
        for (int t = 0; t < data.p(); ++t)
            if (data.traits[t].trait_id == trait) jj = t;
        if (jj < 0) throw ValidationError("marginals: unknown trait " + trait);
        OrdinalMarginalModel mdl;
        mdl.trait_id = trait;
        mdl.link = parse_link(item.at("link").get<std::string>());
        mdl.thresholds = item.at("thresholds").get<std::vector<double>>();
        auto gamma = item.at("gamma").get<std::vector<double>>();
        mdl.gamma = Eigen::Map<Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
        mdl.loglik = item.at("loglik").get<double>();
        mdl.covariate_names = data.covariate_names;
        if (mdl.n_categories() != data.traits[jj].n_categories ||
            mdl.gamma.size() != data.m())
            throw ValidationError("marginals: model for " + trait + " does not match the dataset schema");
        out[*k][jj] = std::move(mdl);
        seen[*k][jj] = true;
    }
    for (int k = 0; k < data.K(); ++k)
        for (int t = 0; t < data.p(); ++t)
            if (!seen[k][t])
                throw ValidationError("marginals: no model for group " + data.groups[k].id +
                                      ", trait " + data.traits[t].trait_id);
    return out;
}

}  // namespace rgm
