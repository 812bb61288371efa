#include "rgm/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

void ScenarioSpec::validate() const {
    if (K < 1) throw ValidationError("scenario: K must be at least 1");
    if (p < 2) throw ValidationError("scenario: p must be at least 2");
    if (n < 1) throw ValidationError("scenario: n must be at least 1");
    if (d < 0) throw ValidationError("scenario: d must be non-negative");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw ValidationError("scenario: missing_rate must lie in [0, 1)");
    if (n_categories < 2) throw ValidationError("scenario: n_categories must be at least 2");
    if (static_cast<int>(beta.size()) != d)
        throw ValidationError("scenario: beta needs one entry per proximity dimension");
    if (uses_proximity(variant) && d == 0)
        throw ValidationError("scenario: variant " + to_string(variant) + " needs d > 0");
    if (n_sweeps < 1) throw ValidationError("scenario: n_sweeps must be at least 1");
    if (!(0.0 <= edge_min && edge_min <= edge_max)) throw ValidationError("scenario: bad edge strength range");
    if (gamma.size() != 2) throw ValidationError("scenario: gamma needs two entries (age, gender)");
    for (auto [i, j] : shared_edges)
        if (i < 0 || j < 0 || i >= p || j >= p || i == j)
            throw ValidationError("scenario: shared edge out of range");
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    try {
        s.K = j.value("K", s.K);
        s.p = j.value("p", s.p);
        s.n = j.value("n", s.n);
        s.d = j.value("d", s.d);
        if (j.contains("variant")) s.variant = parse_variant(j.at("variant").get<std::string>());
        s.seed = j.value("seed", s.seed);
        s.missing_rate = j.value("missing_rate", s.missing_rate);
        s.n_categories = j.value("n_categories", s.n_categories);
        if (j.contains("link")) s.link = parse_link(j.at("link").get<std::string>());
        s.alpha_mean = j.value("alpha_mean", s.alpha_mean);
        s.alpha_sd = j.value("alpha_sd", s.alpha_sd);
        s.beta = j.value("beta", std::vector<double>(s.d, 0.0));
        s.latent_scale = j.value("latent_scale", s.latent_scale);
        s.prox_scale = j.value("prox_scale", s.prox_scale);
        s.n_sweeps = j.value("n_sweeps", s.n_sweeps);
        s.edge_min = j.value("edge_min", s.edge_min);
        s.edge_max = j.value("edge_max", s.edge_max);
        s.gamma = j.value("gamma", s.gamma);
        s.shared_edges = j.value("shared_edges", s.shared_edges);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
    return {{"K", s.K},
            {"p", s.p},
            {"n", s.n},
            {"d", s.d},
            {"variant", to_string(s.variant)},
            {"seed", s.seed},
            {"missing_rate", s.missing_rate},
            {"n_categories", s.n_categories},
            {"link", to_string(s.link)},
            {"alpha_mean", s.alpha_mean},
            {"alpha_sd", s.alpha_sd},
            {"beta", s.beta},
            {"latent_scale", s.latent_scale},
            {"prox_scale", s.prox_scale},
            {"n_sweeps", s.n_sweeps},
            {"edge_min", s.edge_min},
            {"edge_max", s.edge_max},
            {"gamma", s.gamma},
            {"shared_edges", s.shared_edges}};
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("scenario " + path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

GraphFamily generate_graph_family(const PriorParams& params, const ProximityData* prox, int p, Rng& rng,
                                  int n_sweeps) {
    if (n_sweeps < 1) throw ValidationError("generate_graph_family: n_sweeps must be at least 1");
    const int K = params.K();
    GraphFamily fam = GraphFamily::empty(K, p);
    const int E = fam.n_slots();
    for (int sweep = 0; sweep < n_sweeps; ++sweep)
        for (int k = 0; k < K; ++k)
            for (int e = 0; e < E; ++e)
                fam.graphs[k].set_slot(e, runif(rng) < edge_prior_prob(k, e, fam, params, prox));
    return fam;
}

Eigen::MatrixXd random_precision(const Graph& g, double lo, double hi, Rng& rng, double min_eig) {
    const int p = g.p();
    Eigen::MatrixXd om = Eigen::MatrixXd::Identity(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (g.has(i, j)) {
                double v = lo + (hi - lo) * runif(rng);
                if (runif(rng) < 0.5) v = -v;
                om(i, j) = om(j, i) = v;
            }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(om, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < min_eig) om.diagonal().array() += min_eig - lmin;
    return om;
}

Eigen::MatrixXd random_covariates(int n, Rng& rng) {
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = runif_int(rng, 18, 85);
        x(i, 1) = runif_int(rng, 1, 2);
    }
    return x;
}

std::vector<std::string> default_covariate_names() { return {"age", "gender"}; }

Eigen::MatrixXd draw_latent(const Eigen::MatrixXd& omega, Eigen::Index n, Rng& rng) {
    const int p = static_cast<int>(omega.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) throw ValidationError("draw_latent: precision is not SPD");
    Eigen::VectorXd sd = llt.solve(Eigen::MatrixXd::Identity(p, p)).diagonal().cwiseSqrt();
    const Eigen::MatrixXd U = llt.matrixU();
    Eigen::MatrixXd Z(n, p);
    Eigen::VectorXd eps(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) eps(j) = rnorm(rng);
        // Omega = U'U, so U^{-1} eps has covariance Omega^{-1}.
        Z.row(i) = U.triangularView<Eigen::Upper>().solve(eps).cwiseQuotient(sd).transpose();
    }
    return Z;
}

Eigen::MatrixXi generate_survey(const Eigen::MatrixXd& omega, const std::vector<OrdinalMarginalModel>& models,
                                const Eigen::MatrixXd& covariates, double missing_rate, Rng& rng) {
    const int p = static_cast<int>(omega.rows());
    if (static_cast<int>(models.size()) != p) throw ValidationError("generate_survey: one model per trait needed");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw ValidationError("generate_survey: missing_rate must lie in [0, 1)");
    const Eigen::Index n = covariates.rows();
    Eigen::MatrixXd Z = draw_latent(omega, n, rng);
    Eigen::MatrixXi y(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            double u = norm_cdf(Z(i, j));
            const auto& mdl = models[j];
            int c = 1;
            while (c < mdl.n_categories() && cumulative_prob(mdl, c, covariates.row(i).transpose()) < u) ++c;
            y(i, j) = c;
        }
        for (int j = 0; j < p; ++j)
            if (missing_rate > 0.0 && runif(rng) < missing_rate) y(i, j) = kMissing;
    }
    return y;
}

namespace {

std::string pad_id(const std::string& prefix, int i, int width) {
    std::string s = std::to_string(i);
    return prefix + std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

}  // namespace

SyntheticScenario build_scenario(const ScenarioSpec& spec) {
    spec.validate();
    SyntheticScenario sc;
    sc.spec = spec;
    const int K = spec.K, p = spec.p, d = spec.d;
    Rng rng = make_stream(spec.seed, 0);

    std::vector<std::string> groups;
    for (int k = 0; k < K; ++k) groups.push_back(pad_id("G", k + 1, 2));

    if (d > 0) {
        sc.prox.groups = groups;
        double sd = spec.prox_scale / std::sqrt(std::max(1, K - 1));
        for (int c = 0; c < d; ++c) {
            sc.prox.names.push_back("sim_" + std::to_string(c + 1));
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(K, K);
            for (int a = 0; a < K; ++a)
                for (int b = a + 1; b < K; ++b) s(a, b) = s(b, a) = sd * rnorm(rng);
            sc.prox.sim.push_back(s);
        }
    }

    PriorParams& pr = sc.params;
    pr.variant = spec.variant;
    pr.alpha.resize(K);
    for (int k = 0; k < K; ++k) pr.alpha(k) = spec.alpha_mean + spec.alpha_sd * rnorm(rng);
    if (uses_proximity(spec.variant)) pr.beta = Eigen::Map<const Eigen::VectorXd>(spec.beta.data(), d);
    if (uses_latent(spec.variant)) {
        pr.C.resize(K, kLatentDim);
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < kLatentDim; ++c) pr.C(k, c) = spec.latent_scale * rnorm(rng);
    }
    const ProximityData* prox = d > 0 ? &sc.prox : nullptr;
    sc.graphs = generate_graph_family(pr, prox, p, rng, spec.n_sweeps);
    for (auto& g : sc.graphs.graphs)
        for (auto [i, j] : spec.shared_edges) g.set(i, j, true);

    SurveyDataset& data = sc.data;
    for (int j = 0; j < p; ++j) data.traits.push_back({pad_id("T", j + 1, 2), spec.n_categories, ""});
    data.covariate_names = default_covariate_names();
    const double age_mean = 51.5, gender_mean = 1.5;
    for (int k = 0; k < K; ++k) {
        sc.omega.push_back(random_precision(sc.graphs.graphs[k], spec.edge_min, spec.edge_max, rng));
        std::vector<OrdinalMarginalModel> models;
        for (int j = 0; j < p; ++j) {
            OrdinalMarginalModel m;
            m.trait_id = data.traits[j].trait_id;
            m.link = spec.link;
            m.covariate_names = data.covariate_names;
            m.gamma = Eigen::Vector2d(spec.gamma[0], spec.gamma[1]);
            double shift = m.gamma(0) * age_mean + m.gamma(1) * gender_mean;
            double prev = -kInf;
            for (int c = 1; c < spec.n_categories; ++c) {
                double t = link_quantile(spec.link, static_cast<double>(c) / spec.n_categories) + shift +
                           0.1 * rnorm(rng);
                t = std::max(t, prev + 0.05);
                m.thresholds.push_back(t);
                prev = t;
            }
            models.push_back(std::move(m));
        }
        GroupData g;
        g.id = groups[k];
        g.covariates = random_covariates(spec.n, rng);
        g.responses = generate_survey(sc.omega[k], models, g.covariates, spec.missing_rate, rng);
        for (int i = 0; i < spec.n; ++i) g.respondent_ids.push_back(g.id + "-" + pad_id("", i + 1, 5));
        data.groups.push_back(std::move(g));
        sc.marginals.push_back(std::move(models));
    }
    data.validate();
    return sc;
}

void write_scenario(const SyntheticScenario& sc, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_survey(sc.data, dir / "survey.csv");
    write_schema(sc.data.traits, dir / "schema.json");
    if (sc.spec.d > 0) write_proximity(sc.prox, dir / "proximity.csv");

    auto to_vec = [](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
        return rows;
    };
    nlohmann::json truth;
    truth["groups"] = sc.data.group_ids();
    truth["alpha"] = std::vector<double>(sc.params.alpha.data(), sc.params.alpha.data() + sc.params.alpha.size());
    truth["beta"] = std::vector<double>(sc.params.beta.data(), sc.params.beta.data() + sc.params.beta.size());
    truth["C"] = to_vec(sc.params.C);
    nlohmann::json graphs = nlohmann::json::array(), omegas = nlohmann::json::array();
    for (int k = 0; k < sc.graphs.K(); ++k) {
        graphs.push_back(to_vec(sc.graphs.graphs[k].adjacency().cast<double>()));
        omegas.push_back(to_vec(sc.omega[k]));
    }
    truth["graphs"] = graphs;
    truth["omega"] = omegas;
    truth["marginals"] = marginals_to_json(sc.data, sc.marginals);

    std::ofstream t(dir / "truth.json");
    t << truth.dump(2) << '\n';
    std::ofstream s(dir / "scenario.json");
    s << scenario_to_json(sc.spec).dump(2) << '\n';
    if (!t || !s) throw RuntimeError("failed writing scenario files to " + dir.string());
}

std::vector<double> enumerate_posterior(const Eigen::MatrixXd& Z, const GWishartParams& prior,
                                        std::span<const double> edge_prior) {
    const int p = static_cast<int>(prior.D.rows());
    if (p > 3) throw ValidationError("enumerate_posterior: only p <= 3 is supported");
    const int E = edge_slot_count(p);
    if (static_cast<int>(edge_prior.size()) != E) throw ValidationError("enumerate_posterior: one prior per slot");
    if (Z.rows() > 0 && Z.cols() != p) throw ValidationError("enumerate_posterior: Z has the wrong width");
    GWishartParams post = posterior_params(prior, Z);

    std::vector<double> logw(std::size_t{1} << E);
    for (std::size_t mask = 0; mask < logw.size(); ++mask) {
        Graph g(p);
        double lw = 0.0;
        for (int e = 0; e < E; ++e) {
            bool on = (mask >> e) & 1u;
            g.set_slot(e, on);
            lw += std::log(on ? edge_prior[e] : 1.0 - edge_prior[e]);
        }
        if (std::isfinite(lw))
            lw += log_gwishart_constant(g, post.b, post.D) - log_gwishart_constant(g, prior.b, prior.D);
        logw[mask] = lw;
    }
    double mx = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double& w : logw) total += (w = std::exp(w - mx));
    for (double& w : logw) w /= total;
    return logw;
}

}  // namespace rgm
