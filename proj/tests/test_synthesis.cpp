#include <doctest.h>

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/synthesis.hpp"
#include "test_util.hpp"

using namespace rgm;

namespace {

PriorParams intercepts(int K, double a) {
    PriorParams p;
    p.variant = Variant::intercepts;
    p.alpha = Eigen::VectorXd::Constant(K, a);
    return p;
}

ProximityData constant_prox(int K, double value) {
    ProximityData p;
    p.names = {"s"};
    for (int k = 0; k < K; ++k) p.groups.push_back("G" + std::to_string(k));
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(K, K, value);
    m.diagonal().setZero();
    p.sim = {m};
    return p;
}

double agreement(const GraphFamily& f) {
    const int K = f.K(), E = f.n_slots();
    Eigen::MatrixXd s = f.signs();
    double same = 0, total = 0;
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b)
            for (int e = 0; e < E; ++e) {
                same += s(a, e) == s(b, e);
                total += 1;
            }
    return same / total;
}

OrdinalMarginalModel model(std::vector<double> thresholds, Eigen::VectorXd gamma) {
    OrdinalMarginalModel m;
    m.trait_id = "T";
    m.thresholds = std::move(thresholds);
    m.gamma = std::move(gamma);
    for (int i = 0; i < m.gamma.size(); ++i) m.covariate_names.push_back("x" + std::to_string(i));
    return m;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

Eigen::MatrixXd strong_pair_latent(int n, Rng& rng) {
    Eigen::Matrix3d om;
    om << 1.0, -0.6, 0.0, -0.6, 1.0, 0.0, 0.0, 0.0, 1.0;
    return draw_latent(om, n, rng);
}

}  // namespace

TEST_CASE("very negative intercepts give empty graphs") {
    Rng rng = make_stream(1, 0);
    auto f = generate_graph_family(intercepts(6, -10.0), nullptr, 5, rng, 20);
    for (const auto& g : f.graphs) CHECK(g.n_edges() == 0);
}

TEST_CASE("zero intercepts give edge frequency one half") {
    Rng rng = make_stream(2, 0);
    double edges = 0, slots = 0;
    for (int r = 0; r < 20; ++r) {
        auto f = generate_graph_family(intercepts(10, 0.0), nullptr, 6, rng, 5);
        for (const auto& g : f.graphs) edges += g.n_edges();
        slots += 10.0 * f.n_slots();
    }
    double freq = edges / slots;  // 3000 Bernoulli(0.5) draws
    CHECK(std::abs(freq - 0.5) < 4 * std::sqrt(0.25 / slots));
}

TEST_CASE("a strong proximity effect raises cross-group agreement") {
    const int K = 6;
    auto prox = constant_prox(K, 1.0);
    PriorParams params;
    params.variant = Variant::intercepts_prox;
    params.alpha = Eigen::VectorXd::Zero(K);
    params.beta = Eigen::VectorXd::Zero(1);
    double base = 0, strong = 0;
    Rng rng = make_stream(3, 0);
    for (int r = 0; r < 10; ++r) base += agreement(generate_graph_family(params, &prox, 6, rng, 50));
    params.beta(0) = 1.0;
    for (int r = 0; r < 10; ++r) strong += agreement(generate_graph_family(params, &prox, 6, rng, 50));
    CHECK(base / 10 == doctest::Approx(0.5).epsilon(0.1));
    CHECK(strong / 10 > base / 10 + 0.2);
}

TEST_CASE("identity precision and uniform thresholds: near-uniform categories") {
    Rng rng = make_stream(4, 0);
    const int n = 10000;
    std::vector<OrdinalMarginalModel> models;
    for (int j = 0; j < 3; ++j)
        models.push_back(model({link_quantile(Link::logit, 0.25), 0.0, link_quantile(Link::logit, 0.75)},
                               Eigen::VectorXd::Zero(1)));
    auto y = generate_survey(Eigen::Matrix3d::Identity(), models, Eigen::MatrixXd::Zero(n, 1), 0.0, rng);
    for (int j = 0; j < 3; ++j)
        for (int c = 1; c <= 4; ++c) {
            double f = (y.col(j).array() == c).cast<double>().mean();
            CHECK(std::abs(f - 0.25) < 4 * std::sqrt(0.25 * 0.75 / n));
        }
    CHECK(y.minCoeff() >= 1);
    CHECK(y.maxCoeff() <= 4);
}

TEST_CASE("positive partial correlation gives positively correlated categories") {
    Rng rng = make_stream(5, 0);
    const int n = 2000;
    Eigen::Matrix3d om;
    om << 1.0, -0.6, 0.0, -0.6, 1.0, 0.0, 0.0, 0.0, 1.0;
    std::vector<OrdinalMarginalModel> models(3, model({-1.0, 0.0, 1.0}, Eigen::VectorXd::Zero(1)));
    auto y = generate_survey(om, models, Eigen::MatrixXd::Zero(n, 1), 0.0, rng);
    Eigen::MatrixXd yd = y.cast<double>();
    CHECK(correlation(yd.col(0), yd.col(1)) > 0.3);
    CHECK(std::abs(correlation(yd.col(0), yd.col(2))) < 0.1);
}

TEST_CASE("missing rate is honoured and must stay below one") {
    Rng rng = make_stream(6, 0);
    const int n = 10000;
    std::vector<OrdinalMarginalModel> models(2, model({-1.0, 0.0, 1.0}, Eigen::VectorXd::Zero(1)));
    auto y = generate_survey(Eigen::Matrix2d::Identity(), models, Eigen::MatrixXd::Zero(n, 1), 0.1, rng);
    double miss = (y.array() == kMissing).cast<double>().mean();
    CHECK(std::abs(miss - 0.1) < 0.01);
    CHECK_THROWS_AS(
        generate_survey(Eigen::Matrix2d::Identity(), models, Eigen::MatrixXd::Zero(5, 1), 1.0, rng),
        ValidationError);
}

TEST_CASE("latent draws match the correlation form of the covariance") {
    Rng rng = make_stream(7, 0);
    Eigen::Matrix4d om;
    om << 2.0, -0.8, 0.3, 0.0, -0.8, 1.5, 0.0, 0.4, 0.3, 0.0, 1.0, -0.2, 0.0, 0.4, -0.2, 1.2;
    Eigen::MatrixXd S = om.inverse();
    Eigen::VectorXd sd = S.diagonal().cwiseSqrt();
    Eigen::MatrixXd R = sd.cwiseInverse().asDiagonal() * S * sd.cwiseInverse().asDiagonal();
    Eigen::MatrixXd Z = draw_latent(om, 100000, rng);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) CHECK(std::abs(correlation(Z.col(a), Z.col(b)) - R(a, b)) < 0.02);
}

TEST_CASE("marginal refits recover the generating model") {
    Rng rng = make_stream(8, 0);
    const int n = 20000;
    Eigen::MatrixXd x = random_covariates(n, rng);
    Eigen::VectorXd gamma(2);
    gamma << 0.015, -0.3;
    auto truth = model({-0.2, 0.8, 2.0}, gamma);
    auto y = generate_survey(Eigen::Matrix2d::Identity(), {truth, truth}, x, 0.0, rng);
    std::vector<int> col(y.col(0).data(), y.col(0).data() + n);
    auto fit = fit_ordinal(col, x, 4);
    REQUIRE(fit.std_errors.size() == 5);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(fit.thresholds[c] - truth.thresholds[c]) < 3 * fit.std_errors(c));
    for (int m = 0; m < 2; ++m) CHECK(std::abs(fit.gamma(m) - gamma(m)) < 3 * fit.std_errors(3 + m));
}

TEST_CASE("enumeration: flat prior and no data") {
    std::vector<double> half(3, 0.5);
    auto post = enumerate_posterior(Eigen::MatrixXd(0, 3), default_gwishart_prior(3), half);
    REQUIRE(post.size() == 8);
    for (double x : post) CHECK(x == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("enumeration: a certain edge prior restricts the support") {
    Rng rng = make_stream(9, 0);
    Eigen::MatrixXd Z = draw_latent(Eigen::Matrix3d::Identity(), 30, rng);
    std::vector<double> pr{1.0, 0.4, 0.7};
    auto post = enumerate_posterior(Z, default_gwishart_prior(3), pr);
    for (std::size_t m = 0; m < 8; ++m)
        if (!(m & 1u)) CHECK(post[m] == 0.0);
    CHECK(std::abs(std::accumulate(post.begin(), post.end(), 0.0) - 1.0) < 1e-12);
}

TEST_CASE("enumeration: strong correlation concentrates on graphs with the edge") {
    Rng rng = make_stream(10, 0);
    Eigen::MatrixXd Z = strong_pair_latent(200, rng);
    std::vector<double> half(3, 0.5);
    auto post = enumerate_posterior(Z, default_gwishart_prior(3), half);
    double mass = 0;
    for (std::size_t m = 0; m < 8; ++m)
        if (m & 1u) mass += post[m];
    CHECK(mass > 0.95);
    CHECK(std::abs(std::accumulate(post.begin(), post.end(), 0.0) - 1.0) < 1e-12);
    CHECK_THROWS_AS(enumerate_posterior(Eigen::MatrixXd(0, 4), default_gwishart_prior(4),
                                        std::vector<double>(6, 0.5)),
                    ValidationError);
}

TEST_CASE("scenarios: json round trip, determinism and forced edges") {
    ScenarioSpec spec;
    spec.K = 4;
    spec.p = 4;
    spec.n = 30;
    spec.d = 2;
    spec.beta = {1.0, -0.5};
    spec.variant = Variant::full;
    spec.seed = 11;
    spec.n_sweeps = 10;
    spec.missing_rate = 0.2;
    spec.shared_edges = {{0, 1}};
    auto back = scenario_from_json(scenario_to_json(spec));
    CHECK(scenario_to_json(back) == scenario_to_json(spec));

    auto a = build_scenario(spec), b = build_scenario(spec);
    for (int k = 0; k < spec.K; ++k) {
        CHECK(a.data.groups[k].responses == b.data.groups[k].responses);
        CHECK(a.graphs.graphs[k].has(0, 1));
        CHECK(is_spd(a.omega[k]));
    }
    spec.seed = 12;
    auto c = build_scenario(spec);
    CHECK(c.data.groups[0].responses != a.data.groups[0].responses);

    testutil::TempDir dir;
    write_scenario(a, dir.path());
    for (const char* f : {"survey.csv", "schema.json", "proximity.csv", "truth.json", "scenario.json"})
        CHECK(std::filesystem::exists(dir / f));
    auto reread = load_survey(dir / "survey.csv", load_schema(dir / "schema.json"), default_covariate_names());
    REQUIRE(reread.K() == 4);
    for (int k = 0; k < 4; ++k) CHECK(reread.groups[k].responses == a.data.groups[k].responses);

    nlohmann::json bad = scenario_to_json(spec);
    bad["missing_rate"] = 1.0;
    CHECK_THROWS_AS(scenario_from_json(bad), ValidationError);
    bad["missing_rate"] = 0.99;
    CHECK_NOTHROW(scenario_from_json(bad));
}
