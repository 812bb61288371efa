#include <doctest.h>

#include <cmath>
#include <vector>

#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"

using namespace rgm;

namespace {

struct EntryStats {
    Eigen::MatrixXd mean, se;
};

template <class F>
EntryStats mc_stats(int n, int p, F&& draw) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p), ss = Eigen::MatrixXd::Zero(p, p);
    for (int t = 0; t < n; ++t) {
        Eigen::MatrixXd x = draw();
        s += x;
        ss += x.cwiseProduct(x);
    }
    Eigen::MatrixXd mean = s / n;
    Eigen::MatrixXd var = (ss / n - mean.cwiseProduct(mean)) * (double(n) / (n - 1));
    return {mean, (var / n).cwiseSqrt()};
}

Graph path3() {
    Graph g(3);
    g.set(0, 1, true);
    g.set(1, 2, true);
    return g;
}

}  // namespace

TEST_CASE("conjugate update") {
    auto prior = default_gwishart_prior(3);
    CHECK(prior.b == 3.0);
    CHECK(prior.D.isIdentity());
    Eigen::MatrixXd Z(2, 3);
    Z << 1, 2, 3, -1, 0, 1;
    auto post = posterior_params(prior, Z);
    CHECK(post.b == 5.0);
    CHECK(post.D.isApprox(Eigen::MatrixXd::Identity(3, 3) + Z.transpose() * Z));
    auto same = posterior_params(prior, Eigen::MatrixXd(0, 3));
    CHECK(same.b == 3.0);
    CHECK(same.D == prior.D);
}

TEST_CASE("complete graph: Wishart mean (b + p - 1) D^-1") {
    GWishartParams prm{3.0, Eigen::MatrixXd(3, 3)};
    prm.D << 2.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 0.5;
    Eigen::MatrixXd expect = (prm.b + 3 - 1) * prm.D.inverse();
    Rng rng = make_stream(1, 0);
    Graph full = Graph::complete(3);
    auto st = mc_stats(40000, 3, [&] { return sample_gwishart(full, prm, rng); });
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(st.mean(i, j) - expect(i, j)) < 3 * st.se(i, j));
    auto wst = mc_stats(40000, 3, [&] { return sample_wishart(prm, rng); });
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(wst.mean(i, j) - expect(i, j)) < 3 * wst.se(i, j));
}

TEST_CASE("p = 1: gamma with mean b / d") {
    GWishartParams prm{5.0, Eigen::MatrixXd::Constant(1, 1, 2.5)};
    Rng rng = make_stream(2, 0);
    auto st = mc_stats(100000, 1, [&] { return sample_gwishart(Graph(1), prm, rng); });
    CHECK(std::abs(st.mean(0, 0) - 5.0 / 2.5) < 3 * st.se(0, 0));
}

TEST_CASE("draws conform to the graph and are SPD") {
    Rng rng = make_stream(3, 0);
    Graph g(5);
    g.set(0, 1, true);
    g.set(1, 2, true);
    g.set(2, 3, true);
    g.set(3, 4, true);
    g.set(4, 0, true);  // 5-cycle, not decomposable
    auto prm = default_gwishart_prior(5);
    for (int t = 0; t < 200; ++t) {
        Eigen::MatrixXd K = sample_gwishart(g, prm, rng);
        CHECK(is_spd(K));
        CHECK(K.isApprox(K.transpose(), 0.0));
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (i != j && !g.has(i, j)) REQUIRE(K(i, j) == 0.0);
    }
}

TEST_CASE("decomposable graph: clique covariance means D_C / (b - 2)") {
    // Sigma = K^{-1}; clique marginals are inverse Wishart.
    GWishartParams prm{8.0, Eigen::MatrixXd::Identity(3, 3)};
    prm.D(0, 1) = prm.D(1, 0) = 0.4;
    prm.D(1, 2) = prm.D(2, 1) = -0.3;
    Rng rng = make_stream(4, 0);
    Graph g = path3();
    auto st = mc_stats(60000, 3, [&] { return Eigen::MatrixXd(sample_gwishart(g, prm, rng).inverse()); });
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            if (i != j && !g.has(i, j)) continue;
            CHECK(std::abs(st.mean(i, j) - prm.D(i, j) / (prm.b - 2)) < 3 * st.se(i, j));
        }
}

TEST_CASE("completion reproduces the free covariance entries") {
    Eigen::MatrixXd sigma(4, 4);
    sigma << 2.0, 0.5, 0.3, 0.1, 0.5, 1.5, 0.2, 0.4, 0.3, 0.2, 1.0, 0.3, 0.1, 0.4, 0.3, 1.2;
    Graph g(4);
    g.set(0, 1, true);
    g.set(1, 2, true);
    g.set(2, 3, true);
    g.set(3, 0, true);
    Eigen::MatrixXd K = complete_precision(g, sigma);
    Eigen::MatrixXd S = K.inverse();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == j || g.has(i, j))
                CHECK(S(i, j) == doctest::Approx(sigma(i, j)).epsilon(1e-8));
            else
                CHECK(K(i, j) == 0.0);
        }
    CHECK(complete_precision(Graph::complete(4), sigma).isApprox(sigma.inverse(), 1e-10));
}

TEST_CASE("normalizing constants: one dimension and the empty graph") {
    const double b = 3.5, d = 1.7;
    double oracle = std::lgamma(b / 2) + (b / 2) * std::log(2.0 / d);
    CHECK(log_wishart_constant(b, Eigen::MatrixXd::Constant(1, 1, d)) == doctest::Approx(oracle).epsilon(1e-12));
    Eigen::MatrixXd D(3, 3);
    D << 1.5, 0.2, 0.1, 0.2, 2.0, -0.3, 0.1, -0.3, 0.8;
    double empty = 0.0;
    for (int i = 0; i < 3; ++i) empty += std::lgamma(b / 2) + (b / 2) * std::log(2.0 / D(i, i));
    CHECK(log_gwishart_constant(Graph(3), b, D) == doctest::Approx(empty).epsilon(1e-12));
    CHECK(log_gwishart_constant(Graph::complete(3), b, D) ==
          doctest::Approx(log_wishart_constant(b, D)).epsilon(1e-12));
    CHECK(log_wishart_constant(b, Eigen::MatrixXd(0, 0)) == 0.0);
}

TEST_CASE("edge ratio equals the difference of constants for decomposable pairs") {
    const int p = 5;
    Rng rng = make_stream(5, 0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(p, p);
    Eigen::MatrixXd D = A * A.transpose() + Eigen::MatrixXd::Identity(p, p);
    const double b = 4.0;
    int checked = 0;
    for (int t = 0; t < 300; ++t) {
        Graph g(p);
        for (int e = 0; e < edge_slot_count(p); ++e) g.set_slot(e, runif(rng) < 0.5);
        int e = runif_int(rng, 0, edge_slot_count(p) - 1);
        auto [i, j] = slot_pair(p, e);
        Graph plus = g, minus = g;
        plus.set(i, j, true);
        minus.set(i, j, false);
        if (!is_decomposable(plus) || !is_decomposable(minus)) continue;
        double exact = log_gwishart_constant(plus, b, D) - log_gwishart_constant(minus, b, D);
        CHECK(log_edge_constant_ratio(g, i, j, b, D) == doctest::Approx(exact).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("non-decomposable constants are refused") {
    Graph cycle(4);
    cycle.set(0, 1, true);
    cycle.set(1, 2, true);
    cycle.set(2, 3, true);
    cycle.set(3, 0, true);
    CHECK_THROWS_AS(log_gwishart_constant(cycle, 3.0, Eigen::MatrixXd::Identity(4, 4)), ValidationError);
}

TEST_CASE("invalid sampler arguments") {
    Rng rng = make_stream(6, 0);
    CHECK_THROWS_AS(sample_gwishart(Graph(3), GWishartParams{2.0, Eigen::MatrixXd::Identity(3, 3)}, rng),
                    ValidationError);
    CHECK_THROWS_AS(sample_gwishart(Graph(3), GWishartParams{3.0, Eigen::MatrixXd::Identity(2, 2)}, rng),
                    ValidationError);
}
