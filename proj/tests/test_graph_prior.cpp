#include <doctest.h>

#include <cmath>

#include "rgm/error.hpp"
#include "rgm/graph_prior.hpp"
#include "rgm/normal.hpp"
#include "rgm/synthesis.hpp"

using namespace rgm;

namespace {

ProximityData constant_prox(int K, int d, double value) {
    ProximityData p;
    for (int k = 0; k < K; ++k) p.groups.push_back("G" + std::to_string(k));
    for (int c = 0; c < d; ++c) {
        p.names.push_back("s" + std::to_string(c));
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(K, K, value);
        m.diagonal().setZero();
        p.sim.push_back(m);
    }
    return p;
}

ProximityData random_prox(int K, int d, Rng& rng) {
    ProximityData p = constant_prox(K, d, 0.0);
    for (auto& m : p.sim)
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b) m(a, b) = m(b, a) = rnorm(rng);
    return p;
}

GraphFamily random_family(int K, int p, Rng& rng) {
    GraphFamily f = GraphFamily::empty(K, p);
    for (auto& g : f.graphs)
        for (int e = 0; e < g.n_slots(); ++e) g.set_slot(e, runif(rng) < 0.5);
    return f;
}

PriorParams random_params(Variant v, int K, int d, Rng& rng) {
    PriorParams pr;
    pr.variant = v;
    pr.alpha = Eigen::VectorXd::NullaryExpr(K, [&] { return rnorm(rng); });
    if (uses_proximity(v)) pr.beta = Eigen::VectorXd::NullaryExpr(d, [&] { return rnorm(rng); });
    if (uses_latent(v)) pr.C = Eigen::MatrixXd::NullaryExpr(K, 2, [&] { return 0.5 * rnorm(rng); });
    return pr;
}

}  // namespace

TEST_CASE("variant names") {
    CHECK(to_string(Variant::intercepts_prox) == "int+prox");
    CHECK(parse_variant("int+ls") == Variant::intercepts_ls);
    CHECK(parse_variant("intercepts") == Variant::intercepts);
    CHECK(parse_variant("full") == Variant::full);
    CHECK_THROWS_AS(parse_variant("latent"), ValidationError);
    CHECK(uses_latent(Variant::full));
    CHECK_FALSE(uses_proximity(Variant::intercepts_ls));
}

TEST_CASE("zero intercept gives score 0 and probability one half") {
    GraphFamily f = GraphFamily::empty(3, 4);
    PriorParams pr;
    pr.alpha = Eigen::VectorXd::Zero(3);
    CHECK(edge_score(1, 2, f, pr, nullptr) == 0.0);
    CHECK(edge_prior_prob(1, 2, f, pr, nullptr) == 0.5);
}

TEST_CASE("single proximity term") {
    GraphFamily f = GraphFamily::empty(2, 3);
    f.graphs[1].set_slot(0, true);
    ProximityData prox = constant_prox(2, 1, 0.7);
    PriorParams pr;
    pr.variant = Variant::intercepts_prox;
    pr.alpha = Eigen::VectorXd::Zero(2);
    pr.beta = Eigen::VectorXd::Ones(1);
    CHECK(edge_score(0, 0, f, pr, &prox) == doctest::Approx(0.7));
    CHECK(edge_score(0, 1, f, pr, &prox) == doctest::Approx(-0.7));
}

TEST_CASE("flipping the other groups' edges negates the coupling part") {
    Rng rng = make_stream(1, 0);
    const int K = 5, p = 4, d = 2;
    ProximityData prox = random_prox(K, d, rng);
    for (int t = 0; t < 20; ++t) {
        GraphFamily f = random_family(K, p, rng);
        PriorParams pr = random_params(Variant::full, K, d, rng);
        int k = runif_int(rng, 0, K - 1), e = runif_int(rng, 0, edge_slot_count(p) - 1);
        GraphFamily flipped = f;
        for (int kk = 0; kk < K; ++kk)
            if (kk != k) flipped.graphs[kk].set_slot(e, !f.graphs[kk].has_slot(e));
        double a = edge_score(k, e, f, pr, &prox) - pr.alpha(k);
        double b = edge_score(k, e, flipped, pr, &prox) - pr.alpha(k);
        CHECK(a == doctest::Approx(-b).epsilon(1e-12));
    }
}

TEST_CASE("probabilities: monotone, sparsity limit, intercepts-only is flat across slots") {
    GraphFamily f = GraphFamily::empty(3, 4);
    PriorParams pr;
    pr.alpha = Eigen::Vector3d(-40.0, 0.3, 1.2);
    CHECK(edge_prior_prob(0, 0, f, pr, nullptr) < 1e-300);
    CHECK(edge_prior_prob(1, 0, f, pr, nullptr) < edge_prior_prob(2, 0, f, pr, nullptr));
    Rng rng = make_stream(2, 0);
    f = random_family(3, 4, rng);
    Eigen::MatrixXd P = edge_prior_probs(f, pr, nullptr);
    for (int k = 0; k < 3; ++k) CHECK((P.row(k).array() == P(k, 0)).all());
}

TEST_CASE("vectorised probabilities match the direct formula") {
    Rng rng = make_stream(3, 0);
    const int K = 3, p = 3, d = 2;
    ProximityData prox = random_prox(K, d, rng);
    for (Variant v : {Variant::intercepts, Variant::intercepts_ls, Variant::intercepts_prox, Variant::full})
        for (int t = 0; t < 10; ++t) {
            GraphFamily f = random_family(K, p, rng);
            PriorParams pr = random_params(v, K, d, rng);
            Eigen::MatrixXd P = edge_prior_probs(f, pr, &prox);
            for (int k = 0; k < K; ++k)
                for (int e = 0; e < 3; ++e) {
                    // Direct evaluation: sum over the other groups explicitly.
                    double s = pr.alpha(k);
                    for (int kk = 0; kk < K; ++kk) {
                        if (kk == k) continue;
                        double sign = f.graphs[kk].has_slot(e) ? 1.0 : -1.0;
                        if (uses_proximity(v))
                            for (int c = 0; c < d; ++c) s += pr.beta(c) * prox.sim[c](k, kk) * sign;
                        if (uses_latent(v)) s += pr.C.row(k).dot(pr.C.row(kk)) * sign;
                    }
                    CHECK(P(k, e) == doctest::Approx(norm_cdf(s)).epsilon(1e-12));
                    CHECK(edge_score(k, e, f, pr, &prox) == doctest::Approx(s).epsilon(1e-12));
                }
        }
}

TEST_CASE("latent term is invariant under a common orthogonal transform") {
    Rng rng = make_stream(4, 0);
    const int K = 8, p = 4;
    GraphFamily f = random_family(K, p, rng);
    PriorParams pr = random_params(Variant::intercepts_ls, K, 0, rng);
    for (int t = 0; t < 100; ++t) {
        double th = 2 * M_PI * runif(rng);
        Eigen::Matrix2d Q;
        Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        if (runif(rng) < 0.5) Q.col(1) *= -1.0;
        PriorParams rot = pr;
        rot.C = pr.C * Q;
        for (int k = 0; k < K; ++k)
            for (int e = 0; e < f.n_slots(); ++e)
                CHECK(std::abs(edge_score(k, e, f, rot, nullptr) - edge_score(k, e, f, pr, nullptr)) < 1e-12);
    }
}

TEST_CASE("composite log-likelihood sums the conditional log-probabilities") {
    Rng rng = make_stream(5, 0);
    const int K = 4, p = 4, d = 1;
    ProximityData prox = random_prox(K, d, rng);
    GraphFamily f = random_family(K, p, rng);
    PriorParams pr = random_params(Variant::full, K, d, rng);
    double direct = 0.0;
    for (int k = 0; k < K; ++k)
        for (int e = 0; e < f.n_slots(); ++e) {
            double q = edge_prior_prob(k, e, f, pr, &prox);
            direct += std::log(f.graphs[k].has_slot(e) ? q : 1 - q);
        }
    CHECK(graph_composite_loglik(f, pr, &prox) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("augmented utilities agree in sign with the edges") {
    Rng rng = make_stream(6, 0);
    const int K = 5, p = 5, d = 2;
    ProximityData prox = random_prox(K, d, rng);
    GraphFamily f = random_family(K, p, rng);
    PriorParams pr = initial_params(Variant::full, f, d, rng);
    for (int s = 0; s < 20; ++s) {
        Eigen::MatrixXd z;
        pr = gibbs_update_params(f, pr, &prox, 10.0, rng, &z);
        Eigen::MatrixXd S = f.signs();
        REQUIRE((z.array() * S.array() >= 0.0).all());
        pr.validate(K, d);
    }
}

TEST_CASE("intercepts are recovered from a generated family") {
    Rng rng = make_stream(7, 0);
    const int K = 30, p = 10;
    PriorParams truth;
    truth.alpha = Eigen::VectorXd::NullaryExpr(K, [&] { return -0.5 + 0.6 * rnorm(rng); });
    GraphFamily f = generate_graph_family(truth, nullptr, p, rng, 1);
    PriorParams pr = initial_params(Variant::intercepts, f, 0, rng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(K), sumsq = Eigen::VectorXd::Zero(K);
    const int burn = 500, n = 5000;
    for (int s = 0; s < burn + n; ++s) {
        pr = gibbs_update_params(f, pr, nullptr, 10.0, rng);
        if (s >= burn) sum += pr.alpha, sumsq += pr.alpha.cwiseProduct(pr.alpha);
    }
    Eigen::VectorXd mean = sum / n;
    Eigen::VectorXd sd = (sumsq / n - mean.cwiseProduct(mean)).cwiseSqrt();
    // 45 Bernoulli edges pin each intercept only to about 0.2, so the error is
    // judged on average and per group against the posterior spread.
    CHECK((mean - truth.alpha).cwiseAbs().mean() < 0.2);
    for (int k = 0; k < K; ++k) CHECK(std::abs(mean(k) - truth.alpha(k)) < 3.5 * sd(k));
    // the posterior mean tracks the per-group edge frequency
    for (int k = 0; k < K; ++k) {
        double freq = (f.graphs[k].n_edges() + 0.5) / (f.n_slots() + 1.0);
        CHECK(std::abs(norm_cdf(mean(k)) - freq) < 0.1);
    }
}

TEST_CASE("beta reproduces its prior when the proximity design vanishes") {
    Rng rng = make_stream(8, 0);
    const int K = 4, p = 3;
    ProximityData prox = constant_prox(K, 1, 0.0);
    GraphFamily f = random_family(K, p, rng);
    PriorParams pr = initial_params(Variant::intercepts_prox, f, 1, rng);
    const int n = 40000;
    double s = 0, ss = 0;
    for (int t = 0; t < n; ++t) {
        pr = gibbs_update_params(f, pr, &prox, 10.0, rng);
        s += pr.beta(0);
        ss += pr.beta(0) * pr.beta(0);
    }
    double mean = s / n, var = ss / n - mean * mean;
    CHECK(std::abs(mean) < 0.1);
    CHECK(var == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("beta conditional mean grows with the number of present edges") {
    const int K = 3, p = 4;
    ProximityData prox = constant_prox(K, 1, 1.0);
    PriorParams pr;
    pr.variant = Variant::intercepts_prox;
    pr.alpha = Eigen::VectorXd::Zero(K);
    pr.beta = Eigen::VectorXd::Zero(1);
    double prev = -kInf;
    for (int m = 0; m <= 6; ++m) {
        GraphFamily f = GraphFamily::empty(K, p);
        f.graphs[1] = Graph::complete(p);
        f.graphs[2] = Graph::complete(p);
        for (int e = 0; e < m; ++e) f.graphs[0].set_slot(e, true);
        Eigen::MatrixXd z = f.signs();
        NormalConditional nc = beta_conditional(f, pr, prox, z, 10.0);
        // closed form for this design: (8m - 12) / (24 + 8m + 1/10)
        CHECK(nc.mean(0) == doctest::Approx((8.0 * m - 12.0) / (24.1 + 8.0 * m)).epsilon(1e-12));
        CHECK(nc.mean(0) > prev);
        prev = nc.mean(0);
    }
}

TEST_CASE("parameter validation and initial values") {
    Rng rng = make_stream(9, 0);
    GraphFamily f = GraphFamily::empty(3, 10);
    f.graphs[0] = Graph::complete(10);
    PriorParams pr = initial_params(Variant::full, f, 2, rng);
    CHECK(pr.alpha(1) == doctest::Approx(norm_quantile(1.0 / 45)));
    CHECK(pr.alpha(0) < kInf);
    CHECK(pr.beta.isZero());
    CHECK(pr.C.rows() == 3);
    CHECK_NOTHROW(pr.validate(3, 2));
    CHECK_THROWS_AS(pr.validate(4, 2), ValidationError);
    CHECK_THROWS_AS(pr.validate(3, 1), ValidationError);
    CHECK_THROWS_AS(edge_prior_probs(f, pr, nullptr), ValidationError);
}
