#include <doctest.h>

#include <cmath>

#include "rgm/copula_latent.hpp"
#include "rgm/error.hpp"
#include "rgm/normal.hpp"

using namespace rgm;

namespace {

struct Moments {
    double mean, var;
};

Moments draw_moments(double mu, double sigma, double lo, double hi, int n, Rng& rng) {
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
        double x = truncated_normal_sample(mu, sigma, lo, hi, rng);
        REQUIRE(x > lo);
        REQUIRE(x < hi);
        s += x;
        ss += x * x;
    }
    double m = s / n;
    return {m, ss / n - m * m};
}

// Mean and variance of N(mu, sigma^2) truncated to (lo, hi).
Moments exact_moments(double mu, double sigma, double lo, double hi) {
    double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
    double pa = std::isinf(a) ? 0.0 : norm_pdf(a), pb = std::isinf(b) ? 0.0 : norm_pdf(b);
    double z = a > 0 ? norm_cdf(-a) - norm_cdf(-b) : norm_cdf(b) - norm_cdf(a);
    double ta = std::isinf(a) ? 0.0 : a * pa, tb = std::isinf(b) ? 0.0 : b * pb;
    double m = (pa - pb) / z;
    return {mu + sigma * m, sigma * sigma * (1 + (ta - tb) / z - m * m)};
}

}  // namespace

TEST_CASE("untruncated draws have mean 0") {
    Rng rng = make_stream(1, 0);
    auto m = draw_moments(0, 1, -kInf, kInf, 1000000, rng);
    CHECK(std::abs(m.mean) < 0.005);
    CHECK(std::abs(m.var - 1.0) < 0.01);
}

TEST_CASE("half-line draws have the half-normal mean") {
    Rng rng = make_stream(2, 0);
    auto m = draw_moments(0, 1, 0, kInf, 1000000, rng);
    CHECK(std::abs(m.mean - std::sqrt(2.0 / M_PI)) < 0.005);
}

TEST_CASE("far tail interval stays finite and inside") {
    Rng rng = make_stream(3, 0);
    auto m = draw_moments(0, 1, 5, 6, 100000, rng);
    auto e = exact_moments(0, 1, 5, 6);
    CHECK(std::isfinite(m.mean));
    CHECK(std::abs(m.mean - e.mean) < 0.005);
    auto far = draw_moments(0, 1, 30, kInf, 10000, rng);
    CHECK(std::abs(far.mean - exact_moments(0, 1, 30, kInf).mean) < 0.01);
    auto left = draw_moments(0, 1, -kInf, -8, 10000, rng);
    CHECK(std::abs(left.mean - exact_moments(0, 1, -kInf, -8).mean) < 0.01);
}

TEST_CASE("truncated moments match the analytic values across regimes") {
    Rng rng = make_stream(4, 0);
    struct Case {
        double mu, sigma, lo, hi;
    };
    for (Case c : {Case{0, 1, -1, 1}, Case{2, 0.5, -kInf, 1.0}, Case{-1, 2, 0.0, 0.05}, Case{0, 1, 6, 6.001},
                   Case{1, 3, -kInf, -20}, Case{0.5, 1, 0.4, kInf}}) {
        const int n = 200000;
        auto m = draw_moments(c.mu, c.sigma, c.lo, c.hi, n, rng);
        auto e = exact_moments(c.mu, c.sigma, c.lo, c.hi);
        double se = std::sqrt(e.var / n);
        CHECK(std::abs(m.mean - e.mean) < 4 * se + 1e-9);
        CHECK(m.var == doctest::Approx(e.var).epsilon(0.03));
    }
}

TEST_CASE("invalid truncation arguments") {
    Rng rng = make_stream(5, 0);
    CHECK_THROWS_AS(truncated_normal_sample(0, 0, -1, 1, rng), ValidationError);
    CHECK_THROWS(truncated_normal_sample(0, 1, 1, 1, rng));
    CHECK_THROWS(truncated_normal_sample(0, 1, 2, 1, rng));
    CHECK_THROWS(truncated_normal_sample(0, 1, 1.0, std::nextafter(1.0, 2.0), rng));
}

TEST_CASE("identity precision gives uncorrelated columns") {
    const int n = 100000, p = 3;
    IntervalMatrix iv{Eigen::MatrixXd::Constant(n, p, -kInf), Eigen::MatrixXd::Constant(n, p, kInf)};
    Eigen::MatrixXd Z = initial_latent(iv);
    CHECK(Z.isZero());
    Rng rng = make_stream(6, 0);
    gibbs_sweep_latent(Z, Eigen::MatrixXd::Identity(p, p), iv, rng);
    Eigen::MatrixXd C = (Z.transpose() * Z) / n;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) CHECK(std::abs(C(i, j)) < 0.01);
}

TEST_CASE("sweeps keep every entry in its interval") {
    const int n = 500, p = 4;
    Rng rng = make_stream(7, 0);
    IntervalMatrix iv{Eigen::MatrixXd(n, p), Eigen::MatrixXd(n, p)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            int c = runif_int(rng, 0, 3);
            const double cuts[] = {-kInf, -0.7, 0.1, 1.2, kInf};
            iv.lo(i, j) = cuts[c];
            iv.hi(i, j) = cuts[c + 1];
        }
    Eigen::MatrixXd om = Eigen::MatrixXd::Identity(p, p);
    om(0, 1) = om(1, 0) = 0.6;
    om(2, 3) = om(3, 2) = -0.4;
    Eigen::MatrixXd Z = initial_latent(iv);
    CHECK((Z.array() > iv.lo.array()).all());
    CHECK((Z.array() < iv.hi.array()).all());
    for (int s = 0; s < 5; ++s) gibbs_sweep_latent(Z, om, iv, rng);
    CHECK(Z.allFinite());
    CHECK((Z.array() > iv.lo.array()).all());
    CHECK((Z.array() < iv.hi.array()).all());
}

TEST_CASE("the sweep leaves N(0, Omega^-1) invariant") {
    const int n = 20000, p = 3;
    Eigen::Matrix3d om;
    om << 2.0, -0.8, 0.0, -0.8, 1.5, 0.5, 0.0, 0.5, 1.0;
    Eigen::Matrix3d sigma = om.inverse();
    IntervalMatrix iv{Eigen::MatrixXd::Constant(n, p, -kInf), Eigen::MatrixXd::Constant(n, p, kInf)};
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, p);
    Rng rng = make_stream(8, 0);
    for (int s = 0; s < 30; ++s) gibbs_sweep_latent(Z, om, iv, rng);
    Eigen::MatrixXd C = (Z.transpose() * Z) / n;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) CHECK(std::abs(C(i, j) - sigma(i, j)) < 0.05);
}

TEST_CASE("non-SPD precision is rejected") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
    IntervalMatrix iv{Eigen::MatrixXd::Constant(2, 2, -kInf), Eigen::MatrixXd::Constant(2, 2, kInf)};
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    Rng rng = make_stream(9, 0);
    CHECK_THROWS_AS(gibbs_sweep_latent(Z, bad, iv, rng), RuntimeError);
    CHECK_THROWS_AS(gibbs_sweep_latent(Z, Eigen::Matrix3d::Identity(), iv, rng), ValidationError);
}
