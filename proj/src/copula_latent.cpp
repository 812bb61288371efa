#include "rgm/copula_latent.hpp"

#include <algorithm>
#include <cmath>

#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

namespace {

constexpr double kTailCut = 5.0;

// Standard normal truncated to (a, b) with a > 0 far in the upper tail.
double upper_tail(double a, double b, Rng& rng) {
    if (b - a < 1.0 / a) {
        // Narrow interval: uniform proposal, accept with exp((a^2 - x^2) / 2).
        for (;;) {
            double x = a + (b - a) * runif(rng);
            if (std::log(runif(rng)) <= 0.5 * (a * a - x * x)) return x;
        }
    }
    // Robert (1995) translated exponential proposal with optimal rate.
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        double x = a + rexp(rng, rate);
        if (x >= b) continue;
        double d = x - rate;
        if (std::log(runif(rng)) <= -0.5 * d * d) return x;
    }
}

double standard_truncated(double a, double b, Rng& rng) {
    if (a > kTailCut) return upper_tail(a, b, rng);
    if (b < -kTailCut) return -upper_tail(-b, -a, rng);

    double x;
    if (a >= 0.0) {
        // Work with upper-tail probabilities to keep precision.
        double qa = norm_cdf(-a), qb = norm_cdf(-b);
        double u = qb + (qa - qb) * runif(rng);
        x = -norm_quantile(u);
    } else {
        double pa = norm_cdf(a), pb = norm_cdf(b);
        double u = pa + (pb - pa) * runif(rng);
        x = norm_quantile(u);
    }
    // Rounding at the ends of the inverse CDF can land on a bound.
    if (!(x > a)) x = std::nextafter(a, kInf);
    if (!(x < b)) x = std::nextafter(b, -kInf);
    return x;
}

}  // namespace

double truncated_normal_sample(double mu, double sigma, double lo, double hi, Rng& rng) {
    if (!(sigma > 0.0)) throw ValidationError("truncated_normal_sample: sigma must be positive");
    if (!(lo < hi)) throw RuntimeError("truncated_normal_sample: empty interval");
    if (!(std::nextafter(lo, hi) < hi))
        throw RuntimeError("truncated_normal_sample: no double lies strictly inside the interval");
    double a = (lo - mu) / sigma;
    double b = (hi - mu) / sigma;
    if (!(a < b)) throw RuntimeError("truncated_normal_sample: interval has zero numerical width");
    if (a == -kInf && b == kInf) return mu + sigma * rnorm(rng);
    double x = mu + sigma * standard_truncated(a, b, rng);
    if (!(x > lo)) x = std::nextafter(lo, kInf);
    if (!(x < hi)) x = std::nextafter(hi, -kInf);
    return x;
}

Eigen::MatrixXd initial_latent(const IntervalMatrix& intervals) {
    Eigen::MatrixXd Z(intervals.lo.rows(), intervals.lo.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j) {
            double lo = intervals.lo(i, j), hi = intervals.hi(i, j);
            if (lo == -kInf && hi == kInf) {
                Z(i, j) = 0.0;
                continue;
            }
            double mid = 0.5 * (norm_cdf(lo) + norm_cdf(hi));
            double z = norm_quantile(std::clamp(mid, 1e-12, 1.0 - 1e-12));
            Z(i, j) = std::clamp(z, std::nextafter(lo, kInf), std::nextafter(hi, -kInf));
        }
    return Z;
}

void gibbs_sweep_latent(Eigen::MatrixXd& Z, const Eigen::MatrixXd& omega,
                        const IntervalMatrix& intervals, Rng& rng) {
    const Eigen::Index p = omega.rows();
    if (omega.cols() != p || Z.cols() != p || intervals.lo.rows() != Z.rows() ||
        intervals.lo.cols() != p || intervals.hi.rows() != Z.rows() || intervals.hi.cols() != p)
        throw ValidationError("gibbs_sweep_latent: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) throw RuntimeError("gibbs_sweep_latent: precision is not SPD");

    Eigen::VectorXd sd(p), inv_diag(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        inv_diag(j) = 1.0 / omega(j, j);
        sd(j) = std::sqrt(inv_diag(j));
    }
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            double s = Z.row(i).dot(omega.row(j)) - omega(j, j) * Z(i, j);
            double mu = -inv_diag(j) * s;
            Z(i, j) = truncated_normal_sample(mu, sd(j), intervals.lo(i, j), intervals.hi(i, j), rng);
        }
    }
}

}  // namespace rgm
