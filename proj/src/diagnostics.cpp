#include "rgm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

double dic(const DevianceTrace& trace) {
    const auto& d = trace.draws;
    if (d.size() < 2) throw ValidationError("DIC needs at least two deviance draws");
    double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    return trace.at_mean + 2.0 * ss / static_cast<double>(d.size() - 1);
}

namespace {

// P(a < X <= b), X ~ N(0,1), computed on the side of zero that keeps precision.
double interval_mass(double a, double b) {
    if (a > 0.0) return norm_cdf(-a) - norm_cdf(-b);
    return norm_cdf(b) - norm_cdf(a);
}

// Quantile at fraction w of the way through (a, b].
double interval_point(double a, double b, double w) {
    if (a > 0.0) {
        double ua = norm_cdf(-a), ub = norm_cdf(-b);
        return -norm_quantile(ua - w * (ua - ub));
    }
    double ua = norm_cdf(a), ub = norm_cdf(b);
    return norm_quantile(ua + w * (ub - ua));
}

constexpr double kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                              59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};

}  // namespace

double rectangle_prob(const Eigen::MatrixXd& R, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                      Rng& rng, const DevianceOptions& options) {
    const int p = static_cast<int>(R.rows());
    if (R.cols() != p || lo.size() != p || hi.size() != p)
        throw ValidationError("rectangle_prob: dimension mismatch");

    std::vector<int> keep;
    for (int j = 0; j < p; ++j) {
        if (!(lo(j) < hi(j))) return 0.0;
        if (std::isinf(lo(j)) && std::isinf(hi(j))) continue;
        keep.push_back(j);
    }
    const int m = static_cast<int>(keep.size());
    if (m == 0) return 1.0;

    if (m == 1) {
        int j = keep[0];
        double s = std::sqrt(R(j, j));
        return interval_mass(lo(j) / s, hi(j) / s);
    }
    if (m > static_cast<int>(std::size(kPrimes)) + 1)
        throw ValidationError("rectangle_prob: too many dimensions");

    Eigen::MatrixXd S(m, m);
    Eigen::VectorXd a(m), b(m);
    for (int r = 0; r < m; ++r) {
        a(r) = lo(keep[r]);
        b(r) = hi(keep[r]);
        for (int c = 0; c < m; ++c) S(r, c) = R(keep[r], keep[c]);
    }

    // Cholesky with Genz-Bretz ordering: at each step take the coordinate with
    // the smallest conditional mass given the expected values of the earlier ones.
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
        int best = i;
        double best_mass = kInf;
        for (int j = i; j < m; ++j) {
            double v = S(j, j) - L.row(j).head(i).squaredNorm();
            if (v <= 0.0) continue;
            double sd = std::sqrt(v), mu = L.row(j).head(i).dot(ybar.head(i));
            double mass = interval_mass((a(j) - mu) / sd, (b(j) - mu) / sd);
            if (mass < best_mass) best_mass = mass, best = j;
        }
        if (best != i) {
            S.row(i).swap(S.row(best));
            S.col(i).swap(S.col(best));
            L.row(i).swap(L.row(best));
            std::swap(a(i), a(best));
            std::swap(b(i), b(best));
        }
        double v = S(i, i) - L.row(i).head(i).squaredNorm();
        if (v <= 0.0) throw RuntimeError("rectangle_prob: matrix is not positive definite");
        L(i, i) = std::sqrt(v);
        for (int j = i + 1; j < m; ++j) L(j, i) = (S(j, i) - L.row(j).head(i).dot(L.row(i).head(i))) / L(i, i);
        double mu = L.row(i).head(i).dot(ybar.head(i));
        double lo_i = (a(i) - mu) / L(i, i), hi_i = (b(i) - mu) / L(i, i);
        double mass = interval_mass(lo_i, hi_i);
        double plo = std::isinf(lo_i) ? 0.0 : norm_pdf(lo_i), phi = std::isinf(hi_i) ? 0.0 : norm_pdf(hi_i);
        ybar(i) = mass > 0.0 ? (plo - phi) / mass : 0.5 * (std::max(lo_i, -10.0) + std::min(hi_i, 10.0));
    }

    Eigen::VectorXd gen(m - 1);
    for (int i = 0; i < m - 1; ++i) gen(i) = std::sqrt(kPrimes[i]) - std::floor(std::sqrt(kPrimes[i]));

    const double f0 = interval_mass(a(0) / L(0, 0), b(0) / L(0, 0));
    if (f0 <= 0.0) return 0.0;
    Eigen::VectorXd y(m);

    auto integrand = [&](const Eigen::VectorXd& w) {
        double f = f0;
        y(0) = interval_point(a(0) / L(0, 0), b(0) / L(0, 0), w(0));
        for (int i = 1; i < m; ++i) {
            double s = L.row(i).head(i).dot(y.head(i));
            double ai = (a(i) - s) / L(i, i), bi = (b(i) - s) / L(i, i);
            double mass = interval_mass(ai, bi);
            f *= mass;
            if (f <= 0.0) return 0.0;
            if (i < m - 1) y(i) = interval_point(ai, bi, w(i));
        }
        return f;
    };

    const int n_shifts = std::max(2, options.n_shifts);
    std::vector<Eigen::VectorXd> shifts(n_shifts, Eigen::VectorXd(m - 1));
    for (auto& sh : shifts)
        for (int i = 0; i < m - 1; ++i) sh(i) = runif(rng);

    // The lattice points t * gen are a prefix-extensible sequence, so each
    // doubling only evaluates the new points.
    Eigen::VectorXd w(m - 1);
    std::vector<double> sums(n_shifts, 0.0);
    double estimate = f0;
    long done = 0;
    for (long n = std::max(1, options.min_points);; n *= 2) {
        for (int s = 0; s < n_shifts; ++s)
            for (long t = done + 1; t <= n; ++t) {
                for (int i = 0; i < m - 1; ++i) {
                    double x = static_cast<double>(t) * gen(i) + shifts[s](i);
                    x -= std::floor(x);
                    w(i) = 1.0 - std::abs(2.0 * x - 1.0);  // tent transform
                }
                sums[s] += integrand(w);
            }
        done = n;
        estimate = 0.0;
        for (double v : sums) estimate += v / static_cast<double>(n);
        estimate /= n_shifts;
        double ss = 0.0;
        for (double v : sums) ss += (v / static_cast<double>(n) - estimate) * (v / static_cast<double>(n) - estimate);
        double se = std::sqrt(ss / (n_shifts - 1) / n_shifts);
        if (se <= options.rel_tol * estimate || 2 * n > options.max_points) break;
    }
    return estimate;
}

DevianceParts deviance(const ChainSnapshot& snapshot, const std::vector<IntervalMatrix>& intervals,
                       const ProximityData* prox, const DevianceOptions& options) {
    const int K = snapshot.family.K();
    if (static_cast<int>(intervals.size()) != K || static_cast<int>(snapshot.omega.size()) != K)
        throw ValidationError("deviance: group count mismatch");
    DevianceParts out;
    for (int k = 0; k < K; ++k) {
        const auto& iv = intervals[k];
        Eigen::MatrixXd sigma = snapshot.omega[k].llt().solve(
            Eigen::MatrixXd::Identity(snapshot.omega[k].rows(), snapshot.omega[k].cols()));
        Eigen::VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd R = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
        R = 0.5 * (R + R.transpose());
        R.diagonal().setOnes();
        for (Eigen::Index i = 0; i < iv.lo.rows(); ++i) {
            Rng rng = make_stream(options.seed, (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(i));
            double pr = rectangle_prob(R, iv.lo.row(i).transpose(), iv.hi.row(i).transpose(), rng, options);
            out.data -= 2.0 * std::log(std::max(pr, 1e-300));
        }
    }
    out.graph = -2.0 * graph_composite_loglik(snapshot.family, snapshot.params, prox);
    return out;
}

DevianceParts deviance(const ChainSnapshot& snapshot, const SurveyDataset& data,
                       const MarginalSet& marginals, const ProximityData* prox,
                       const DevianceOptions& options) {
    std::vector<IntervalMatrix> intervals;
    for (int k = 0; k < data.K(); ++k) intervals.push_back(group_intervals(data.groups[k], marginals.at(k)));
    return deviance(snapshot, intervals, prox, options);
}

AlignedLatentSpace procrustes_align(const std::vector<Eigen::MatrixXd>& draws) {
    if (draws.empty()) throw ValidationError("procrustes_align: no draws");
    AlignedLatentSpace out;
    const Eigen::MatrixXd& ref = draws[out.reference];
    if (ref.norm() == 0.0) throw ValidationError("procrustes_align: reference draw is all zero");
    out.mean = Eigen::MatrixXd::Zero(ref.rows(), ref.cols());
    for (const auto& x : draws) {
        if (x.rows() != ref.rows() || x.cols() != 2) throw ValidationError("procrustes_align: shape mismatch");
        Eigen::Matrix2d M = x.transpose() * ref;
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix2d Q = svd.matrixU() * svd.matrixV().transpose();
        out.rotations.push_back(Q);
        out.aligned.push_back(x * Q);
        out.mean += out.aligned.back();
    }
    out.mean /= static_cast<double>(draws.size());
    return out;
}

}  // namespace rgm
