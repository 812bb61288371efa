#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "rgm/dataset.hpp"

namespace rgm {

enum class Link { logit, probit };

std::string to_string(Link link);
Link parse_link(const std::string& s);

// Cumulative-link model P(Y <= c | x) = g^{-1}(eta_c - gamma'x), c = 1..C-1.
// Positive gamma shifts mass towards higher categories.
struct OrdinalMarginalModel {
    std::string trait_id;
    Link link = Link::logit;
    std::vector<double> thresholds;  // strictly increasing, C-1 of them
    Eigen::VectorXd gamma;           // one per covariate, no intercept
    std::vector<std::string> covariate_names;
    double loglik = 0.0;
    Eigen::VectorXd std_errors;  // thresholds first, then gamma; may be empty
    int iterations = 0;

    int n_categories() const { return static_cast<int>(thresholds.size()) + 1; }
};

// Per-iteration record kept for convergence failures.
struct FitTraceEntry {
    int iteration;
    double neg_loglik;
    double grad_norm;
};

class FitError : public std::runtime_error {
  public:
    FitError(const std::string& what, std::vector<FitTraceEntry> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<FitTraceEntry>& trace() const { return trace_; }

  private:
    std::vector<FitTraceEntry> trace_;
};

struct FitOptions {
    Link link = Link::logit;
    double grad_tol = 1e-6;
    int max_iter = 200;
};

double link_cdf(Link link, double a);
double link_quantile(Link link, double u);

// Maximum likelihood fit on the observed rows (kMissing responses skipped).
// Categories that never occur get thresholds pinned next to their observed
// neighbours so the returned model still covers all C categories.
OrdinalMarginalModel fit_ordinal(std::span<const int> responses, const Eigen::MatrixXd& covariates,
                                 int n_categories, const FitOptions& options = {});

// Log-likelihood of observed rows under a given model.
double ordinal_loglik(const OrdinalMarginalModel& model, std::span<const int> responses,
                      const Eigen::MatrixXd& covariates);

Eigen::VectorXd standardized_coefficients(const OrdinalMarginalModel& model,
                                          const Eigen::VectorXd& covariate_sds);

// F(c | x) for c in 0..C, with F(0) = 0 and F(C) = 1.
double cumulative_prob(const OrdinalMarginalModel& model, int c,
                       const Eigen::Ref<const Eigen::VectorXd>& x);

struct CopulaInterval {
    double lo;
    double hi;
};

// Latent Gaussian interval (Phi^-1(F(y-1|x)), Phi^-1(F(y|x))]; kMissing maps to
// the whole line.
CopulaInterval copula_interval(const OrdinalMarginalModel& model, int y,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

// Interval bounds for a whole group, stored as two n x p matrices.
struct IntervalMatrix {
    Eigen::MatrixXd lo;
    Eigen::MatrixXd hi;
};

// Marginal models for every (group, trait) pair: models[k][j].
using MarginalSet = std::vector<std::vector<OrdinalMarginalModel>>;

MarginalSet fit_all_marginals(const SurveyDataset& data, const FitOptions& options = {});

IntervalMatrix group_intervals(const GroupData& group, const std::vector<OrdinalMarginalModel>& models);

nlohmann::json marginals_to_json(const SurveyDataset& data, const MarginalSet& models);
MarginalSet marginals_from_json(const SurveyDataset& data, const nlohmann::json& j);

}  // namespace rgm
