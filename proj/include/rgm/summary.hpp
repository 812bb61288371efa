#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgm/bdmcmc.hpp"
#include "rgm/dataset.hpp"
#include "rgm/diagnostics.hpp"
#include "rgm/marginals.hpp"

namespace rgm {

struct PosteriorSummary {
    Variant variant = Variant::intercepts;
    std::vector<Eigen::MatrixXd> edge_probs;   // per group, p x p
    std::vector<Eigen::MatrixXd> omega_mean;   // per group, unconstrained average
    std::vector<Eigen::MatrixXd> partial_corr; // from omega_mean
    Eigen::VectorXd alpha_mean, alpha_sd;
    Eigen::VectorXd beta_mean, beta_sd;
    AlignedLatentSpace latent;                 // empty unless the variant has positions
    ChainSnapshot at_mean;                     // plug-in point for D(theta_hat)
    DevianceParts deviance_at_mean;
    DevianceTrace trace;
    double dic = 0.0;
    long n_accumulated = 0;
    long clamped_rates = 0;
};

// Short description of the free parameters of each variant.
std::string variant_parameters(Variant v);

// Posterior means, the plug-in snapshot (mean parameters, modal graphs and
// mean precisions projected onto them) and the DIC. Throws on an empty
// accumulator.
PosteriorSummary summarize(const PosteriorAccumulator& acc, const ChainInputs& inputs, Variant variant,
                           const DevianceOptions& deviance_options = {});

// Writes edges.csv, coef_standardized.csv, latent_positions.csv,
// beta_draws.csv, dic.json, summary.json, trace_params.csv and
// trace_deviance.csv into `dir`.
void export_summaries(const PosteriorSummary& summary, const PosteriorAccumulator& acc,
                      const SurveyDataset& data, const MarginalSet& marginals,
                      const ProximityData* prox, const std::filesystem::path& dir);

// edges.csv alone: one row per group, one column per trait pair.
void write_edge_csv(const std::vector<Eigen::MatrixXd>& edge_probs, const std::vector<std::string>& groups,
                    const std::vector<std::string>& traits, const std::filesystem::path& path);

}  // namespace rgm
