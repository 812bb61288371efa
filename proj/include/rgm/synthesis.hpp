#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "rgm/dataset.hpp"
#include "rgm/graph_prior.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/marginals.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// What a scenario file asks for. Everything random is drawn from `seed`.
struct ScenarioSpec {
    int K = 6;
    int p = 5;
    int n = 200;                  // respondents per group
    int d = 0;                    // proximity dimensions
    Variant variant = Variant::intercepts;
    std::uint64_t seed = 1;
    double missing_rate = 0.0;
    int n_categories = 4;
    Link link = Link::logit;
    double alpha_mean = -0.5;
    double alpha_sd = 0.3;
    std::vector<double> beta;     // length d
    double latent_scale = 0.4;    // sd of each latent coordinate
    double prox_scale = 1.0;      // sd of the neighbour sum of one proximity dimension
    int n_sweeps = 500;
    double edge_min = 0.35, edge_max = 0.5;  // |partial correlation| range before rescaling
    std::vector<double> gamma = {0.01, -0.2};  // age, gender
    std::vector<std::pair<int, int>> shared_edges;  // forced into every graph

    void validate() const;
};

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& s);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct SyntheticScenario {
    ScenarioSpec spec;
    PriorParams params;
    ProximityData prox;                  // empty when d = 0
    GraphFamily graphs;
    std::vector<Eigen::MatrixXd> omega;  // per group
    MarginalSet marginals;               // per group, per trait
    SurveyDataset data;
};

// Gibbs sweeps over the conditional edge model; each sweep visits every
// (group, slot) pair in order and redraws it from its conditional probability.
GraphFamily generate_graph_family(const PriorParams& params, const ProximityData* prox, int p, Rng& rng,
                                  int n_sweeps = 500);

// SPD precision whose off-diagonal zeros are the non-edges of g; edge entries
// have random sign and magnitude in [lo, hi] before the diagonal is raised to
// keep the smallest eigenvalue at least `min_eig`.
Eigen::MatrixXd random_precision(const Graph& g, double lo, double hi, Rng& rng, double min_eig = 0.3);

// Age uniform on 18..85, gender in {1, 2}.
Eigen::MatrixXd random_covariates(int n, Rng& rng);
std::vector<std::string> default_covariate_names();

// n draws of N(0, Omega^{-1}) rescaled to unit variances.
Eigen::MatrixXd draw_latent(const Eigen::MatrixXd& omega, Eigen::Index n, Rng& rng);

// Draws Z ~ N(0, Omega^{-1}), scales it to unit variances and maps Phi(z)
// through each marginal's inverse CDF. Entries go missing independently.
Eigen::MatrixXi generate_survey(const Eigen::MatrixXd& omega, const std::vector<OrdinalMarginalModel>& models,
                                const Eigen::MatrixXd& covariates, double missing_rate, Rng& rng);

SyntheticScenario build_scenario(const ScenarioSpec& spec);

// Writes survey.csv, schema.json, proximity.csv (d > 0), truth.json and scenario.json.
void write_scenario(const SyntheticScenario& sc, const std::filesystem::path& dir);

// Exact graph posterior for p <= 3, indexed by slot bitmask (bit e = slot e).
std::vector<double> enumerate_posterior(const Eigen::MatrixXd& Z, const GWishartParams& prior,
                                        std::span<const double> edge_prior);

}  // namespace rgm
