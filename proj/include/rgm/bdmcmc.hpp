#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rgm/diagnostics.hpp"
#include "rgm/graph_prior.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/marginals.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// Birth (absent slot) or death (present slot) rate for every edge slot of one
// graph. A move to G' has rate min(1, pi(G'|Z) / pi(G|Z)), where the graph
// posterior integrates the precision out:
//   pi(G|Z) ~ prior(G) * I_G(b*, D*) / I_G(b, D).
struct RateTable {
    std::vector<double> rates;
    double total = 0.0;
    int n_clamped = 0;  // rates pushed into [1e-12, 1e12]
};

inline constexpr double kMinRate = 1e-12;
inline constexpr double kMaxRate = 1e12;

RateTable birth_death_rates(const Graph& g, const GWishartParams& prior,
                            const GWishartParams& posterior, std::span<const double> edge_prior);

// Same, with the posterior built from latent data Z. `omega` must conform to g.
RateTable birth_death_rates(const Graph& g, const Eigen::MatrixXd& omega, const Eigen::MatrixXd& Z,
                            const GWishartParams& prior, std::span<const double> edge_prior);

struct Jump {
    int slot;
    double holding_time;  // Exponential(total rate)
};

Jump bd_jump(const RateTable& rates, Rng& rng);

struct ChainConfig {
    long n_iterations = 50000;
    long burn_in = 10000;
    std::uint64_t seed = 1;
    Variant variant = Variant::intercepts;
    int thin = 1;                      // stride for stored parameter draws
    GWishartSamplerOptions gwishart;
    int threads = 1;
    double prior_variance = 10.0;      // N(0, v) on alpha, beta and each c_k entry
    double gwishart_b = 3.0;           // W_G(b, I_p) prior
    int deviance_draws = 50;
    DevianceOptions deviance;
    long checkpoint_every = 10000;
    std::filesystem::path checkpoint_path;  // empty: no checkpoints
    std::function<void(long iteration, double seconds)> on_iteration;

    void validate() const;
};

struct PosteriorAccumulator {
    int K = 0, p = 0;
    long n_accumulated = 0;                    // post-burn-in iterations
    std::vector<Eigen::MatrixXd> edge_time;    // per group, p x p
    std::vector<double> total_time;            // per group
    std::vector<Eigen::MatrixXd> omega_sum;    // per group
    Eigen::VectorXd alpha_sum, alpha_sumsq;
    Eigen::VectorXd beta_sum, beta_sumsq;
    std::vector<long> draw_iterations;         // thinned parameter draws
    std::vector<PriorParams> param_draws;
    std::vector<long> deviance_iterations;
    std::vector<double> deviance_draws;
    std::vector<DevianceParts> deviance_parts;
    long clamped_rates = 0;

    bool empty() const { return n_accumulated == 0; }
};

// Full sampler state; what a checkpoint stores.
struct ChainState {
    long next_iteration = 0;
    PriorParams params;
    GraphFamily family;
    std::vector<Eigen::MatrixXd> omega;
    std::vector<Eigen::MatrixXd> Z;
    Rng rng;
    std::vector<Rng> group_rngs;
    std::vector<long> deviance_schedule;
    PosteriorAccumulator acc;
};

struct ChainInputs {
    int K = 0, p = 0;
    std::vector<IntervalMatrix> intervals;  // per group, n_k x p
    const ProximityData* prox = nullptr;

    static ChainInputs from(const SurveyDataset& data, const MarginalSet& marginals,
                            const ProximityData* prox);
};

ChainState initial_state(const ChainInputs& inputs, const ChainConfig& config);

// Advances `state` until config.n_iterations, writing checkpoints as configured.
void advance_chain(ChainState& state, const ChainInputs& inputs, const ChainConfig& config);

// Fresh chain from the initial state (or from config.checkpoint_path when
// `resume` is set and the file exists).
PosteriorAccumulator run_chain(const ChainInputs& inputs, const ChainConfig& config, bool resume = false);

PosteriorAccumulator run_chain(const SurveyDataset& data, const MarginalSet& marginals,
                               const ProximityData* prox, const ChainConfig& config);

// Holding-time weighted edge frequencies per group; zero diagonal.
std::vector<Eigen::MatrixXd> edge_posterior(const PosteriorAccumulator& acc);

// Time-weighted occupancy of each graph state of one group, keyed by the slot
// bitmask; only tracked by run_bd_only (used for small exact checks).
struct OccupancyResult {
    std::vector<double> time_by_mask;
    std::vector<double> visits_by_mask;
};

// Birth-death jumps alone on fixed latent data, with the precision redrawn
// after each jump. Used to check the graph move against exact enumeration.
OccupancyResult run_bd_only(const Eigen::MatrixXd& Z, const GWishartParams& prior,
                            std::span<const double> edge_prior, long n_jumps, Rng& rng,
                            const GWishartSamplerOptions& gw = {});

void save_checkpoint(const ChainState& state, const ChainConfig& config, const ChainInputs& inputs,
                     const std::filesystem::path& path);
ChainState load_checkpoint(const std::filesystem::path& path, const ChainConfig& config,
                           const ChainInputs& inputs);

}  // namespace rgm
