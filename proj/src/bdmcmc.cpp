#include "rgm/bdmcmc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "rgm/copula_latent.hpp"
#include "rgm/error.hpp"
#include "rgm/normal.hpp"

namespace rgm {

namespace {

// Runs f(0..n-1) on up to `threads` workers. Each index must touch only its
// own data; results are then independent of scheduling.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex mutex;
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < std::min(threads, n); ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        std::lock_guard lock(mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
    }
    if (error) std::rethrow_exception(error);
}

double log_odds(double prob) {
    if (prob <= 0.0) return -kInf;
    if (prob >= 1.0) return kInf;
    return std::log(prob) - std::log1p(-prob);
}

// Floyd's algorithm: m distinct values from [lo, hi), sorted.
std::vector<long> sample_iterations(long lo, long hi, int m, Rng& rng) {
    const long n = hi - lo;
    std::set<long> chosen;
    if (n <= 0 || m <= 0) return {};
    if (m >= n) {
        std::vector<long> all;
        for (long t = lo; t < hi; ++t) all.push_back(t);
        return all;
    }
    for (long j = n - m; j < n; ++j) {
        long t = static_cast<long>(runif(rng) * static_cast<double>(j + 1));
        if (t > j) t = j;
        if (!chosen.insert(lo + t).second) chosen.insert(lo + j);
    }
    return {chosen.begin(), chosen.end()};
}

}  // namespace

RateTable birth_death_rates(const Graph& g, const GWishartParams& prior,
                            const GWishartParams& posterior, std::span<const double> edge_prior) {
    const int p = g.p();
    const int E = edge_slot_count(p);
    if (static_cast<int>(edge_prior.size()) != E)
        throw ValidationError("birth_death_rates: need one prior probability per edge slot");
    RateTable table;
    table.rates.resize(E);
    for (int e = 0; e < E; ++e) {
        auto [i, j] = slot_pair(p, e);
        // log pi(G + e) - log pi(G - e)
        double log_with = log_odds(edge_prior[e]) +
                          log_edge_constant_ratio(g, i, j, posterior.b, posterior.D) -
                          log_edge_constant_ratio(g, i, j, prior.b, prior.D);
        double log_ratio = g.has(i, j) ? -log_with : log_with;
        double rate = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
        if (!(rate >= kMinRate)) {
            rate = kMinRate;
            ++table.n_clamped;
        }
        table.rates[e] = rate;
        table.total += rate;
    }
    return table;
}

RateTable birth_death_rates(const Graph& g, const Eigen::MatrixXd& omega, const Eigen::MatrixXd& Z,
                            const GWishartParams& prior, std::span<const double> edge_prior) {
    const int p = g.p();
    if (omega.rows() != p || omega.cols() != p) throw ValidationError("birth_death_rates: precision size");
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (!g.has(i, j) && omega(i, j) != 0.0)
                throw ValidationError("birth_death_rates: precision does not conform to the graph");
    return birth_death_rates(g, prior, posterior_params(prior, Z), edge_prior);
}

Jump bd_jump(const RateTable& rates, Rng& rng) {
    if (!(rates.total > 0.0)) throw RuntimeError("bd_jump: all rates are zero");
    double u = runif(rng) * rates.total;
    int slot = -1;
    double acc = 0.0;
    for (std::size_t e = 0; e < rates.rates.size(); ++e) {
        if (rates.rates[e] <= 0.0) continue;
        slot = static_cast<int>(e);
        acc += rates.rates[e];
        if (u < acc) break;
    }
    return {slot, rexp(rng, rates.total)};
}

void ChainConfig::validate() const {
    if (n_iterations < 0 || burn_in < 0) throw ValidationError("iterations and burn-in must be non-negative");
    if (burn_in > n_iterations) throw ValidationError("burn-in must not exceed the number of iterations");
    if (thin < 1) throw ValidationError("thinning stride must be at least 1");
    if (threads < 1) throw ValidationError("thread count must be at least 1");
    if (!(prior_variance > 0.0)) throw ValidationError("prior variance must be positive");
    if (!(gwishart_b > 2.0)) throw ValidationError("G-Wishart degrees of freedom must exceed 2");
}

ChainInputs ChainInputs::from(const SurveyDataset& data, const MarginalSet& marginals,
                              const ProximityData* prox) {
    ChainInputs in;
    in.K = data.K();
    in.p = data.p();
    in.prox = prox;
    for (int k = 0; k < data.K(); ++k) in.intervals.push_back(group_intervals(data.groups[k], marginals[k]));
    return in;
}

ChainState initial_state(const ChainInputs& inputs, const ChainConfig& config) {
    config.validate();
    if (inputs.p < 2) throw ValidationError("need at least two traits");
    if (uses_proximity(config.variant)) {
        if (!inputs.prox) throw ValidationError("variant " + to_string(config.variant) + " needs proximity data");
        if (inputs.prox->K() != inputs.K) throw ValidationError("proximity data does not cover every group");
    }
    ChainState st;
    st.rng = make_stream(config.seed, 0);
    for (int k = 0; k < inputs.K; ++k) st.group_rngs.push_back(make_stream(config.seed, 1000 + k));
    st.family = GraphFamily::empty(inputs.K, inputs.p);
    st.params = initial_params(config.variant, st.family, inputs.prox ? inputs.prox->dim() : 0, st.rng);
    for (int k = 0; k < inputs.K; ++k) {
        st.omega.push_back(Eigen::MatrixXd::Identity(inputs.p, inputs.p));
        st.Z.push_back(initial_latent(inputs.intervals[k]));
    }
    Rng schedule_rng = make_stream(config.seed, 1);
    st.deviance_schedule =
        sample_iterations(config.burn_in, config.n_iterations, config.deviance_draws, schedule_rng);

    auto& acc = st.acc;
    acc.K = inputs.K;
    acc.p = inputs.p;
    acc.edge_time.assign(inputs.K, Eigen::MatrixXd::Zero(inputs.p, inputs.p));
    acc.total_time.assign(inputs.K, 0.0);
    acc.omega_sum.assign(inputs.K, Eigen::MatrixXd::Zero(inputs.p, inputs.p));
    acc.alpha_sum = acc.alpha_sumsq = Eigen::VectorXd::Zero(inputs.K);
    acc.beta_sum = acc.beta_sumsq = Eigen::VectorXd::Zero(st.params.beta.size());
    return st;
}

void advance_chain(ChainState& st, const ChainInputs& inputs, const ChainConfig& config) {
    config.validate();
    const int K = inputs.K;
    const int p = inputs.p;
    const int E = edge_slot_count(p);
    const GWishartParams prior{config.gwishart_b, Eigen::MatrixXd::Identity(p, p)};
    std::vector<int> clamped(K, 0);
    std::vector<double> weights(K, 0.0);
    auto& acc = st.acc;

    for (long t = st.next_iteration; t < config.n_iterations; ++t) {
        auto started = std::chrono::steady_clock::now();
        const bool keep = t >= config.burn_in;

        // Step 2: random-graph model parameters given the current graphs.
        st.params = gibbs_update_params(st.family, st.params, inputs.prox, config.prior_variance, st.rng);
        const Eigen::MatrixXd edge_probs = edge_prior_probs(st.family, st.params, inputs.prox);

        // Steps 3-5 per group; edge priors come from the snapshot above.
        parallel_for(K, config.threads, [&](int k) {
            Rng& rng = st.group_rngs[k];
            gibbs_sweep_latent(st.Z[k], st.omega[k], inputs.intervals[k], rng);
            GWishartParams post = posterior_params(prior, st.Z[k]);
            Graph& g = st.family.graphs[k];
            // The rates integrate the precision out, so it is only drawn once
            // the graph for this iteration is settled.

            std::vector<double> probs(E);
            for (int e = 0; e < E; ++e) probs[e] = edge_probs(k, e);
            RateTable rates = birth_death_rates(g, prior, post, probs);
            clamped[k] = rates.n_clamped;
            Jump jump = bd_jump(rates, rng);
            // Expected holding time of the current graph (Rao-Blackwellised).
            weights[k] = 1.0 / rates.total;
            if (keep) {
                acc.edge_time[k] += weights[k] * g.adjacency().cast<double>();
                acc.total_time[k] += weights[k];
            }
            g.set_slot(jump.slot, !g.has_slot(jump.slot));
            st.omega[k] = sample_gwishart(g, post, rng, config.gwishart);
        });
        for (int k = 0; k < K; ++k) acc.clamped_rates += clamped[k];

        if (keep) {
            ++acc.n_accumulated;
            for (int k = 0; k < K; ++k) acc.omega_sum[k] += st.omega[k];
            acc.alpha_sum += st.params.alpha;
            acc.alpha_sumsq += st.params.alpha.cwiseAbs2();
            if (st.params.beta.size() > 0) {
                acc.beta_sum += st.params.beta;
                acc.beta_sumsq += st.params.beta.cwiseAbs2();
            }
            if ((t - config.burn_in) % config.thin == 0) {
                acc.draw_iterations.push_back(t);
                acc.param_draws.push_back(st.params);
            }
            if (std::binary_search(st.deviance_schedule.begin(), st.deviance_schedule.end(), t)) {
                ChainSnapshot snap{st.params, st.family, st.omega};
                DevianceParts parts = deviance(snap, inputs.intervals, inputs.prox, config.deviance);
                acc.deviance_iterations.push_back(t);
                acc.deviance_draws.push_back(parts.total());
                acc.deviance_parts.push_back(parts);
            }
        }
        st.next_iteration = t + 1;

        if (!config.checkpoint_path.empty() && config.checkpoint_every > 0 &&
            st.next_iteration % config.checkpoint_every == 0)
            save_checkpoint(st, config, inputs, config.checkpoint_path);
        if (config.on_iteration) {
            std::chrono::duration<double> dt = std::chrono::steady_clock::now() - started;
            config.on_iteration(t, dt.count());
        }
    }
}

PosteriorAccumulator run_chain(const ChainInputs& inputs, const ChainConfig& config, bool resume) {
    ChainState st;
    if (resume && !config.checkpoint_path.empty() && std::filesystem::exists(config.checkpoint_path))
        st = load_checkpoint(config.checkpoint_path, config, inputs);
    else
        st = initial_state(inputs, config);
    try {
        advance_chain(st, inputs, config);
    } catch (const std::exception& e) {
        if (!config.checkpoint_path.empty()) {
            auto dump = config.checkpoint_path;
            dump += ".failed";
            try {
                save_checkpoint(st, config, inputs, dump);
                std::clog << "run_chain: state at failure written to " << dump << '\n';
            } catch (...) {
            }
        }
        throw;
    }
    return std::move(st.acc);
}

PosteriorAccumulator run_chain(const SurveyDataset& data, const MarginalSet& marginals,
                               const ProximityData* prox, const ChainConfig& config) {
    return run_chain(ChainInputs::from(data, marginals, prox), config);
}

std::vector<Eigen::MatrixXd> edge_posterior(const PosteriorAccumulator& acc) {
    std::vector<Eigen::MatrixXd> out;
    for (int k = 0; k < acc.K; ++k) {
        if (!(acc.total_time[k] > 0.0))
            throw RuntimeError("edge_posterior: no accumulated time (empty post-burn-in sample)");
        Eigen::MatrixXd P = acc.edge_time[k] / acc.total_time[k];
        P = 0.5 * (P + P.transpose());
        P.diagonal().setZero();
        out.push_back(P.cwiseMax(0.0).cwiseMin(1.0));
    }
    return out;
}

OccupancyResult run_bd_only(const Eigen::MatrixXd& Z, const GWishartParams& prior,
                            std::span<const double> edge_prior, long n_jumps, Rng& rng,
                            const GWishartSamplerOptions& gw) {
    const int p = static_cast<int>(prior.D.rows());
    const int E = edge_slot_count(p);
    if (E > 20) throw ValidationError("run_bd_only: too many edge slots to track occupancy");
    const GWishartParams post = posterior_params(prior, Z);
    Graph g(p);
    Eigen::MatrixXd omega = sample_gwishart(g, post, rng, gw);
    OccupancyResult res;
    res.time_by_mask.assign(std::size_t{1} << E, 0.0);
    res.visits_by_mask.assign(std::size_t{1} << E, 0.0);
    for (long n = 0; n < n_jumps; ++n) {
        RateTable rates = birth_death_rates(g, omega, Z, prior, edge_prior);
        std::size_t mask = 0;
        for (int e = 0; e < E; ++e)
            if (g.has_slot(e)) mask |= std::size_t{1} << e;
        res.time_by_mask[mask] += 1.0 / rates.total;
        res.visits_by_mask[mask] += 1.0;
        Jump jump = bd_jump(rates, rng);
        g.set_slot(jump.slot, !g.has_slot(jump.slot));
        omega = sample_gwishart(g, post, rng, gw);
    }
    return res;
}

}  // namespace rgm
