#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgm/dataset.hpp"
#include "rgm/graph.hpp"
#include "rgm/rng.hpp"

namespace rgm {

// The four random-graph models: group intercepts, plus an optional latent
// space term and/or proximity term.
enum class Variant { intercepts, intercepts_ls, intercepts_prox, full };

std::string to_string(Variant v);   // "int", "int+ls", "int+prox", "full"
Variant parse_variant(const std::string& s);
bool uses_latent(Variant v);
bool uses_proximity(Variant v);

inline constexpr int kLatentDim = 2;

struct PriorParams {
    Variant variant = Variant::intercepts;
    Eigen::VectorXd alpha;  // K
    Eigen::VectorXd beta;   // d, empty unless the variant uses proximity
    Eigen::MatrixXd C;      // K x 2, empty unless the variant uses the latent space

    int K() const { return static_cast<int>(alpha.size()); }
    void validate(int K, int d) const;
};

struct GraphFamily {
    std::vector<Graph> graphs;

    int K() const { return static_cast<int>(graphs.size()); }
    int p() const { return graphs.empty() ? 0 : graphs.front().p(); }
    int n_slots() const { return edge_slot_count(p()); }

    static GraphFamily empty(int K, int p);
    // K x n_slots matrix of +1 (edge) / -1 (no edge).
    Eigen::MatrixXd signs() const;
};

// Neighbour sums entering the linear predictor
//   score(k, e) = alpha_k + beta' X(k, e) + c_k' W(k, e)
// with X(k, e) = sum_{k' != k} sim_{kk'} s(k', e) and
//      W(k, e) = sum_{k' != k} c_{k'} s(k', e), s = +1 / -1 for edge / no edge.
struct EdgeDesign {
    Eigen::MatrixXd signs;                 // K x E
    std::vector<Eigen::MatrixXd> prox;     // one K x E matrix per proximity dimension

    EdgeDesign(const GraphFamily& family, const ProximityData* prox_data, Variant variant);

    // K x E matrix of scores.
    Eigen::MatrixXd scores(const PriorParams& params) const;
};

// Probit argument of the conditional edge probability for slot e in group k.
double edge_score(int k, int e, const GraphFamily& family, const PriorParams& params,
                  const ProximityData* prox);

double edge_prior_prob(int k, int e, const GraphFamily& family, const PriorParams& params,
                       const ProximityData* prox);

// All K x E conditional edge probabilities from one snapshot of the family.
Eigen::MatrixXd edge_prior_probs(const GraphFamily& family, const PriorParams& params,
                                 const ProximityData* prox);

// Composite log-likelihood sum_k sum_e log P(G_e^(k) | G_e^(-k), params).
double graph_composite_loglik(const GraphFamily& family, const PriorParams& params,
                              const ProximityData* prox);

struct NormalConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
};

// Full conditional of beta given augmented utilities z (K x E), alpha and C,
// under independent N(0, prior_variance) priors.
NormalConditional beta_conditional(const GraphFamily& family, const PriorParams& params,
                                   const ProximityData& prox, const Eigen::MatrixXd& z,
                                   double prior_variance);

// One scan of the data-augmentation Gibbs sampler: draw utilities z, then
// alpha, beta and each c_k from their normal full conditionals. The product
// of all conditionals is treated as a composite likelihood. Returns the
// updated parameters; the drawn utilities are written to `z_out` if given.
PriorParams gibbs_update_params(const GraphFamily& family, const PriorParams& params,
                                const ProximityData* prox, double prior_variance, Rng& rng,
                                Eigen::MatrixXd* z_out = nullptr);

// Starting values: alpha_k = Phi^-1(max(density_k, 1/E)), beta = 0,
// C entries iid N(0, 0.01).
PriorParams initial_params(Variant variant, const GraphFamily& family, int d, Rng& rng);

}  // namespace rgm
