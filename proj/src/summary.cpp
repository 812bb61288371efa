#include "rgm/summary.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rgm/csv.hpp"
#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"

namespace rgm {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[j] = m(i, j);
        rows.push_back(r);
    }
    return rows;
}

Eigen::VectorXd sd_from_sums(const Eigen::VectorXd& sum, const Eigen::VectorXd& sumsq, long n) {
    Eigen::VectorXd mean = sum / static_cast<double>(n);
    Eigen::VectorXd var = (sumsq / static_cast<double>(n) - mean.cwiseProduct(mean)).cwiseMax(0.0);
    return var.cwiseSqrt();
}

}  // namespace

std::string variant_parameters(Variant v) {
    switch (v) {
        case Variant::intercepts: return "alpha";
        case Variant::intercepts_ls: return "alpha, C";
        case Variant::intercepts_prox: return "alpha, beta";
        case Variant::full: return "alpha, beta, C";
    }
    return "";
}

PosteriorSummary summarize(const PosteriorAccumulator& acc, const ChainInputs& inputs, Variant variant,
                           const DevianceOptions& deviance_options) {
    if (acc.empty()) throw ValidationError("no post-burn-in iterations to summarize");
    PosteriorSummary s;
    s.variant = variant;
    s.n_accumulated = acc.n_accumulated;
    s.clamped_rates = acc.clamped_rates;
    const double n = static_cast<double>(acc.n_accumulated);

    s.edge_probs = edge_posterior(acc);
    for (int k = 0; k < acc.K; ++k) {
        Eigen::MatrixXd om = acc.omega_sum[k] / n;
        s.omega_mean.push_back(om);
        Eigen::VectorXd inv = om.diagonal().cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd pc = -(inv.asDiagonal() * om * inv.asDiagonal());
        pc.diagonal().setOnes();
        s.partial_corr.push_back(pc);
    }
    s.alpha_mean = acc.alpha_sum / n;
    s.alpha_sd = sd_from_sums(acc.alpha_sum, acc.alpha_sumsq, acc.n_accumulated);
    if (acc.beta_sum.size() > 0) {
        s.beta_mean = acc.beta_sum / n;
        s.beta_sd = sd_from_sums(acc.beta_sum, acc.beta_sumsq, acc.n_accumulated);
    }

    PriorParams mean_params;
    mean_params.variant = variant;
    mean_params.alpha = s.alpha_mean;
    mean_params.beta = s.beta_mean;
    if (uses_latent(variant) && !acc.param_draws.empty()) {
        std::vector<Eigen::MatrixXd> draws;
        for (const auto& pd : acc.param_draws) draws.push_back(pd.C);
        s.latent = procrustes_align(draws);
        mean_params.C = s.latent.mean;
    }

    ChainSnapshot& snap = s.at_mean;
    snap.params = mean_params;
    for (int k = 0; k < acc.K; ++k) {
        Graph g(acc.p);
        for (int i = 0; i < acc.p; ++i)
            for (int j = i + 1; j < acc.p; ++j) g.set(i, j, s.edge_probs[k](i, j) > 0.5);
        Eigen::MatrixXd sigma = s.omega_mean[k].llt().solve(Eigen::MatrixXd::Identity(acc.p, acc.p));
        snap.omega.push_back(complete_precision(g, sigma));
        snap.family.graphs.push_back(std::move(g));
    }
    s.deviance_at_mean = deviance(snap, inputs.intervals, inputs.prox, deviance_options);
    s.trace.draws = acc.deviance_draws;
    s.trace.at_mean = s.deviance_at_mean.total();
    s.dic = s.trace.draws.size() >= 2 ? dic(s.trace) : std::nan("");
    return s;
}

void write_edge_csv(const std::vector<Eigen::MatrixXd>& edge_probs, const std::vector<std::string>& groups,
                    const std::vector<std::string>& traits, const std::filesystem::path& path) {
    auto out = open_out(path);
    csv::Row header{"group"};
    for (auto& l : slot_labels(traits)) header.push_back(l);
    csv::write_row(out, header);
    const int p = static_cast<int>(traits.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
        csv::Row row{groups[k]};
        for (int e = 0; e < edge_slot_count(p); ++e) {
            auto [i, j] = slot_pair(p, e);
            row.push_back(csv::format_double(edge_probs[k](i, j)));
        }
        csv::write_row(out, row);
    }
}

void export_summaries(const PosteriorSummary& s, const PosteriorAccumulator& acc, const SurveyDataset& data,
                      const MarginalSet& marginals, const ProximityData* prox,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto groups = data.group_ids();
    std::vector<std::string> traits;
    for (const auto& t : data.traits) traits.push_back(t.trait_id);

    write_edge_csv(s.edge_probs, groups, traits, dir / "edges.csv");

    {
        auto out = open_out(dir / "coef_standardized.csv");
        csv::write_row(out, {"group", "trait", "covariate", "coefficient", "standardized"});
        for (int k = 0; k < data.K(); ++k) {
            if (data.m() == 0) break;
            Eigen::VectorXd sds = covariate_sds(data.groups[k]);
            for (int j = 0; j < data.p(); ++j) {
                const auto& mdl = marginals[k][j];
                Eigen::VectorXd std_coef = Eigen::VectorXd::Constant(data.m(), std::nan(""));
                if ((sds.array() > 0.0).all()) std_coef = standardized_coefficients(mdl, sds);
                for (int c = 0; c < data.m(); ++c)
                    csv::write_row(out, {groups[k], traits[j], data.covariate_names[c],
                                         csv::format_double(mdl.gamma(c)), csv::format_double(std_coef(c))});
            }
        }
    }

    {
        auto out = open_out(dir / "latent_positions.csv");
        csv::write_row(out, {"group", "c1", "c2"});
        if (s.latent.mean.size() > 0)
            for (int k = 0; k < data.K(); ++k)
                csv::write_row(out, {groups[k], csv::format_double(s.latent.mean(k, 0)),
                                     csv::format_double(s.latent.mean(k, 1))});
    }

    {
        auto out = open_out(dir / "beta_draws.csv");
        csv::Row header{"iteration"};
        if (prox)
            for (const auto& n : prox->names) header.push_back(n);
        csv::write_row(out, header);
        if (uses_proximity(s.variant))
            for (std::size_t t = 0; t < acc.param_draws.size(); ++t) {
                csv::Row row{std::to_string(acc.draw_iterations[t])};
                for (Eigen::Index c = 0; c < acc.param_draws[t].beta.size(); ++c)
                    row.push_back(csv::format_double(acc.param_draws[t].beta(c)));
                csv::write_row(out, row);
            }
    }

    {
        auto out = open_out(dir / "trace_params.csv");
        csv::Row header{"iteration"};
        for (const auto& g : groups) header.push_back("alpha_" + g);
        if (uses_proximity(s.variant) && prox)
            for (const auto& n : prox->names) header.push_back("beta_" + n);
        if (uses_latent(s.variant))
            for (const auto& g : groups) {
                header.push_back("c1_" + g);
                header.push_back("c2_" + g);
            }
        csv::write_row(out, header);
        for (std::size_t t = 0; t < acc.param_draws.size(); ++t) {
            const auto& pd = acc.param_draws[t];
            csv::Row row{std::to_string(acc.draw_iterations[t])};
            for (Eigen::Index k = 0; k < pd.alpha.size(); ++k) row.push_back(csv::format_double(pd.alpha(k)));
            for (Eigen::Index c = 0; c < pd.beta.size(); ++c) row.push_back(csv::format_double(pd.beta(c)));
            for (Eigen::Index k = 0; k < pd.C.rows(); ++k) {
                row.push_back(csv::format_double(pd.C(k, 0)));
                row.push_back(csv::format_double(pd.C(k, 1)));
            }
            csv::write_row(out, row);
        }
    }

    {
        auto out = open_out(dir / "trace_deviance.csv");
        csv::write_row(out, {"iteration", "data", "graph", "total"});
        for (std::size_t t = 0; t < acc.deviance_draws.size(); ++t)
            csv::write_row(out, {std::to_string(acc.deviance_iterations[t]),
                                 csv::format_double(acc.deviance_parts[t].data),
                                 csv::format_double(acc.deviance_parts[t].graph),
                                 csv::format_double(acc.deviance_draws[t])});
    }

    double var = std::nan("");
    if (s.trace.draws.size() >= 2) var = (s.dic - s.trace.at_mean) / 2.0;
    nlohmann::json dj = {{"variant", to_string(s.variant)},
                         {"parameters", variant_parameters(s.variant)},
                         {"dic", s.dic},
                         {"deviance_at_mean", s.trace.at_mean},
                         {"deviance_at_mean_data", s.deviance_at_mean.data},
                         {"deviance_at_mean_graph", s.deviance_at_mean.graph},
                         {"deviance_variance", var},
                         {"n_draws", s.trace.draws.size()},
                         {"draws", s.trace.draws}};
    auto dout = open_out(dir / "dic.json");
    dout << dj.dump(2) << '\n';

    nlohmann::json sj;
    sj["variant"] = to_string(s.variant);
    sj["groups"] = groups;
    sj["traits"] = traits;
    sj["n_accumulated"] = s.n_accumulated;
    sj["clamped_rates"] = s.clamped_rates;
    sj["alpha_mean"] = to_std(s.alpha_mean);
    sj["alpha_sd"] = to_std(s.alpha_sd);
    sj["beta_mean"] = to_std(s.beta_mean);
    sj["beta_sd"] = to_std(s.beta_sd);
    nlohmann::json edges = nlohmann::json::array(), pcs = nlohmann::json::array();
    for (int k = 0; k < data.K(); ++k) {
        edges.push_back(to_json(s.edge_probs[k]));
        pcs.push_back(to_json(s.partial_corr[k]));
    }
    sj["edge_probabilities"] = edges;
    sj["partial_correlations"] = pcs;
    auto sout = open_out(dir / "summary.json");
    sout << sj.dump(2) << '\n';
}

}  // namespace rgm
