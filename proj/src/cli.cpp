#include "rgm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rgm/bdmcmc.hpp"
#include "rgm/csv.hpp"
#include "rgm/dataset.hpp"
#include "rgm/error.hpp"
#include "rgm/marginals.hpp"
#include "rgm/summary.hpp"
#include "rgm/synthesis.hpp"

namespace rgm {

namespace {

namespace fs = std::filesystem;

struct FitArgs {
    std::string data, schema, proximity, out;
    std::string variant = "int";
    std::string link = "logit";
    long iters = 50000;
    long burnin = 10000;
    int thin = 10;
    std::uint64_t seed = 1;
    int threads = 1;
    long checkpoint_every = 10000;
    int deviance_draws = 50;
    bool resume = false;
    bool quiet = false;
};

nlohmann::json fit_args_to_json(const FitArgs& a) {
    return {{"data", fs::absolute(a.data).string()},
            {"schema", fs::absolute(a.schema).string()},
            {"proximity", a.proximity.empty() ? std::string{} : fs::absolute(a.proximity).string()},
            {"variant", a.variant},
            {"link", a.link},
            {"iters", a.iters},
            {"burnin", a.burnin},
            {"thin", a.thin},
            {"seed", a.seed},
            {"checkpoint_every", a.checkpoint_every},
            {"deviance_draws", a.deviance_draws}};
}

FitArgs fit_args_from_json(const nlohmann::json& j) {
    FitArgs a;
    a.data = j.at("data");
    a.schema = j.at("schema");
    a.proximity = j.at("proximity");
    a.variant = j.at("variant");
    a.link = j.at("link");
    a.iters = j.at("iters");
    a.burnin = j.at("burnin");
    a.thin = j.at("thin");
    a.seed = j.at("seed");
    a.checkpoint_every = j.at("checkpoint_every");
    a.deviance_draws = j.at("deviance_draws");
    return a;
}

void require_file(const std::string& path, const std::string& flag) {
    if (path.empty()) throw ValidationError(flag + " is required");
    if (!fs::is_regular_file(path)) throw ValidationError(flag + ": no such file " + path);
}

// Covariates are the header columns between respondent_id and the first trait.
std::vector<std::string> covariates_from_header(const fs::path& path, const std::vector<TraitSpec>& traits) {
    std::ifstream in(path);
    csv::Row header;
    if (!in || !csv::read_row(in, header, true)) throw ValidationError("cannot read header of " + path.string());
    if (header.size() < 2 || header[0] != "group" || header[1] != "respondent_id")
        throw ValidationError(path.string() + ": header must start with group,respondent_id");
    std::vector<std::string> covs;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (!traits.empty() && header[c] == traits.front().trait_id) break;
        covs.push_back(header[c]);
    }
    return covs;
}

struct Loaded {
    SurveyDataset data;
    ProximityData prox;
    bool has_prox = false;
    Variant variant = Variant::intercepts;
    Link link = Link::logit;
};

Loaded load_inputs(const FitArgs& a) {
    Loaded L;
    L.variant = parse_variant(a.variant);
    L.link = parse_link(a.link);
    require_file(a.data, "--data");
    require_file(a.schema, "--schema");
    if (uses_proximity(L.variant) && a.proximity.empty())
        throw ValidationError("variant " + to_string(L.variant) + " needs --proximity");
    auto traits = load_schema(a.schema);
    L.data = load_survey(a.data, traits, covariates_from_header(a.data, traits));
    if (!a.proximity.empty() && uses_proximity(L.variant)) {
        require_file(a.proximity, "--proximity");
        L.prox = load_proximity(a.proximity, L.data.group_ids());
        L.has_prox = true;
    }
    return L;
}

ChainConfig chain_config(const FitArgs& a, Variant variant, const fs::path& out) {
    ChainConfig c;
    c.n_iterations = a.iters;
    c.burn_in = a.burnin;
    c.thin = a.thin;
    c.seed = a.seed;
    c.variant = variant;
    c.threads = a.threads;
    c.deviance_draws = a.deviance_draws;
    c.checkpoint_every = a.checkpoint_every;
    c.checkpoint_path = out / "checkpoint.bin";
    return c;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw RuntimeError("cannot write " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

int cmd_fit(const FitArgs& a) {
    if (a.out.empty()) throw ValidationError("--out is required");
    Loaded L = load_inputs(a);
    const fs::path out = a.out;
    fs::create_directories(out);

    FitOptions fo;
    fo.link = L.link;
    std::clog << "fitting " << L.data.K() * L.data.p() << " marginal models\n";
    MarginalSet marginals = fit_all_marginals(L.data, fo);
    write_json(out / "marginals.json", marginals_to_json(L.data, marginals));
    write_json(out / "run.json", fit_args_to_json(a));

    const ProximityData* prox = L.has_prox ? &L.prox : nullptr;
    ChainInputs inputs = ChainInputs::from(L.data, marginals, prox);
    ChainConfig config = chain_config(a, L.variant, out);

    nlohmann::json timings = nlohmann::json::array();
    const long report = std::max(1L, a.iters / 20);
    const auto start = std::chrono::steady_clock::now();
    config.on_iteration = [&](long t, double seconds) {
        timings.push_back({{"iteration", t}, {"seconds", seconds}});
        if (!a.quiet && ((t + 1) % report == 0 || t + 1 == a.iters)) {
            double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::clog << "iteration " << t + 1 << "/" << a.iters << "  " << std::fixed << std::setprecision(1)
                      << elapsed << "s\n"
                      << std::defaultfloat;
        }
    };

    ChainState st;
    if (a.resume && fs::exists(config.checkpoint_path)) {
        st = load_checkpoint(config.checkpoint_path, config, inputs);
        std::clog << "resuming at iteration " << st.next_iteration << '\n';
    } else {
        st = initial_state(inputs, config);
    }
    try {
        advance_chain(st, inputs, config);
    } catch (const std::exception&) {
        auto dump = config.checkpoint_path;
        dump += ".failed";
        try {
            save_checkpoint(st, config, inputs, dump);
            std::clog << "state at failure written to " << dump << '\n';
        } catch (...) {
        }
        throw;
    }
    save_checkpoint(st, config, inputs, out / "final_state.bin");

    write_json(out / "log.json", {{"command", "fit"},
                                  {"variant", to_string(L.variant)},
                                  {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                                  {"iterations", timings}});

    PosteriorSummary s = summarize(st.acc, inputs, L.variant, config.deviance);
    export_summaries(s, st.acc, L.data, marginals, prox, out);
    if (s.clamped_rates > 0)
        std::clog << "warning: " << s.clamped_rates << " birth-death rates hit the [1e-12, 1e12] clamp\n";
    std::clog << "DIC " << s.dic << "; summaries written to " << out.string() << '\n';
    return kExitOk;
}

int cmd_summarize(const std::string& run, const std::string& out_arg) {
    const fs::path dir = run;
    if (!fs::is_directory(dir)) throw ValidationError("--run: no such directory " + run);
    FitArgs a = fit_args_from_json(read_json(dir / "run.json"));
    Loaded L = load_inputs(a);
    MarginalSet marginals = marginals_from_json(L.data, read_json(dir / "marginals.json"));
    const ProximityData* prox = L.has_prox ? &L.prox : nullptr;
    ChainInputs inputs = ChainInputs::from(L.data, marginals, prox);
    ChainConfig config = chain_config(a, L.variant, dir);
    ChainState st = load_checkpoint(dir / "final_state.bin", config, inputs);
    PosteriorSummary s = summarize(st.acc, inputs, L.variant, config.deviance);
    export_summaries(s, st.acc, L.data, marginals, prox, out_arg.empty() ? dir : fs::path(out_arg));
    std::clog << "DIC " << s.dic << '\n';
    return kExitOk;
}

int cmd_simulate(const std::string& scenario, const std::string& out, std::optional<std::uint64_t> seed) {
    require_file(scenario, "--scenario");
    if (out.empty()) throw ValidationError("--out is required");
    ScenarioSpec spec = load_scenario(scenario);
    if (seed) spec.seed = *seed;
    SyntheticScenario sc = build_scenario(spec);
    write_scenario(sc, out);
    std::clog << "wrote " << sc.data.K() << " groups x " << spec.n << " respondents to " << out << '\n';
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& runs) {
    if (runs.size() < 2) throw ValidationError("compare needs at least two run directories");
    struct Entry {
        std::string run, variant, parameters;
        double dic;
    };
    std::vector<Entry> rows;
    for (const auto& r : runs) {
        fs::path f = fs::path(r) / "dic.json";
        if (!fs::exists(f)) throw ValidationError("missing " + f.string());
        auto j = read_json(f);
        if (!j.contains("dic") || !j.at("dic").is_number()) throw ValidationError(f.string() + " has no DIC value");
        rows.push_back({r, j.value("variant", std::string{"?"}), j.value("parameters", std::string{}),
                        j.at("dic").get<double>()});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Entry& a, const Entry& b) { return a.dic < b.dic; });
    std::cout << std::left << std::setw(10) << "variant" << std::setw(18) << "parameters" << std::right
              << std::setw(16) << "DIC" << "  run\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::cout << std::left << std::setw(10) << rows[i].variant << std::setw(18) << rows[i].parameters
                  << std::right << std::setw(16) << std::fixed << std::setprecision(2) << rows[i].dic << "  "
                  << rows[i].run << (i == 0 ? "  *selected*" : "") << '\n';
    return kExitOk;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

int cmd_describe(const std::string& data, const std::string& schema, const std::string& out) {
    require_file(data, "--data");
    require_file(schema, "--schema");
    auto traits = load_schema(schema);
    SurveyDataset ds = load_survey(data, traits, covariates_from_header(data, traits));
    DescriptiveStats s = describe(ds);

    std::ostringstream table;
    csv::write_row(table, {"variable", "mean", "missing", "min_group_mean", "max_group_mean", "min_missing",
                           "max_missing"});
    for (std::size_t j = 0; j < s.traits.size(); ++j) {
        const auto& t = s.trait_summary[j];
        csv::write_row(table, {s.traits[j], fmt_opt(t.overall_mean), csv::format_double(t.overall_missing),
                               fmt_opt(t.min_group_mean), fmt_opt(t.max_group_mean),
                               csv::format_double(t.min_missing), csv::format_double(t.max_missing)});
    }
    for (std::size_t c = 0; c < s.covariates.size(); ++c) {
        const auto& t = s.covariate_summary[c];
        csv::write_row(table, {s.covariates[c], csv::format_double(t.overall_mean), "0",
                               csv::format_double(t.min_group_mean), csv::format_double(t.max_group_mean), "0",
                               "0"});
    }
    std::cout << table.str();
    for (std::size_t k = 0; k < s.groups.size(); ++k)
        if (s.dropped_rows[k] > 0)
            std::clog << s.groups[k] << ": " << s.dropped_rows[k] << " rows dropped for missing covariates\n";
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        f << table.str();
        if (!f) throw RuntimeError("cannot write " + out);
    }
    return kExitOk;
}

void add_fit_options(CLI::App* cmd, FitArgs& a) {
    cmd->add_option("--data", a.data, "survey CSV");
    cmd->add_option("--schema", a.schema, "trait schema JSON");
    cmd->add_option("--proximity", a.proximity, "proximity CSV (needed by int+prox and full)");
    cmd->add_option("--variant", a.variant, "graph prior: int, int+ls, int+prox or full")
        ->check(CLI::IsMember({"int", "int+ls", "int+prox", "full", "intercepts", "intercepts+ls",
                               "intercepts+prox"}));
    cmd->add_option("--link", a.link, "marginal link")->check(CLI::IsMember({"logit", "probit"}));
    cmd->add_option("--iters", a.iters, "total iterations including burn-in");
    cmd->add_option("--burnin", a.burnin, "burn-in iterations");
    cmd->add_option("--thin", a.thin, "stride of stored parameter draws");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--threads", a.threads, "worker threads across groups");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--checkpoint-every", a.checkpoint_every, "iterations between checkpoints (0: never)");
    cmd->add_option("--deviance-draws", a.deviance_draws, "post-burn-in draws used for Var(D)");
    cmd->add_flag("--resume", a.resume, "continue from <out>/checkpoint.bin when present");
    cmd->add_flag("--quiet", a.quiet, "no progress lines");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Joint Gaussian copula graphical models for grouped ordinal data"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "TOML/INI file with option values; flags override it");
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit the marginals and run the chain");
    add_fit_options(fit_cmd, fit);

    std::string scenario, sim_out;
    std::uint64_t sim_seed = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic survey from a scenario file");
    sim_cmd->add_option("--scenario", scenario, "scenario JSON");
    sim_cmd->add_option("--out", sim_out, "output directory");
    auto* seed_opt = sim_cmd->add_option("--seed", sim_seed, "override the scenario seed");

    std::string run_dir, sum_out;
    auto* sum_cmd = app.add_subcommand("summarize", "re-export summaries from a finished run");
    sum_cmd->add_option("--run", run_dir, "run directory written by fit")->required();
    sum_cmd->add_option("--out", sum_out, "output directory (default: the run directory)");

    std::vector<std::string> runs;
    auto* cmp_cmd = app.add_subcommand("compare", "rank finished runs by DIC");
    cmp_cmd->add_option("runs", runs, "run directories");

    std::string d_data, d_schema, d_out;
    auto* desc_cmd = app.add_subcommand("describe", "descriptive statistics per trait");
    desc_cmd->add_option("--data", d_data, "survey CSV");
    desc_cmd->add_option("--schema", d_schema, "trait schema JSON");
    desc_cmd->add_option("--out", d_out, "also write the table to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit);
        if (sim_cmd->parsed())
            return cmd_simulate(scenario, sim_out,
                                seed_opt->count() ? std::optional<std::uint64_t>(sim_seed) : std::nullopt);
        if (sum_cmd->parsed()) return cmd_summarize(run_dir, sum_out);
        if (cmp_cmd->parsed()) return cmd_compare(runs);
        if (desc_cmd->parsed()) return cmd_describe(d_data, d_schema, d_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rgm
