#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rgm/bdmcmc.hpp"
#include "rgm/error.hpp"

namespace rgm {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
  public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <class T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void mat(const Eigen::MatrixXd& m) {
        pod<std::int64_t>(m.rows());
        pod<std::int64_t>(m.cols());
        out_.write(reinterpret_cast<const char*>(m.data()),
                   static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    void vec(const Eigen::VectorXd& v) { mat(v); }
    void rng(const Rng& r) {
        std::ostringstream ss;
        ss << r;
        str(ss.str());
    }
    void graph(const Graph& g) {
        pod<std::int32_t>(g.p());
        for (int e = 0; e < g.n_slots(); ++e) pod<std::uint8_t>(g.has_slot(e));
    }
    void params(const PriorParams& p) {
        pod<std::int32_t>(static_cast<std::int32_t>(p.variant));
        vec(p.alpha);
        vec(p.beta);
        mat(p.C);
    }
    template <class T, class F>
    void list(const std::vector<T>& xs, F&& f) {
        pod<std::uint64_t>(xs.size());
        for (const auto& x : xs) f(x);
    }

  private:
    std::ostream& out_;
};

class Reader {
  public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <class T>
    T pod() {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        check();
        return v;
    }
    std::string str() {
        auto n = pod<std::uint64_t>();
        if (n > (1u << 24)) throw ValidationError("checkpoint: corrupt string length");
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }
    Eigen::MatrixXd mat() {
        auto r = pod<std::int64_t>();
        auto c = pod<std::int64_t>();
        if (r < 0 || c < 0 || r * c > (std::int64_t{1} << 32)) throw ValidationError("checkpoint: corrupt matrix");
        Eigen::MatrixXd m(r, c);
        in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
        check();
        return m;
    }
    Eigen::VectorXd vec() {
        Eigen::MatrixXd m = mat();
        return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
    }
    Rng rng() {
        Rng r;
        // boost skips whitespace after the last word; without the pad that
        // runs into end-of-string and flags the stream as failed.
        std::istringstream ss(str() + ' ');
        ss >> r;
        if (ss.fail()) throw ValidationError("checkpoint: corrupt generator state");
        return r;
    }
    Graph graph() {
        int p = pod<std::int32_t>();
        Graph g(p);
        for (int e = 0; e < g.n_slots(); ++e) g.set_slot(e, pod<std::uint8_t>() != 0);
        return g;
    }
    PriorParams params() {
        PriorParams p;
        p.variant = static_cast<Variant>(pod<std::int32_t>());
        p.alpha = vec();
        p.beta = vec();
        p.C = mat();
        return p;
    }
    template <class F>
    void list(F&& f) {
        auto n = pod<std::uint64_t>();
        if (n > (std::uint64_t{1} << 32)) throw ValidationError("checkpoint: corrupt list length");
        for (std::uint64_t i = 0; i < n; ++i) f();
    }

  private:
    void check() {
        if (!in_) throw ValidationError("checkpoint: unexpected end of file");
    }
    std::istream& in_;
};

void write_fingerprint(Writer& w, const ChainConfig& config, const ChainInputs& inputs) {
    w.pod<std::uint64_t>(config.seed);
    w.pod<std::int64_t>(config.n_iterations);
    w.pod<std::int64_t>(config.burn_in);
    w.pod<std::int32_t>(static_cast<std::int32_t>(config.variant));
    w.pod<std::int32_t>(config.thin);
    w.pod<std::int32_t>(config.deviance_draws);
    w.pod<std::int32_t>(inputs.K);
    w.pod<std::int32_t>(inputs.p);
}

}  // namespace

void save_checkpoint(const ChainState& st, const ChainConfig& config, const ChainInputs& inputs,
                     const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw RuntimeError("cannot write checkpoint " + tmp.string());
        Writer w(out);
        out.write(kMagic, sizeof kMagic);
        w.pod(kVersion);
        write_fingerprint(w, config, inputs);

        w.pod<std::int64_t>(st.next_iteration);
        w.params(st.params);
        w.list(st.family.graphs, [&](const Graph& g) { w.graph(g); });
        w.list(st.omega, [&](const Eigen::MatrixXd& m) { w.mat(m); });
        w.list(st.Z, [&](const Eigen::MatrixXd& m) { w.mat(m); });
        w.rng(st.rng);
        w.list(st.group_rngs, [&](const Rng& r) { w.rng(r); });
        w.list(st.deviance_schedule, [&](long t) { w.pod<std::int64_t>(t); });

        const auto& a = st.acc;
        w.pod<std::int32_t>(a.K);
        w.pod<std::int32_t>(a.p);
        w.pod<std::int64_t>(a.n_accumulated);
        w.list(a.edge_time, [&](const Eigen::MatrixXd& m) { w.mat(m); });
        w.list(a.total_time, [&](double x) { w.pod(x); });
        w.list(a.omega_sum, [&](const Eigen::MatrixXd& m) { w.mat(m); });
        w.vec(a.alpha_sum);
        w.vec(a.alpha_sumsq);
        w.vec(a.beta_sum);
        w.vec(a.beta_sumsq);
        w.list(a.draw_iterations, [&](long t) { w.pod<std::int64_t>(t); });
        w.list(a.param_draws, [&](const PriorParams& p) { w.params(p); });
        w.list(a.deviance_iterations, [&](long t) { w.pod<std::int64_t>(t); });
        w.list(a.deviance_draws, [&](double x) { w.pod(x); });
        w.list(a.deviance_parts, [&](const DevianceParts& d) {
            w.pod(d.data);
            w.pod(d.graph);
        });
        w.pod<std::int64_t>(a.clamped_rates);
        if (!out) throw RuntimeError("failed writing checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

ChainState load_checkpoint(const std::filesystem::path& path, const ChainConfig& config,
                           const ChainInputs& inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ValidationError(path.string() + " is not a checkpoint file");
    Reader r(in);
    auto version = r.pod<std::uint32_t>();
    if (version != kVersion)
        throw ValidationError("checkpoint version " + std::to_string(version) + " is not supported");

    std::ostringstream expected;
    {
        Writer w(expected);
        write_fingerprint(w, config, inputs);
    }
    std::string found(expected.str().size(), '\0');
    in.read(found.data(), static_cast<std::streamsize>(found.size()));
    if (!in || found != expected.str())
        throw ValidationError("checkpoint " + path.string() + " was written for a different configuration");

    ChainState st;
    st.next_iteration = r.pod<std::int64_t>();
    st.params = r.params();
    r.list([&] { st.family.graphs.push_back(r.graph()); });
    r.list([&] { st.omega.push_back(r.mat()); });
    r.list([&] { st.Z.push_back(r.mat()); });
    st.rng = r.rng();
    r.list([&] { st.group_rngs.push_back(r.rng()); });
    r.list([&] { st.deviance_schedule.push_back(r.pod<std::int64_t>()); });

    auto& a = st.acc;
    a.K = r.pod<std::int32_t>();
    a.p = r.pod<std::int32_t>();
    a.n_accumulated = r.pod<std::int64_t>();
    r.list([&] { a.edge_time.push_back(r.mat()); });
    r.list([&] { a.total_time.push_back(r.pod<double>()); });
    r.list([&] { a.omega_sum.push_back(r.mat()); });
    a.alpha_sum = r.vec();
    a.alpha_sumsq = r.vec();
    a.beta_sum = r.vec();
    a.beta_sumsq = r.vec();
    r.list([&] { a.draw_iterations.push_back(r.pod<std::int64_t>()); });
    r.list([&] { a.param_draws.push_back(r.params()); });
    r.list([&] { a.deviance_iterations.push_back(r.pod<std::int64_t>()); });
    r.list([&] { a.deviance_draws.push_back(r.pod<double>()); });
    r.list([&] {
        DevianceParts d;
        d.data = r.pod<double>();
        d.graph = r.pod<double>();
        a.deviance_parts.push_back(d);
    });
    a.clamped_rates = r.pod<std::int64_t>();

    if (static_cast<int>(st.family.graphs.size()) != inputs.K || static_cast<int>(st.Z.size()) != inputs.K)
        throw ValidationError("checkpoint does not match the number of groups");
    for (int k = 0; k < inputs.K; ++k)
        if (st.Z[k].rows() != inputs.intervals[k].lo.rows())
            throw ValidationError("checkpoint does not match the dataset");
    return st;
}

}  // namespace rgm
