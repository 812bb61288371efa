#include "rgm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "rgm/csv.hpp"
#include "rgm/error.hpp"

namespace rgm {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    return out;
}

}  // namespace

std::vector<std::string> SurveyDataset::group_ids() const {
    std::vector<std::string> ids;
    for (const auto& g : groups) ids.push_back(g.id);
    return ids;
}

std::optional<int> SurveyDataset::group_index(const std::string& id) const {
    for (int k = 0; k < K(); ++k)
        if (groups[k].id == id) return k;
    return std::nullopt;
}

void SurveyDataset::validate() const {
    std::set<std::string> ids;
    for (const auto& t : traits) {
        if (t.n_categories < 2)
            throw ValidationError("trait " + t.trait_id + " needs at least 2 categories");
        if (!ids.insert(t.trait_id).second)
            throw ValidationError("duplicate trait id " + t.trait_id);
    }
    for (const auto& g : groups) {
        if (g.n() < 1) throw ValidationError("group " + g.id + " has no respondents");
        if (g.responses.cols() != p() || g.covariates.cols() != m() ||
            g.covariates.rows() != g.n())
            throw ValidationError("group " + g.id + " does not match the dataset schema");
        for (Eigen::Index i = 0; i < g.n(); ++i)
            for (int j = 0; j < p(); ++j) {
                int y = g.responses(i, j);
                if (y != kMissing && (y < 1 || y > traits[j].n_categories))
                    throw ValidationError("group " + g.id + " row " + std::to_string(i) +
                                          ": category out of range for " + traits[j].trait_id);
            }
    }
}

Eigen::VectorXd ProximityData::pair(int k1, int k2) const {
    Eigen::VectorXd v(dim());
    for (int d = 0; d < dim(); ++d) v(d) = sim[d](k1, k2);
    return v;
}

std::vector<TraitSpec> load_schema(const std::filesystem::path& path) {
    auto in = open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("schema " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw ValidationError("schema must be a JSON list of traits");
    std::vector<TraitSpec> traits;
    std::set<std::string> seen;
    for (const auto& item : j) {
        TraitSpec t;
        try {
            t.trait_id = item.at("trait_id").get<std::string>();
            t.n_categories = item.at("n_categories").get<int>();
            t.description = item.value("description", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("schema " + path.string() + ": " + e.what());
        }
        if (t.n_categories < 2)
            throw ValidationError("trait " + t.trait_id + " needs at least 2 categories");
        if (!seen.insert(t.trait_id).second)
            throw ValidationError("duplicate trait id " + t.trait_id);
        traits.push_back(std::move(t));
    }
    return traits;
}

void write_schema(const std::vector<TraitSpec>& traits, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& t : traits)
        j.push_back({{"trait_id", t.trait_id},
                     {"n_categories", t.n_categories},
                     {"description", t.description}});
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

SurveyDataset load_survey(const std::filesystem::path& path,
                          const std::vector<TraitSpec>& traits,
                          const std::vector<std::string>& covariate_names,
                          const std::vector<std::string>* known_groups) {
    auto in = open_input(path);
    csv::Row header;
    if (!csv::read_row(in, header, true)) throw ValidationError(path.string() + ": empty file");

    const std::size_t m = covariate_names.size();
    const std::size_t p = traits.size();
    const std::size_t width = 2 + m + p;
    if (header.size() != width)
        throw ValidationError(path.string() + ": expected " + std::to_string(width) +
                              " columns, header has " + std::to_string(header.size()));
    if (csv::trim(header[0]) != "group" || csv::trim(header[1]) != "respondent_id")
        throw ValidationError(path.string() + ": header must start with group,respondent_id");
    for (std::size_t c = 0; c < m; ++c)
        if (csv::trim(header[2 + c]) != covariate_names[c])
            throw ValidationError(path.string() + ": expected covariate column " +
                                  covariate_names[c] + ", found " + header[2 + c]);
    for (std::size_t j = 0; j < p; ++j)
        if (csv::trim(header[2 + m + j]) != traits[j].trait_id)
            throw ValidationError(path.string() + ": expected trait column " +
                                  traits[j].trait_id + ", found " + header[2 + m + j]);

    struct Rows {
        std::vector<std::string> ids;
        std::vector<std::vector<int>> y;
        std::vector<std::vector<double>> x;
        std::size_t dropped = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, Rows> by_group;

    csv::Row row;
    std::size_t line = 1;
    while (csv::read_row(in, row)) {
        ++line;
        const std::string where = path.string() + " row " + std::to_string(line);
        if (row.size() != width)
            throw ValidationError(where + ": expected " + std::to_string(width) + " fields");
        std::string group = csv::trim(row[0]);
        if (group.empty()) throw ValidationError(where + ": empty group id");
        if (known_groups &&
            std::find(known_groups->begin(), known_groups->end(), group) == known_groups->end())
            throw ValidationError(where + ": unknown group id " + group);
        auto [it, inserted] = by_group.try_emplace(group);
        if (inserted) order.push_back(group);
        Rows& rows = it->second;

        std::vector<double> x(m);
        bool complete = true;
        for (std::size_t c = 0; c < m; ++c) {
            const std::string& f = row[2 + c];
            if (csv::trim(f).empty()) {
                complete = false;
                continue;
            }
            if (!csv::parse_double(f, x[c]) || !std::isfinite(x[c]))
                throw ValidationError(where + ": covariate " + covariate_names[c] +
                                      " is not a number: " + f);
        }
        std::vector<int> y(p, kMissing);
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& f = row[2 + m + j];
            if (csv::trim(f).empty()) continue;
            long v = 0;
            if (!csv::parse_int(f, v))
                throw ValidationError(where + ": trait " + traits[j].trait_id +
                                      " is not an integer category: " + f);
            if (v < 1 || v > traits[j].n_categories)
                throw ValidationError(where + ": category " + std::to_string(v) +
                                      " out of range 1.." + std::to_string(traits[j].n_categories) +
                                      " for trait " + traits[j].trait_id);
            y[j] = static_cast<int>(v);
        }
        if (!complete) {
            ++rows.dropped;
            continue;
        }
        rows.ids.push_back(csv::trim(row[1]));
        rows.y.push_back(std::move(y));
        rows.x.push_back(std::move(x));
    }

    SurveyDataset data;
    data.traits = traits;
    data.covariate_names = covariate_names;
    for (const auto& id : order) {
        Rows& rows = by_group[id];
        GroupData g;
        g.id = id;
        g.dropped_rows = rows.dropped;
        const auto n = static_cast<Eigen::Index>(rows.y.size());
        if (n == 0)
            throw ValidationError("group " + id + " has no respondents with complete covariates");
        g.respondent_ids = std::move(rows.ids);
        g.responses.resize(n, static_cast<Eigen::Index>(p));
        g.covariates.resize(n, static_cast<Eigen::Index>(m));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) g.responses(i, j) = rows.y[i][j];
            for (std::size_t c = 0; c < m; ++c) g.covariates(i, c) = rows.x[i][c];
        }
        if (rows.dropped > 0)
            std::clog << "load_survey: group " << id << ": dropped " << rows.dropped
                      << " row(s) with missing covariates\n";
        data.groups.push_back(std::move(g));
    }
    if (data.groups.empty()) throw ValidationError(path.string() + ": no data rows");
    data.validate();
    return data;
}

void write_survey(const SurveyDataset& data, const std::filesystem::path& path) {
    auto out = open_output(path);
    csv::Row header{"group", "respondent_id"};
    for (const auto& c : data.covariate_names) header.push_back(c);
    for (const auto& t : data.traits) header.push_back(t.trait_id);
    csv::write_row(out, header);
    for (const auto& g : data.groups) {
        for (Eigen::Index i = 0; i < g.n(); ++i) {
            csv::Row row{g.id, i < static_cast<Eigen::Index>(g.respondent_ids.size())
                                   ? g.respondent_ids[i]
                                   : std::to_string(i + 1)};
            for (int c = 0; c < data.m(); ++c) row.push_back(csv::format_double(g.covariates(i, c)));
            for (int j = 0; j < data.p(); ++j) {
                int y = g.responses(i, j);
                row.push_back(y == kMissing ? std::string{} : std::to_string(y));
            }
            csv::write_row(out, row);
        }
    }
}

ProximityData load_proximity(const std::filesystem::path& path,
                             const std::vector<std::string>& groups) {
    auto in = open_input(path);
    csv::Row header;
    if (!csv::read_row(in, header, true)) throw ValidationError(path.string() + ": empty file");
    if (header.size() < 3 || csv::trim(header[0]) != "k1" || csv::trim(header[1]) != "k2")
        throw ValidationError(path.string() + ": header must be k1,k2,<name_1..name_d>");

    ProximityData prox;
    prox.groups = groups;
    for (std::size_t c = 2; c < header.size(); ++c) prox.names.push_back(csv::trim(header[c]));
    const int K = static_cast<int>(groups.size());
    const int d = prox.dim();
    prox.sim.assign(d, Eigen::MatrixXd::Zero(K, K));

    std::map<std::string, int> index;
    for (int k = 0; k < K; ++k) index[groups[k]] = k;
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(K, K);

    csv::Row row;
    std::size_t line = 1;
    while (csv::read_row(in, row)) {
        ++line;
        const std::string where = path.string() + " row " + std::to_string(line);
        if (row.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
        auto a = index.find(csv::trim(row[0]));
        auto b = index.find(csv::trim(row[1]));
        if (a == index.end() || b == index.end()) {
            // Pairs for groups outside the dataset are ignored.
            continue;
        }
        int k1 = a->second, k2 = b->second;
        if (k1 == k2) throw ValidationError(where + ": self pair " + groups[k1]);
        Eigen::VectorXd v(d);
        for (int c = 0; c < d; ++c) {
            if (!csv::parse_double(row[2 + c], v(c)) || !std::isfinite(v(c)))
                throw ValidationError(where + ": non-finite value for " + prox.names[c]);
        }
        if (seen(k1, k2)) {
            for (int c = 0; c < d; ++c)
                if (std::abs(prox.sim[c](k1, k2) - v(c)) > 1e-9)
                    throw ValidationError(where + ": pair (" + groups[k1] + "," + groups[k2] +
                                          ") listed twice with different " + prox.names[c]);
            continue;
        }
        seen(k1, k2) = seen(k2, k1) = 1;
        for (int c = 0; c < d; ++c) prox.sim[c](k1, k2) = prox.sim[c](k2, k1) = v(c);
    }
    for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1 + 1; k2 < K; ++k2)
            if (!seen(k1, k2))
                throw ValidationError(path.string() + ": missing pair (" + groups[k1] + "," +
                                      groups[k2] + ")");
    return prox;
}

void write_proximity(const ProximityData& prox, const std::filesystem::path& path) {
    auto out = open_output(path);
    csv::Row header{"k1", "k2"};
    for (const auto& n : prox.names) header.push_back(n);
    csv::write_row(out, header);
    for (int a = 0; a < prox.K(); ++a)
        for (int b = a + 1; b < prox.K(); ++b) {
            csv::Row row{prox.groups[a], prox.groups[b]};
            for (int c = 0; c < prox.dim(); ++c) row.push_back(csv::format_double(prox.sim[c](a, b)));
            csv::write_row(out, row);
        }
}

DescriptiveStats describe(const SurveyDataset& data) {
    DescriptiveStats s;
    s.groups = data.group_ids();
    for (const auto& t : data.traits) s.traits.push_back(t.trait_id);
    s.covariates = data.covariate_names;
    const int K = data.K(), p = data.p(), m = data.m();

    s.cells.assign(K, std::vector<DescriptiveStats::Cell>(p));
    std::vector<double> sum(p, 0.0);
    std::vector<std::size_t> observed(p, 0), total(p, 0);
    for (int k = 0; k < K; ++k) {
        const auto& g = data.groups[k];
        s.dropped_rows.push_back(g.dropped_rows);
        for (int j = 0; j < p; ++j) {
            double acc = 0.0;
            std::size_t obs = 0;
            for (Eigen::Index i = 0; i < g.n(); ++i) {
                int y = g.responses(i, j);
                if (y == kMissing) continue;
                acc += y;
                ++obs;
            }
            auto& cell = s.cells[k][j];
            cell.n = static_cast<std::size_t>(g.n());
            cell.missing_fraction = 1.0 - static_cast<double>(obs) / static_cast<double>(g.n());
            if (obs > 0) cell.mean = acc / static_cast<double>(obs);
            sum[j] += acc;
            observed[j] += obs;
            total[j] += cell.n;
        }
    }
    for (int j = 0; j < p; ++j) {
        DescriptiveStats::TraitSummary t;
        if (observed[j] > 0) t.overall_mean = sum[j] / static_cast<double>(observed[j]);
        t.overall_missing = 1.0 - static_cast<double>(observed[j]) / static_cast<double>(total[j]);
        t.min_missing = 1.0;
        t.max_missing = 0.0;
        for (int k = 0; k < K; ++k) {
            const auto& cell = s.cells[k][j];
            t.min_missing = std::min(t.min_missing, cell.missing_fraction);
            t.max_missing = std::max(t.max_missing, cell.missing_fraction);
            if (!cell.mean) continue;
            if (!t.min_group_mean || *cell.mean < *t.min_group_mean) t.min_group_mean = cell.mean;
            if (!t.max_group_mean || *cell.mean > *t.max_group_mean) t.max_group_mean = cell.mean;
        }
        s.trait_summary.push_back(t);
    }
    for (int c = 0; c < m; ++c) {
        DescriptiveStats::CovariateSummary cs;
        double acc = 0.0;
        std::size_t n = 0;
        cs.min_group_mean = std::numeric_limits<double>::infinity();
        cs.max_group_mean = -std::numeric_limits<double>::infinity();
        for (const auto& g : data.groups) {
            double gm = g.covariates.col(c).mean();
            acc += g.covariates.col(c).sum();
            n += static_cast<std::size_t>(g.n());
            cs.min_group_mean = std::min(cs.min_group_mean, gm);
            cs.max_group_mean = std::max(cs.max_group_mean, gm);
        }
        cs.overall_mean = acc / static_cast<double>(n);
        s.covariate_summary.push_back(cs);
    }
    return s;
}

Eigen::VectorXd covariate_sds(const GroupData& group) {
    const Eigen::Index m = group.covariates.cols();
    Eigen::VectorXd sd(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        auto col = group.covariates.col(c).array();
        double mean = col.mean();
        double ss = (col - mean).square().sum();
        const Eigen::Index n = group.covariates.rows();
        sd(c) = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    return sd;
}

}  // namespace rgm
