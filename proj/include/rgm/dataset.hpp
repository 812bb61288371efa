#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rgm {

// Response code for a missing answer. Observed categories are 1..C.
inline constexpr int kMissing = 0;

struct TraitSpec {
    std::string trait_id;
    int n_categories = 2;
    std::string description;
};

// Respondents of one group (country). Rows align across the three members.
struct GroupData {
    std::string id;
    std::vector<std::string> respondent_ids;
    Eigen::MatrixXi responses;   // n x p, kMissing or 1..C_j
    Eigen::MatrixXd covariates;  // n x m, no constant column
    std::size_t dropped_rows = 0;  // rows removed for incomplete covariates

    Eigen::Index n() const { return responses.rows(); }
};

struct SurveyDataset {
    std::vector<TraitSpec> traits;
    std::vector<std::string> covariate_names;
    std::vector<GroupData> groups;

    int K() const { return static_cast<int>(groups.size()); }
    int p() const { return static_cast<int>(traits.size()); }
    int m() const { return static_cast<int>(covariate_names.size()); }
    std::vector<std::string> group_ids() const;
    std::optional<int> group_index(const std::string& id) const;

    // Throws ValidationError when an invariant is violated.
    void validate() const;
};

// Pairwise proximity vectors, stored as one symmetric K x K matrix per
// dimension (zero diagonal).
struct ProximityData {
    std::vector<std::string> names;
    std::vector<std::string> groups;
    std::vector<Eigen::MatrixXd> sim;

    int dim() const { return static_cast<int>(names.size()); }
    int K() const { return static_cast<int>(groups.size()); }
    Eigen::VectorXd pair(int k1, int k2) const;
};

struct DescriptiveStats {
    struct Cell {
        std::optional<double> mean;  // empty when every response is missing
        double missing_fraction = 0.0;
        std::size_t n = 0;
    };
    struct TraitSummary {
        std::optional<double> overall_mean;
        double overall_missing = 0.0;
        std::optional<double> min_group_mean, max_group_mean;
        double min_missing = 0.0, max_missing = 0.0;
    };
    struct CovariateSummary {
        double overall_mean = 0.0;
        double min_group_mean = 0.0, max_group_mean = 0.0;
    };

    std::vector<std::string> groups;
    std::vector<std::string> traits;
    std::vector<std::string> covariates;
    std::vector<std::vector<Cell>> cells;  // [group][trait]
    std::vector<TraitSummary> trait_summary;
    std::vector<CovariateSummary> covariate_summary;
    std::vector<std::size_t> dropped_rows;
};

std::vector<TraitSpec> load_schema(const std::filesystem::path& path);
void write_schema(const std::vector<TraitSpec>& traits, const std::filesystem::path& path);

// Reads the wide survey CSV. When `known_groups` is given, any other group id
// is rejected. Rows with an empty covariate are dropped and counted.
SurveyDataset load_survey(const std::filesystem::path& path,
                          const std::vector<TraitSpec>& traits,
                          const std::vector<std::string>& covariate_names,
                          const std::vector<std::string>* known_groups = nullptr);

void write_survey(const SurveyDataset& data, const std::filesystem::path& path);

ProximityData load_proximity(const std::filesystem::path& path,
                             const std::vector<std::string>& groups);

void write_proximity(const ProximityData& prox, const std::filesystem::path& path);

DescriptiveStats describe(const SurveyDataset& data);

// Sample standard deviation of each covariate within one group.
Eigen::VectorXd covariate_sds(const GroupData& group);

}  // namespace rgm
