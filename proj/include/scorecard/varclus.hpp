#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scorecard/table.hpp"

namespace scorecard {

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;  // symmetric, unit diagonal

  std::size_t size() const { return names.size(); }
  std::size_t index_of(std::string_view name) const;
};

// Pearson correlations on pairwise-complete rows. Binary, likelihood and
// continuous columns are used as numbers; categorical columns are rejected.
// Throws Error naming the column when a variable has zero variance.
CorrelationMatrix correlation_matrix(const DataTable& table, std::span<const std::string> variables);

struct VariableCluster {
  std::vector<std::string> members;  // sorted by name
  // First principal component of the member correlation submatrix, unit
  // norm, aligned with `members`.
  Eigen::VectorXd loadings;
  double first_eigenvalue = 1.0;
  double second_eigenvalue = 0.0;  // 0 for singletons
};

// Divisive clustering. Starting from a single cluster, the cluster with the
// largest second eigenvalue is split while that eigenvalue exceeds
// `split_threshold` and fewer than `max_clusters` clusters exist. A split
// rotates the first two components (quartimax) and sends each member to the
// component it loads on more heavily; afterwards every variable moves to the
// cluster whose first component it correlates with most, until no variable
// moves or 20 passes have run. Output clusters are sorted by first member.
std::vector<VariableCluster> cluster_variables(const CorrelationMatrix& corr, double split_threshold = 1.0,
                                               std::size_t max_clusters = std::numeric_limits<std::size_t>::max());

// (1 - r2_own) / (1 - r2_nearest)
double one_minus_r2_ratio(double r2_own, double r2_nearest);

struct ClusterSelection {
  struct Row {
    std::string variable;
    std::size_t cluster = 0;
    double r2_own = 0.0;
    double r2_nearest = 0.0;
    double ratio = 0.0;
    bool representative = false;
  };
  std::vector<Row> rows;  // grouped by cluster, members in name order
  std::vector<std::string> representatives;  // one per cluster, cluster order
};

// Representative per cluster = member with the smallest 1-R^2 ratio, ties to
// the lexicographically smaller name. Singletons have r2_own = 1; with a
// single cluster r2_nearest is 0.
ClusterSelection select_representatives(std::span<const VariableCluster> clusters, const CorrelationMatrix& corr);

nlohmann::json to_json(const ClusterSelection& selection);

}  // namespace scorecard
