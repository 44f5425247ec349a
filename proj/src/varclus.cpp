#include "scorecard/varclus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "scorecard/error.hpp"
#include "scorecard/stats.hpp"

namespace scorecard {

namespace {

constexpr int kMaxReassignPasses = 20;
constexpr double kResidualTol = 1e-10;

struct Eig {
  double first = 1.0;
  double second = 0.0;
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;
};

// Eigen-decomposition of the correlation submatrix over `idx`.
Eig decompose(const Eigen::MatrixXd& r, const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eig out;
  if (k == 1) {
    out.v1 = Eigen::VectorXd::Ones(1);
    return out;
  }
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = r(idx[a], idx[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite())
    throw Error("variable clustering: eigen-decomposition failed (numerical degeneracy)");
  // Eigenvalues are ascending.
  out.first = es.eigenvalues()(k - 1);
  out.second = es.eigenvalues()(k - 2);
  out.v1 = es.eigenvectors().col(k - 1);
  out.v2 = es.eigenvectors().col(k - 2);
  const double scale = std::max(1.0, std::abs(out.first));
  if ((sub * out.v1 - out.first * out.v1).norm() > kResidualTol * scale * k)
    throw Error("variable clustering: eigen-decomposition did not converge");
  // Fix the sign so the largest-magnitude loading is positive.
  Eigen::Index imax = 0;
  out.v1.cwiseAbs().maxCoeff(&imax);
  if (out.v1(imax) < 0) out.v1 = -out.v1;
  return out;
}

// Correlation of variable j with the unit-variance first component of the
// cluster over `idx` with eigenvector v1 and eigenvalue lambda.
double corr_with_component(const Eigen::MatrixXd& r, std::size_t j, const std::vector<std::size_t>& idx,
                           const Eigen::VectorXd& v1, double lambda) {
  if (idx.size() == 1) return r(j, idx[0]);
  double s = 0.0;
  for (std::size_t m = 0; m < idx.size(); ++m) s += v1(static_cast<Eigen::Index>(m)) * r(j, idx[m]);
  return s / std::sqrt(lambda);
}

struct Work {
  std::vector<std::size_t> idx;  // ascending = name order
  Eig eig;
  bool splittable = true;
};

void refresh(const Eigen::MatrixXd& r, Work& w) {
  std::sort(w.idx.begin(), w.idx.end());
  w.eig = decompose(r, w.idx);
}

}  // namespace

std::size_t CorrelationMatrix::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw Error("correlation matrix has no variable '" + std::string(name) + "'");
}

CorrelationMatrix correlation_matrix(const DataTable& table, std::span<const std::string> variables) {
  const auto k = variables.size();
  std::vector<std::span<const double>> cols;
  for (const auto& name : variables) {
    if (table.spec(name).kind == ColumnKind::kCategorical)
      throw Error("correlation: categorical column '" + name + "' has no numeric scale");
    cols.push_back(table.values(name));
  }
  CorrelationMatrix out;
  out.names.assign(variables.begin(), variables.end());
  out.r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));

  const std::size_t n = table.n_rows();
  bool any_missing = false;
  for (const auto& c : cols)
    any_missing = any_missing || std::any_of(c.begin(), c.end(), is_missing);

  if (!any_missing) {
    // Fast path: one centred matrix, one product.
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
      double m = 0.0;
      for (double v : cols[j]) m += v;
      m /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = cols[j][i] - m;
        z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        ss += d * d;
      }
      if (ss <= 0.0) throw Error("correlation: column '" + variables[j] + "' has zero variance");
      z.col(static_cast<Eigen::Index>(j)) /= std::sqrt(ss);
    }
    out.r = z.transpose() * z;
    out.r.diagonal().setOnes();
    return out;
  }

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_missing(cols[a][i]) || is_missing(cols[b][i])) continue;
        x.push_back(cols[a][i]);
        y.push_back(cols[b][i]);
      }
      const double r = stats::pearson(x, y);
      if (std::isnan(r)) {
        const double vx = stats::pearson(x, x);
        throw Error("correlation: column '" + variables[std::isnan(vx) ? a : b] +
                    "' has zero variance on pairwise-complete rows");
      }
      out.r(a, b) = out.r(b, a) = r;
    }
  }
  return out;
}

std::vector<VariableCluster> cluster_variables(const CorrelationMatrix& corr, double split_threshold,
                                               std::size_t max_clusters) {
  const std::size_t p = corr.size();
  if (p == 0) return {};

  // Work in name order so the result does not depend on input order.
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return corr.names[a] < corr.names[b]; });
  Eigen::MatrixXd r(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) r(a, b) = corr.r(order[a], order[b]);

  std::vector<Work> clusters(1);
  clusters[0].idx.resize(p);
  std::iota(clusters[0].idx.begin(), clusters[0].idx.end(), std::size_t{0});
  refresh(r, clusters[0]);

  while (clusters.size() < max_clusters) {
    // Worst splittable cluster; ties go to the earlier cluster.
    std::size_t worst = clusters.size();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (!clusters[c].splittable || clusters[c].idx.size() < 2) continue;
      if (worst == clusters.size() || clusters[c].eig.second > clusters[worst].eig.second) worst = c;
    }
    if (worst == clusters.size() || !(clusters[worst].eig.second > split_threshold)) break;

    Work& w = clusters[worst];
    const double s1 = std::sqrt(std::max(w.eig.first, 0.0));
    const double s2 = std::sqrt(std::max(w.eig.second, 0.0));
    // Quartimax angle for two factors: theta = arg(sum (a + ib)^4) / 4.
    std::complex<double> acc = 0.0;
    for (std::size_t m = 0; m < w.idx.size(); ++m) {
      const std::complex<double> z(w.eig.v1(m) * s1, w.eig.v2(m) * s2);
      acc += z * z * z * z;
    }
    const double theta = std::arg(acc) / 4.0;
    const double c = std::cos(theta), s = std::sin(theta);
    Work left, right;
    for (std::size_t m = 0; m < w.idx.size(); ++m) {
      const double a = w.eig.v1(m) * s1, b = w.eig.v2(m) * s2;
      const double ra = a * c + b * s;
      const double rb = -a * s + b * c;
      (ra * ra >= rb * rb ? left : right).idx.push_back(w.idx[m]);
    }
    if (left.idx.empty() || right.idx.empty()) {
      w.splittable = false;
      continue;
    }
    refresh(r, left);
    refresh(r, right);
    clusters[worst] = std::move(left);
    clusters.push_back(std::move(right));

    // Reassignment passes.
    for (int pass = 0; pass < kMaxReassignPasses; ++pass) {
      std::vector<std::size_t> owner(p);
      for (std::size_t ci = 0; ci < clusters.size(); ++ci)
        for (auto j : clusters[ci].idx) owner[j] = ci;
      std::vector<std::size_t> sizes(clusters.size());
      for (std::size_t ci = 0; ci < clusters.size(); ++ci) sizes[ci] = clusters[ci].idx.size();

      bool moved = false;
      std::vector<std::size_t> target = owner;
      for (std::size_t j = 0; j < p; ++j) {
        const auto cur = owner[j];
        auto r2_of = [&](std::size_t ci) {
          const auto& cw = clusters[ci];
          const double rc = corr_with_component(r, j, cw.idx, cw.eig.v1, cw.eig.first);
          return rc * rc;
        };
        double best = r2_of(cur);
        std::size_t best_c = cur;
        for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
          if (ci == cur) continue;
          const double r2 = r2_of(ci);
          if (r2 > best + 1e-12) {
            best = r2;
            best_c = ci;
          }
        }
        if (best_c != cur && sizes[cur] > 1) {
          --sizes[cur];
          ++sizes[best_c];
          target[j] = best_c;
          moved = true;
        }
      }
      if (!moved) break;
      for (auto& cw : clusters) cw.idx.clear();
      for (std::size_t j = 0; j < p; ++j) clusters[target[j]].idx.push_back(j);
      for (auto& cw : clusters) {
        cw.splittable = true;
        refresh(r, cw);
      }
    }
  }

  std::sort(clusters.begin(), clusters.end(), [](const Work& a, const Work& b) { return a.idx[0] < b.idx[0]; });
  std::vector<VariableCluster> out;
  for (const auto& w : clusters) {
    VariableCluster vc;
    for (auto j : w.idx) vc.members.push_back(corr.names[order[j]]);
    vc.loadings = w.eig.v1;
    vc.first_eigenvalue = w.eig.first;
    vc.second_eigenvalue = w.eig.second;
    out.push_back(std::move(vc));
  }
  return out;
}

double one_minus_r2_ratio(double r2_own, double r2_nearest) {
  const double denom = std::max(1.0 - r2_nearest, 1e-12);
  return std::max(1.0 - r2_own, 0.0) / denom;
}

ClusterSelection select_representatives(std::span<const VariableCluster> clusters, const CorrelationMatrix& corr) {
  if (clusters.empty()) throw Error("select_representatives: no clusters");
  std::vector<std::vector<std::size_t>> idx(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const auto& m : clusters[c].members) idx[c].push_back(corr.index_of(m));

  auto r2_with = [&](std::size_t j, std::size_t c) {
    const double rc = corr_with_component(corr.r, j, idx[c], clusters[c].loadings, clusters[c].first_eigenvalue);
    return std::clamp(rc * rc, 0.0, 1.0);
  };

  ClusterSelection out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const std::size_t first_row = out.rows.size();
    for (std::size_t m = 0; m < idx[c].size(); ++m) {
      ClusterSelection::Row row;
      row.variable = clusters[c].members[m];
      row.cluster = c;
      row.r2_own = idx[c].size() == 1 ? 1.0 : r2_with(idx[c][m], c);
      row.r2_nearest = 0.0;
      for (std::size_t o = 0; o < clusters.size(); ++o)
        if (o != c) row.r2_nearest = std::max(row.r2_nearest, r2_with(idx[c][m], o));
      row.ratio = one_minus_r2_ratio(row.r2_own, row.r2_nearest);
      out.rows.push_back(std::move(row));
    }
    std::size_t best = first_row;
    for (std::size_t k = first_row + 1; k < out.rows.size(); ++k) {
      const auto& a = out.rows[k];
      const auto& b = out.rows[best];
      if (a.ratio < b.ratio || (a.ratio == b.ratio && a.variable < b.variable)) best = k;
    }
    out.rows[best].representative = true;
    out.representatives.push_back(out.rows[best].variable);
  }
  return out;
}

nlohmann::json to_json(const ClusterSelection& selection) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : selection.rows) {
    rows.push_back({{"cluster", r.cluster},
                    {"variable", r.variable},
                    {"r2_own", r.r2_own},
                    {"r2_nearest", r.r2_nearest},
                    {"ratio", r.ratio},
                    {"representative", r.representative}});
  }
  return {{"clusters", rows}, {"representatives", selection.representatives}};
}

}  // namespace scorecard
