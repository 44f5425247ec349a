#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "scorecard/error.hpp"
#include "scorecard/rng.hpp"
#include "scorecard/screening.hpp"
#include "scorecard/synthgen.hpp"

using namespace scorecard;
using testing::make_table;

namespace {

// Rows with the given (x, y) cell counts for a binary x.
DataTable binary_counts(double n00, double n01, double n10, double n11) {
  std::vector<double> x, y;
  auto add = [&](double xv, double yv, double n) {
    for (int i = 0; i < static_cast<int>(n); ++i) {
      x.push_back(xv);
      y.push_back(yv);
    }
  };
  add(0, 0, n00);
  add(0, 1, n01);
  add(1, 0, n10);
  add(1, 1, n11);
  return make_table(y, {{"x", ColumnKind::kBinary, {}}}, {x});
}

double pearson_chi2(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double obs[4] = {a, b, c, d};
  const double row[2] = {a + b, c + d}, col[2] = {a + c, b + d};
  double s = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double e = row[i] * col[j] / n;
      s += (obs[2 * i + j] - e) * (obs[2 * i + j] - e) / e;
    }
  return s;
}

// Categorical "c" with `per_level` rows per level and the given positive counts.
DataTable categorical_counts(const std::vector<int>& positives, int per_level) {
  std::vector<double> x, y;
  std::vector<std::string> names;
  for (std::size_t l = 0; l < positives.size(); ++l) {
    names.push_back(std::string(1, static_cast<char>('A' + l)));
    for (int i = 0; i < per_level; ++i) {
      x.push_back(static_cast<double>(l));
      y.push_back(i < positives[l] ? 1.0 : 0.0);
    }
  }
  return make_table(y, {{"c", ColumnKind::kCategorical, names}}, {x});
}

DataTable numeric_groups(const std::vector<double>& g0, const std::vector<double>& g1) {
  std::vector<double> x, y;
  for (double v : g0) {
    x.push_back(v);
    y.push_back(0);
  }
  for (double v : g1) {
    x.push_back(v);
    y.push_back(1);
  }
  return make_table(y, {{"x", ColumnKind::kContinuous, {}}}, {x});
}

}  // namespace

TEST_CASE("chi-square on 2x2 tables") {
  auto r = chi_square_binary(binary_counts(15, 15, 15, 15), "x", "y");
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));

  r = chi_square_binary(binary_counts(10, 20, 20, 10), "x", "y");
  CHECK(r.statistic == doctest::Approx(6.6667).epsilon(1e-4));
  CHECK(r.df == 1);

  CHECK_THROWS_AS(chi_square_binary(binary_counts(30, 30, 0, 0), "x", "y"), Error);
  CHECK_THROWS_AS(chi_square_2x2({{{0, 0}, {3, 4}}}), Error);

  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const double a = 1 + rng.below(40), b = 1 + rng.below(40), c = 1 + rng.below(40), d = 1 + rng.below(40);
    const double expect = pearson_chi2(a, b, c, d);
    CHECK(chi_square_binary(binary_counts(a, b, c, d), "x", "y").statistic == doctest::Approx(expect).epsilon(1e-12));
    // swap variable labels, then target labels
    CHECK(chi_square_binary(binary_counts(c, d, a, b), "x", "y").statistic == doctest::Approx(expect).epsilon(1e-12));
    CHECK(chi_square_binary(binary_counts(b, a, d, c), "x", "y").statistic == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pooled t-test") {
  auto r = t_test_multivalued(numeric_groups({1, 2, 3}, {1, 2, 3}), "x", "y");
  CHECK(r.t_statistic == 0.0);

  r = t_test_multivalued(numeric_groups({1, 2, 3}, {4, 5, 6}), "x", "y");
  CHECK(r.t_statistic == doctest::Approx(3.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(r.t_statistic == doctest::Approx(3.674).epsilon(1e-3));
  CHECK(r.df == 4);

  r = t_test_multivalued(numeric_groups({4, 5, 6}, {1, 2, 3}), "x", "y");
  CHECK(r.t_statistic < 0);
  CHECK(r.abs_rank_key == doctest::Approx(3.674).epsilon(1e-3));

  CHECK_THROWS_AS(t_test_multivalued(numeric_groups({1, 2, 3}, {4}), "x", "y"), Error);
  CHECK_THROWS_AS(t_test_multivalued(numeric_groups({1, 1, 1}, {2, 2}), "x", "y"), Error);
}

TEST_CASE("weight of evidence and information value") {
  SUBCASE("target-independent variable has zero IV") {
    const auto r = woe_iv(categorical_counts({10, 10, 10}, 40), "c", "y");
    CHECK(r.total_iv == doctest::Approx(0.0).epsilon(1e-15));
    for (const auto& l : r.levels) CHECK(l.woe == doctest::Approx(0.0));
  }
  SUBCASE("formula without smoothing") {
    // level A: 20 of 100 positives, 10 of 100 negatives
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back(i < 20 ? 0 : 1);
      y.push_back(1);
    }
    for (int i = 0; i < 100; ++i) {
      x.push_back(i < 10 ? 0 : 1);
      y.push_back(0);
    }
    const auto t = make_table(y, {{"c", ColumnKind::kCategorical, {"A", "B"}}}, {x});
    const auto r = woe_iv(t, "c", "y", 0.0);
    CHECK(r.levels[0].iv_contribution == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-12));
    CHECK(r.levels[0].iv_contribution == doctest::Approx(0.0693).epsilon(1e-3));
    const double b = (0.8 - 0.9) * std::log(0.8 / 0.9);
    CHECK(r.total_iv == doctest::Approx(0.1 * std::log(2.0) + b).epsilon(1e-12));
  }
  SUBCASE("smoothed shares sum to one and relabeling leaves IV unchanged") {
    Rng rng(5);
    std::vector<double> x, xr, y;
    const double perm[4] = {2, 0, 3, 1};
    for (int i = 0; i < 500; ++i) {
      const auto l = static_cast<double>(rng.below(4));
      x.push_back(l);
      xr.push_back(perm[static_cast<int>(l)]);
      y.push_back(rng.bernoulli(0.2 + 0.1 * l));
    }
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const auto r = woe_iv(make_table(y, {{"c", ColumnKind::kCategorical, names}}, {x}), "c", "y");
    const auto rr = woe_iv(make_table(y, {{"c", ColumnKind::kCategorical, names}}, {xr}), "c", "y");
    double s1 = 0, s0 = 0, total = 0;
    for (const auto& l : r.levels) {
      s1 += l.signal_share;
      s0 += l.background_share;
      total += l.iv_contribution;
      CHECK(l.iv_contribution >= 0.0);
    }
    CHECK(s1 == doctest::Approx(1.0));
    CHECK(s0 == doctest::Approx(1.0));
    CHECK(r.total_iv == doctest::Approx(total));
    CHECK(rr.total_iv == doctest::Approx(r.total_iv).epsilon(1e-12));
  }
  SUBCASE("single observed level gives zero") {
    const auto t = make_table({1, 0, 1}, {{"c", ColumnKind::kCategorical, {"A", "B"}}}, {{0, 0, 0}});
    CHECK(woe_iv(t, "c", "y").total_iv == 0.0);
  }
  SUBCASE("likelihood levels use seven bins") {
    CHECK(likelihood_bin(1) == 0);
    CHECK(likelihood_bin(15) == 0);
    CHECK(likelihood_bin(16) == 1);
    CHECK(likelihood_bin(99) == 6);
    std::vector<double> x, y;
    for (int v = 1; v <= 99; ++v) {
      x.push_back(v);
      y.push_back(v % 2);
    }
    const auto r = woe_iv(make_table(y, {{"l", ColumnKind::kLikelihood, {}}}, {x}), "l", "y");
    CHECK(r.levels.size() == 7);
  }
}

TEST_CASE("occupancy filter keeps the boundary") {
  auto col = [](int ones, int n) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < ones; ++i) v[static_cast<std::size_t>(i)] = 1.0;
    return v;
  };
  std::vector<double> y(100, 0.0);
  y[0] = 1;
  const auto t = make_table(y,
                            {{"five", ColumnKind::kBinary, {}},
                             {"ten", ColumnKind::kBinary, {}},
                             {"all", ColumnKind::kBinary, {}},
                             {"cont", ColumnKind::kContinuous, {}}},
                            {col(5, 100), col(10, 100), col(100, 100), col(3, 100)});
  const std::vector<std::string> vars{"five", "ten", "all"};
  CHECK(occupancy_filter(t, vars, 0.10) == std::vector<std::string>{"ten", "all"});
  const std::vector<std::string> bad{"cont"};
  CHECK_THROWS_AS(occupancy_filter(t, bad, 0.10), Error);
}

TEST_CASE("merge_levels") {
  SUBCASE("identical rates merge") {
    const auto m = merge_levels(categorical_counts({20, 20}, 100), "c", "y");
    CHECK(m.merged_count() == 1);
  }
  SUBCASE("0.10 / 0.11 / 0.50 at n = 1000") {
    const auto t = categorical_counts({100, 110, 500}, 1000);
    // oracle: the close pair is indistinguishable, the far level is not
    CHECK(pearson_chi2(900, 100, 890, 110) < 3.841);
    CHECK(pearson_chi2(1790, 210, 500, 500) > 3.841);
    const auto m = merge_levels(t, "c", "y", 0.05);
    CHECK(m.merged_count() == 2);
    CHECK(m.merged_id[0] == m.merged_id[1]);
    CHECK(m.merged_id[2] != m.merged_id[0]);
    CHECK(m.merged_levels[static_cast<std::size_t>(m.merged_id[0])] == "A+B");
    const auto merged = apply_level_mapping(t, m);
    CHECK(merged.spec("c").levels.size() == 2);
    CHECK(merged.values("c")[1500] == merged.values("c")[10]);
  }
  SUBCASE("alpha zero is a no-op and merging never adds levels") {
    Rng rng(9);
    for (int k = 0; k < 10; ++k) {
      std::vector<int> pos;
      for (int l = 0; l < 5; ++l) pos.push_back(static_cast<int>(rng.below(60)));
      const auto t = categorical_counts(pos, 60);
      CHECK(merge_levels(t, "c", "y", 0.0).is_identity());
      CHECK(merge_levels(t, "c", "y", 0.05).merged_count() <= 5);
    }
  }
  SUBCASE("constant target is an error") {
    CHECK_THROWS_AS(merge_levels(categorical_counts({10, 10}, 10), "c", "y"), Error);
  }
}

TEST_CASE("proportion curve") {
  // level A: 15 of 100 positives, 10 of 100 negatives; level C only positive
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(i < 15 ? 0 : (i < 20 ? 2 : 1));
    y.push_back(1);
  }
  for (int i = 0; i < 100; ++i) {
    x.push_back(i < 10 ? 0 : 1);
    y.push_back(0);
  }
  const auto t = make_table(y, {{"c", ColumnKind::kCategorical, {"A", "B", "C"}}}, {x});
  const auto curve = proportion_curve(t, "c", "y");
  REQUIRE(curve.size() == 3);
  CHECK(*curve[0].proportion == doctest::Approx(150.0));
  CHECK(!curve[2].proportion.has_value());

  const auto eq = categorical_counts({10, 10}, 20);
  CHECK(*proportion_curve(eq, "c", "y")[0].proportion == doctest::Approx(100.0));

  std::vector<std::size_t> twice;
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < t.n_rows(); ++i) twice.push_back(i);
  const auto dup = proportion_curve(t.select_rows(twice), "c", "y");
  for (std::size_t l = 0; l < curve.size(); ++l) CHECK(dup[l].proportion == curve[l].proportion);

  const auto dir = testing::scratch("proportion");
  write_proportion_curve(curve, dir / "p.csv");
  const auto text = testing::slurp(dir / "p.csv");
  CHECK(text.rfind("level,count_signal,count_background,proportion,defined\n", 0) == 0);
  CHECK(text.find("C,5,0,,0\n") != std::string::npos);
}

TEST_CASE("stage plan validation") {
  StagePlan p;
  CHECK_NOTHROW(p.validate());
  p.retain_after_t = p.retain_after_chi2;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = StagePlan{};
  p.iv_min = 0.6;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("run_screening nests stages") {
  SyntheticSpec spec;
  spec.n_signal = 600;
  spec.n_background = 1000;
  spec.n_informative = 6;
  spec.n_noise = 54;
  spec.kind_mix = {0.5, 0.2, 0.15, 0.15};
  spec.seed = 4;
  const auto s = generate(spec);
  StagePlan plan;
  plan.retain_after_chi2 = 40;
  plan.retain_after_t = 28;
  plan.retain_after_iv = 20;
  plan.final_retain = 8;
  const auto rep = run_screening(s.table, plan);
  REQUIRE(rep.stages.size() == 4);
  auto prev = rep.input;
  std::sort(prev.begin(), prev.end());
  for (const auto& st : rep.stages) {
    auto cur = st.retained;
    std::sort(cur.begin(), cur.end());
    CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
    CHECK(cur.size() <= st.requested);
    CHECK(!cur.empty());
    prev = cur;
  }

  plan.retain_after_chi2 = 61;
  plan.retain_after_t = 50;
  CHECK_THROWS_AS(run_screening(s.table, plan), ConfigError);
}
