#pragma once

#include <span>

namespace scorecard::stats {

// Upper tail P(X >= x) of the chi-square distribution with df degrees of
// freedom. Returns 1 for x <= 0.
double chi2_upper_tail(double x, double df);

// Quantile q of chi-square(df), i.e. the x with lower tail probability q.
double chi2_quantile(double q, double df);

// 1 / (1 + exp(-eta)), evaluated without overflow for large |eta|.
double logistic(double eta);

// Pearson correlation of two equally long samples. Returns NaN when either
// sample has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

}  // namespace scorecard::stats
