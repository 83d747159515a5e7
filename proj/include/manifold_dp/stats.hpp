#pragma once

#include <functional>
#include <span>
#include <vector>

namespace manifold_dp::stats {

double normal_cdf(double x);
double normal_quantile(double p);
double chi_square_cdf(int df, double x);
double chi_square_quantile(int df, double p);

// Two-sided one-sample Kolmogorov-Smirnov statistic sup|F_n - F|. Sorts a
// copy of the sample.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);
// Two-sample statistic sup|F_n - G_m|.
double ks_statistic_two_sample(std::span<const double> a,
                               std::span<const double> b);
// Asymptotic p-value of the Kolmogorov distribution with the usual
// small-sample correction (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D.
double ks_pvalue(double statistic, double effective_n);

double mean(std::span<const double> x);
double median(std::vector<double> x);
// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace manifold_dp::stats
