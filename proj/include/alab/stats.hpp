#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace alab {

// Self-contained statistical kernel. p-values go through the regularized
// incomplete beta function (continued-fraction evaluation), so there is no
// external statistics dependency; accuracy is pinned by a frozen
// high-precision Student-t table in the test suite.

double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
double student_t_two_sided_p(double t, double df);

// Inverse CDF by bisection; good to ~1e-12 in t.
double student_t_quantile(double p, double df);

struct PairedTestResult {
    double mean_diff = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  // 95% CI for the mean difference
    double t_stat = 0.0;
    std::uint64_t df = 0;
    double p_two_sided = 1.0;
    std::size_t n = 0;
};

// Paired t on d = x - y. Throws on n < 2 or zero-variance differences.
PairedTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

struct Coefficient {
    std::string name;
    double beta = 0.0;  // standardized
    double t_stat = 0.0;
    double p_two_sided = 1.0;
};

struct RegressionResult {
    std::vector<Coefficient> coefficients;
    double r_squared = 0.0;
    std::size_t n = 0;
    std::string model_label;
};

// OLS with every column and the outcome z-scored first, solved by normal
// equations with partial pivoting (rank tolerance 1e-10). Coefficient
// t-tests use df = n - k - 1, accounting for the implicitly fitted
// intercept (zero after standardization).
RegressionResult ols_standardized(const std::vector<std::vector<double>>& predictor_columns,
                                  std::span<const std::string> names, std::span<const double> y,
                                  std::string model_label = {});

// Sample Pearson correlation; throws if either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct MeanCi {
    double mean = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  // normal-approximation 95% CI
    std::uint64_t n = 0;                 // total weight
};

// Weighted mean with a normal-approximation CI; a summary statistic, not an
// inferential test.
MeanCi weighted_mean_ci(std::span<const double> values, std::span<const double> weights);

}  // namespace alab
