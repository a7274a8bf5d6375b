#include "alab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alab/errors.hpp"

namespace alab {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 300;
    constexpr double kEpsilon = 3e-16;
    constexpr double kTiny = 1e-300;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEpsilon) return h;
    }
    return h;  // converged to working precision for all df/t in range
}

double sample_sd(std::span<const double> values, double mean) {
    double ss = 0.0;
    for (double v : values) {
        double d = v - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw Error(ErrorKind::Usage, "incomplete beta requires a > 0 and b > 0");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (df <= 0.0) {
        throw Error(ErrorKind::Usage, "student_t_cdf requires df > 0");
    }
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    double x = df / (df + t * t);
    double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) {
        throw Error(ErrorKind::Usage, "student_t_two_sided_p requires df > 0");
    }
    if (t == 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    double x = df / (df + t * t);
    return std::clamp(regularized_incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorKind::Usage, "student_t_quantile requires p in (0, 1)");
    }
    if (p == 0.5) return 0.0;
    // Exploit symmetry and bisect on the positive half line.
    bool upper = p > 0.5;
    double target = upper ? p : 1.0 - p;
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, df) < target) {
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    double t = 0.5 * (lo + hi);
    return upper ? t : -t;
}

PairedTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::Usage, "paired_t_test requires equal-length samples");
    }
    std::size_t n = x.size();
    if (n < 2) {
        throw Error(ErrorKind::Usage, "paired_t_test requires n >= 2");
    }
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = x[i] - y[i];

    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(n);
    double sd = sample_sd(diffs, mean);
    if (sd == 0.0) {
        throw Error(ErrorKind::ZeroVariance, "paired_t_test: differences have zero variance");
    }

    PairedTestResult result;
    result.n = n;
    result.df = n - 1;
    result.mean_diff = mean;
    double se = sd / std::sqrt(static_cast<double>(n));
    result.t_stat = mean / se;
    result.p_two_sided = student_t_two_sided_p(result.t_stat, static_cast<double>(result.df));
    double tq = student_t_quantile(0.975, static_cast<double>(result.df));
    result.ci_low = mean - tq * se;
    result.ci_high = mean + tq * se;
    return result;
}

RegressionResult ols_standardized(const std::vector<std::vector<double>>& predictor_columns,
                                  std::span<const std::string> names, std::span<const double> y,
                                  std::string model_label) {
    const std::size_t k = predictor_columns.size();
    const std::size_t n = y.size();
    if (k < 1) {
        throw Error(ErrorKind::Usage, "ols_standardized requires at least one predictor");
    }
    if (names.size() != k) {
        throw Error(ErrorKind::Usage, "ols_standardized: one name per predictor column");
    }
    if (n <= k + 1) {
        throw Error(ErrorKind::Usage, "ols_standardized requires n > k + 1, got n = " + std::to_string(n) +
                                          ", k = " + std::to_string(k));
    }
    for (const auto& col : predictor_columns) {
        if (col.size() != n) {
            throw Error(ErrorKind::Usage, "ols_standardized: ragged predictor columns");
        }
    }

    auto zscore = [&](std::span<const double> col, const std::string& what) {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(n);
        double sd = sample_sd(col, mean);
        if (sd == 0.0) {
            throw Error(ErrorKind::ZeroVariance, "ols_standardized: constant column '" + what + "'");
        }
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = (col[i] - mean) / sd;
        return z;
    };

    std::vector<std::vector<double>> xz(k);
    for (std::size_t j = 0; j < k; ++j) xz[j] = zscore(predictor_columns[j], names[j]);
    std::vector<double> yz = zscore(y, "outcome");

    // Normal equations G beta = r with G = X'X, r = X'y.
    std::vector<std::vector<double>> g(k, std::vector<double>(k, 0.0));
    std::vector<double> r(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += xz[a][i] * xz[b][i];
            g[a][b] = s;
            g[b][a] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xz[a][i] * yz[i];
        r[a] = s;
    }

    // Invert G by Gauss-Jordan with partial pivoting; a pivot below the
    // rank tolerance names the column that collapsed.
    constexpr double kRankTolerance = 1e-10;
    double scale = 0.0;
    for (std::size_t a = 0; a < k; ++a) scale = std::max(scale, std::abs(g[a][a]));
    std::vector<std::vector<double>> inv(k, std::vector<double>(k, 0.0));
    for (std::size_t a = 0; a < k; ++a) inv[a][a] = 1.0;
    std::vector<std::size_t> col_of(k);
    for (std::size_t a = 0; a < k; ++a) col_of[a] = a;

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t rr = col + 1; rr < k; ++rr) {
            if (std::abs(g[rr][col]) > std::abs(g[pivot][col])) pivot = rr;
        }
        if (std::abs(g[pivot][col]) <= kRankTolerance * std::max(scale, 1.0)) {
            throw Error(ErrorKind::RankDeficient,
                        "ols_standardized: rank-deficient design, predictor '" + names[col_of[col]] +
                            "' is collinear with the others");
        }
        if (pivot != col) {
            std::swap(g[pivot], g[col]);
            std::swap(inv[pivot], inv[col]);
            std::swap(col_of[pivot], col_of[col]);
        }
        double p = g[col][col];
        for (std::size_t j = 0; j < k; ++j) {
            g[col][j] /= p;
            inv[col][j] /= p;
        }
        for (std::size_t rr = 0; rr < k; ++rr) {
            if (rr == col) continue;
            double f = g[rr][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
                g[rr][j] -= f * g[col][j];
                inv[rr][j] -= f * inv[col][j];
            }
        }
    }

    std::vector<double> beta(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) beta[a] += inv[a][b] * r[b];
    }

    double rss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fitted = 0.0;
        for (std::size_t j = 0; j < k; ++j) fitted += beta[j] * xz[j][i];
        double resid = yz[i] - fitted;
        rss += resid * resid;
        tss += yz[i] * yz[i];
    }

    const double df = static_cast<double>(n - k - 1);
    const double sigma_sq = rss / df;

    RegressionResult result;
    result.n = n;
    result.model_label = std::move(model_label);
    result.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 0.0;
    result.coefficients.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        Coefficient coef;
        coef.name = names[j];
        coef.beta = beta[j];
        double se = std::sqrt(sigma_sq * inv[j][j]);
        coef.t_stat = se > 0.0 ? beta[j] / se : std::numeric_limits<double>::infinity();
        coef.p_two_sided = student_t_two_sided_p(coef.t_stat, df);
        result.coefficients.push_back(std::move(coef));
    }
    return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::Usage, "pearson requires equal-length samples");
    }
    std::size_t n = x.size();
    if (n < 2) {
        throw Error(ErrorKind::Usage, "pearson requires n >= 2");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorKind::ZeroVariance, "pearson: constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MeanCi weighted_mean_ci(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw Error(ErrorKind::Usage, "weighted_mean_ci requires matching non-empty inputs");
    }
    double total = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] <= 0.0) {
            throw Error(ErrorKind::Usage, "weighted_mean_ci requires positive weights");
        }
        total += weights[i];
        sum += weights[i] * values[i];
    }
    MeanCi out;
    out.mean = sum / total;
    out.n = static_cast<std::uint64_t>(std::llround(total));
    if (total > 1.0) {
        double ss = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double d = values[i] - out.mean;
            ss += weights[i] * d * d;
        }
        double var = ss / (total - 1.0);
        double se = std::sqrt(var / total);
        out.ci_low = out.mean - 1.96 * se;
        out.ci_high = out.mean + 1.96 * se;
    } else {
        out.ci_low = out.ci_high = out.mean;
    }
    return out;
}

}  // namespace alab
