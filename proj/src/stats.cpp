#include "rca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace rca::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw DegenerateSeries("mean of empty series");
    double sum = 0.0;
    for (double v : x) sum += v;
    return sum / static_cast<double>(x.size());
}

double sample_stddev(std::span<const double> x) {
    if (x.size() < 2) throw DegenerateSeries("standard deviation needs at least 2 samples");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double max_abs_zscore(std::span<const double> x) {
    const double sd = sample_stddev(x);
    if (!(sd > 0.0)) throw DegenerateSeries("zero-variance series");
    const double m = mean(x);
    double best = 0.0;
    for (double v : x) best = std::max(best, std::abs(v - m) / sd);
    return best;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DegenerateSeries("pearson: series lengths differ");
    if (x.size() < 2) throw DegenerateSeries("pearson: need at least 2 samples");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateSeries("pearson: zero-variance series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
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
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be positive");
    if (std::isnan(x) || x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    // The continued fraction converges fastest for x < (a + 1) / (a + b + 2).
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("F distribution: degrees of freedom must be positive");
    if (std::isnan(f)) return 1.0;
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

namespace {

std::vector<double> standardized(std::span<const double> x) {
    const double m = mean(x);
    const double sd = sample_stddev(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
    return out;
}

struct Fit {
    double rss = 0.0;
    bool full_rank = true;
};

Fit least_squares(const Eigen::MatrixXd &design, const Eigen::VectorXd &target) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    Fit fit;
    fit.full_rank = qr.rank() == design.cols();
    if (!fit.full_rank) return fit;
    const Eigen::VectorXd beta = qr.solve(target);
    fit.rss = (target - design * beta).squaredNorm();
    return fit;
}

}  // namespace

GrangerResult granger_test(std::span<const double> x, std::span<const double> y, int max_lag,
                           double alpha) {
    if (max_lag < 1) throw std::invalid_argument("granger: max_lag must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("granger: alpha must lie in (0, 1)");
    if (x.size() != y.size()) throw DegenerateSeries("granger: series lengths differ");
    const auto T = static_cast<int>(x.size());
    const int L = max_lag;
    if (T <= 3 * L + 1)
        throw std::invalid_argument("granger: series length " + std::to_string(T) +
                                    " must exceed 3 * max_lag + 1");
    if (!(sample_stddev(x) > 0.0) || !(sample_stddev(y) > 0.0))
        throw DegenerateSeries("granger: zero-variance series");

    // F is invariant to affine rescaling of either series; standardizing keeps
    // the rank threshold meaningful regardless of metric units.
    const auto xs = standardized(x);
    const auto ys = standardized(y);

    const int rows = T - L;
    Eigen::MatrixXd restricted(rows, 1 + L);
    Eigen::MatrixXd unrestricted(rows, 1 + 2 * L);
    Eigen::VectorXd target(rows);
    for (int r = 0; r < rows; ++r) {
        const int t = r + L;
        target(r) = xs[t];
        restricted(r, 0) = 1.0;
        unrestricted(r, 0) = 1.0;
        for (int k = 1; k <= L; ++k) {
            restricted(r, k) = xs[t - k];
            unrestricted(r, k) = xs[t - k];
            unrestricted(r, L + k) = ys[t - k];
        }
    }

    GrangerResult result;
    result.df_num = L;
    result.df_den = rows - (2 * L + 1);

    const auto r_fit = least_squares(restricted, target);
    const auto u_fit = least_squares(unrestricted, target);
    if (!r_fit.full_rank || !u_fit.full_rank) {
        result.note = "singular design matrix; treated as not causal";
        return result;
    }
    result.rss_restricted = r_fit.rss;
    // Nested models: the unrestricted fit can only be better, up to rounding.
    result.rss_unrestricted = std::min(u_fit.rss, r_fit.rss);

    const double gain = result.rss_restricted - result.rss_unrestricted;
    constexpr double kPerfectFit = 1e-24;
    if (result.rss_unrestricted <= kPerfectFit * rows) {
        if (gain <= kPerfectFit * rows) {
            result.note = "both models fit exactly; treated as not causal";
            return result;
        }
        result.f_statistic = std::numeric_limits<double>::infinity();
        result.p_value = 0.0;
        result.causes = true;
        result.note = "unrestricted model fits exactly";
        return result;
    }

    result.f_statistic = (gain / L) / (result.rss_unrestricted / result.df_den);
    result.p_value = f_survival(result.f_statistic, L, result.df_den);
    result.causes = result.p_value <= alpha;
    return result;
}

}  // namespace rca::stats
