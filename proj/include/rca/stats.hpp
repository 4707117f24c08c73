#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace rca::stats {

/// Raised when a series has zero variance or mismatched length.
class DegenerateSeries : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double mean(std::span<const double> x);

/// Sample standard deviation (n - 1 denominator).
double sample_stddev(std::span<const double> x);

/// Largest |x_i - mean| / sample_stddev. Throws DegenerateSeries on zero variance.
double max_abs_zscore(std::span<const double> x);

/// Product-moment correlation. Throws DegenerateSeries on zero variance or length mismatch.
double pearson(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_survival(double f, double d1, double d2);

struct GrangerResult {
    bool causes = false;
    double p_value = 1.0;
    double f_statistic = 0.0;
    double rss_restricted = 0.0;
    double rss_unrestricted = 0.0;
    int df_num = 0;
    int df_den = 0;
    std::string note;  // set when the design matrix is singular
};

/// Bivariate Granger test of "y Granger-causes x".
///
/// Restricted model: x_t ~ 1 + x_{t-1..t-L}. Unrestricted adds y_{t-1..t-L}.
/// Both are fit on the T - L rows where every lag is available, so the
/// unrestricted residual degrees of freedom are (T - L) - (2L + 1).
///
/// Requires len(x) == len(y) == T with T > 3L + 1 and nonzero variance in
/// both series (DegenerateSeries otherwise). A rank-deficient design is not an
/// error: the result is "not causal" with p = 1 and `note` set.
GrangerResult granger_test(std::span<const double> x, std::span<const double> y, int max_lag,
                           double alpha);

}  // namespace rca::stats
