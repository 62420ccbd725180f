#pragma once

// Special functions and distribution tails used by every detection test.
//
// Each tail is available both as a probability clamped to [kMinPValue, 1]
// and as a natural logarithm computed without exponentiating, so that very
// strong detections (p far below 1e-300) still carry a meaningful magnitude.

#include <span>
#include <utility>

namespace wmtext::specfn {

/// Floor applied to every reported probability.
inline constexpr double kMinPValue = 1e-300;

/// Probability in [0, 1]; construction rejects NaN and out-of-range values.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  [[nodiscard]] constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }  // NOLINT(google-explicit-constructor)

 private:
  double value_ = 1.0;
};

/// A tail probability together with its natural log. `log` is exact
/// (unclamped); `p` is exp(log) clamped to [kMinPValue, 1].
struct Tail {
  double p = 1.0;
  double log = 0.0;

  [[nodiscard]] double log10() const;
  static Tail from_log(double log_p);
};

/// Regularized incomplete beta I_x(a, b). Throws std::domain_error outside
/// 0 <= x <= 1, a > 0, b > 0.
double reg_inc_beta(double x, double a, double b);

/// log I_x(a, b) and log (1 - I_x(a, b)), computed from whichever side the
/// continued fraction converges on.
std::pair<double, double> log_reg_inc_beta(double x, double a, double b);

/// Regularized lower / upper incomplete gamma P(a, x), Q(a, x), in log form.
double log_gamma_p(double a, double x);
double log_gamma_q(double a, double x);

/// P(S >= s) for S ~ Binomial(trials, gamma); s = 0 gives 1.
Tail binom_tail(long long s, long long trials, double gamma);
Probability binom_pvalue(long long s, long long trials, double gamma);

/// P(S >= s) for S ~ Gamma(shape, 1): Q(shape, s).
Tail gamma_tail(double s, long long shape);
Probability gamma_pvalue(double s, long long shape);

/// P(sum of `shape` log-uniforms >= s) for s <= 0: P(shape, -s).
Tail lower_gamma_tail(double s, long long shape);
Probability lower_gamma_pvalue(double s, long long shape);

/// 1 - Phi(z).
Tail z_tail(double z);
Probability z_pvalue(double z);

/// Chi-squared upper tail with `dof` degrees of freedom.
Tail chi2_tail(double x, double dof);

/// Fisher's method: upper tail of chi^2_{2n} at -2 sum log p_i.
Tail fisher_tail(std::span<const double> pvalues);
Probability fisher_combine(std::span<const double> pvalues);

/// Asymptotic Kolmogorov survival function Q_KS(lambda).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-value at effective
/// size n_a n_b / (n_a + n_b). Throws std::invalid_argument on empty input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample K-S test of `sample` against Uniform(0, 1).
KsResult ks_uniform(std::span<const double> sample);

}  // namespace wmtext::specfn
