#include "wmtext/specfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmtext::specfn {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 200000;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void domain(const std::string& what) { throw std::domain_error(what); }

// log(1 - exp(l)) for l <= 0.
double log1m_exp(double l) {
  if (l == kNegInf) return 0.0;
  if (l > -0.693) return std::log(-std::expm1(l));
  return std::log1p(-std::exp(l));
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// log P(a, x) by its power series; valid for x < a + 1.
double log_gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return std::log(sum) - x + a * std::log(x) - std::lgamma(a);
    }
  }
  throw std::runtime_error("incomplete gamma series did not converge");
}

// log Q(a, x) by Legendre's continued fraction; valid for x >= a + 1.
double log_gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return std::log(h) - x + a * std::log(x) - std::lgamma(a);
    }
  }
  throw std::runtime_error("incomplete gamma continued fraction did not converge");
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0)) domain("incomplete gamma: shape must be positive");
  if (!(x >= 0.0)) domain("incomplete gamma: argument must be nonnegative");
}

}  // namespace

Probability::Probability(double value) : value_(value) {
  if (std::isnan(value) || value < 0.0 || value > 1.0) {
    throw std::domain_error("probability outside [0, 1]: " + std::to_string(value));
  }
}

double Tail::log10() const { return log / std::numbers::ln10; }

Tail Tail::from_log(double log_p) {
  if (std::isnan(log_p)) throw std::domain_error("tail probability is NaN");
  Tail t;
  t.log = std::min(log_p, 0.0);
  // An exact zero stays zero; underflow is reported as the floor.
  t.p = std::isinf(t.log) ? 0.0 : std::clamp(std::exp(t.log), kMinPValue, 1.0);
  return t;
}

std::pair<double, double> log_reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) domain("reg_inc_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) domain("reg_inc_beta: x outside [0, 1]");
  if (x == 0.0) return {kNegInf, 0.0};
  if (x == 1.0) return {0.0, kNegInf};

  const double log_front = a * std::log(x) + b * std::log1p(-x) + std::lgamma(a + b) -
                           std::lgamma(a) - std::lgamma(b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double log_i = std::min(0.0, log_front + std::log(beta_cf(x, a, b)) - std::log(a));
    return {log_i, log1m_exp(log_i)};
  }
  const double log_j = std::min(0.0, log_front + std::log(beta_cf(1.0 - x, b, a)) - std::log(b));
  return {log1m_exp(log_j), log_j};
}

double reg_inc_beta(double x, double a, double b) {
  return std::exp(log_reg_inc_beta(x, a, b).first);
}

double log_gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return kNegInf;
  if (x < a + 1.0) return std::min(0.0, log_gamma_p_series(a, x));
  return log1m_exp(std::min(0.0, log_gamma_q_cf(a, x)));
}

double log_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return log1m_exp(std::min(0.0, log_gamma_p_series(a, x)));
  return std::min(0.0, log_gamma_q_cf(a, x));
}

Tail binom_tail(long long s, long long trials, double gamma) {
  if (trials < 1) domain("binom_pvalue: trials must be >= 1");
  if (s < 0 || s > trials) domain("binom_pvalue: score outside [0, trials]");
  if (!(gamma > 0.0 && gamma < 1.0)) domain("binom_pvalue: gamma outside (0, 1)");
  if (s == 0) return Tail{};
  return Tail::from_log(
      log_reg_inc_beta(gamma, static_cast<double>(s), static_cast<double>(trials - s + 1)).first);
}

Probability binom_pvalue(long long s, long long trials, double gamma) {
  return Probability(binom_tail(s, trials, gamma).p);
}

Tail gamma_tail(double s, long long shape) {
  if (shape < 1) domain("gamma_pvalue: shape must be >= 1");
  if (!(s >= 0.0)) domain("gamma_pvalue: score must be nonnegative");
  return Tail::from_log(log_gamma_q(static_cast<double>(shape), s));
}

Probability gamma_pvalue(double s, long long shape) { return Probability(gamma_tail(s, shape).p); }

Tail lower_gamma_tail(double s, long long shape) {
  if (shape < 1) domain("lower_gamma_pvalue: shape must be >= 1");
  if (!(s <= 0.0)) domain("lower_gamma_pvalue: score must be nonpositive");
  if (std::isinf(s)) return Tail{};
  return Tail::from_log(log_gamma_p(static_cast<double>(shape), -s));
}

Probability lower_gamma_pvalue(double s, long long shape) {
  return Probability(lower_gamma_tail(s, shape).p);
}

Tail z_tail(double z) {
  if (std::isnan(z)) domain("z_pvalue: NaN statistic");
  if (z < 30.0) return Tail::from_log(std::log(0.5 * std::erfc(z / std::numbers::sqrt2)));
  // Mills-ratio expansion once erfc underflows.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return Tail::from_log(-0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
                        std::log(series));
}

Probability z_pvalue(double z) { return Probability(z_tail(z).p); }

Tail chi2_tail(double x, double dof) {
  if (!(dof > 0.0)) domain("chi2: dof must be positive");
  if (!(x >= 0.0)) domain("chi2: statistic must be nonnegative");
  return Tail::from_log(log_gamma_q(dof / 2.0, x / 2.0));
}

Tail fisher_tail(std::span<const double> pvalues) {
  if (pvalues.empty()) domain("fisher_combine: empty list");
  double stat = 0.0;
  for (double p : pvalues) {
    if (!(p > 0.0 && p <= 1.0)) domain("fisher_combine: p-value outside (0, 1]");
    stat -= 2.0 * std::log(p);
  }
  return Tail::from_log(log_gamma_q(static_cast<double>(pvalues.size()), stat / 2.0));
}

Probability fisher_combine(std::span<const double> pvalues) {
  return Probability(fisher_tail(pvalues).p);
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr int kTerms = 100;
  if (lambda < 1.18) {
    // Jacobi-theta form of the same series; the alternating sum converges
    // too slowly for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= kTerms; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= kTerms; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.pvalue = kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d);
  return r;
}

KsResult ks_uniform(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_uniform: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = std::clamp(s[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_sf(std::sqrt(n) * d)};
}

}  // namespace wmtext::specfn
