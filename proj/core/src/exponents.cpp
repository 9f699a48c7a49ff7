#include "memdd/exponents.hpp"

#include <algorithm>
#include <cmath>

#include "memdd/errors.hpp"

namespace memdd {

namespace {
void require_above_one(double alpha) {
  if (!(alpha > 1.0)) throw ParameterError("exponent calculus requires alpha > 1");
}
double relative_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }
} // namespace

double alpha_star() { return (11.0 + std::sqrt(37.0)) / 14.0; }

double theta(double a) { return (2.0 * a - 1.0) * (3.0 - a) / (5.0 * a - 3.0); }

double theta_tilde(double a) { return (2.0 * a - 1.0) * (3.0 - 2.0 * a) / (5.0 * a - 3.0); }

double gradient_exponent(double a) { return (9.0 - 5.0 * a) / (5.0 * a - 3.0); }

double beta_dual(double a) { return 2.0 * a / (a + 1.0); }

double moser_fixed_point(double a) { return (21.0 * a * a - 35.0 * a + 12.0) / (6.0 - 4.0 * a); }

ExponentReport exponent_report(double alpha) {
  require_above_one(alpha);
  ExponentReport r;
  r.alpha = alpha;
  r.theta = theta(alpha);
  if (alpha < 1.5) r.theta_tilde = theta_tilde(alpha);
  r.gradient_exponent = gradient_exponent(alpha);
  r.beta_dual = beta_dual(alpha);
  // Sign of 5a - 6 with a single rounding, so the 6/5 boundary is exact.
  r.passes_6_5 = std::fma(5.0, alpha, -6.0) > 0.0;
  r.passes_alpha_star = alpha > alpha_star();
  return r;
}

MoserSequence moser_sequence(double alpha, int m_max) {
  if (!(alpha > 1.2 && alpha < 1.5)) throw ParameterError("Moser recursion requires 6/5 < alpha < 3/2");
  if (m_max < 0) throw ParameterError("m_max must be nonnegative");
  MoserSequence s;
  s.alpha = alpha;
  const double num = 21.0 * alpha * alpha - 35.0 * alpha + 12.0;
  const double step = num / (9.0 - 6.0 * alpha);
  s.fixed_point = num / (6.0 - 4.0 * alpha);
  double g = alpha - 1.0;
  double pow3 = 1.0;
  s.monotone = true;
  for (int m = 0; m <= m_max; ++m) {
    if (m > 0) {
      const double next = step + g / 3.0;
      if (!(next > g)) s.monotone = false;
      g = next;
      pow3 *= 3.0;
    }
    s.recursion.push_back(g);
    s.closed_form.push_back(s.fixed_point * (1.0 - 1.0 / pow3) + (alpha - 1.0) / pow3);
    s.max_relative_gap = std::max(s.max_relative_gap, relative_gap(s.recursion.back(), s.closed_form.back()));
  }
  s.limit_plus_one = s.fixed_point + 1.0;
  s.reaches_three_halves = s.limit_plus_one > 1.5;
  return s;
}

AlikakosSequence alikakos_sequence(double gamma0, double alpha, int k_max) {
  require_above_one(alpha);
  if (!(gamma0 > 0.0)) throw ParameterError("Alikakos recursion requires gamma0 > 0");
  if (!(gamma0 + 1.0 > alpha)) throw ParameterError("Alikakos recursion requires gamma0 + 1 > alpha");
  if (k_max < 0) throw ParameterError("k_max must be nonnegative");
  AlikakosSequence s;
  s.alpha = alpha;
  s.gamma0 = gamma0;
  const double base = gamma0 + 1.0 - alpha;
  double g = gamma0;
  double pow2 = 1.0;
  s.bounds_hold = true;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) {
      g = 2.0 * g + 1.0 - alpha; // inverse of gamma_{k-1} = (gamma_k - 1 + alpha)/2
      pow2 *= 2.0;
    }
    const double closed = pow2 * base + alpha - 1.0;
    s.recursion.push_back(g);
    s.closed_form.push_back(closed);
    s.max_relative_gap = std::max(s.max_relative_gap, relative_gap(g, closed));
    s.ratio_power.push_back(pow2 / g);
    s.ratio_exponent.push_back((2.0 * pow2 - (k + 2.0)) / g);
    if (!(s.ratio_power.back() <= 1.0 / base) || !(s.ratio_exponent.back() <= 2.0 / base)) s.bounds_hold = false;
  }
  return s;
}

} // namespace memdd
