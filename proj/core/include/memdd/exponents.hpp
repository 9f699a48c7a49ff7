#pragma once

#include <optional>
#include <vector>

namespace memdd {

/// Critical exponent (11 + sqrt 37) / 14, the larger root of 7a^2 - 11a + 3.
double alpha_star();

/// Gagliardo-Nirenberg interpolation exponent (2a-1)(3-a)/(5a-3).
double theta(double alpha);
/// (2a-1)(3-2a)/(5a-3); meaningful for a < 3/2.
double theta_tilde(double alpha);
/// theta/(2a-1) + theta_tilde/(a-1/2) = (9-5a)/(5a-3).
double gradient_exponent(double alpha);
/// Dual flux exponent 2a/(a+1).
double beta_dual(double alpha);
/// Fixed point (21a^2 - 35a + 12)/(6 - 4a) of the L^q bootstrap recursion.
double moser_fixed_point(double alpha);

struct ExponentReport {
  double alpha = 0.0;
  double theta = 0.0;
  std::optional<double> theta_tilde; // only for alpha < 3/2
  double gradient_exponent = 0.0;
  double beta_dual = 0.0;
  bool passes_6_5 = false;       // gradient exponent < 1, i.e. alpha > 6/5
  bool passes_alpha_star = false; // alpha > alpha_star()
};

ExponentReport exponent_report(double alpha);

struct MoserSequence {
  double alpha = 0.0;
  std::vector<double> recursion;   // gamma_0 .. gamma_M from the recursion
  std::vector<double> closed_form; // same indices from the explicit solution
  double max_relative_gap = 0.0;
  double fixed_point = 0.0;
  double limit_plus_one = 0.0;
  bool monotone = false;
  bool reaches_three_halves = false; // limit + 1 > 3/2
};

/// gamma_{m+1} = (21a^2 - 35a + 12)/(9 - 6a) + gamma_m / 3, gamma_0 = a - 1,
/// for a in (6/5, 3/2).
MoserSequence moser_sequence(double alpha, int m_max);

struct AlikakosSequence {
  double alpha = 0.0;
  double gamma0 = 0.0;
  std::vector<double> recursion;   // gamma_k = 2 gamma_{k-1} + 1 - alpha
  std::vector<double> closed_form; // 2^k (gamma_0 + 1 - alpha) + alpha - 1
  double max_relative_gap = 0.0;
  std::vector<double> ratio_power;   // 2^k / gamma_k
  std::vector<double> ratio_exponent; // (2^(k+1) - (k+2)) / gamma_k
  bool bounds_hold = false; // ratios below 1/(g0+1-a) and 2/(g0+1-a)
};

AlikakosSequence alikakos_sequence(double gamma0, double alpha, int k_max);

} // namespace memdd
