#pragma once

#include <span>
#include <string>
#include <vector>

namespace memdd {

/// Truncation T_k(v) = min{k, max{1/k, v}} and its integrated powers
///
///   S_k^g(v) = g * int_0^v T_k(y)^(g-1) dy,   S_k^0(v) = int_0^v dy / T_k(y),
///   R_k^g(v) = g * int_0^v S_k^(g-1)(y) dy,
///
/// evaluated through their three-branch closed forms (v <= 1/k, 1/k <= v <= k,
/// v >= k). At the breakpoints derivatives use the middle branch.
class CutoffFamily {
public:
  explicit CutoffFamily(double k);

  double k() const { return k_; }

  double truncate(double v) const;
  /// d/dv T_k: 1 on the open middle branch and at the breakpoints, 0 outside.
  double truncate_derivative(double v) const;

  double s_gamma(double gamma, double v) const;
  double s_zero(double v) const;
  double r_gamma(double gamma, double v) const;

  /// g * T_k(v)^(g-1)
  double s_gamma_derivative(double gamma, double v) const;
  /// 1 / T_k(v)
  double s_zero_derivative(double v) const;
  /// g * S_k^(g-1)(v)
  double r_gamma_derivative(double gamma, double v) const;

private:
  double k_;
  double inv_k_;
};

/// The four inequalities of the cutoff lemma.
///   ts: T_k(v)^g <= S_k^g(v) + C                     (g > 0)
///   sr: |S_k^g(v)|^(b/g) <= C R_k^b(v) + C           (b > 1, g >= b/2)
///   vs: v <= C S_k^b(v)^(1/b) + C                     (v >= 0, 0 < b <= 1)
///   vr: v <= delta R_k^b(v) + C(delta)                (v >= 0, b > 1, delta > 0)
enum class CutoffInequality { ts, sr, vs, vr };

std::string to_string(CutoffInequality which);

struct LemmaQuery {
  CutoffInequality which = CutoffInequality::ts;
  double gamma = 2.0;
  double beta = 2.0;
  double delta = 0.1;
};

struct LemmaMargin {
  CutoffInequality which = CutoffInequality::ts;
  double constant = 0.0;         // smallest C over the supplied samples
  double refined_constant = 0.0; // same over the 4x refined samples
  double worst_sample = 0.0;     // v attaining `constant`
  bool finite = false;
  bool stable = false;           // relative change under refinement < 1%
  bool passed() const { return finite && stable; }
};

/// Smallest constant making `query` hold over `samples` (samples with v < 0
/// are skipped for the v >= 0 inequalities). Throws ParameterError when the
/// exponents are outside the inequality's range.
double lemma_constant(const CutoffFamily& family, const LemmaQuery& query, std::span<const double> samples,
                      double* argmax = nullptr);

/// Inserts three equally spaced points between consecutive sorted samples.
std::vector<double> refine_samples(std::span<const double> samples);

LemmaMargin verify_lemma_inequality(const CutoffFamily& family, const LemmaQuery& query,
                                    std::span<const double> samples);

/// Runs all four inequalities with exponents (gamma, beta) for ts/sr/vr and
/// beta_small in (0, 1] for vs.
std::vector<LemmaMargin> verify_lemma_inequalities(const CutoffFamily& family, double gamma, double beta,
                                                   double beta_small, std::span<const double> samples,
                                                   double delta);

} // namespace memdd
