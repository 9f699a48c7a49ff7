#include "memdd/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memdd/errors.hpp"

namespace memdd {

CutoffFamily::CutoffFamily(double k) : k_(k), inv_k_(1.0 / k) {
  if (!(k >= 2.0) || !std::isfinite(k)) throw ParameterError("cutoff level k must be a finite number >= 2");
}

double CutoffFamily::truncate(double v) const { return std::min(k_, std::max(inv_k_, v)); }

double CutoffFamily::truncate_derivative(double v) const { return (v < inv_k_ || v > k_) ? 0.0 : 1.0; }

double CutoffFamily::s_gamma(double g, double v) const {
  if (!(g > 0.0)) throw ParameterError("S_k^gamma requires gamma > 0");
  if (v <= inv_k_) return g * std::pow(k_, 1.0 - g) * v;
  if (v <= k_) return std::pow(v, g) + (g - 1.0) * std::pow(k_, -g);
  return g * std::pow(k_, g - 1.0) * v - (g - 1.0) * (std::pow(k_, g) - std::pow(k_, -g));
}

double CutoffFamily::s_zero(double v) const {
  if (v <= inv_k_) return k_ * v;
  if (v <= k_) return 1.0 + std::log(k_ * v);
  return 1.0 + 2.0 * std::log(k_) + (v - k_) / k_;
}

double CutoffFamily::r_gamma(double g, double v) const {
  if (!(g > 1.0)) throw ParameterError("R_k^gamma requires gamma > 1");
  const double a = g * (g - 1.0);
  const double b = (g - 1.0) * (g - 2.0);
  if (v <= inv_k_) return 0.5 * a * std::pow(k_, 2.0 - g) * v * v;
  if (v <= k_) return std::pow(v, g) + g * (g - 2.0) * std::pow(k_, 1.0 - g) * v - 0.5 * b * std::pow(k_, -g);
  return 0.5 * a * std::pow(k_, g - 2.0) * v * v - g * (g - 2.0) * (std::pow(k_, g - 1.0) - std::pow(k_, 1.0 - g)) * v +
         0.5 * b * (std::pow(k_, g) - std::pow(k_, -g));
}

double CutoffFamily::s_gamma_derivative(double g, double v) const {
  if (!(g > 0.0)) throw ParameterError("S_k^gamma requires gamma > 0");
  return g * std::pow(truncate(v), g - 1.0);
}

double CutoffFamily::s_zero_derivative(double v) const { return 1.0 / truncate(v); }

double CutoffFamily::r_gamma_derivative(double g, double v) const {
  if (!(g > 1.0)) throw ParameterError("R_k^gamma requires gamma > 1");
  return g * s_gamma(g - 1.0, v);
}

std::string to_string(CutoffInequality which) {
  switch (which) {
  case CutoffInequality::ts: return "TS";
  case CutoffInequality::sr: return "SR";
  case CutoffInequality::vs: return "vS";
  case CutoffInequality::vr: return "vR";
  }
  return "?";
}

namespace {

void check_ranges(const LemmaQuery& q) {
  switch (q.which) {
  case CutoffInequality::ts:
    if (!(q.gamma > 0.0)) throw ParameterError("(TS) requires gamma > 0");
    break;
  case CutoffInequality::sr:
    if (!(q.beta > 1.0) || !(q.gamma >= 0.5 * q.beta))
      throw ParameterError("(SR) requires beta > 1 and gamma >= beta/2");
    break;
  case CutoffInequality::vs:
    if (!(q.beta > 0.0) || q.beta > 1.0) throw ParameterError("(vS) requires 0 < beta <= 1");
    break;
  case CutoffInequality::vr:
    if (!(q.beta > 1.0) || !(q.delta > 0.0)) throw ParameterError("(vR) requires beta > 1 and delta > 0");
    break;
  }
}

} // namespace

double lemma_constant(const CutoffFamily& f, const LemmaQuery& q, std::span<const double> samples, double* argmax) {
  check_ranges(q);
  double best = -std::numeric_limits<double>::infinity();
  double best_v = std::numeric_limits<double>::quiet_NaN();
  for (double v : samples) {
    double c = 0.0;
    switch (q.which) {
    case CutoffInequality::ts:
      c = std::pow(f.truncate(v), q.gamma) - f.s_gamma(q.gamma, v);
      break;
    case CutoffInequality::sr:
      // a <= C b + C  <=>  C >= a / (b + 1), b = R >= 0
      c = std::pow(std::abs(f.s_gamma(q.gamma, v)), q.beta / q.gamma) / (f.r_gamma(q.beta, v) + 1.0);
      break;
    case CutoffInequality::vs:
      if (v < 0.0) continue;
      c = v / (std::pow(f.s_gamma(q.beta, v), 1.0 / q.beta) + 1.0);
      break;
    case CutoffInequality::vr:
      if (v < 0.0) continue;
      c = v - q.delta * f.r_gamma(q.beta, v);
      break;
    }
    if (c > best) {
      best = c;
      best_v = v;
    }
  }
  if (argmax) *argmax = best_v;
  return best;
}

std::vector<double> refine_samples(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(sorted.size() * 4);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.push_back(sorted[i]);
    if (i + 1 == sorted.size()) break;
    const double a = sorted[i];
    const double b = sorted[i + 1];
    for (int j = 1; j < 4; ++j) out.push_back(a + (b - a) * j / 4.0);
  }
  return out;
}

LemmaMargin verify_lemma_inequality(const CutoffFamily& family, const LemmaQuery& query,
                                    std::span<const double> samples) {
  LemmaMargin m;
  m.which = query.which;
  m.constant = lemma_constant(family, query, samples, &m.worst_sample);
  const auto fine = refine_samples(samples);
  m.refined_constant = lemma_constant(family, query, fine);
  m.finite = std::isfinite(m.constant) && std::isfinite(m.refined_constant);
  const double scale = std::max(std::abs(m.constant), std::abs(m.refined_constant));
  m.stable = m.finite && (scale == 0.0 || std::abs(m.refined_constant - m.constant) < 1e-2 * scale);
  return m;
}

std::vector<LemmaMargin> verify_lemma_inequalities(const CutoffFamily& family, double gamma, double beta,
                                                   double beta_small, std::span<const double> samples,
                                                   double delta) {
  return {
      verify_lemma_inequality(family, {CutoffInequality::ts, gamma, beta, delta}, samples),
      verify_lemma_inequality(family, {CutoffInequality::sr, gamma, beta, delta}, samples),
      verify_lemma_inequality(family, {CutoffInequality::vs, gamma, beta_small, delta}, samples),
      verify_lemma_inequality(family, {CutoffInequality::vr, gamma, beta, delta}, samples),
  };
}

} // namespace memdd
