#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "sketchplay/error.hpp"
#include "sketchplay/rng.hpp"
#include "sketchplay/stroke5.hpp"

namespace sketchplay {

/// Distribution over the next row: a mixture of M bivariate Gaussians for
/// the offset and three pen logits. Raw head outputs are laid out as
/// [pi logits | mu_x | mu_y | log sigma_x | log sigma_y | atanh-space rho | pen]
/// with M entries per block and 3 pen entries, i.e. 6M + 3 values.
///
/// Always held in double, whatever precision the network runs in.
struct MixtureParams {
  std::vector<double> log_pi;
  std::vector<double> pi;
  std::vector<double> mu_x, mu_y;
  std::vector<double> log_sigma_x, log_sigma_y;
  std::vector<double> sigma_x, sigma_y;
  std::vector<double> rho;
  std::array<double, 3> pen_logits{};

  std::size_t size() const { return pi.size(); }
};

inline std::size_t mixture_output_size(std::size_t m) { return 6 * m + 3; }

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// tanh rounds to exactly +-1 for large arguments; keep |rho| < 1.
inline double bounded_tanh(double r) {
  double rho = std::tanh(r);
  if (rho >= 1.0) rho = std::nextafter(1.0, 0.0);
  if (rho <= -1.0) rho = std::nextafter(-1.0, 0.0);
  return rho;
}

}  // namespace detail

/// Applies the softmax / identity / exp / tanh links to a raw head output.
template <typename T>
MixtureParams mixture_from_raw(std::span<const T> raw, std::size_t m) {
  if (raw.size() != mixture_output_size(m))
    throw Error(ErrorCode::InvalidInput, "raw output size does not match 6M + 3");
  MixtureParams mix;
  mix.log_pi.resize(m);
  for (std::size_t i = 0; i < m; ++i) mix.log_pi[i] = static_cast<double>(raw[i]);
  const double lse = detail::log_sum_exp(mix.log_pi);
  mix.pi.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    mix.log_pi[i] -= lse;
    mix.pi[i] = std::exp(mix.log_pi[i]);
  }
  auto block = [&](std::size_t b, std::vector<double>& out) {
    out.resize(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<double>(raw[b * m + i]);
  };
  block(1, mix.mu_x);
  block(2, mix.mu_y);
  block(3, mix.log_sigma_x);
  block(4, mix.log_sigma_y);
  block(5, mix.rho);
  mix.sigma_x.resize(m);
  mix.sigma_y.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    mix.sigma_x[i] = std::exp(mix.log_sigma_x[i]);
    mix.sigma_y[i] = std::exp(mix.log_sigma_y[i]);
    mix.rho[i] = detail::bounded_tanh(mix.rho[i]);
  }
  for (std::size_t k = 0; k < 3; ++k) mix.pen_logits[k] = static_cast<double>(raw[6 * m + k]);
  return mix;
}

inline void validate_mixture(const MixtureParams& mix) {
  const std::size_t m = mix.size();
  if (m == 0) throw Error(ErrorCode::InvalidDistribution, "mixture has no components");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(mix.sigma_x[i] > 0.0) || !(mix.sigma_y[i] > 0.0) || !std::isfinite(mix.sigma_x[i]) ||
        !std::isfinite(mix.sigma_y[i]))
      throw Error(ErrorCode::InvalidDistribution, "sigma must be positive and finite",
                  "component " + std::to_string(i));
    if (!(std::abs(mix.rho[i]) < 1.0))
      throw Error(ErrorCode::InvalidDistribution, "|rho| must be below 1", "component " + std::to_string(i));
    if (!std::isfinite(mix.mu_x[i]) || !std::isfinite(mix.mu_y[i]) || !(mix.pi[i] >= 0.0))
      throw Error(ErrorCode::InvalidDistribution, "non-finite mixture parameter",
                  "component " + std::to_string(i));
  }
}

struct NllTerms {
  double offset = 0.0;
  double pen = 0.0;
  double total() const { return offset + pen; }
};

namespace detail {

struct ComponentTerms {
  double zx, zy, q, z, log_density;
};

inline ComponentTerms component_terms(const MixtureParams& mix, std::size_t i, double x, double y) {
  ComponentTerms t{};
  t.zx = (x - mix.mu_x[i]) / mix.sigma_x[i];
  t.zy = (y - mix.mu_y[i]) / mix.sigma_y[i];
  t.q = 1.0 - mix.rho[i] * mix.rho[i];
  t.z = t.zx * t.zx + t.zy * t.zy - 2.0 * mix.rho[i] * t.zx * t.zy;
  t.log_density = -std::log(2.0 * std::numbers::pi) - mix.log_sigma_x[i] - mix.log_sigma_y[i] -
                  0.5 * std::log(t.q) - t.z / (2.0 * t.q);
  return t;
}

inline std::array<double, 3> log_softmax3(const std::array<double, 3>& v) {
  const double lse = log_sum_exp(v);
  return {v[0] - lse, v[1] - lse, v[2] - lse};
}

}  // namespace detail

/// Negative log-likelihood of `target`: -log sum_i pi_i N(dx, dy | mu_i,
/// sigma_i, rho_i) for the offset plus the cross-entropy of the pen flag.
inline NllTerms mdn_nll(const MixtureParams& mix, const Stroke5Row& target) {
  validate_mixture(mix);
  const std::size_t m = mix.size();
  std::vector<double> lp(m);
  for (std::size_t i = 0; i < m; ++i)
    lp[i] = mix.log_pi[i] + detail::component_terms(mix, i, target.dx, target.dy).log_density;
  NllTerms out;
  out.offset = -detail::log_sum_exp(lp);
  out.pen = -detail::log_softmax3(mix.pen_logits)[static_cast<std::size_t>(target.pen)];
  return out;
}

/// Gradient of `weight * (include_offset ? offset + pen : pen)` with respect
/// to the raw head outputs, written into `grad` (size 6M + 3).
inline void mdn_raw_gradient(const MixtureParams& mix, const Stroke5Row& target, bool include_offset,
                             double weight, std::span<double> grad) {
  const std::size_t m = mix.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (include_offset) {
    std::vector<double> lp(m);
    std::vector<detail::ComponentTerms> terms(m);
    for (std::size_t i = 0; i < m; ++i) {
      terms[i] = detail::component_terms(mix, i, target.dx, target.dy);
      lp[i] = mix.log_pi[i] + terms[i].log_density;
    }
    const double lse = detail::log_sum_exp(lp);
    for (std::size_t i = 0; i < m; ++i) {
      const double gamma = std::exp(lp[i] - lse);
      const auto& t = terms[i];
      const double r = mix.rho[i];
      grad[i] = weight * (mix.pi[i] - gamma);
      grad[m + i] = -weight * gamma * (t.zx - r * t.zy) / (t.q * mix.sigma_x[i]);
      grad[2 * m + i] = -weight * gamma * (t.zy - r * t.zx) / (t.q * mix.sigma_y[i]);
      grad[3 * m + i] = -weight * gamma * (-1.0 + (t.zx * t.zx - r * t.zx * t.zy) / t.q);
      grad[4 * m + i] = -weight * gamma * (-1.0 + (t.zy * t.zy - r * t.zx * t.zy) / t.q);
      grad[5 * m + i] = -weight * gamma * (r + t.zx * t.zy - t.z * r / t.q);
    }
  }
  const auto lsm = detail::log_softmax3(mix.pen_logits);
  for (std::size_t k = 0; k < 3; ++k)
    grad[6 * m + k] = weight * (std::exp(lsm[k]) - (static_cast<std::size_t>(target.pen) == k ? 1.0 : 0.0));
}

namespace detail {

inline std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::size_t draw_categorical(std::span<const double> logits, double temperature, Rng& rng) {
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& v : scaled) v /= temperature;
  const double lse = log_sum_exp(scaled);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    acc += std::exp(scaled[i] - lse);
    if (u < acc) return i;
  }
  return scaled.size() - 1;
}

}  // namespace detail

/// Draws the next row. At temperature tau > 0 the component comes from
/// softmax(log pi / tau), the offset from that Gaussian with variances
/// scaled by tau, and the pen from softmax(logits / tau). tau = 0 takes the
/// most likely component's mean and the most likely pen flag, lowest index
/// on ties, and consumes no randomness.
inline Stroke5Row sample_next(const MixtureParams& mix, double temperature, Rng& rng) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::InvalidInput, "temperature must be a finite value >= 0");
  validate_mixture(mix);
  if (temperature == 0.0) {
    const std::size_t c = detail::argmax_lowest(mix.log_pi);
    const auto pen = detail::argmax_lowest(mix.pen_logits);
    return {mix.mu_x[c], mix.mu_y[c], static_cast<Pen>(pen)};
  }
  const std::size_t c = detail::draw_categorical(mix.log_pi, temperature, rng);
  const double s = std::sqrt(temperature);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double r = mix.rho[c];
  const double dx = mix.mu_x[c] + mix.sigma_x[c] * s * z1;
  const double dy = mix.mu_y[c] + mix.sigma_y[c] * s * (r * z1 + std::sqrt(1.0 - r * r) * z2);
  const auto pen = detail::draw_categorical(mix.pen_logits, temperature, rng);
  return {dx, dy, static_cast<Pen>(pen)};
}

}  // namespace sketchplay
