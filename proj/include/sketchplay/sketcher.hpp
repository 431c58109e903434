#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/dataset.hpp"
#include "sketchplay/error.hpp"
#include "sketchplay/mdn.hpp"
#include "sketchplay/rng.hpp"
#include "sketchplay/stroke5.hpp"

namespace sketchplay {

struct SketcherConfig {
  std::size_t hidden_size = 256;
  std::size_t num_mixtures = 20;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Learning-rate multiplier applied by fine_tune.
  double fine_tune_factor = 0.1;

  void validate() const {
    if (hidden_size < 1 || num_mixtures < 1 || batch_size < 1)
      throw Error(ErrorCode::InvalidInput, "hidden_size, num_mixtures and batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidInput, "learning_rate must be positive");
    if (!(grad_clip > 0.0)) throw Error(ErrorCode::InvalidInput, "grad_clip must be positive");
    if (!(fine_tune_factor > 0.0)) throw Error(ErrorCode::InvalidInput, "fine_tune_factor must be positive");
  }

  friend bool operator==(const SketcherConfig&, const SketcherConfig&) = default;
};

inline nlohmann::json to_json(const SketcherConfig& c) {
  return {{"hidden_size", c.hidden_size}, {"num_mixtures", c.num_mixtures},
          {"learning_rate", c.learning_rate}, {"grad_clip", c.grad_clip},
          {"epochs", c.epochs}, {"batch_size", c.batch_size},
          {"seed", c.seed}, {"fine_tune_factor", c.fine_tune_factor}};
}

inline SketcherConfig sketcher_config_from_json(const nlohmann::json& j) {
  SketcherConfig c;
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_mixtures = j.value("num_mixtures", c.num_mixtures);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.fine_tune_factor = j.value("fine_tune_factor", c.fine_tune_factor);
  return c;
}

inline constexpr std::size_t kRowWidth = 5;

struct ArrayLayout {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

/// Parameter arrays in their declared (checkpoint) order. Gate blocks inside
/// the recurrent matrices are ordered input, forget, cell, output.
inline std::vector<ArrayLayout> parameter_layout(std::size_t hidden, std::size_t mixtures) {
  const std::size_t g = 4 * hidden;
  const std::size_t k = mixture_output_size(mixtures);
  std::vector<ArrayLayout> out = {{"w_input", {g, kRowWidth}, 0},
                                  {"w_hidden", {g, hidden}, 0},
                                  {"b_gates", {g}, 0},
                                  {"w_out", {k, hidden}, 0},
                                  {"b_out", {k}, 0}};
  std::size_t off = 0;
  for (auto& a : out) {
    a.offset = off;
    off += a.size();
  }
  return out;
}

/// Weights of the single-layer LSTM and its mixture-density head, stored in
/// one flat buffer so the optimizer and checkpoint code see a single array.
template <typename T>
struct ModelParams {
  std::size_t hidden = 0;
  std::size_t mixtures = 0;
  std::vector<T> data;

  ModelParams() = default;
  ModelParams(std::size_t h, std::size_t m) : hidden(h), mixtures(m) {
    const auto layout = parameter_layout(h, m);
    data.assign(layout.back().offset + layout.back().size(), T(0));
  }

  std::size_t gates() const { return 4 * hidden; }
  std::size_t outputs() const { return mixture_output_size(mixtures); }

  std::size_t off_w_input() const { return 0; }
  std::size_t off_w_hidden() const { return gates() * kRowWidth; }
  std::size_t off_b_gates() const { return off_w_hidden() + gates() * hidden; }
  std::size_t off_w_out() const { return off_b_gates() + gates(); }
  std::size_t off_b_out() const { return off_w_out() + outputs() * hidden; }

  const T* w_input() const { return data.data() + off_w_input(); }
  const T* w_hidden() const { return data.data() + off_w_hidden(); }
  const T* b_gates() const { return data.data() + off_b_gates(); }
  const T* w_out() const { return data.data() + off_w_out(); }
  const T* b_out() const { return data.data() + off_b_out(); }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.hidden = hidden;
    out.mixtures = mixtures;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(static_cast<double>(v)); });
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases except a
/// forget-gate bias of 1.
template <typename T>
ModelParams<T> init_params(const SketcherConfig& cfg) {
  cfg.validate();
  ModelParams<T> p(cfg.hidden_size, cfg.num_mixtures);
  Rng rng(cfg.seed);
  const std::size_t h = cfg.hidden_size;
  auto fill = [&](std::size_t off, std::size_t n, double fan_in) {
    const double a = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < n; ++i) p.data[off + i] = static_cast<T>(rng.uniform(-a, a));
  };
  fill(p.off_w_input(), p.gates() * kRowWidth, static_cast<double>(kRowWidth + h));
  fill(p.off_w_hidden(), p.gates() * h, static_cast<double>(kRowWidth + h));
  for (std::size_t j = 0; j < h; ++j) p.data[p.off_b_gates() + h + j] = T(1);
  fill(p.off_w_out(), p.outputs() * h, static_cast<double>(h));
  return p;
}

template <typename T>
struct RecurrentState {
  std::vector<T> h;
  std::vector<T> c;

  friend bool operator==(const RecurrentState&, const RecurrentState&) = default;
};

template <typename T>
RecurrentState<T> init_state(const ModelParams<T>& p) {
  return {std::vector<T>(p.hidden, T(0)), std::vector<T>(p.hidden, T(0))};
}

namespace detail {

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// Activations of one step, kept for backpropagation.
template <typename T>
struct StepCache {
  std::array<T, kRowWidth> x{};
  std::vector<T> h_prev, c_prev;
  std::vector<T> i, f, g, o;
  std::vector<T> c, tanh_c, h;
  std::vector<T> raw;
};

template <typename T>
void lstm_step(const ModelParams<T>& p, const RecurrentState<T>& in, const std::array<T, kRowWidth>& x,
               StepCache<T>& cache) {
  const std::size_t hs = p.hidden;
  const std::size_t gs = p.gates();
  std::vector<T> z(p.b_gates(), p.b_gates() + gs);
  const T* wi = p.w_input();
  const T* wh = p.w_hidden();
  for (std::size_t r = 0; r < gs; ++r) {
    T acc = z[r];
    const T* wir = wi + r * kRowWidth;
    for (std::size_t k = 0; k < kRowWidth; ++k) acc += wir[k] * x[k];
    const T* whr = wh + r * hs;
    for (std::size_t k = 0; k < hs; ++k) acc += whr[k] * in.h[k];
    z[r] = acc;
  }
  cache.x = x;
  cache.h_prev = in.h;
  cache.c_prev = in.c;
  cache.i.resize(hs);
  cache.f.resize(hs);
  cache.g.resize(hs);
  cache.o.resize(hs);
  cache.c.resize(hs);
  cache.tanh_c.resize(hs);
  cache.h.resize(hs);
  for (std::size_t j = 0; j < hs; ++j) {
    cache.i[j] = sigmoid(z[j]);
    cache.f[j] = sigmoid(z[hs + j]);
    cache.g[j] = std::tanh(z[2 * hs + j]);
    cache.o[j] = sigmoid(z[3 * hs + j]);
    cache.c[j] = cache.f[j] * in.c[j] + cache.i[j] * cache.g[j];
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = cache.o[j] * cache.tanh_c[j];
  }
  const std::size_t ko = p.outputs();
  cache.raw.assign(p.b_out(), p.b_out() + ko);
  const T* wo = p.w_out();
  for (std::size_t r = 0; r < ko; ++r) {
    T acc = cache.raw[r];
    const T* wor = wo + r * hs;
    for (std::size_t k = 0; k < hs; ++k) acc += wor[k] * cache.h[k];
    cache.raw[r] = acc;
  }
}

template <typename T>
std::array<T, kRowWidth> row_input(const Stroke5Row& row) {
  const auto a = row.as_array();
  std::array<T, kRowWidth> x{};
  for (std::size_t k = 0; k < kRowWidth; ++k) x[k] = static_cast<T>(a[k]);
  return x;
}

}  // namespace detail

template <typename T>
struct StepResult {
  RecurrentState<T> state;
  MixtureParams mixture;
};

/// One recurrent step: consumes `row` and returns the next state together
/// with the distribution over the following row.
template <typename T>
StepResult<T> forward_step(const ModelParams<T>& params, const RecurrentState<T>& state, const Stroke5Row& row) {
  if (!std::isfinite(row.dx) || !std::isfinite(row.dy))
    throw Error(ErrorCode::Numeric, "non-finite input row");
  if (state.h.size() != params.hidden || state.c.size() != params.hidden)
    throw Error(ErrorCode::InvalidInput, "recurrent state does not match the model");
  detail::StepCache<T> cache;
  detail::lstm_step(params, state, detail::row_input<T>(row), cache);
  StepResult<T> out;
  out.state = {cache.h, cache.c};
  out.mixture = mixture_from_raw<T>(cache.raw, params.mixtures);
  return out;
}

/// Number of prediction targets in a sequence: every row after the first,
/// up to the true length.
inline std::size_t target_count(const TrainingExample& ex) { return ex.true_len > 1 ? ex.true_len - 1 : 0; }

/// Mean per-target loss of one sequence. The offset term is skipped for End
/// targets, whose offset carries no information.
template <typename T>
NllTerms sequence_loss(const ModelParams<T>& params, const TrainingExample& ex) {
  NllTerms total;
  const std::size_t n = target_count(ex);
  if (n == 0) return total;
  auto state = init_state(params);
  for (std::size_t t = 0; t < n; ++t) {
    auto step = forward_step(params, state, ex.rows[t]);
    const auto& target = ex.rows[t + 1];
    const NllTerms term = mdn_nll(step.mixture, target);
    if (target.pen != Pen::End) total.offset += term.offset;
    total.pen += term.pen;
    state = std::move(step.state);
  }
  total.offset /= static_cast<double>(n);
  total.pen /= static_cast<double>(n);
  return total;
}

/// Mean sequence loss over the examples that have at least one target.
template <typename T>
double batch_loss(const ModelParams<T>& params, std::span<const TrainingExample> batch) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& ex : batch) {
    if (target_count(ex) == 0) continue;
    sum += sequence_loss(params, ex).total();
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

/// Backpropagation through time for one sequence. Adds `weight` times the
/// gradient of the mean per-target loss into `grad` and returns that loss.
/// The forward pass runs in T; the backward pass accumulates in double.
template <typename T>
double accumulate_sequence_gradient(const ModelParams<T>& p, const TrainingExample& ex, double weight,
                                    std::vector<double>& grad) {
  const std::size_t n = target_count(ex);
  if (n == 0) return 0.0;
  const std::size_t hs = p.hidden;
  const std::size_t gs = p.gates();
  const std::size_t ko = p.outputs();
  const double per_target = weight / static_cast<double>(n);

  std::vector<detail::StepCache<T>> caches(n);
  std::vector<std::vector<double>> dys(n, std::vector<double>(ko));
  auto state = init_state(p);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    detail::lstm_step(p, state, detail::row_input<T>(ex.rows[t]), caches[t]);
    const auto mix = mixture_from_raw<T>(caches[t].raw, p.mixtures);
    const auto& target = ex.rows[t + 1];
    const bool with_offset = target.pen != Pen::End;
    const NllTerms term = mdn_nll(mix, target);
    loss += term.pen + (with_offset ? term.offset : 0.0);
    mdn_raw_gradient(mix, target, with_offset, per_target, dys[t]);
    state = {caches[t].h, caches[t].c};
  }
  if (!std::isfinite(loss)) throw Error(ErrorCode::Numeric, "non-finite sequence loss");

  double* g_wi = grad.data() + p.off_w_input();
  double* g_wh = grad.data() + p.off_w_hidden();
  double* g_bg = grad.data() + p.off_b_gates();
  double* g_wo = grad.data() + p.off_w_out();
  double* g_bo = grad.data() + p.off_b_out();
  const T* wh = p.w_hidden();
  const T* wo = p.w_out();

  std::vector<double> dh_next(hs, 0.0), dc_next(hs, 0.0), dh(hs), dz(gs);
  for (std::size_t tt = n; tt-- > 0;) {
    const auto& cache = caches[tt];
    const auto& dy = dys[tt];
    dh = dh_next;
    for (std::size_t r = 0; r < ko; ++r) {
      const double d = dy[r];
      g_bo[r] += d;
      if (d == 0.0) continue;
      double* gwor = g_wo + r * hs;
      const T* wor = wo + r * hs;
      for (std::size_t k = 0; k < hs; ++k) {
        gwor[k] += d * static_cast<double>(cache.h[k]);
        dh[k] += static_cast<double>(wor[k]) * d;
      }
    }
    for (std::size_t j = 0; j < hs; ++j) {
      const double i = cache.i[j], f = cache.f[j], g = cache.g[j], o = cache.o[j];
      const double tc = cache.tanh_c[j];
      const double dc = dh[j] * o * (1.0 - tc * tc) + dc_next[j];
      const double d_o = dh[j] * tc;
      const double d_i = dc * g;
      const double d_g = dc * i;
      const double d_f = dc * static_cast<double>(cache.c_prev[j]);
      dc_next[j] = dc * f;
      dz[j] = d_i * i * (1.0 - i);
      dz[hs + j] = d_f * f * (1.0 - f);
      dz[2 * hs + j] = d_g * (1.0 - g * g);
      dz[3 * hs + j] = d_o * o * (1.0 - o);
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < gs; ++r) {
      const double d = dz[r];
      g_bg[r] += d;
      double* gwir = g_wi + r * kRowWidth;
      for (std::size_t k = 0; k < kRowWidth; ++k) gwir[k] += d * static_cast<double>(cache.x[k]);
      double* gwhr = g_wh + r * hs;
      const T* whr = wh + r * hs;
      for (std::size_t k = 0; k < hs; ++k) {
        gwhr[k] += d * static_cast<double>(cache.h_prev[k]);
        dh_next[k] += static_cast<double>(whr[k]) * d;
      }
    }
  }
  return loss / static_cast<double>(n);
}

/// Gradient of batch_loss (in double, whatever T is). Returns the batch loss.
template <typename T>
double batch_gradient(const ModelParams<T>& p, std::span<const TrainingExample> batch, std::vector<double>& grad) {
  grad.assign(p.data.size(), 0.0);
  std::size_t used = 0;
  for (const auto& ex : batch)
    if (target_count(ex) > 0) ++used;
  if (used == 0) return 0.0;
  const double w = 1.0 / static_cast<double>(used);
  double loss = 0.0;
  for (const auto& ex : batch)
    if (target_count(ex) > 0) loss += w * accumulate_sequence_gradient(p, ex, w, grad);
  return loss;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// Same maximum without the noise floor, for reporting.
  double max_unfloored_error = 0.0;
  /// Denominator floor that was applied.
  double floor = 0.0;
};

/// |a - n| / max(|a|, |n|, floor), with 0/0 read as agreement.
inline double relative_error(double analytic, double numeric, double floor = 0.0) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  if (denom == 0.0) return 0.0;
  return std::abs(analytic - numeric) / denom;
}

/// Compares the analytic gradient of batch_loss with central finite
/// differences (step h) on every parameter. The differences are always
/// evaluated in double on the exact widened weights, so a float model is
/// judged against the true gradient rather than float rounding noise.
/// Entries far below the gradient's overall scale carry rounding noise of
/// the forward pass in T, so the denominator is floored at
/// sqrt(epsilon of T) times the largest numeric gradient magnitude.
/// `tamper` lets tests corrupt the analytic gradient as a negative control.
template <typename T>
GradCheckResult grad_check(const ModelParams<T>& params, std::span<const TrainingExample> batch,
                           double h = 1e-4,
                           const std::function<void(std::vector<double>&)>& tamper = {}) {
  std::vector<double> analytic;
  batch_gradient(params, batch, analytic);
  if (tamper) tamper(analytic);

  ModelParams<double> probe = params.template cast<double>();
  std::vector<double> numeric(probe.data.size());
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + h;
    const double up = batch_loss(probe, batch);
    probe.data[i] = saved - h;
    const double down = batch_loss(probe, batch);
    probe.data[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  double scale = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));

  GradCheckResult out;
  out.floor = std::sqrt(static_cast<double>(std::numeric_limits<T>::epsilon())) * scale;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double err = relative_error(analytic[i], numeric[i], out.floor);
    if (err > out.max_relative_error) {
      out.max_relative_error = err;
      out.worst_index = i;
    }
    out.max_unfloored_error = std::max(out.max_unfloored_error, relative_error(analytic[i], numeric[i]));
    ++out.checked;
  }
  return out;
}

}  // namespace sketchplay
