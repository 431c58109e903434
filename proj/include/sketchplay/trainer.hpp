#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchplay/checkpoint.hpp"
#include "sketchplay/dataset.hpp"
#include "sketchplay/sketcher.hpp"

namespace sketchplay {

/// Adam with bias correction. State lives beside the parameters it updates.
template <typename T>
class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<T>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
      const double update = lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
      params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

/// Rescales `grad` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
inline double clip_global_norm(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

struct EpochLoss {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  std::optional<double> val_nll;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainOptions {
  /// Written after every epoch when set.
  std::optional<std::filesystem::path> checkpoint_path;
  /// Loss curve CSV (epoch,train_nll,val_nll), rewritten after every epoch.
  std::optional<std::filesystem::path> curve_path;
  /// Start from these weights instead of a fresh initialization.
  std::optional<ModelParams<float>> initial;
  double learning_rate_factor = 1.0;
  std::function<void(const EpochLoss&)> on_epoch;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLoss> curve;
  /// Training-set loss of the starting weights.
  double initial_train_nll = 0.0;
};

inline void write_loss_curve(const std::filesystem::path& path, const std::vector<EpochLoss>& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "epoch,train_nll,val_nll\n";
  out.precision(9);
  for (const auto& e : curve) {
    out << e.epoch << ',' << e.train_nll << ',';
    if (e.val_nll) out << *e.val_nll;
    else out << "nan";
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "cannot write loss curve " + path.string());
}

/// Minibatch Adam over the training split with global gradient-norm
/// clipping. Fully determined by the config seed.
inline TrainResult train(const Dataset& data, const SketcherConfig& cfg, const TrainOptions& opts = {}) {
  cfg.validate();
  if (data.train.empty()) throw Error(ErrorCode::EmptyDataset, "training split is empty");

  TrainResult out;
  if (opts.initial) {
    if (opts.initial->hidden != cfg.hidden_size || opts.initial->mixtures != cfg.num_mixtures)
      throw Error(ErrorCode::InvalidInput, "initial weights do not match the config shape");
    out.params = *opts.initial;
  } else {
    out.params = init_params<float>(cfg);
  }
  out.initial_train_nll = batch_loss(out.params, std::span<const TrainingExample>(data.train));
  if (cfg.epochs == 0) return out;

  Adam<float> adam(out.params.data.size(), cfg.learning_rate * opts.learning_rate_factor);
  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.train.size());
  std::vector<double> grad;
  std::vector<TrainingExample> batch;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(data.train[order[k]]);
      double loss = 0.0;
      try {
        loss = batch_gradient(out.params, std::span<const TrainingExample>(batch), grad);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Numeric && e.code() != ErrorCode::InvalidDistribution) throw;
        loss = std::nan("");
      }
      if (!std::isfinite(loss))
        throw Error(ErrorCode::Numeric,
                    "NaN loss at batch " + std::to_string(batch_index) + " (epoch " + std::to_string(epoch) + ")",
                    std::to_string(batch_index));
      clip_global_norm(grad, cfg.grad_clip);
      adam.step(out.params.data, grad);
      loss_sum += loss * static_cast<double>(batch.size());
      seen += batch.size();
      ++batch_index;
    }
    EpochLoss e;
    e.epoch = epoch;
    e.train_nll = loss_sum / static_cast<double>(seen);
    if (!data.val.empty()) e.val_nll = batch_loss(out.params, std::span<const TrainingExample>(data.val));
    out.curve.push_back(e);
    if (opts.checkpoint_path) save_checkpoint(*opts.checkpoint_path, out.params, cfg, data.offset_scale);
    if (opts.curve_path) write_loss_curve(*opts.curve_path, out.curve);
    if (opts.on_epoch) opts.on_epoch(e);
  }
  return out;
}

struct FineTuneReport {
  TrainResult result;
  double artist_val_before = 0.0;
  double artist_val_after = 0.0;
  std::optional<double> base_val_before;
  std::optional<double> base_val_after;
};

/// Continues training `params` on an artist corpus at a reduced learning
/// rate (cfg.fine_tune_factor). Held-out losses on the artist split, and on
/// `base_val` when given, are reported before and after.
inline FineTuneReport fine_tune(const ModelParams<float>& params, const Dataset& artist, const SketcherConfig& cfg,
                                const std::vector<TrainingExample>* base_val = nullptr, TrainOptions opts = {}) {
  if (artist.train.empty()) throw Error(ErrorCode::EmptyDataset, "artist dataset is empty");
  SketcherConfig c = cfg;
  c.hidden_size = params.hidden;
  c.num_mixtures = params.mixtures;
  opts.initial = params;
  opts.learning_rate_factor = cfg.fine_tune_factor;

  const auto& held_out = artist.val.empty() ? artist.train : artist.val;
  FineTuneReport rep;
  rep.artist_val_before = batch_loss(params, std::span<const TrainingExample>(held_out));
  if (base_val) rep.base_val_before = batch_loss(params, std::span<const TrainingExample>(*base_val));
  rep.result = train(artist, c, opts);
  rep.artist_val_after = batch_loss(rep.result.params, std::span<const TrainingExample>(held_out));
  if (base_val) rep.base_val_after = batch_loss(rep.result.params, std::span<const TrainingExample>(*base_val));
  return rep;
}

}  // namespace sketchplay
