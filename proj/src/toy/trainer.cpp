#include "roughcount/toy/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "roughcount/digit_codec.hpp"
#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"

namespace roughcount::toy {
namespace {

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t n) : kind_(kind) {
    if (kind_ == OptimizerKind::kAdam) {
      m_.assign(n, 0.0);
      v_.assign(n, 0.0);
    }
  }

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
      return;
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  OptimizerKind kind_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

void shuffle_indices(std::vector<std::size_t>& order, std::uint64_t seed) {
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
}

double inf_norm(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 2 for a contrastive signal");
  }
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  if (cfg.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
}

StageBatch make_batch(std::span<const CountSample> samples, std::span<const int> training_labels) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  if (samples.size() != training_labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one training label per sample is required");
  }
  const auto dim = samples.front().features.size();
  StageBatch batch;
  batch.features.resize(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  for (auto& l : batch.stage_labels) l.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged feature batch");
    }
    for (std::size_t k = 0; k < dim; ++k) {
      batch.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          samples[i].features[k];
    }
    const DigitLabels places = encode_places(training_labels[i]);
    for (Stage s : kStages) batch.stage_labels[static_cast<std::size_t>(s)].push_back(places.at(s));
  }
  return batch;
}

Objective pel_objective(const ToyImageEncoder& encoder, const NumericTextEmbedder& text,
                        const StageBatch& batch, const LossConfig& loss_cfg, bool want_text_grad) {
  ToyImageEncoder::Activations acts;
  const RowMatrix images = encoder.forward_batch(batch.features, &acts);
  std::array<RowMatrix, kStageCount> texts;
  for (std::size_t k = 0; k < kStageCount; ++k) texts[k] = text.embed_rows(batch.stage_labels[k]);
  const MatrixPelLoss loss = pel_loss(images, texts, loss_cfg, &batch.stage_labels);

  Objective out;
  out.loss = loss.value;
  out.encoder_grad = encoder.backward(acts, loss.grad_images);
  if (want_text_grad) {
    out.text_grad.assign(text.projection().size(), 0.0);
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const auto g = text.projection_gradient(batch.stage_labels[k], loss.grad_texts[k]);
      for (std::size_t i = 0; i < g.size(); ++i) out.text_grad[i] += g[i];
    }
  }
  return out;
}

TrainResult train(std::span<const CountSample> dataset, ToyImageEncoder& encoder,
                  NumericTextEmbedder& text, const TrainConfig& cfg, const LossConfig& loss_cfg) {
  validate(cfg);
  validate(loss_cfg);
  if (dataset.empty()) throw Error(ErrorCode::kEmpty, "training set is empty");
  if (cfg.batch_size > dataset.size()) {
    throw Error(ErrorCode::kInvalidArgument, "batch size exceeds dataset size");
  }
  if (encoder.shape().output_dim != text.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "encoder output dim differs from text dim");
  }

  Optimizer image_opt(cfg.optimizer, encoder.params().size());
  Optimizer text_opt(cfg.optimizer, text.projection().size());
  const std::size_t steps_per_epoch = (dataset.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);

  TrainResult result;
  std::vector<std::size_t> order(dataset.size());
  std::vector<CountSample> batch_samples;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, derive_seed(cfg.seed, {0x5AFF1E, static_cast<std::uint64_t>(epoch)}));

    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t lo = step * cfg.batch_size;
      const std::size_t hi = std::min(dataset.size(), lo + cfg.batch_size);
      if (hi - lo < 2) continue;  // a single pair carries no contrastive signal

      batch_samples.clear();
      batch_labels.clear();
      for (std::size_t j = lo; j < hi; ++j) {
        const CountSample& s = dataset[order[j]];
        const int label = sample_training_label(
            s.annotation,
            derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), step, s.id}));
        // Teacher forcing: stage labels come from the sampled rough label only.
        if (label < s.annotation.lo || label > s.annotation.hi) {
          throw Error(ErrorCode::kOutOfRange, "training label escaped its rough band");
        }
        batch_samples.push_back(s);
        batch_labels.push_back(label);
      }
      const StageBatch batch = make_batch(batch_samples, batch_labels);
      const Objective obj = pel_objective(encoder, text, batch, loss_cfg, cfg.train_text);

      if (!std::isfinite(obj.loss) || !all_finite(obj.encoder_grad) || !all_finite(obj.text_grad)) {
        std::ostringstream msg;
        msg << "epoch " << epoch << " step " << step << ": loss " << obj.loss
            << ", max |grad| " << inf_norm(obj.encoder_grad);
        throw Error(ErrorCode::kNonFiniteLoss, msg.str());
      }
      loss_sum += obj.loss;
      ++loss_batches;

      double lr = cfg.learning_rate;
      if (cfg.cosine_decay && total_steps > 0) {
        const double progress = static_cast<double>(result.steps) / static_cast<double>(total_steps);
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      }
      image_opt.step(encoder.mutable_params(), obj.encoder_grad, lr);
      if (cfg.train_text) text_opt.step(text.mutable_projection(), obj.text_grad, lr);
      ++result.steps;
    }
    result.epoch_loss.push_back(loss_batches > 0 ? loss_sum / static_cast<double>(loss_batches) : 0.0);
    result.epoch_eval_loss.push_back(
        fixed_pass_loss(dataset, encoder, text, cfg.batch_size, cfg.seed, loss_cfg));
  }
  return result;
}

double fixed_pass_loss(std::span<const CountSample> dataset, const ToyImageEncoder& encoder,
                       const NumericTextEmbedder& text, std::size_t batch_size,
                       std::uint64_t seed, const LossConfig& loss_cfg) {
  if (dataset.empty()) throw Error(ErrorCode::kEmpty, "dataset is empty");
  std::vector<std::size_t> order(dataset.size());
  shuffle_indices(order, derive_seed(seed, {0xF1BED}));
  double sum = 0.0;
  std::size_t batches = 0;
  std::vector<CountSample> samples;
  std::vector<int> labels;
  for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
    const std::size_t hi = std::min(order.size(), lo + batch_size);
    if (hi - lo < 2) continue;
    samples.clear();
    labels.clear();
    for (std::size_t j = lo; j < hi; ++j) {
      const CountSample& s = dataset[order[j]];
      samples.push_back(s);
      labels.push_back(sample_training_label(s.annotation, derive_seed(seed, {0xF1BED, s.id})));
    }
    const StageBatch batch = make_batch(samples, labels);
    const RowMatrix images = encoder.forward_batch(batch.features);
    std::array<RowMatrix, kStageCount> texts;
    for (std::size_t k = 0; k < kStageCount; ++k) texts[k] = text.embed_rows(batch.stage_labels[k]);
    sum += pel_loss(images, texts, loss_cfg, &batch.stage_labels).value;
    ++batches;
  }
  return batches > 0 ? sum / static_cast<double>(batches) : 0.0;
}

GradCheckResult finite_diff_check(const ToyImageEncoder& encoder, const NumericTextEmbedder& text,
                                  const StageBatch& batch, const LossConfig& loss_cfg, double step) {
  if (!(step >= 1e-8 && step <= 1e-2)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step outside [1e-8, 1e-2]");
  }
  const Objective analytic = pel_objective(encoder, text, batch, loss_cfg);
  ToyImageEncoder probe = encoder;
  std::vector<double> numeric(analytic.encoder_grad.size());
  auto params = probe.mutable_params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = pel_objective(probe, text, batch, loss_cfg).loss;
    params[i] = saved - step;
    const double down = pel_objective(probe, text, batch, loss_cfg).loss;
    params[i] = saved;
    numeric[i] = (up - down) / (2.0 * step);
  }
  GradCheckResult out;
  double diff = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.encoder_grad[i] - numeric[i]));
    sq += analytic.encoder_grad[i] * analytic.encoder_grad[i];
  }
  const double scale = std::max(inf_norm(analytic.encoder_grad), inf_norm(numeric));
  out.max_relative_error = scale > 0.0 ? diff / scale : 0.0;
  out.analytic_norm = std::sqrt(sq);
  return out;
}

std::vector<Embedding> embed_samples(const ToyImageEncoder& encoder,
                                     std::span<const CountSample> samples) {
  if (samples.empty()) return {};
  std::vector<Embedding> out;
  out.reserve(samples.size());
  constexpr std::size_t kChunk = 512;
  const auto dim = samples.front().features.size();
  for (std::size_t lo = 0; lo < samples.size(); lo += kChunk) {
    const std::size_t hi = std::min(samples.size(), lo + kChunk);
    RowMatrix x(static_cast<Eigen::Index>(hi - lo), static_cast<Eigen::Index>(dim));
    for (std::size_t i = lo; i < hi; ++i) {
      if (samples[i].features.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "ragged feature batch");
      }
      for (std::size_t k = 0; k < dim; ++k) {
        x(static_cast<Eigen::Index>(i - lo), static_cast<Eigen::Index>(k)) = samples[i].features[k];
      }
    }
    const RowMatrix y = encoder.forward_batch(x);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      out.emplace_back(std::span<const double>(y.row(r).data(), static_cast<std::size_t>(y.cols())));
    }
  }
  return out;
}

}  // namespace roughcount::toy
