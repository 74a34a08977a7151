#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roughcount/contrastive_loss.hpp"
#include "roughcount/toy/dataset.hpp"
#include "roughcount/toy/encoder.hpp"
#include "roughcount/toy/numeric_text_embedder.hpp"

namespace roughcount::toy {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  std::size_t batch_size = 256;
  double learning_rate = 5e-4;
  int epochs = 30;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  /// Update the text projection too; off by default (frozen text side).
  bool train_text = false;
  /// Cosine decay of the learning rate to zero over the run.
  bool cosine_decay = true;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  /// Mean minibatch pel loss seen while training each epoch. Noisy: batches
  /// are reshuffled and rough labels redrawn every step.
  std::vector<double> epoch_loss;
  /// Mean pel loss at the end of each epoch over one fixed partition of the
  /// training set with fixed label draws; comparable across epochs.
  std::vector<double> epoch_eval_loss;
  std::size_t steps = 0;
};

/// A batch in matrix form: feature rows plus the per-stage labels of the
/// paired texts.
struct StageBatch {
  RowMatrix features;
  std::array<std::vector<int>, kStageCount> stage_labels;
};

/// Stage labels derived from one count per sample (teacher forcing).
StageBatch make_batch(std::span<const CountSample> samples, std::span<const int> training_labels);

struct Objective {
  double loss = 0.0;
  std::vector<double> encoder_grad;
  std::vector<double> text_grad;  // empty unless requested
};

/// pel_loss of encoder outputs against the text embeddings of the batch
/// labels, with gradients flowing back to the encoder parameters.
Objective pel_objective(const ToyImageEncoder& encoder, const NumericTextEmbedder& text,
                        const StageBatch& batch, const LossConfig& loss_cfg,
                        bool want_text_grad = false);

/// Mini-batch PEL training. Each step draws a fresh training label per sample
/// from its rough annotation, derives the three stage labels from it, and
/// takes one optimizer step on pel_loss.
TrainResult train(std::span<const CountSample> dataset, ToyImageEncoder& encoder,
                  NumericTextEmbedder& text, const TrainConfig& cfg, const LossConfig& loss_cfg);

/// Mean pel loss over a fixed seeded partition of `dataset` with one fixed
/// label draw per sample. Same seed, same batches, same labels.
double fixed_pass_loss(std::span<const CountSample> dataset, const ToyImageEncoder& encoder,
                       const NumericTextEmbedder& text, std::size_t batch_size,
                       std::uint64_t seed, const LossConfig& loss_cfg);

struct GradCheckResult {
  double max_relative_error = 0.0;  // ‖analytic − numeric‖∞ / max(‖analytic‖∞, ‖numeric‖∞)
  double analytic_norm = 0.0;       // ‖analytic‖₂
};

/// Central differences on every encoder parameter against backprop.
/// `step` must lie in [1e-8, 1e-2].
GradCheckResult finite_diff_check(const ToyImageEncoder& encoder, const NumericTextEmbedder& text,
                                  const StageBatch& batch, const LossConfig& loss_cfg, double step);

std::vector<Embedding> embed_samples(const ToyImageEncoder& encoder,
                                     std::span<const CountSample> samples);

}  // namespace roughcount::toy
