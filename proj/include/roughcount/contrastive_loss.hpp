#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "roughcount/digit_codec.hpp"
#include "roughcount/embedding.hpp"

namespace roughcount {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Smallest temperature accepted; below it exp() overflows even after
/// max-subtraction for realistic batch sizes.
inline constexpr double kMinTemperature = 1e-4;

struct LossConfig {
  double temperature = 0.07;
  std::array<double, kStageCount> stage_weights = {1.0, 1.0, 1.0};
  /// When set, pairs sharing a label with the positive are dropped from the
  /// softmax denominators instead of acting as negatives.
  bool multi_positive_mask = false;
};

void validate(const LossConfig& cfg);

using Gradient = std::vector<double>;

struct LossOutput {
  double value = 0.0;
  std::vector<Gradient> grad_images;
  std::vector<Gradient> grad_texts;
};

struct PelLossOutput {
  double value = 0.0;
  std::vector<Gradient> grad_images;  // summed over stages
  std::array<std::vector<Gradient>, kStageCount> grad_texts;
};

/// −log softmax_i of row i of the cosine matrix images × texts, scaled by 1/τ.
double image_to_text_loss(std::size_t i, std::span<const Embedding> images,
                          std::span<const Embedding> texts, double temperature);

/// Mirror of image_to_text_loss: row i of texts × images.
double text_to_image_loss(std::size_t i, std::span<const Embedding> texts,
                          std::span<const Embedding> images, double temperature);

/// Symmetric contrastive loss (1/2N) Σ_i (ℓ_i^image + ℓ_i^text) with exact
/// gradients for every image and text embedding.
LossOutput clip_loss(std::span<const Embedding> images, std::span<const Embedding> texts,
                     double temperature);

/// Sum of per-stage clip losses, weighted by cfg.stage_weights.
///
/// `stage_labels`, when non-empty, holds the integer label of each text per
/// stage; it is only consulted in multi-positive mask mode.
PelLossOutput pel_loss(std::span<const Embedding> images,
                       std::span<const std::vector<Embedding>> stage_texts, const LossConfig& cfg,
                       std::span<const std::vector<int>> stage_labels = {});

// Matrix forms: one embedding per row. These back the list forms above and
// are what the trainer calls.

struct MatrixLoss {
  double value = 0.0;
  RowMatrix grad_images;
  RowMatrix grad_texts;
};

/// `labels` may be empty; when non-empty and `mask_same_labels` is set,
/// off-diagonal pairs with equal labels leave the denominators.
MatrixLoss clip_loss(const RowMatrix& images, const RowMatrix& texts, double temperature,
                     std::span<const int> labels = {}, bool mask_same_labels = false);

struct MatrixPelLoss {
  double value = 0.0;
  RowMatrix grad_images;
  std::array<RowMatrix, kStageCount> grad_texts;
};

MatrixPelLoss pel_loss(const RowMatrix& images, const std::array<RowMatrix, kStageCount>& stage_texts,
                       const LossConfig& cfg,
                       const std::array<std::vector<int>, kStageCount>* stage_labels = nullptr);

}  // namespace roughcount
