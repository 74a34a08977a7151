#include "roughcount/contrastive_loss.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

void check_temperature(double temperature) {
  if (!(temperature >= kMinTemperature) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument,
                "temperature must be >= " + std::to_string(kMinTemperature));
  }
}

void check_pair(std::size_t n_images, std::size_t n_texts) {
  if (n_images == 0 || n_texts == 0) {
    throw Error(ErrorCode::kEmptyBatch, "contrastive loss needs at least one pair");
  }
  if (n_images != n_texts) {
    throw Error(ErrorCode::kDimensionMismatch, "batch sizes differ: " + std::to_string(n_images) +
                                                   " images vs " + std::to_string(n_texts) +
                                                   " texts");
  }
}

RowMatrix to_matrix(std::span<const Embedding> rows) {
  const std::size_t d = rows.front().dim();
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged embedding batch");
    }
    for (std::size_t k = 0; k < d; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

std::vector<Gradient> to_gradients(const RowMatrix& m) {
  std::vector<Gradient> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)].assign(m.row(i).data(), m.row(i).data() + m.cols());
  }
  return out;
}

struct Normalized {
  RowMatrix unit;
  Eigen::VectorXd norms;
};

Normalized normalize_rows(const RowMatrix& m) {
  Normalized out{m, Eigen::VectorXd(m.rows())};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector, "row " + std::to_string(i) + " has zero norm");
    }
    out.norms(i) = n;
    out.unit.row(i) /= n;
  }
  return out;
}

// Pulls d/d(unit row) back to d/d(raw row) through x -> x/|x|.
RowMatrix backprop_normalize(const RowMatrix& grad_unit, const Normalized& nrm) {
  RowMatrix out(grad_unit.rows(), grad_unit.cols());
  for (Eigen::Index i = 0; i < grad_unit.rows(); ++i) {
    const double radial = grad_unit.row(i).dot(nrm.unit.row(i));
    out.row(i) = (grad_unit.row(i) - radial * nrm.unit.row(i)) / nrm.norms(i);
  }
  return out;
}

bool masked(std::span<const int> labels, bool mask, Eigen::Index i, Eigen::Index j) {
  return mask && i != j && labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
}

double row_loss(const Eigen::Ref<const Eigen::RowVectorXd>& sims, std::size_t i, double temperature) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < sims.size(); ++j) max_logit = std::max(max_logit, sims(j) / temperature);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < sims.size(); ++j) sum += std::exp(sims(j) / temperature - max_logit);
  const double loss = max_logit + std::log(sum) - sims(static_cast<Eigen::Index>(i)) / temperature;
  return std::max(loss, 0.0);
}

double single_direction_loss(std::size_t i, std::span<const Embedding> anchors,
                             std::span<const Embedding> others, double temperature) {
  check_temperature(temperature);
  check_pair(anchors.size(), others.size());
  if (i >= anchors.size()) {
    throw Error(ErrorCode::kOutOfRange, "pair index " + std::to_string(i) + " outside batch");
  }
  const RowMatrix a = to_matrix(anchors);
  const RowMatrix o = to_matrix(others);
  if (a.cols() != o.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "image and text dimensions differ");
  }
  const Normalized an = normalize_rows(a);
  const Normalized on = normalize_rows(o);
  const Eigen::RowVectorXd sims = an.unit.row(static_cast<Eigen::Index>(i)) * on.unit.transpose();
  return row_loss(sims, i, temperature);
}

}  // namespace

void validate(const LossConfig& cfg) {
  check_temperature(cfg.temperature);
  for (double w : cfg.stage_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "stage weights must be finite and nonnegative");
    }
  }
}

double image_to_text_loss(std::size_t i, std::span<const Embedding> images,
                          std::span<const Embedding> texts, double temperature) {
  return single_direction_loss(i, images, texts, temperature);
}

double text_to_image_loss(std::size_t i, std::span<const Embedding> texts,
                          std::span<const Embedding> images, double temperature) {
  return single_direction_loss(i, texts, images, temperature);
}

MatrixLoss clip_loss(const RowMatrix& images, const RowMatrix& texts, double temperature,
                     std::span<const int> labels, bool mask_same_labels) {
  check_temperature(temperature);
  check_pair(static_cast<std::size_t>(images.rows()), static_cast<std::size_t>(texts.rows()));
  if (images.cols() != texts.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "image and text dimensions differ");
  }
  const bool mask = mask_same_labels && !labels.empty();
  if (mask && labels.size() != static_cast<std::size_t>(images.rows())) {
    throw Error(ErrorCode::kLengthMismatch, "one label per pair is required for masking");
  }

  const Eigen::Index n = images.rows();
  const Normalized img = normalize_rows(images);
  const Normalized txt = normalize_rows(texts);
  const RowMatrix logits = (img.unit * txt.unit.transpose()) / temperature;

  // dL/dS accumulates both directions; S = cosine matrix, logits = S/τ.
  RowMatrix grad_sim = RowMatrix::Zero(n, n);
  double total = 0.0;
  const double scale = 1.0 / (2.0 * static_cast<double>(n));

  // Image-to-text: softmax along rows.
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!masked(labels, mask, i, j)) max_logit = std::max(max_logit, logits(i, j));
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!masked(labels, mask, i, j)) sum += std::exp(logits(i, j) - max_logit);
    }
    total += max_logit + std::log(sum) - logits(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (masked(labels, mask, i, j)) continue;
      const double p = std::exp(logits(i, j) - max_logit) / sum;
      grad_sim(i, j) += (p - (i == j ? 1.0 : 0.0)) * scale / temperature;
    }
  }
  // Text-to-image: softmax along columns.
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!masked(labels, mask, i, j)) max_logit = std::max(max_logit, logits(j, i));
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!masked(labels, mask, i, j)) sum += std::exp(logits(j, i) - max_logit);
    }
    total += max_logit + std::log(sum) - logits(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (masked(labels, mask, i, j)) continue;
      const double p = std::exp(logits(j, i) - max_logit) / sum;
      grad_sim(j, i) += (p - (i == j ? 1.0 : 0.0)) * scale / temperature;
    }
  }

  MatrixLoss out;
  out.value = std::max(total * scale, 0.0);
  if (!std::isfinite(out.value)) {
    throw Error(ErrorCode::kNonFiniteLoss, "clip loss is not finite");
  }
  const RowMatrix grad_img_unit = grad_sim * txt.unit;
  const RowMatrix grad_txt_unit = grad_sim.transpose() * img.unit;
  out.grad_images = backprop_normalize(grad_img_unit, img);
  out.grad_texts = backprop_normalize(grad_txt_unit, txt);
  return out;
}

LossOutput clip_loss(std::span<const Embedding> images, std::span<const Embedding> texts,
                     double temperature) {
  check_pair(images.size(), texts.size());
  const MatrixLoss m = clip_loss(to_matrix(images), to_matrix(texts), temperature);
  return LossOutput{m.value, to_gradients(m.grad_images), to_gradients(m.grad_texts)};
}

MatrixPelLoss pel_loss(const RowMatrix& images, const std::array<RowMatrix, kStageCount>& stage_texts,
                       const LossConfig& cfg,
                       const std::array<std::vector<int>, kStageCount>* stage_labels) {
  validate(cfg);
  MatrixPelLoss out;
  out.grad_images = RowMatrix::Zero(images.rows(), images.cols());
  for (std::size_t k = 0; k < kStageCount; ++k) {
    const double w = cfg.stage_weights[k];
    std::span<const int> labels;
    if (stage_labels != nullptr) labels = (*stage_labels)[k];
    if (w == 0.0) {
      check_pair(static_cast<std::size_t>(images.rows()), static_cast<std::size_t>(stage_texts[k].rows()));
      out.grad_texts[k] = RowMatrix::Zero(stage_texts[k].rows(), stage_texts[k].cols());
      continue;
    }
    MatrixLoss stage = clip_loss(images, stage_texts[k], cfg.temperature, labels,
                                 cfg.multi_positive_mask);
    out.value += w * stage.value;
    out.grad_images += w * stage.grad_images;
    out.grad_texts[k] = w * stage.grad_texts;
  }
  return out;
}

PelLossOutput pel_loss(std::span<const Embedding> images,
                       std::span<const std::vector<Embedding>> stage_texts, const LossConfig& cfg,
                       std::span<const std::vector<int>> stage_labels) {
  if (stage_texts.size() != kStageCount) {
    throw Error(ErrorCode::kStageCountMismatch,
                "expected 3 stage text lists, got " + std::to_string(stage_texts.size()));
  }
  if (!stage_labels.empty() && stage_labels.size() != kStageCount) {
    throw Error(ErrorCode::kStageCountMismatch,
                "expected 3 stage label lists, got " + std::to_string(stage_labels.size()));
  }
  check_pair(images.size(), images.size());
  const RowMatrix img = to_matrix(images);
  std::array<RowMatrix, kStageCount> txt;
  std::array<std::vector<int>, kStageCount> labels;
  for (std::size_t k = 0; k < kStageCount; ++k) {
    check_pair(images.size(), stage_texts[k].size());
    txt[k] = to_matrix(stage_texts[k]);
    if (!stage_labels.empty()) labels[k] = stage_labels[k];
  }
  const MatrixPelLoss m = pel_loss(img, txt, cfg, stage_labels.empty() ? nullptr : &labels);
  PelLossOutput out;
  out.value = m.value;
  out.grad_images = to_gradients(m.grad_images);
  for (std::size_t k = 0; k < kStageCount; ++k) out.grad_texts[k] = to_gradients(m.grad_texts[k]);
  return out;
}

}  // namespace roughcount
