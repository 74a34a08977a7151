#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roughcount/contrastive_loss.hpp"
#include "roughcount/text_provider.hpp"

namespace roughcount::toy {

/// Deterministic stand-in for a frozen text tower.
///
/// A label is described by smooth positional features: Gaussian bumps over
/// the scaled count label/1000, and Gaussian bumps over each of its
/// hundreds, tens and units digits. The feature vector is projected to `dim`
/// by a fixed seeded random matrix with orthonormal columns (orthonormal
/// rows when dim < kFeatureDim). The projection can optionally be trained.
///
/// Bumps are local, so labels far apart in count share little of their
/// embedding and a model trained on one count range does not drift toward
/// labels it never saw.
class NumericTextEmbedder final : public TextEmbeddingProvider {
 public:
  static constexpr std::size_t kCountBumps = 20;
  static constexpr std::size_t kDigitBumps = 10;
  static constexpr std::size_t kFeatureDim = kCountBumps + 3 * kDigitBumps;

  NumericTextEmbedder(std::size_t dim, std::uint64_t seed,
                      std::string prompt_template = std::string(kDefaultPromptTemplate));

  static std::array<double, kFeatureDim> features(int label);

  Embedding embed(int label) const override;
  std::size_t dim() const override { return dim_; }
  const std::string& prompt_template() const override { return template_; }

  std::uint64_t seed() const noexcept { return seed_; }

  /// Raw (unnormalized) embeddings of `labels`, one per row.
  RowMatrix embed_rows(std::span<const int> labels) const;

  /// [dim x kFeatureDim] row-major projection.
  std::span<const double> projection() const noexcept { return projection_; }
  std::span<double> mutable_projection() noexcept { return projection_; }

  /// d(loss)/d(projection) given per-row gradients for embed_rows(labels).
  std::vector<double> projection_gradient(std::span<const int> labels,
                                          const RowMatrix& grad_rows) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::string template_;
  std::vector<double> projection_;
};

}  // namespace roughcount::toy
