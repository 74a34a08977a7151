#include "roughcount/toy/numeric_text_embedder.hpp"

#include <cmath>
#include <string>

#include "roughcount/digit_codec.hpp"
#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"

namespace roughcount::toy {

NumericTextEmbedder::NumericTextEmbedder(std::size_t dim, std::uint64_t seed,
                                         std::string prompt_template)
    : dim_(dim), seed_(seed), template_(std::move(prompt_template)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "text embedding dim must be >= 1");
  SplitMix64 rng(derive_seed(seed, {0x7E47}));
  const auto rows = static_cast<Eigen::Index>(dim_);
  const auto cols = static_cast<Eigen::Index>(kFeatureDim);
  RowMatrix gauss(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) gauss(i, j) = rng.normal();
  }
  RowMatrix proj(rows, cols);
  if (rows >= cols) {
    const Eigen::HouseholderQR<RowMatrix> qr(gauss);
    proj = qr.householderQ() * RowMatrix::Identity(rows, cols);
  } else {
    const RowMatrix t = gauss.transpose();
    const Eigen::HouseholderQR<RowMatrix> qr(t);
    const RowMatrix q = qr.householderQ() * RowMatrix::Identity(cols, rows);
    proj = q.transpose();
  }
  projection_.assign(proj.data(), proj.data() + proj.size());
}

std::array<double, NumericTextEmbedder::kFeatureDim> NumericTextEmbedder::features(int label) {
  constexpr double kCountWidth = 1.0 / kCountBumps;
  constexpr double kDigitWidth = 0.6;
  const Digits d = decompose(label);
  const double x = label / 1000.0;
  std::array<double, kFeatureDim> f{};
  std::size_t at = 0;
  for (std::size_t j = 0; j < kCountBumps; ++j) {
    const double c = (static_cast<double>(j) + 0.5) / kCountBumps;
    const double z = (x - c) / kCountWidth;
    f[at++] = std::exp(-0.5 * z * z);
  }
  for (int digit : {d.hundreds, d.tens, d.units}) {
    for (std::size_t j = 0; j < kDigitBumps; ++j) {
      const double z = (digit - static_cast<double>(j)) / kDigitWidth;
      f[at++] = std::exp(-0.5 * z * z);
    }
  }
  return f;
}

RowMatrix NumericTextEmbedder::embed_rows(std::span<const int> labels) const {
  Eigen::Map<const RowMatrix> proj(projection_.data(), static_cast<Eigen::Index>(dim_),
                                   static_cast<Eigen::Index>(kFeatureDim));
  RowMatrix f(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto feat = features(labels[i]);
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = feat[k];
    }
  }
  return f * proj.transpose();
}

Embedding NumericTextEmbedder::embed(int label) const {
  const int labels[] = {label};
  const RowMatrix row = embed_rows(labels);
  return Embedding(std::span<const double>(row.data(), dim_));
}

std::vector<double> NumericTextEmbedder::projection_gradient(std::span<const int> labels,
                                                             const RowMatrix& grad_rows) const {
  std::vector<double> grad(projection_.size(), 0.0);
  Eigen::Map<RowMatrix> g(grad.data(), static_cast<Eigen::Index>(dim_),
                          static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto feat = features(labels[i]);
    Eigen::Map<const Eigen::RowVectorXd> f(feat.data(), static_cast<Eigen::Index>(kFeatureDim));
    g += grad_rows.row(static_cast<Eigen::Index>(i)).transpose() * f;
  }
  return grad;
}

}  // namespace roughcount::toy
