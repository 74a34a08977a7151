#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace roughcount {

/// Fixed-dimension real vector in the joint visual/text space.
///
/// Storage is double precision; every constructor rejects empty or
/// non-finite input, so a live Embedding always has dim() >= 1 and only
/// finite components.
class Embedding {
 public:
  explicit Embedding(std::vector<double> values);
  Embedding(std::initializer_list<double> values);
  explicit Embedding(std::span<const double> values);
  explicit Embedding(std::span<const float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const noexcept;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major [rows x cols] matrix of cosine similarities.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  double& at(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

/// Norms at or below this are treated as degenerate encoder output.
inline constexpr double kZeroNormThreshold = 1e-30;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

Embedding l2_normalize(const Embedding& v);
double cosine_sim(const Embedding& a, const Embedding& b);
SimilarityMatrix batch_similarity(std::span<const Embedding> queries,
                                  std::span<const Embedding> candidates);

}  // namespace roughcount
