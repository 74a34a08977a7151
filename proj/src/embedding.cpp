#include "roughcount/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

void check_values(const std::vector<double>& values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
  }
  for (double x : values) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument, "embedding has a non-finite component");
    }
  }
}

void check_dims(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimension " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

double checked_norm(const Embedding& v) {
  const double n = v.norm();
  if (!(n > kZeroNormThreshold)) {
    throw Error(ErrorCode::kZeroVector, "embedding norm is zero");
  }
  return n;
}

}  // namespace

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  check_values(values_);
}

Embedding::Embedding(std::initializer_list<double> values) : values_(values) {
  check_values(values_);
}

Embedding::Embedding(std::span<const double> values) : values_(values.begin(), values.end()) {
  check_values(values_);
}

Embedding::Embedding(std::span<const float> values) : values_(values.begin(), values.end()) {
  check_values(values_);
}

double Embedding::norm() const noexcept { return l2_norm(values_); }

double dot(std::span<const double> a, std::span<const double> b) {
  check_dims(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  // Scaled accumulation keeps tiny and huge vectors from under/overflowing.
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double x : v) {
    const double y = x / scale;
    acc += y * y;
  }
  return scale * std::sqrt(acc);
}

Embedding l2_normalize(const Embedding& v) {
  const double n = checked_norm(v);
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x /= n;
  return Embedding(std::move(out));
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  check_dims(a.dim(), b.dim());
  const double na = checked_norm(a);
  const double nb = checked_norm(b);
  return dot(a.values(), b.values()) / (na * nb);
}

SimilarityMatrix batch_similarity(std::span<const Embedding> queries,
                                  std::span<const Embedding> candidates) {
  if (queries.empty() || candidates.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "batch_similarity needs nonempty lists");
  }
  const std::size_t d = queries.front().dim();
  std::vector<Embedding> q;
  std::vector<Embedding> c;
  q.reserve(queries.size());
  c.reserve(candidates.size());
  for (const auto& e : queries) {
    check_dims(d, e.dim());
    q.push_back(l2_normalize(e));
  }
  for (const auto& e : candidates) {
    check_dims(d, e.dim());
    c.push_back(l2_normalize(e));
  }
  SimilarityMatrix out(q.size(), c.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      out.at(i, j) = dot(q[i].values(), c[j].values());
    }
  }
  return out;
}

}  // namespace roughcount
