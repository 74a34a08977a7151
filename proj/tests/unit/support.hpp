#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "roughcount/embedding.hpp"
#include "roughcount/rng.hpp"

namespace testing {

inline std::vector<double> gaussian(roughcount::SplitMix64& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline std::vector<roughcount::Embedding> random_embeddings(roughcount::SplitMix64& rng,
                                                            std::size_t n, std::size_t d) {
  std::vector<roughcount::Embedding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(gaussian(rng, d));
  return out;
}

// Central difference of f at x along coordinate k.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t k, double h) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double up = f(x);
  x[k] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// ||a - n||_inf / max(||a||_inf, ||n||_inf), 0 when both vanish.
inline double normwise_rel_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

}  // namespace testing
