#pragma once

#include <cstdint>
#include <vector>

#include "roughcount/rough_labels.hpp"

namespace roughcount::toy {

/// Synthetic counting world. Every sample sums `count` objects drawn from a
/// fixed pool, plus Gaussian noise. The pool depends only on `world_seed`, so
/// train and test splits generated with different sample seeds share it.
struct DatasetSpec {
  int count_min = 0;  // inclusive
  int count_max = 299;
  std::size_t input_dim = 128;
  double noise_scale = 0.01;   // per-component noise std
  double object_scale = 0.01;  // norm of the shared object prototype
  double object_jitter = 0.5;  // per-object deviation, relative to object_scale
  std::size_t object_pool = 256;
  std::uint64_t world_seed = 1;
};

void validate(const DatasetSpec& spec);

struct CountSample {
  std::uint64_t id = 0;
  std::vector<double> features;
  int true_count = 0;
  RoughAnnotation annotation;  // exact (lo = hi = gt) until annotate() runs
};

/// The object pool of a world; exposed for tests.
std::vector<std::vector<double>> object_pool(const DatasetSpec& spec);

std::vector<CountSample> gen_dataset(const DatasetSpec& spec, std::size_t size, std::uint64_t seed,
                                     std::uint64_t first_id = 0);

/// Replaces every annotation with simulated expert labels. Each sample gets
/// its own stream derived from spec.seed and the sample id.
void annotate(std::vector<CountSample>& samples, const RoughLabelSpec& spec);

}  // namespace roughcount::toy
