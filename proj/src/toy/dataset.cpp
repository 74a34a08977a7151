#include "roughcount/toy/dataset.hpp"

#include <cmath>
#include <string>

#include "roughcount/digit_codec.hpp"
#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"

namespace roughcount::toy {

void validate(const DatasetSpec& spec) {
  if (spec.count_min < 0 || spec.count_max > kMaxCount || spec.count_min > spec.count_max) {
    throw Error(ErrorCode::kBadRange, "count range [" + std::to_string(spec.count_min) + ", " +
                                          std::to_string(spec.count_max) + "] not inside [0, 999]");
  }
  if (spec.input_dim == 0 || spec.object_pool == 0) {
    throw Error(ErrorCode::kInvalidArgument, "input_dim and object_pool must be >= 1");
  }
  if (!(spec.noise_scale >= 0.0) || !(spec.object_scale > 0.0) || !(spec.object_jitter >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dataset scales must be nonnegative");
  }
}

std::vector<std::vector<double>> object_pool(const DatasetSpec& spec) {
  validate(spec);
  SplitMix64 rng(derive_seed(spec.world_seed, {0x0B1EC7}));
  const double per_comp = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  std::vector<double> prototype(spec.input_dim);
  for (double& x : prototype) x = rng.normal() * per_comp;
  std::vector<std::vector<double>> pool(spec.object_pool, std::vector<double>(spec.input_dim));
  for (auto& obj : pool) {
    for (std::size_t k = 0; k < spec.input_dim; ++k) {
      obj[k] = spec.object_scale * (prototype[k] + spec.object_jitter * rng.normal() * per_comp);
    }
  }
  return pool;
}

std::vector<CountSample> gen_dataset(const DatasetSpec& spec, std::size_t size, std::uint64_t seed,
                                     std::uint64_t first_id) {
  if (size == 0) throw Error(ErrorCode::kInvalidArgument, "dataset size must be >= 1");
  const auto pool = object_pool(spec);
  std::vector<CountSample> out;
  out.reserve(size);
  for (std::size_t s = 0; s < size; ++s) {
    CountSample sample;
    sample.id = first_id + s;
    SplitMix64 rng(derive_seed(seed, {sample.id}));
    sample.true_count = static_cast<int>(rng.uniform_int(spec.count_min, spec.count_max));
    sample.features.assign(spec.input_dim, 0.0);
    for (int j = 0; j < sample.true_count; ++j) {
      const auto& obj = pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(spec.object_pool) - 1))];
      for (std::size_t k = 0; k < spec.input_dim; ++k) sample.features[k] += obj[k];
    }
    if (spec.noise_scale > 0.0) {
      for (double& x : sample.features) x += spec.noise_scale * rng.normal();
    }
    sample.annotation = RoughAnnotation{sample.true_count, {sample.true_count}, sample.true_count,
                                        sample.true_count};
    out.push_back(std::move(sample));
  }
  return out;
}

void annotate(std::vector<CountSample>& samples, const RoughLabelSpec& spec) {
  validate(spec);
  for (auto& s : samples) {
    RoughLabelSpec per_sample = spec;
    per_sample.seed = derive_seed(spec.seed, {s.id});
    s.annotation = simulate_experts(s.true_count, per_sample);
  }
}

}  // namespace roughcount::toy
