#include "roughcount/rough_labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughcount/digit_codec.hpp"
#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"

namespace roughcount {

void validate(const RoughLabelSpec& spec) {
  if (!(spec.error_pct >= 0.0) || !std::isfinite(spec.error_pct)) {
    throw Error(ErrorCode::kInvalidArgument, "error_pct must be finite and >= 0");
  }
  if (spec.experts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "at least one expert is required");
  }
}

Band error_band(int gt, double error_pct) {
  if (gt < 0 || gt > kMaxCount) {
    throw Error(ErrorCode::kOutOfRange, "gt " + std::to_string(gt) + " outside [0, 999]");
  }
  // std::round rounds halves away from zero.
  const double lo = std::round(gt * (1.0 - error_pct));
  const double hi = std::round(gt * (1.0 + error_pct));
  return Band{static_cast<int>(std::clamp(lo, 0.0, static_cast<double>(kMaxCount))),
              static_cast<int>(std::clamp(hi, 0.0, static_cast<double>(kMaxCount)))};
}

RoughAnnotation simulate_experts(int gt, const RoughLabelSpec& spec) {
  validate(spec);
  const Band band = error_band(gt, spec.error_pct);
  SplitMix64 rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(gt)}));
  RoughAnnotation ann;
  ann.gt = gt;
  ann.expert_labels.reserve(static_cast<std::size_t>(spec.experts));
  for (int i = 0; i < spec.experts; ++i) {
    ann.expert_labels.push_back(static_cast<int>(rng.uniform_int(band.lo, band.hi)));
  }
  const auto [mn, mx] = std::minmax_element(ann.expert_labels.begin(), ann.expert_labels.end());
  ann.lo = *mn;
  ann.hi = *mx;
  return ann;
}

int sample_training_label(const RoughAnnotation& ann, std::uint64_t draw_seed) {
  SplitMix64 rng(draw_seed);
  return static_cast<int>(rng.uniform_int(ann.lo, ann.hi));
}

}  // namespace roughcount
