#pragma once

#include <cstdint>
#include <vector>

namespace roughcount {

/// How rough annotations are simulated: n experts each guess a count
/// uniformly inside ±p of the ground truth.
struct RoughLabelSpec {
  double error_pct = 0.05;
  int experts = 10;
  std::uint64_t seed = 0;
};

void validate(const RoughLabelSpec& spec);

struct RoughAnnotation {
  int gt = 0;
  std::vector<int> expert_labels;
  int lo = 0;
  int hi = 0;
};

struct Band {
  int lo = 0;
  int hi = 0;
};

/// [round(gt(1-p)), round(gt(1+p))] with half-away-from-zero rounding,
/// clamped to [0, 999].
Band error_band(int gt, double error_pct);

/// Deterministic in (gt, spec). Callers annotating many samples derive a
/// per-sample spec.seed.
RoughAnnotation simulate_experts(int gt, const RoughLabelSpec& spec);

/// Uniform integer in [ann.lo, ann.hi]; a fresh draw_seed per training step
/// re-samples the label.
int sample_training_label(const RoughAnnotation& ann, std::uint64_t draw_seed);

/// Evaluation always scores against the true count.
inline int eval_label(const RoughAnnotation& ann) { return ann.gt; }

}  // namespace roughcount
