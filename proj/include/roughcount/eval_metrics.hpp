#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "roughcount/progressive_decoder.hpp"

namespace roughcount {

double mae(std::span<const double> preds, std::span<const double> gts);

/// Crowd-counting "MSE": the root of the mean squared error.
double mse(std::span<const double> preds, std::span<const double> gts);

/// Plain mean squared error, reported next to mse() to avoid ambiguity.
double raw_mse(std::span<const double> preds, std::span<const double> gts);

/// Half-open count interval [lo, hi); hi may be +infinity.
struct CountBand {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

/// [0,100) [100,200) [200,300) [300,500) [500,800) [800,inf)
std::vector<CountBand> default_bands();

/// Builds contiguous bands from ascending edges starting at 0; the last band
/// is open-ended.
std::vector<CountBand> bands_from_edges(std::span<const double> edges);

struct IntervalMetrics {
  CountBand band;
  std::size_t n = 0;
  std::optional<double> mae;  // empty when n == 0
  std::optional<double> mse;
  std::optional<double> raw_mse;
};

/// Assigns samples to bands by ground truth. Bands must partition [0, inf).
std::vector<IntervalMetrics> interval_breakdown(std::span<const double> preds,
                                                std::span<const double> gts,
                                                std::span<const CountBand> bands);

struct EfficiencyStats {
  double mean_similarity_evaluations = 0.0;
  double decodes_per_second = 0.0;
};

EfficiencyStats efficiency_stats(std::span<const DecodeTrace> traces, double elapsed_seconds);

struct EvalReport {
  double mae = 0.0;
  double mse = 0.0;
  double raw_mse = 0.0;
  std::vector<IntervalMetrics> per_interval;
  double decodes_per_sec = 0.0;
  double similarity_evals_per_sample = 0.0;
};

EvalReport evaluate(std::span<const double> preds, std::span<const double> gts,
                    std::span<const CountBand> bands, const EfficiencyStats& efficiency);

}  // namespace roughcount
