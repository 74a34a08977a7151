#include "roughcount/eval_metrics.hpp"

#include <cmath>
#include <string>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

void check_lengths(std::span<const double> preds, std::span<const double> gts) {
  if (preds.size() != gts.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                                std::to_string(gts.size()) + " ground truths");
  }
  if (preds.empty()) throw Error(ErrorCode::kEmpty, "no samples to score");
}

void check_partition(std::span<const CountBand> bands) {
  if (bands.empty()) throw Error(ErrorCode::kInvalidArgument, "no bands given");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!(bands[i].lo < bands[i].hi)) {
      throw Error(ErrorCode::kInvalidArgument, "band " + std::to_string(i) + " is empty");
    }
    if (i > 0 && bands[i].lo < bands[i - 1].hi) {
      throw Error(ErrorCode::kOverlappingBands, "band " + std::to_string(i) + " overlaps band " +
                                                    std::to_string(i - 1));
    }
    if (i > 0 && bands[i].lo > bands[i - 1].hi) {
      throw Error(ErrorCode::kInvalidArgument, "gap between bands " + std::to_string(i - 1) +
                                                   " and " + std::to_string(i));
    }
  }
  if (bands.front().lo != 0.0 || !std::isinf(bands.back().hi)) {
    throw Error(ErrorCode::kInvalidArgument, "bands must cover [0, inf)");
  }
}

}  // namespace

double mae(std::span<const double> preds, std::span<const double> gts) {
  check_lengths(preds, gts);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - gts[i]);
  return acc / static_cast<double>(preds.size());
}

double raw_mse(std::span<const double> preds, std::span<const double> gts) {
  check_lengths(preds, gts);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - gts[i];
    acc += e * e;
  }
  return acc / static_cast<double>(preds.size());
}

double mse(std::span<const double> preds, std::span<const double> gts) {
  return std::sqrt(raw_mse(preds, gts));
}

std::vector<CountBand> default_bands() {
  const double edges[] = {0, 100, 200, 300, 500, 800};
  return bands_from_edges(edges);
}

std::vector<CountBand> bands_from_edges(std::span<const double> edges) {
  if (edges.empty()) throw Error(ErrorCode::kInvalidArgument, "no band edges given");
  std::vector<CountBand> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double hi = i + 1 < edges.size() ? edges[i + 1] : std::numeric_limits<double>::infinity();
    out.push_back({edges[i], hi});
  }
  check_partition(out);
  return out;
}

std::vector<IntervalMetrics> interval_breakdown(std::span<const double> preds,
                                                std::span<const double> gts,
                                                std::span<const CountBand> bands) {
  check_lengths(preds, gts);
  check_partition(bands);
  std::vector<IntervalMetrics> out;
  for (const CountBand& band : bands) {
    std::vector<double> p;
    std::vector<double> g;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (gts[i] >= band.lo && gts[i] < band.hi) {
        p.push_back(preds[i]);
        g.push_back(gts[i]);
      }
    }
    IntervalMetrics m;
    m.band = band;
    m.n = p.size();
    if (!p.empty()) {
      m.mae = mae(p, g);
      m.raw_mse = raw_mse(p, g);
      m.mse = std::sqrt(*m.raw_mse);
    }
    out.push_back(m);
  }
  return out;
}

EfficiencyStats efficiency_stats(std::span<const DecodeTrace> traces, double elapsed_seconds) {
  if (traces.empty()) throw Error(ErrorCode::kEmpty, "no traces");
  double evals = 0.0;
  for (const auto& t : traces) evals += t.similarity_evaluations;
  EfficiencyStats out;
  out.mean_similarity_evaluations = evals / static_cast<double>(traces.size());
  out.decodes_per_second =
      elapsed_seconds > 0.0 ? static_cast<double>(traces.size()) / elapsed_seconds : 0.0;
  return out;
}

EvalReport evaluate(std::span<const double> preds, std::span<const double> gts,
                    std::span<const CountBand> bands, const EfficiencyStats& efficiency) {
  EvalReport r;
  r.mae = mae(preds, gts);
  r.raw_mse = raw_mse(preds, gts);
  r.mse = std::sqrt(r.raw_mse);
  r.per_interval = interval_breakdown(preds, gts, bands);
  r.decodes_per_sec = efficiency.decodes_per_second;
  r.similarity_evals_per_sample = efficiency.mean_similarity_evaluations;
  return r;
}

}  // namespace roughcount
