#include "roughcount/progressive_decoder.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <string>
#include <thread>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

struct StageResult {
  int label = 0;
  int index = 0;
};

// `>=` while scanning labels in increasing order keeps the larger label on ties.
StageResult argmax_larger(const LabelScorer& scorer, const CandidateSet& set, int& evaluations) {
  StageResult best{set.labels[0], 0};
  double best_score = scorer.score(set.labels[0]);
  ++evaluations;
  for (int i = 1; i < kCandidatesPerStage; ++i) {
    const double s = scorer.score(set.labels[i]);
    ++evaluations;
    if (s >= best_score) {
      best_score = s;
      best = {set.labels[i], i};
    }
  }
  return best;
}

}  // namespace

CosineScorer::CosineScorer(const Embedding& query, const PromptCache& cache)
    : unit_query_(l2_normalize(query)), cache_(cache) {
  if (query.dim() != cache.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                   " vs prompt dim " + std::to_string(cache.dim()));
  }
}

double CosineScorer::score(int label) const {
  return dot(unit_query_.values(), cache_.unit(label).values());
}

DecodeTrace decode_progressive(const LabelScorer& scorer) {
  DecodeTrace trace;
  trace.mode = DecodeMode::kProgressive;
  int evaluations = 0;

  const StageResult h = argmax_larger(scorer, stage_candidates(Stage::kHundreds), evaluations);
  const StageResult t = argmax_larger(scorer, stage_candidates(Stage::kTens, h.index), evaluations);
  const StageResult u =
      argmax_larger(scorer, stage_candidates(Stage::kUnits, h.index, t.index), evaluations);

  trace.stage_digits = {h.index, t.index, u.index};
  trace.matched_labels = {h.label, t.label, u.label};
  trace.similarity_evaluations = evaluations;
  trace.final_count = compose(h.index, t.index, u.index);
  return trace;
}

DecodeTrace decode_progressive(const Embedding& query, const PromptCache& cache) {
  return decode_progressive(CosineScorer(query, cache));
}

DecodeTrace decode_flat(const LabelScorer& scorer, int range_max) {
  if (range_max < 1 || range_max > kFlatRange) {
    throw Error(ErrorCode::kOutOfRange,
                "flat range_max " + std::to_string(range_max) + " outside [1, 1000]");
  }
  int best = 0;
  double best_score = scorer.score(0);
  for (int label = 1; label < range_max; ++label) {
    const double s = scorer.score(label);
    if (s >= best_score) {
      best_score = s;
      best = label;
    }
  }
  DecodeTrace trace;
  trace.mode = DecodeMode::kFlat;
  const Digits d = decompose(best);
  trace.stage_digits = {d.hundreds, d.tens, d.units};
  trace.matched_labels = {best, best, best};
  trace.similarity_evaluations = range_max;
  trace.final_count = best;
  return trace;
}

DecodeTrace decode_flat(const Embedding& query, const PromptCache& cache, int range_max) {
  return decode_flat(CosineScorer(query, cache), range_max);
}

BatchDecode decode_batch(std::span<const Embedding> queries, const PromptCache& cache,
                         DecodeMode mode, int range_max, unsigned workers) {
  if (queries.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "decode_batch needs at least one query");
  }
  BatchDecode out;
  out.traces.resize(queries.size());

  auto decode_one = [&](std::size_t i) {
    try {
      out.traces[i] = mode == DecodeMode::kProgressive ? decode_progressive(queries[i], cache)
                                                       : decode_flat(queries[i], cache, range_max);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.what());
    }
  };

  const auto start = std::chrono::steady_clock::now();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(queries.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) decode_one(i);
  } else {
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (queries.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(queries.size(), lo + chunk);
        try {
          for (std::size_t i = lo; i < hi; ++i) decode_one(i);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  out.elapsed_seconds = std::chrono::duration<double>(stop - start).count();
  out.decodes_per_second = out.elapsed_seconds > 0.0
                               ? static_cast<double>(queries.size()) / out.elapsed_seconds
                               : 0.0;
  return out;
}

}  // namespace roughcount
