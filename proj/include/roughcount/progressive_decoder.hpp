#pragma once

#include <array>
#include <span>
#include <vector>

#include "roughcount/digit_codec.hpp"
#include "roughcount/embedding.hpp"
#include "roughcount/text_provider.hpp"

namespace roughcount {

/// Similarity of one query against a count label. Decoders only ever see a
/// query through this interface, which lets tests plug in synthetic
/// similarity functions.
class LabelScorer {
 public:
  virtual ~LabelScorer() = default;
  virtual double score(int label) const = 0;
};

/// Cosine similarity between a query embedding and cached prompt embeddings.
class CosineScorer final : public LabelScorer {
 public:
  CosineScorer(const Embedding& query, const PromptCache& cache);
  double score(int label) const override;

 private:
  Embedding unit_query_;
  const PromptCache& cache_;
};

enum class DecodeMode { kFlat, kProgressive };

struct DecodeTrace {
  DecodeMode mode = DecodeMode::kProgressive;
  std::array<int, kStageCount> stage_digits{};    // P^hundreds, P^tens, P^units
  std::array<int, kStageCount> matched_labels{};  // argmax label at each stage
  int similarity_evaluations = 0;
  int final_count = 0;
};

inline constexpr int kProgressiveEvaluations = kStageCount * kCandidatesPerStage;
inline constexpr int kFlatRange = kMaxCount + 1;

/// Three 10-way argmax stages, hundreds -> tens -> units, each conditioned on
/// the digits already predicted. Ties go to the larger label.
DecodeTrace decode_progressive(const LabelScorer& scorer);
DecodeTrace decode_progressive(const Embedding& query, const PromptCache& cache);

/// Argmax over labels 0..range_max-1 (range_max <= 1000). Ties go to the
/// larger label. For flat traces the stage fields echo the digits of the
/// final count.
DecodeTrace decode_flat(const LabelScorer& scorer, int range_max = kFlatRange);
DecodeTrace decode_flat(const Embedding& query, const PromptCache& cache, int range_max = kFlatRange);

struct BatchDecode {
  std::vector<DecodeTrace> traces;
  double elapsed_seconds = 0.0;
  double decodes_per_second = 0.0;
};

/// Decodes every query against a shared prompt cache. `workers` > 1 splits
/// the batch into contiguous chunks; results do not depend on it.
BatchDecode decode_batch(std::span<const Embedding> queries, const PromptCache& cache,
                         DecodeMode mode, int range_max = kFlatRange, unsigned workers = 1);

}  // namespace roughcount
