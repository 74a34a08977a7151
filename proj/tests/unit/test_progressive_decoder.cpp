#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "roughcount/error.hpp"
#include "roughcount/progressive_decoder.hpp"
#include "roughcount/rng.hpp"

using namespace roughcount;

namespace {

// s(label) = -|c - label|: every stage's best candidate is the one nearest c.
class MetricScorer final : public LabelScorer {
 public:
  explicit MetricScorer(int c) : c_(c) {}
  double score(int label) const override {
    ++calls;
    return -std::abs(c_ - label);
  }
  mutable int calls = 0;

 private:
  int c_;
};

class ConstantScorer final : public LabelScorer {
 public:
  double score(int) const override { return 0.5; }
};

// Labels on a quarter circle: cosine similarity falls with |a - b|.
TableTextProvider arc_provider() {
  std::vector<int> labels;
  std::vector<Embedding> embs;
  for (int l = 0; l <= kMaxCount; ++l) {
    const double theta = l * std::numbers::pi / 2000.0;
    labels.push_back(l);
    embs.push_back(Embedding{std::cos(theta), std::sin(theta)});
  }
  return TableTextProvider(labels, std::move(embs));
}

}  // namespace

TEST_CASE("progressive decode of the metric oracle at 123") {
  MetricScorer scorer(123);
  const DecodeTrace tr = decode_progressive(scorer);
  CHECK(tr.matched_labels == std::array<int, 3>{150, 125, 123});
  CHECK(tr.stage_digits == std::array<int, 3>{1, 2, 3});
  CHECK(tr.final_count == 123);
  CHECK(tr.similarity_evaluations == 30);
  CHECK(scorer.calls == 30);
  CHECK(tr.mode == DecodeMode::kProgressive);
}

TEST_CASE("progressive decode recovers every count with larger-label ties") {
  for (int c = 0; c <= kMaxCount; ++c) {
    MetricScorer scorer(c);
    const DecodeTrace tr = decode_progressive(scorer);
    REQUIRE(tr.final_count == c);
    CHECK(tr.similarity_evaluations == kProgressiveEvaluations);
    CHECK(tr.matched_labels == std::array<int, 3>{encode_places(c).hundreds_label,
                                                  encode_places(c).tens_label, c});
  }
}

TEST_CASE("ties go to the larger label") {
  const ConstantScorer flat;
  CHECK(decode_progressive(flat).final_count == 999);
  CHECK(decode_flat(flat).final_count == 999);
  CHECK(decode_flat(flat, 10).final_count == 9);
}

TEST_CASE("flat decode") {
  MetricScorer scorer(123);
  const DecodeTrace tr = decode_flat(scorer, 1000);
  CHECK(tr.final_count == 123);
  CHECK(tr.similarity_evaluations == 1000);
  CHECK(scorer.calls == 1000);
  CHECK(tr.stage_digits == std::array<int, 3>{1, 2, 3});

  const DecodeTrace one = decode_flat(MetricScorer(500), 1);
  CHECK(one.final_count == 0);
  CHECK(one.similarity_evaluations == 1);

  // Below the range the scan returns the top label.
  CHECK(decode_flat(MetricScorer(500), 100).final_count == 99);

  CHECK_THROWS_AS(decode_flat(scorer, 0), Error);
  CHECK_THROWS_AS(decode_flat(scorer, 1001), Error);
}

TEST_CASE("cosine decoding through a prompt cache") {
  const TableTextProvider provider = arc_provider();
  const PromptCache cache(provider);

  SUBCASE("single query") {
    const Embedding q = provider.embed(437);
    CHECK(decode_progressive(q, cache).final_count == 437);
    CHECK(decode_flat(q, cache).final_count == 437);
  }
  SUBCASE("batch of 100 metric samples") {
    SplitMix64 rng(4);
    std::vector<int> truth;
    std::vector<Embedding> queries;
    while (truth.size() < 100) {
      const int c = static_cast<int>(rng.uniform_int(0, kMaxCount));
      // Multiples of ten sit exactly between two stage candidates; rounding
      // in the cosine could pick either side, so they are left out here.
      if (c % 10 == 0) continue;
      truth.push_back(c);
      queries.push_back(provider.embed(c));
    }
    for (DecodeMode mode : {DecodeMode::kProgressive, DecodeMode::kFlat}) {
      const BatchDecode out = decode_batch(queries, cache, mode);
      REQUIRE(out.traces.size() == 100);
      for (std::size_t i = 0; i < 100; ++i) CHECK(out.traces[i].final_count == truth[i]);
      CHECK(out.elapsed_seconds >= 0.0);
    }

    const BatchDecode serial = decode_batch(queries, cache, DecodeMode::kProgressive, kFlatRange, 1);
    const BatchDecode parallel =
        decode_batch(queries, cache, DecodeMode::kProgressive, kFlatRange, 4);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(parallel.traces[i].final_count == serial.traces[i].final_count);
      CHECK(parallel.traces[i].matched_labels == serial.traces[i].matched_labels);
    }
  }
  SUBCASE("batch of one equals a single decode") {
    const std::vector<Embedding> one{Embedding{0.3, 0.7}};
    const DecodeTrace a = decode_batch(one, cache, DecodeMode::kProgressive).traces[0];
    const DecodeTrace b = decode_progressive(one[0], cache);
    CHECK(a.final_count == b.final_count);
    CHECK(a.matched_labels == b.matched_labels);
    CHECK(a.similarity_evaluations == b.similarity_evaluations);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(decode_progressive(Embedding{1, 0, 0}, cache), Error);
    CHECK_THROWS_AS(decode_batch(std::vector<Embedding>{}, cache, DecodeMode::kFlat), Error);
  }
}

TEST_CASE("provider failures surface from the cache") {
  const std::vector<int> labels{0, 1, 2};
  const TableTextProvider partial(labels, {Embedding{1, 0}, Embedding{0, 1}, Embedding{1, 1}});
  const PromptCache cache(partial);
  try {
    (void)decode_progressive(Embedding{1, 0}, cache);
    FAIL("expected ProviderFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProviderFailure);
  }
  CHECK(decode_flat(Embedding{0, 1}, cache, 3).final_count == 1);
}
