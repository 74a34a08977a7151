#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "roughcount/error.hpp"
#include "roughcount/experiment.hpp"
#include "roughcount/toy/dataset.hpp"
#include "roughcount/toy/encoder.hpp"
#include "roughcount/toy/numeric_text_embedder.hpp"
#include "roughcount/toy/trainer.hpp"

using namespace roughcount;
using namespace roughcount::toy;

namespace {

DatasetSpec small_world() {
  DatasetSpec spec;
  spec.input_dim = 16;
  spec.count_min = 0;
  spec.count_max = 50;
  spec.object_pool = 8;
  return spec;
}

std::vector<int> true_counts(std::span<const CountSample> samples) {
  std::vector<int> out;
  for (const auto& s : samples) out.push_back(s.true_count);
  return out;
}

}  // namespace

TEST_CASE("gen_dataset") {
  SUBCASE("zero objects leave pure noise") {
    DatasetSpec spec = small_world();
    spec.count_min = 0;
    spec.count_max = 0;
    spec.noise_scale = 0.0;
    for (const auto& s : gen_dataset(spec, 5, 1)) {
      for (double x : s.features) CHECK(x == 0.0);
    }
    spec.noise_scale = 0.3;
    const auto noisy = gen_dataset(spec, 200, 1);
    double sum = 0.0;
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : noisy) {
      for (double x : s.features) {
        sum += x;
        sq += x * x;
        ++n;
      }
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.3).epsilon(0.05));
  }
  SUBCASE("features are the sum of the drawn objects") {
    DatasetSpec spec = small_world();
    spec.object_pool = 1;
    spec.noise_scale = 0.0;
    spec.count_min = 2;
    spec.count_max = 2;
    const auto pool = object_pool(spec);
    const auto samples = gen_dataset(spec, 3, 9);
    for (const auto& s : samples) {
      for (std::size_t k = 0; k < spec.input_dim; ++k) {
        CHECK(s.features[k] == doctest::Approx(2.0 * pool[0][k]).epsilon(1e-15));
      }
    }
  }
  SUBCASE("mean feature norm grows with the count") {
    DatasetSpec spec;
    spec.count_min = 0;
    spec.count_max = 99;
    spec.noise_scale = 0.001;
    const auto samples = gen_dataset(spec, 10000, 3);
    std::vector<double> sum(100, 0.0);
    std::vector<int> n(100, 0);
    for (const auto& s : samples) {
      double sq = 0.0;
      for (double x : s.features) sq += x * x;
      sum[static_cast<std::size_t>(s.true_count)] += std::sqrt(sq);
      ++n[static_cast<std::size_t>(s.true_count)];
    }
    double prev = -1.0;
    for (std::size_t k = 0; k < 100; ++k) {
      REQUIRE(n[k] > 0);
      const double mean = sum[k] / n[k];
      CHECK(mean > prev);
      prev = mean;
    }
  }
  SUBCASE("determinism and errors") {
    const DatasetSpec spec = small_world();
    const auto a = gen_dataset(spec, 20, 5, 100);
    const auto b = gen_dataset(spec, 20, 5, 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == 100 + i);
      CHECK(a[i].features == b[i].features);
      CHECK(a[i].annotation.lo == a[i].true_count);
    }
    DatasetSpec bad = spec;
    bad.count_max = 1000;
    try {
      (void)gen_dataset(bad, 1, 1);
      FAIL("expected BadRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBadRange);
    }
    CHECK_THROWS_AS(gen_dataset(spec, 0, 1), Error);
  }
  SUBCASE("annotate draws per-sample expert labels") {
    auto samples = gen_dataset(small_world(), 50, 2);
    RoughLabelSpec rough;
    rough.error_pct = 0.2;
    rough.seed = 8;
    annotate(samples, rough);
    for (const auto& s : samples) {
      CHECK(s.annotation.gt == s.true_count);
      CHECK(s.annotation.expert_labels.size() == 10);
      const Band band = error_band(s.true_count, 0.2);
      CHECK(s.annotation.lo >= band.lo);
      CHECK(s.annotation.hi <= band.hi);
    }
  }
}

TEST_CASE("encoder forward") {
  SUBCASE("all-zero network still yields a unit-normalizable output") {
    EncoderShape shape;
    shape.kind = EncoderKind::kAffine;
    shape.input_dim = 4;
    shape.output_dim = 9;
    const ToyImageEncoder enc(shape, std::vector<double>(ToyImageEncoder::param_count(shape), 0.0));
    const Embedding y = enc.forward(std::vector<double>{1, 2, 3, 4});
    CHECK(y.norm() == doctest::Approx(kOutputGuard).epsilon(1e-12));
    const Embedding n = l2_normalize(y);
    for (std::size_t k = 0; k < 9; ++k) CHECK(n[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("identity affine map passes features through") {
    EncoderShape shape;
    shape.kind = EncoderKind::kAffine;
    shape.input_dim = 5;
    shape.output_dim = 5;
    std::vector<double> params(ToyImageEncoder::param_count(shape), 0.0);
    for (std::size_t i = 0; i < 5; ++i) params[i * 5 + i] = 1.0;
    const ToyImageEncoder enc(shape, params);
    const std::vector<double> x{0.5, -1.0, 2.0, 0.0, 3.0};
    const Embedding y = enc.forward(x);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(y[k] - x[k]) <= kOutputGuard);
  }
  SUBCASE("shape checks") {
    EncoderShape shape;
    shape.input_dim = 3;
    shape.hidden_dim = 4;
    shape.output_dim = 2;
    CHECK(ToyImageEncoder::param_count(shape) == 4 * 3 + 4 + 2 * 4 + 2);
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 1);
    try {
      (void)enc.forward(std::vector<double>{1, 2});
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
    CHECK_THROWS_AS(ToyImageEncoder(shape, std::vector<double>(3, 0.0)), Error);
  }
  SUBCASE("batch forward agrees with single forward") {
    EncoderShape shape;
    shape.input_dim = 6;
    shape.hidden_dim = 10;
    shape.output_dim = 4;
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 3);
    DatasetSpec spec = small_world();
    spec.input_dim = 6;
    const auto data = gen_dataset(spec, 7, 1);
    const auto batch = embed_samples(enc, data);
    // Batched and single-row products may round differently in the last bit.
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Embedding one = enc.forward(data[i].features);
      for (std::size_t k = 0; k < one.dim(); ++k) CHECK(std::abs(batch[i][k] - one[k]) <= 1e-12);
    }
  }
}

TEST_CASE("numeric text embedder") {
  const NumericTextEmbedder text(32, 7);
  CHECK(text.dim() == 32);
  CHECK(text.embed(123) == NumericTextEmbedder(32, 7).embed(123));

  // Exhaustive pairwise check over all labels.
  std::vector<Embedding> unit;
  for (int l = 0; l <= kMaxCount; ++l) unit.push_back(l2_normalize(text.embed(l)));
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < unit.size(); ++a) {
    for (std::size_t b = a + 1; b < unit.size(); ++b) {
      double sq = 0.0;
      for (std::size_t k = 0; k < 32; ++k) sq += (unit[a][k] - unit[b][k]) * (unit[a][k] - unit[b][k]);
      min_dist = std::min(min_dist, std::sqrt(sq));
    }
  }
  CHECK(min_dist > 0.0);

  const std::vector<int> labels{5, 500};
  const RowMatrix rows = text.embed_rows(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t k = 0; k < 32; ++k) {
      CHECK(std::abs(rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                     text.embed(labels[i])[k]) <= 1e-12);
    }
  }
}

TEST_CASE("gradient checks through the encoder") {
  DatasetSpec spec = small_world();
  spec.input_dim = 6;
  const auto data = gen_dataset(spec, 4, 11);
  const auto labels = true_counts(data);
  const StageBatch batch = make_batch(data, labels);
  const NumericTextEmbedder text(8, 2);

  SUBCASE("affine encoder, four pairs, eight dimensions") {
    EncoderShape shape;
    shape.kind = EncoderKind::kAffine;
    shape.input_dim = 6;
    shape.output_dim = 8;
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 5, 20.0);
    CHECK(finite_diff_check(enc, text, batch, LossConfig{}, 1e-6).max_relative_error <= 1e-5);
  }
  SUBCASE("mlp encoder") {
    EncoderShape shape;
    shape.input_dim = 6;
    shape.hidden_dim = 12;
    shape.output_dim = 8;
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 5, 20.0);
    CHECK(finite_diff_check(enc, text, batch, LossConfig{}, 1e-6).max_relative_error <= 1e-5);
  }
  SUBCASE("a single pair has no gradient") {
    EncoderShape shape;
    shape.kind = EncoderKind::kAffine;
    shape.input_dim = 6;
    shape.output_dim = 8;
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 5);
    const std::vector<CountSample> one(data.begin(), data.begin() + 1);
    const std::vector<int> one_label{labels[0]};
    const StageBatch single = make_batch(one, one_label);
    CHECK(finite_diff_check(enc, text, single, LossConfig{}, 1e-6).analytic_norm <= 1e-10);
  }
  SUBCASE("error grows with the step") {
    EncoderShape shape;
    shape.input_dim = 6;
    shape.hidden_dim = 12;
    shape.output_dim = 8;
    const ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 9, 20.0);
    const double e6 = finite_diff_check(enc, text, batch, LossConfig{}, 1e-6).max_relative_error;
    const double e4 = finite_diff_check(enc, text, batch, LossConfig{}, 1e-4).max_relative_error;
    const double e2 = finite_diff_check(enc, text, batch, LossConfig{}, 1e-2).max_relative_error;
    CHECK(e2 > e4);
    CHECK(e2 > e6);
    CHECK(e2 > 1e-6);
    CHECK_THROWS_AS(finite_diff_check(enc, text, batch, LossConfig{}, 1e-1), Error);
  }
}

TEST_CASE("training") {
  SUBCASE("zero learning rate leaves the weights unchanged") {
    DatasetSpec spec = small_world();
    const auto data = gen_dataset(spec, 2, 4);
    EncoderShape shape;
    shape.input_dim = spec.input_dim;
    shape.hidden_dim = 8;
    shape.output_dim = 8;
    ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 1);
    NumericTextEmbedder text(8, 1);
    const std::vector<double> before(enc.params().begin(), enc.params().end());
    TrainConfig tc;
    tc.batch_size = 2;
    tc.learning_rate = 0.0;
    tc.epochs = 1;
    for (OptimizerKind opt : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
      tc.optimizer = opt;
      const TrainResult r = train(data, enc, text, tc, LossConfig{});
      CHECK(r.epoch_loss.size() == 1);
      CHECK(r.steps == 1);
      CHECK(std::equal(before.begin(), before.end(), enc.params().begin()));
    }
  }
  SUBCASE("same seeds reproduce the run bit for bit") {
    DatasetSpec spec = small_world();
    auto data = gen_dataset(spec, 64, 4);
    RoughLabelSpec rough;
    rough.error_pct = 0.1;
    annotate(data, rough);
    EncoderShape shape;
    shape.input_dim = spec.input_dim;
    shape.hidden_dim = 16;
    shape.output_dim = 8;
    TrainConfig tc;
    tc.batch_size = 16;
    tc.epochs = 3;
    tc.seed = 5;
    auto run = [&] {
      ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 2);
      NumericTextEmbedder text(8, 2);
      const TrainResult r = train(data, enc, text, tc, LossConfig{});
      return std::make_pair(std::vector<double>(enc.params().begin(), enc.params().end()),
                            r.epoch_loss);
    };
    CHECK(run() == run());
  }
  SUBCASE("batch larger than the dataset is rejected") {
    const auto data = gen_dataset(small_world(), 3, 4);
    EncoderShape shape;
    shape.input_dim = 16;
    ToyImageEncoder enc = ToyImageEncoder::initialize(shape, 1);
    NumericTextEmbedder text(shape.output_dim, 1);
    TrainConfig tc;
    tc.batch_size = 4;
    CHECK_THROWS_AS(train(data, enc, text, tc, LossConfig{}), Error);
    tc.batch_size = 1;
    CHECK_THROWS_AS(train(data, enc, text, tc, LossConfig{}), Error);
  }
}

TEST_CASE("default toy run") {
  const ExperimentConfig cfg;
  const Splits data = prepare_data(cfg);
  const TrainedModel model = train_model(cfg, data.train.samples, data.test.samples);

  const auto& curve = model.curve.epoch_eval_loss;
  REQUIRE(curve.size() == static_cast<std::size_t>(cfg.train.epochs));
  for (std::size_t e = 3; e < curve.size(); ++e) {
    INFO("epoch " << e << ": " << curve[e - 1] << " -> " << curve[e]);
    CHECK(curve[e] <= curve[e - 1]);
  }

  const PromptCache cache(model.text);
  const auto emb = embed_samples(model.encoder, data.test.samples);
  const BatchDecode out = decode_batch(emb, cache, DecodeMode::kProgressive);
  double err = 0.0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    err += std::abs(out.traces[i].final_count - data.test.samples[i].true_count);
  }
  const double trained_mae = err / static_cast<double>(emb.size());
  INFO("trained " << trained_mae << " untrained " << model.untrained_mae);
  CHECK(trained_mae < model.untrained_mae);
}
