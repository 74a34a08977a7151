#include <doctest.h>

#include <cmath>
#include <limits>

#include "roughcount/embedding.hpp"
#include "roughcount/error.hpp"
#include "support.hpp"

using namespace roughcount;

TEST_CASE("embedding rejects empty and non-finite input") {
  CHECK_THROWS_AS(Embedding(std::vector<double>{}), Error);
  CHECK_THROWS_AS((Embedding{1.0, std::numeric_limits<double>::quiet_NaN()}), Error);
  CHECK_THROWS_AS((Embedding{std::numeric_limits<double>::infinity()}), Error);
  const float f[] = {1.0f, 2.0f};
  const Embedding e{std::span<const float>(f)};
  CHECK(e.dim() == 2);
  CHECK(e[1] == 2.0);
}

TEST_CASE("l2_normalize") {
  SUBCASE("3-4-5 triangle") {
    const Embedding n = l2_normalize(Embedding{3.0, 4.0});
    CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("unit vector is unchanged") {
    CHECK(l2_normalize(Embedding{1.0, 0.0}) == Embedding{1.0, 0.0});
  }
  SUBCASE("zero vector") {
    try {
      (void)l2_normalize(Embedding{0.0, 0.0});
      FAIL("expected ZeroVector");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kZeroVector);
    }
  }
  SUBCASE("tiny and huge norms normalize without under/overflow") {
    for (double scale : {1e-28, 1e-20, 1e20, 1e200}) {
      const Embedding n = l2_normalize(Embedding{3.0 * scale, 4.0 * scale});
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Below the zero-norm threshold the vector counts as zero.
    CHECK_THROWS_AS((void)l2_normalize(Embedding{3e-200, 4e-200}), Error);
  }
  SUBCASE("random vectors have unit norm afterwards") {
    SplitMix64 rng(11);
    for (int t = 0; t < 200; ++t) {
      const Embedding v(testing::gaussian(rng, 1 + t % 64));
      CHECK(std::abs(l2_normalize(v).norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("cosine_sim") {
  CHECK(cosine_sim(Embedding{1, 0}, Embedding{1, 0}) == doctest::Approx(1.0));
  CHECK(cosine_sim(Embedding{1, 0}, Embedding{0, 1}) == 0.0);
  CHECK(cosine_sim(Embedding{1, 0}, Embedding{1, 1}) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  try {
    (void)cosine_sim(Embedding{1, 0}, Embedding{1, 0, 0});
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  CHECK_THROWS_AS((void)cosine_sim(Embedding{0, 0}, Embedding{1, 0}), Error);

  SplitMix64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing::gaussian(rng, 16);
    const auto b = testing::gaussian(rng, 16);
    const Embedding ea(a);
    const Embedding eb(b);
    CHECK(cosine_sim(ea, eb) == doctest::Approx(cosine_sim(eb, ea)).epsilon(1e-15));
    CHECK(std::abs(cosine_sim(ea, l2_normalize(ea)) - 1.0) <= 1e-9);
    std::vector<double> scaled = a;
    const double alpha = 0.01 + 100.0 * rng.uniform01();
    for (double& x : scaled) x *= alpha;
    CHECK(std::abs(cosine_sim(Embedding(scaled), eb) - cosine_sim(ea, eb)) <= 1e-9);
  }
}

TEST_CASE("batch_similarity") {
  SUBCASE("single pair") {
    const std::vector<Embedding> q{Embedding{2.0, 1.0}};
    const auto m = batch_similarity(q, q);
    REQUIRE(m.rows() == 1);
    CHECK(m.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("identity basis gives the identity matrix") {
    const std::vector<Embedding> basis{Embedding{1, 0, 0}, Embedding{0, 1, 0}, Embedding{0, 0, 1}};
    const auto m = batch_similarity(basis, basis);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) CHECK(m.at(i, j) == (i == j ? 1.0 : 0.0));
    }
  }
  SUBCASE("matches the nested cosine loop") {
    SplitMix64 rng(99);
    for (int t = 0; t < 50; ++t) {
      const std::size_t d = 1 + rng.uniform_int(0, 63);
      const auto q = testing::random_embeddings(rng, 1 + rng.uniform_int(0, 31), d);
      const auto c = testing::random_embeddings(rng, 1 + rng.uniform_int(0, 31), d);
      const auto m = batch_similarity(q, c);
      for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) {
          CHECK(std::abs(m.at(i, j) - cosine_sim(q[i], c[j])) <= 1e-12);
          CHECK(m.at(i, j) <= 1.0 + 1e-9);
          CHECK(m.at(i, j) >= -1.0 - 1e-9);
        }
      }
    }
  }
  SUBCASE("errors") {
    const std::vector<Embedding> empty;
    const std::vector<Embedding> one{Embedding{1, 0}};
    const std::vector<Embedding> three{Embedding{1, 0, 0}};
    try {
      (void)batch_similarity(empty, one);
      FAIL("expected EmptyBatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyBatch);
    }
    try {
      (void)batch_similarity(one, three);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
  }
}
