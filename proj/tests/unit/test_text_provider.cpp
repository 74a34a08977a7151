#include <doctest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "roughcount/error.hpp"
#include "roughcount/text_provider.hpp"

using namespace roughcount;

namespace {

class CountingProvider final : public TextEmbeddingProvider {
 public:
  explicit CountingProvider(std::string tmpl) : tmpl_(std::move(tmpl)) {}
  Embedding embed(int label) const override {
    ++calls;
    return Embedding{3.0 * (label + 1), 4.0 * (label + 1)};
  }
  std::size_t dim() const override { return 2; }
  const std::string& prompt_template() const override { return tmpl_; }
  mutable std::atomic<int> calls{0};

 private:
  std::string tmpl_;
};

}  // namespace

TEST_CASE("render_prompt") {
  CHECK(render_prompt(kDefaultPromptTemplate, 125) ==
        "The number of people in the photo is approximately 125");
  CHECK(render_prompt("{number} and {number}", 7) == "7 and 7");
  CHECK(render_prompt("no slot", 3) == "no slot");
}

TEST_CASE("table provider") {
  const std::vector<int> labels{5, 9};
  const TableTextProvider table(labels, {Embedding{1, 2}, Embedding{3, 4}});
  CHECK(table.size() == 2);
  CHECK(table.dim() == 2);
  CHECK(table.embed(9) == Embedding{3, 4});
  CHECK(table.prompt_template() == kDefaultPromptTemplate);
  CHECK_THROWS_AS((void)table.embed(10), Error);

  CHECK_THROWS_AS(TableTextProvider(labels, {Embedding{1, 2}}), Error);
  CHECK_THROWS_AS(TableTextProvider(labels, {Embedding{1, 2}, Embedding{1, 2, 3}}), Error);
  CHECK_THROWS_AS(TableTextProvider(std::vector<int>{}, {}), Error);
}

TEST_CASE("prompt cache normalizes once per label") {
  CountingProvider provider("count: {number}");
  const PromptCache cache(provider);
  const Embedding& a = cache.unit(4);
  CHECK(a[0] == doctest::Approx(0.6));
  CHECK(a[1] == doctest::Approx(0.8));
  const Embedding& b = cache.unit(4);
  CHECK(&a == &b);
  CHECK(provider.calls == 1);

  cache.warm_range(0, 9);
  CHECK(cache.size() == 10);
  CHECK(provider.calls == 10);
}

TEST_CASE("prompt cache under concurrent readers") {
  CountingProvider provider("{number}");
  const PromptCache cache(provider);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w) {
    pool.emplace_back([&] {
      for (int rep = 0; rep < 3; ++rep) {
        for (int l = 0; l < 200; ++l) (void)cache.unit(l);
      }
    });
  }
  for (auto& t : pool) t.join();
  CHECK(cache.size() == 200);
  for (int l = 0; l < 200; ++l) CHECK(cache.unit(l).norm() == doctest::Approx(1.0));
}
