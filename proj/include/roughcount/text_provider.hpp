#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "roughcount/embedding.hpp"

namespace roughcount {

inline constexpr std::string_view kDefaultPromptTemplate =
    "The number of people in the photo is approximately {number}";

/// Substitutes every "{number}" in `tmpl` with the decimal label.
std::string render_prompt(std::string_view tmpl, int label);

/// Maps an integer count label to its text embedding. Implementations must be
/// deterministic: the same label always yields the same embedding.
class TextEmbeddingProvider {
 public:
  virtual ~TextEmbeddingProvider() = default;

  virtual Embedding embed(int label) const = 0;
  virtual std::size_t dim() const = 0;
  virtual const std::string& prompt_template() const = 0;
};

/// Provider backed by precomputed prompt embeddings, e.g. loaded from an
/// exchange container. Unknown labels raise ProviderFailure.
class TableTextProvider final : public TextEmbeddingProvider {
 public:
  TableTextProvider(std::span<const int> labels, std::vector<Embedding> embeddings,
                    std::string prompt_template = std::string(kDefaultPromptTemplate));

  Embedding embed(int label) const override;
  std::size_t dim() const override { return dim_; }
  const std::string& prompt_template() const override { return template_; }

  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<int, Embedding> table_;
  std::size_t dim_ = 0;
  std::string template_;
};

/// Unit-normalized prompt embeddings keyed by (template, label).
///
/// Lookups take a shared lock, misses take the exclusive lock to insert, so
/// concurrent decoders can share one cache. Returned references stay valid
/// for the cache's lifetime.
class PromptCache {
 public:
  explicit PromptCache(const TextEmbeddingProvider& provider);

  PromptCache(const PromptCache&) = delete;
  PromptCache& operator=(const PromptCache&) = delete;

  const Embedding& unit(int label) const;
  void warm(std::span<const int> labels) const;
  void warm_range(int first, int last) const;

  std::size_t size() const;
  std::size_t dim() const { return provider_.dim(); }
  const TextEmbeddingProvider& provider() const { return provider_; }

 private:
  struct Key {
    std::uint64_t template_id;
    int label;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return static_cast<std::size_t>(k.template_id ^ (static_cast<std::uint64_t>(k.label) * 0x9E3779B97F4A7C15ULL));
    }
  };

  const TextEmbeddingProvider& provider_;
  std::uint64_t template_id_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<Key, std::unique_ptr<const Embedding>, KeyHash> entries_;
};

}  // namespace roughcount
