#include "roughcount/text_provider.hpp"

#include <functional>
#include <mutex>

#include "roughcount/error.hpp"

namespace roughcount {

std::string render_prompt(std::string_view tmpl, int label) {
  constexpr std::string_view kSlot = "{number}";
  const std::string number = std::to_string(label);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = tmpl.find(kSlot, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl.substr(pos, hit - pos));
    out.append(number);
    pos = hit + kSlot.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

TableTextProvider::TableTextProvider(std::span<const int> labels, std::vector<Embedding> embeddings,
                                     std::string prompt_template)
    : template_(std::move(prompt_template)) {
  if (labels.size() != embeddings.size()) {
    throw Error(ErrorCode::kLengthMismatch, "label list and embedding list differ in length");
  }
  if (embeddings.empty()) {
    throw Error(ErrorCode::kEmpty, "text provider table is empty");
  }
  dim_ = embeddings.front().dim();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (embeddings[i].dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged prompt embedding table");
    }
    table_.insert_or_assign(labels[i], std::move(embeddings[i]));
  }
}

Embedding TableTextProvider::embed(int label) const {
  const auto it = table_.find(label);
  if (it == table_.end()) {
    throw Error(ErrorCode::kProviderFailure, "no prompt embedding for label " + std::to_string(label));
  }
  return it->second;
}

PromptCache::PromptCache(const TextEmbeddingProvider& provider)
    : provider_(provider), template_id_(std::hash<std::string>{}(provider.prompt_template())) {}

const Embedding& PromptCache::unit(int label) const {
  const Key key{template_id_, label};
  {
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(key);
    if (it != entries_.end()) return *it->second;
  }
  auto fresh = std::make_unique<const Embedding>(l2_normalize(provider_.embed(label)));
  if (fresh->dim() != provider_.dim()) {
    throw Error(ErrorCode::kProviderFailure, "provider returned wrong dimension for label " +
                                                 std::to_string(label));
  }
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = entries_.try_emplace(key, std::move(fresh));
  return *it->second;
}

void PromptCache::warm(std::span<const int> labels) const {
  for (int label : labels) unit(label);
}

void PromptCache::warm_range(int first, int last) const {
  for (int label = first; label <= last; ++label) unit(label);
}

std::size_t PromptCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace roughcount
