#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "roughcount/embedding.hpp"

namespace roughcount {

struct AdapterConfig {
  std::size_t capacity = 3000;  // M
  double delta = 0.14;          // distance gate
  double lambda = 0.1;          // visual share of a freshly written value
};

void validate(const AdapterConfig& cfg);

struct AdapterEntry {
  Embedding key;
  Embedding value;
  std::uint64_t last_write_step = 0;

  friend bool operator==(const AdapterEntry&, const AdapterEntry&) = default;
};

enum class UpdateKind { kMerged, kInserted, kEvicted };

struct QueryResult {
  std::size_t index = 0;
  double similarity = 0.0;
  const Embedding* value = nullptr;
};

/// Bounded key-value memory pairing visual keys with mixed visual/text values.
///
/// Writes are single-threaded; concurrent const access (query, refine) is
/// safe between writes. Only writes stamp an entry, queries never do.
class AdapterStore {
 public:
  explicit AdapterStore(AdapterConfig cfg = {});

  /// Rebuilds a store from a snapshot. Throws if entries exceed capacity,
  /// have mixed dimensions, or carry stamps at or beyond step_counter.
  static AdapterStore restore(AdapterConfig cfg, std::vector<AdapterEntry> entries,
                              std::uint64_t step_counter);

  const AdapterConfig& config() const noexcept { return cfg_; }
  const std::vector<AdapterEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t step_counter() const noexcept { return step_counter_; }
  std::optional<std::size_t> dim() const;

  /// Cosine argmax over keys; ties go to the lowest index.
  QueryResult query(const Embedding& v) const;

  /// Gated write: merge into the queried key when its value lies within
  /// delta of u, otherwise write the first empty slot or the stalest one.
  /// v and u are L2-normalized on entry.
  UpdateKind update(const Embedding& v, const Embedding& u);

  /// (v + value(query(v))) / 2, or v itself when the store is empty.
  Embedding refine(const Embedding& v) const;

  /// Slot with the oldest write; ties go to the lowest index.
  std::size_t stalest() const;

  friend bool operator==(const AdapterStore&, const AdapterStore&);

 private:
  AdapterConfig cfg_;
  std::vector<AdapterEntry> entries_;
  std::vector<double> key_norms_;  // parallel to entries_
  std::uint64_t step_counter_ = 0;
};

}  // namespace roughcount
