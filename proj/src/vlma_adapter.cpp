#include "roughcount/vlma_adapter.hpp"

#include <cmath>
#include <string>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

Embedding mix(const Embedding& a, double wa, const Embedding& b, double wb) {
  std::vector<double> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = wa * a[i] + wb * b[i];
  return Embedding(std::move(out));
}

double distance(const Embedding& a, const Embedding& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorCode::kDimensionMismatch,
                "adapter dim " + std::to_string(expected) + " vs " + std::to_string(got));
  }
}

}  // namespace

void validate(const AdapterConfig& cfg) {
  if (cfg.capacity == 0) throw Error(ErrorCode::kInvalidArgument, "adapter capacity must be >= 1");
  if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta)) {
    throw Error(ErrorCode::kInvalidArgument, "adapter delta must be positive");
  }
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "adapter lambda must lie in [0, 1]");
  }
}

AdapterStore::AdapterStore(AdapterConfig cfg) : cfg_(cfg) { validate(cfg_); }

AdapterStore AdapterStore::restore(AdapterConfig cfg, std::vector<AdapterEntry> entries,
                                   std::uint64_t step_counter) {
  AdapterStore store(cfg);
  if (entries.size() > cfg.capacity) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot holds more entries than capacity");
  }
  for (const auto& e : entries) {
    check_dim(entries.front().key.dim(), e.key.dim());
    check_dim(entries.front().key.dim(), e.value.dim());
    if (!(e.key.norm() > kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector, "snapshot holds a zero key");
    }
    if (e.last_write_step >= step_counter) {
      throw Error(ErrorCode::kInvalidArgument, "entry stamp not older than the step counter");
    }
  }
  store.entries_ = std::move(entries);
  for (const auto& e : store.entries_) store.key_norms_.push_back(e.key.norm());
  store.step_counter_ = step_counter;
  return store;
}

std::optional<std::size_t> AdapterStore::dim() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().key.dim();
}

QueryResult AdapterStore::query(const Embedding& v) const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyStore, "query on an empty adapter store");
  check_dim(entries_.front().key.dim(), v.dim());
  const Embedding unit = l2_normalize(v);
  QueryResult best;
  best.similarity = -2.0;
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    const double s = dot(unit.values(), entries_[j].key.values()) / key_norms_[j];
    if (s > best.similarity) {
      best.similarity = s;
      best.index = j;
    }
  }
  best.value = &entries_[best.index].value;
  return best;
}

UpdateKind AdapterStore::update(const Embedding& v, const Embedding& u) {
  check_dim(v.dim(), u.dim());
  if (!entries_.empty()) check_dim(entries_.front().key.dim(), v.dim());
  const Embedding unit_v = l2_normalize(v);
  const Embedding unit_u = l2_normalize(u);
  const std::uint64_t stamp = step_counter_++;

  if (!entries_.empty()) {
    const QueryResult hit = query(unit_v);
    if (distance(*hit.value, unit_u) < cfg_.delta) {
      AdapterEntry& e = entries_[hit.index];
      e.key = l2_normalize(mix(e.key, 1.0, unit_v, 1.0));
      e.last_write_step = stamp;
      key_norms_[hit.index] = e.key.norm();
      return UpdateKind::kMerged;
    }
  }

  AdapterEntry fresh{unit_v, mix(unit_v, cfg_.lambda, unit_u, 1.0 - cfg_.lambda), stamp};
  if (entries_.size() < cfg_.capacity) {
    key_norms_.push_back(fresh.key.norm());
    entries_.push_back(std::move(fresh));
    return UpdateKind::kInserted;
  }
  const std::size_t m = stalest();
  key_norms_[m] = fresh.key.norm();
  entries_[m] = std::move(fresh);
  return UpdateKind::kEvicted;
}

Embedding AdapterStore::refine(const Embedding& v) const {
  if (entries_.empty()) return v;
  const QueryResult hit = query(v);
  return mix(v, 0.5, *hit.value, 0.5);
}

std::size_t AdapterStore::stalest() const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyStore, "stalest on an empty adapter store");
  std::size_t best = 0;
  for (std::size_t j = 1; j < entries_.size(); ++j) {
    if (entries_[j].last_write_step < entries_[best].last_write_step) best = j;
  }
  return best;
}

bool operator==(const AdapterStore& a, const AdapterStore& b) {
  return a.cfg_.capacity == b.cfg_.capacity && a.cfg_.delta == b.cfg_.delta &&
         a.cfg_.lambda == b.cfg_.lambda && a.step_counter_ == b.step_counter_ &&
         a.entries_ == b.entries_;
}

}  // namespace roughcount
