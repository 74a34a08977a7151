#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roughcount/embedding.hpp"
#include "roughcount/exchange_io.hpp"
#include "roughcount/rough_labels.hpp"
#include "roughcount/toy/dataset.hpp"
#include "roughcount/toy/encoder.hpp"
#include "roughcount/vlma_adapter.hpp"

// Typed views over exchange sections. Integers travel as exactly
// representable doubles and are checked on the way back in.
namespace roughcount::io {

Section embeddings_section(std::string tag, std::span<const Embedding> rows,
                           DType dtype = DType::kF64);
std::vector<Embedding> embeddings_from(const Section& s);

/// COUNTS and LABELS: one integer per row, dim 1.
Section integers_section(std::string tag, std::span<const int> values);
std::vector<int> integers_from(const Section& s);

/// EXPERTS: one row per sample, [id, gt, expert_1 .. expert_n]. All rows
/// share n. lo and hi are recomputed as the min and max expert label.
struct ExpertRecord {
  std::uint64_t id = 0;
  RoughAnnotation annotation;
};
Section experts_section(std::span<const ExpertRecord> records);
std::vector<ExpertRecord> experts_from(const Section& s);

/// ADAPTER: row 0 is [step_counter, capacity, delta, lambda, d, 0...];
/// each later row is [key (d), value (d), last_write_step]. Row width is
/// max(2d + 1, 5). Always double precision.
Section adapter_section(const AdapterStore& store);
AdapterStore adapter_from(const Section& s);

/// MODEL: a single row [format, kind, input_dim, hidden_dim, output_dim,
/// activation, seed_lo32, seed_hi32, params...]. Always double precision.
inline constexpr std::uint32_t kModelFormat = 1;
inline constexpr std::uint32_t kModelHeaderWidth = 8;
Section model_section(const toy::ToyImageEncoder& encoder);
toy::ToyImageEncoder model_from(const Section& s);

/// FEATURES + COUNTS + EXPERTS for a toy dataset.
std::vector<Section> dataset_sections(std::span<const toy::CountSample> samples);
/// Needs FEATURES and COUNTS; EXPERTS is optional (exact annotations and row
/// index ids otherwise).
std::vector<toy::CountSample> dataset_from(const Container& c);

}  // namespace roughcount::io
