#include "roughcount/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughcount/error.hpp"

namespace roughcount::io {
namespace {

// Largest integer below which every double is an exact integer.
constexpr double kExactLimit = 9007199254740992.0;  // 2^53

std::uint64_t as_uint(double x, const std::string& what) {
  if (!(x >= 0.0) || x >= kExactLimit || std::floor(x) != x) {
    throw Error(ErrorCode::kInvalidArgument, what + " is not a non-negative integer: " +
                                                 std::to_string(x));
  }
  return static_cast<std::uint64_t>(x);
}

int as_count(double x, const std::string& what) {
  const std::uint64_t v = as_uint(x, what);
  if (v > 999) throw Error(ErrorCode::kOutOfRange, what + " " + std::to_string(v) + " exceeds 999");
  return static_cast<int>(v);
}

void expect_shape(const Section& s, std::string_view tag) {
  if (s.tag != tag) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected a " + std::string(tag) + " section, got " + s.tag);
  }
}

}  // namespace

Section embeddings_section(std::string tag, std::span<const Embedding> rows, DType dtype) {
  const std::uint32_t dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().dim());
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const Embedding& e : rows) {
    if (e.dim() != dim) throw Error(ErrorCode::kDimensionMismatch, "ragged embedding rows");
    flat.insert(flat.end(), e.values().begin(), e.values().end());
  }
  if (dtype == DType::kF64) return Section::from_f64(std::move(tag), rows.size(), dim, flat);
  std::vector<float> narrow(flat.begin(), flat.end());
  return Section::from_f32(std::move(tag), rows.size(), dim, narrow);
}

std::vector<Embedding> embeddings_from(const Section& s) {
  if (s.rows > 0 && s.dim == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "section " + s.tag + " has zero-width rows");
  }
  const std::vector<double> flat = s.values();
  std::vector<Embedding> out;
  out.reserve(s.rows);
  for (std::uint64_t r = 0; r < s.rows; ++r) {
    out.emplace_back(std::span<const double>(flat.data() + r * s.dim, s.dim));
  }
  return out;
}

Section integers_section(std::string tag, std::span<const int> values) {
  std::vector<double> flat(values.begin(), values.end());
  return Section::from_f64(std::move(tag), values.size(), 1, flat);
}

std::vector<int> integers_from(const Section& s) {
  if (s.dim != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "section " + s.tag + " must have dim 1, has " +
                                                   std::to_string(s.dim));
  }
  std::vector<int> out;
  out.reserve(s.rows);
  for (double x : s.values()) out.push_back(as_count(x, s.tag + " entry"));
  return out;
}

Section experts_section(std::span<const ExpertRecord> records) {
  if (records.empty()) return Section::from_f64(std::string(tags::kExperts), 0, 2, {});
  const std::size_t n = records.front().annotation.expert_labels.size();
  std::vector<double> flat;
  flat.reserve(records.size() * (2 + n));
  for (const ExpertRecord& r : records) {
    if (r.annotation.expert_labels.size() != n) {
      throw Error(ErrorCode::kLengthMismatch, "every record needs the same number of experts");
    }
    flat.push_back(static_cast<double>(r.id));
    flat.push_back(r.annotation.gt);
    flat.insert(flat.end(), r.annotation.expert_labels.begin(), r.annotation.expert_labels.end());
  }
  return Section::from_f64(std::string(tags::kExperts), records.size(),
                           static_cast<std::uint32_t>(2 + n), flat);
}

std::vector<ExpertRecord> experts_from(const Section& s) {
  expect_shape(s, tags::kExperts);
  if (s.dim < 2 || (s.rows > 0 && s.dim < 3)) {
    throw Error(ErrorCode::kDimensionMismatch, "EXPERTS rows need id, gt and at least one expert");
  }
  const std::vector<double> flat = s.values();
  std::vector<ExpertRecord> out(s.rows);
  for (std::uint64_t r = 0; r < s.rows; ++r) {
    const double* row = flat.data() + r * s.dim;
    ExpertRecord& rec = out[r];
    rec.id = as_uint(row[0], "EXPERTS id");
    rec.annotation.gt = as_count(row[1], "EXPERTS gt");
    for (std::uint32_t k = 2; k < s.dim; ++k) {
      rec.annotation.expert_labels.push_back(as_count(row[k], "EXPERTS label"));
    }
    const auto [mn, mx] = std::minmax_element(rec.annotation.expert_labels.begin(),
                                              rec.annotation.expert_labels.end());
    rec.annotation.lo = *mn;
    rec.annotation.hi = *mx;
  }
  return out;
}

Section adapter_section(const AdapterStore& store) {
  const std::size_t d = store.dim().value_or(0);
  const auto width = static_cast<std::uint32_t>(std::max<std::size_t>(2 * d + 1, 5));
  std::vector<double> flat((store.size() + 1) * width, 0.0);
  const AdapterConfig& cfg = store.config();
  flat[0] = static_cast<double>(store.step_counter());
  flat[1] = static_cast<double>(cfg.capacity);
  flat[2] = cfg.delta;
  flat[3] = cfg.lambda;
  flat[4] = static_cast<double>(d);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const AdapterEntry& e = store.entries()[i];
    double* row = flat.data() + (i + 1) * width;
    std::copy(e.key.values().begin(), e.key.values().end(), row);
    std::copy(e.value.values().begin(), e.value.values().end(), row + d);
    row[2 * d] = static_cast<double>(e.last_write_step);
  }
  return Section::from_f64(std::string(tags::kAdapter), store.size() + 1, width, flat);
}

AdapterStore adapter_from(const Section& s) {
  expect_shape(s, tags::kAdapter);
  if (s.rows < 1 || s.dim < 5) {
    throw Error(ErrorCode::kDimensionMismatch, "ADAPTER section needs a header row of width >= 5");
  }
  const std::vector<double> flat = s.values();
  const std::uint64_t step = as_uint(flat[0], "ADAPTER step counter");
  AdapterConfig cfg;
  cfg.capacity = as_uint(flat[1], "ADAPTER capacity");
  cfg.delta = flat[2];
  cfg.lambda = flat[3];
  const std::uint64_t d = as_uint(flat[4], "ADAPTER dim");
  if (s.dim != std::max<std::uint64_t>(2 * d + 1, 5)) {
    throw Error(ErrorCode::kDimensionMismatch, "ADAPTER row width does not match d = " +
                                                   std::to_string(d));
  }
  if (s.rows > 1 && d == 0) throw Error(ErrorCode::kDimensionMismatch, "ADAPTER entries with d = 0");
  std::vector<AdapterEntry> entries;
  entries.reserve(s.rows - 1);
  for (std::uint64_t r = 1; r < s.rows; ++r) {
    const double* row = flat.data() + r * s.dim;
    entries.push_back(AdapterEntry{Embedding(std::span<const double>(row, d)),
                                   Embedding(std::span<const double>(row + d, d)),
                                   as_uint(row[2 * d], "ADAPTER stamp")});
  }
  validate(cfg);
  return AdapterStore::restore(cfg, std::move(entries), step);
}

Section model_section(const toy::ToyImageEncoder& encoder) {
  const toy::EncoderShape& shape = encoder.shape();
  std::vector<double> flat;
  flat.reserve(kModelHeaderWidth + encoder.params().size());
  flat.push_back(kModelFormat);
  flat.push_back(static_cast<double>(static_cast<int>(shape.kind)));
  flat.push_back(static_cast<double>(shape.input_dim));
  flat.push_back(static_cast<double>(shape.kind == toy::EncoderKind::kMlp ? shape.hidden_dim : 0));
  flat.push_back(static_cast<double>(shape.output_dim));
  flat.push_back(static_cast<double>(static_cast<int>(shape.activation)));
  flat.push_back(static_cast<double>(encoder.seed() & 0xFFFFFFFFULL));
  flat.push_back(static_cast<double>(encoder.seed() >> 32));
  flat.insert(flat.end(), encoder.params().begin(), encoder.params().end());
  return Section::from_f64(std::string(tags::kModel), 1, static_cast<std::uint32_t>(flat.size()),
                           flat);
}

toy::ToyImageEncoder model_from(const Section& s) {
  expect_shape(s, tags::kModel);
  if (s.rows != 1 || s.dim < kModelHeaderWidth) {
    throw Error(ErrorCode::kDimensionMismatch, "MODEL section must be one row with an 8-field header");
  }
  const std::vector<double> flat = s.values();
  if (as_uint(flat[0], "MODEL format") != kModelFormat) {
    throw Error(ErrorCode::kVersionUnsupported, "MODEL format " + std::to_string(flat[0]));
  }
  toy::EncoderShape shape;
  const std::uint64_t kind = as_uint(flat[1], "MODEL kind");
  if (kind != 1 && kind != 2) {
    throw Error(ErrorCode::kInvalidArgument, "MODEL kind " + std::to_string(kind));
  }
  shape.kind = static_cast<toy::EncoderKind>(kind);
  shape.input_dim = as_uint(flat[2], "MODEL input_dim");
  shape.hidden_dim = as_uint(flat[3], "MODEL hidden_dim");
  shape.output_dim = as_uint(flat[4], "MODEL output_dim");
  if (as_uint(flat[5], "MODEL activation") != static_cast<std::uint64_t>(toy::Activation::kTanh)) {
    throw Error(ErrorCode::kInvalidArgument, "MODEL activation tag unknown");
  }
  const std::uint64_t seed = as_uint(flat[6], "MODEL seed") | (as_uint(flat[7], "MODEL seed") << 32);
  std::vector<double> params(flat.begin() + kModelHeaderWidth, flat.end());
  return toy::ToyImageEncoder(shape, std::move(params), seed);
}

std::vector<Section> dataset_sections(std::span<const toy::CountSample> samples) {
  const std::uint32_t dim =
      samples.empty() ? 0 : static_cast<std::uint32_t>(samples.front().features.size());
  std::vector<double> features;
  features.reserve(samples.size() * dim);
  std::vector<int> counts;
  std::vector<ExpertRecord> experts;
  for (const toy::CountSample& s : samples) {
    if (s.features.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "ragged features");
    features.insert(features.end(), s.features.begin(), s.features.end());
    counts.push_back(s.true_count);
    experts.push_back(ExpertRecord{s.id, s.annotation});
  }
  std::vector<Section> out;
  out.push_back(Section::from_f64(std::string(tags::kFeatures), samples.size(), dim, features));
  out.push_back(integers_section(std::string(tags::kCounts), counts));
  out.push_back(experts_section(experts));
  return out;
}

std::vector<toy::CountSample> dataset_from(const Container& c) {
  const Section& feats = c.require(tags::kFeatures);
  const std::vector<int> counts = integers_from(c.require(tags::kCounts));
  if (counts.size() != feats.rows) {
    throw Error(ErrorCode::kLengthMismatch, "FEATURES and COUNTS row counts differ");
  }
  std::vector<ExpertRecord> experts;
  if (const Section* e = c.find(tags::kExperts)) {
    experts = experts_from(*e);
    if (experts.size() != counts.size()) {
      throw Error(ErrorCode::kLengthMismatch, "EXPERTS and COUNTS row counts differ");
    }
  }
  const std::vector<double> flat = feats.values();
  std::vector<toy::CountSample> out(counts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    toy::CountSample& s = out[i];
    s.features.assign(flat.begin() + static_cast<std::ptrdiff_t>(i * feats.dim),
                      flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * feats.dim));
    s.true_count = counts[i];
    if (experts.empty()) {
      s.id = i;
      s.annotation = RoughAnnotation{counts[i], {counts[i]}, counts[i], counts[i]};
    } else {
      if (experts[i].annotation.gt != counts[i]) {
        throw Error(ErrorCode::kInvalidArgument, "EXPERTS gt disagrees with COUNTS at row " +
                                                     std::to_string(i));
      }
      s.id = experts[i].id;
      s.annotation = experts[i].annotation;
    }
  }
  return out;
}

}  // namespace roughcount::io
