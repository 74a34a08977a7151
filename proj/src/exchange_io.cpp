#include "roughcount/exchange_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "roughcount/error.hpp"

namespace roughcount::io {
namespace {

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const std::byte* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return value;
}

void check_tag(std::string_view tag) {
  if (tag.empty() || tag.size() > kTagBytes) {
    throw Error(ErrorCode::kInvalidArgument, "section tag must be 1..16 bytes: '" +
                                                 std::string(tag) + "'");
  }
  for (char c : tag) {
    if (c < 0x21 || c > 0x7E) {
      throw Error(ErrorCode::kInvalidArgument, "section tag must be printable ASCII without spaces");
    }
  }
}

// Returns 0 when the product does not fit.
std::uint64_t checked_payload_bytes(std::uint64_t rows, std::uint32_t dim, std::size_t elem) {
  if (dim == 0 || rows == 0) return 0;
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  if (rows > max / dim) return 0;
  const std::uint64_t n = rows * dim;
  if (n > max / elem) return 0;
  return n * elem;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
  }
  throw Error(ErrorCode::kDTypeUnknown, "dtype code " +
                                            std::to_string(static_cast<std::uint32_t>(dtype)));
}

std::string_view to_string(DType dtype) {
  return dtype == DType::kF32 ? "f32" : "f64";
}

bool is_known_tag(std::string_view tag) {
  static constexpr std::array kKnown = {tags::kEmbImg,  tags::kEmbTxt, tags::kCounts,
                                        tags::kExperts, tags::kAdapter, tags::kModel,
                                        tags::kFeatures, tags::kLabels};
  return std::find(kKnown.begin(), kKnown.end(), tag) != kKnown.end();
}

Section Section::from_f64(std::string tag, std::uint64_t rows, std::uint32_t dim,
                          std::span<const double> values) {
  if (values.size() != rows * dim) {
    throw Error(ErrorCode::kLengthMismatch, "section " + tag + ": " + std::to_string(values.size()) +
                                                " values for " + std::to_string(rows) + "x" +
                                                std::to_string(dim));
  }
  Section s{std::move(tag), DType::kF64, rows, dim, {}};
  s.payload.reserve(values.size() * 8);
  for (double v : values) put_le(s.payload, std::bit_cast<std::uint64_t>(v));
  return s;
}

Section Section::from_f32(std::string tag, std::uint64_t rows, std::uint32_t dim,
                          std::span<const float> values) {
  if (values.size() != rows * dim) {
    throw Error(ErrorCode::kLengthMismatch, "section " + tag + ": " + std::to_string(values.size()) +
                                                " values for " + std::to_string(rows) + "x" +
                                                std::to_string(dim));
  }
  Section s{std::move(tag), DType::kF32, rows, dim, {}};
  s.payload.reserve(values.size() * 4);
  for (float v : values) put_le(s.payload, std::bit_cast<std::uint32_t>(v));
  return s;
}

std::vector<double> Section::values() const {
  const std::size_t elem = dtype_size(dtype);
  std::vector<double> out(payload.size() / elem);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::byte* p = payload.data() + i * elem;
    out[i] = dtype == DType::kF64 ? std::bit_cast<double>(get_le<std::uint64_t>(p))
                                  : static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
  }
  return out;
}

double Section::at(std::uint64_t row, std::uint32_t col) const {
  if (row >= rows || col >= dim) {
    throw Error(ErrorCode::kOutOfRange, "section " + tag + " index (" + std::to_string(row) + ", " +
                                            std::to_string(col) + ") outside " +
                                            std::to_string(rows) + "x" + std::to_string(dim));
  }
  const std::size_t elem = dtype_size(dtype);
  const std::byte* p = payload.data() + (row * dim + col) * elem;
  return dtype == DType::kF64 ? std::bit_cast<double>(get_le<std::uint64_t>(p))
                              : static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
}

const Section* Container::find(std::string_view tag) const {
  for (const Section& s : sections) {
    if (s.tag == tag) return &s;
  }
  return nullptr;
}

const Section& Container::require(std::string_view tag) const {
  if (const Section* s = find(tag)) return *s;
  throw Error(ErrorCode::kInvalidArgument, "container has no " + std::string(tag) + " section");
}

std::vector<std::byte> encode(std::span<const Section> sections) {
  if (sections.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "too many sections");
  }
  std::size_t total = kHeaderBytes;
  for (const Section& s : sections) {
    check_tag(s.tag);
    const std::uint64_t expect = checked_payload_bytes(s.rows, s.dim, dtype_size(s.dtype));
    if (s.payload.size() != expect) {
      throw Error(ErrorCode::kInvalidArgument,
                  "section " + s.tag + ": payload is " + std::to_string(s.payload.size()) +
                      " bytes, shape needs " + std::to_string(expect));
    }
    total += kSectionHeaderBytes + s.payload.size();
  }

  std::vector<std::byte> out;
  out.reserve(total);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le(out, kFormatVersion);
  put_le(out, static_cast<std::uint32_t>(sections.size()));
  for (const Section& s : sections) {
    std::array<std::byte, kTagBytes> tag{};
    std::memcpy(tag.data(), s.tag.data(), s.tag.size());
    out.insert(out.end(), tag.begin(), tag.end());
    put_le(out, static_cast<std::uint32_t>(s.dtype));
    put_le(out, s.rows);
    put_le(out, s.dim);
    out.insert(out.end(), s.payload.begin(), s.payload.end());
  }
  return out;
}

Container decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char c, std::byte b) { return static_cast<std::byte>(c) == b; })) {
    throw Error(ErrorCode::kBadMagic, "not a PRCC container");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload, "header cut short at " + std::to_string(bytes.size()) +
                                                  " bytes");
  }
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "format version " + std::to_string(version) +
                                                    " (supported: " +
                                                    std::to_string(kFormatVersion) + ")");
  }
  const auto count = get_le<std::uint32_t>(bytes.data() + 8);

  Container c;
  std::size_t at = kHeaderBytes;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (bytes.size() - at < kSectionHeaderBytes) {
      throw Error(ErrorCode::kTruncatedPayload, "section " + std::to_string(i) +
                                                    " header runs past end of file");
    }
    const auto* tag_begin = reinterpret_cast<const char*>(bytes.data() + at);
    const std::size_t tag_len =
        static_cast<std::size_t>(std::find(tag_begin, tag_begin + kTagBytes, '\0') - tag_begin);
    std::string tag(tag_begin, tag_len);
    at += kTagBytes;
    const auto dtype_code = get_le<std::uint32_t>(bytes.data() + at);
    const auto rows = get_le<std::uint64_t>(bytes.data() + at + 4);
    const auto dim = get_le<std::uint32_t>(bytes.data() + at + 12);
    at += 16;
    if (dtype_code != 1 && dtype_code != 2) {
      throw Error(ErrorCode::kDTypeUnknown, "section " + tag + ": dtype code " +
                                                std::to_string(dtype_code));
    }
    const auto dtype = static_cast<DType>(dtype_code);
    const std::uint64_t need = checked_payload_bytes(rows, dim, dtype_size(dtype));
    if ((need == 0 && rows != 0 && dim != 0) || need > bytes.size() - at) {
      throw Error(ErrorCode::kTruncatedPayload,
                  "section " + tag + " declares " + std::to_string(rows) + "x" +
                      std::to_string(dim) + " " + std::string(to_string(dtype)) + " but only " +
                      std::to_string(bytes.size() - at) + " bytes remain");
    }
    if (is_known_tag(tag)) {
      Section s{std::move(tag), dtype, rows, dim, {}};
      s.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                       bytes.begin() + static_cast<std::ptrdiff_t>(at + need));
      c.sections.push_back(std::move(s));
    } else {
      c.skipped_tags.push_back(std::move(tag));
    }
    at += need;
  }
  return c;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::kIo, "short read on " + path.string());
  return bytes;
}

std::size_t write_container(const std::filesystem::path& path, std::span<const Section> sections) {
  const std::vector<std::byte> bytes = encode(sections);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed on " + path.string());
  return bytes.size();
}

Container read_container(const std::filesystem::path& path) {
  return decode(read_file(path));
}

}  // namespace roughcount::io
