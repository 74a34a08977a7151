#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roughcount::io {

// Container layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "PRCC"
//   4       4     format version (u32, currently 1)
//   8       4     section count (u32)
//   then per section:
//           16    tag, ASCII, NUL-padded
//           4     dtype (u32): 1 = IEEE-754 single, 2 = IEEE-754 double
//           8     rows (u64)
//           4     dim (u32)
//           rows*dim*sizeof(dtype)  row-major payload
//
// Readers skip sections whose tag they do not know.

inline constexpr std::array<char, 4> kMagic = {'P', 'R', 'C', 'C'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::size_t kSectionHeaderBytes = kTagBytes + 4 + 8 + 4;

enum class DType : std::uint32_t { kF32 = 1, kF64 = 2 };

std::size_t dtype_size(DType dtype);
std::string_view to_string(DType dtype);

namespace tags {
inline constexpr std::string_view kEmbImg = "EMB_IMG";
inline constexpr std::string_view kEmbTxt = "EMB_TXT";
inline constexpr std::string_view kCounts = "COUNTS";
inline constexpr std::string_view kExperts = "EXPERTS";
inline constexpr std::string_view kAdapter = "ADAPTER";
inline constexpr std::string_view kModel = "MODEL";
inline constexpr std::string_view kFeatures = "FEATURES";  // toy dataset inputs
inline constexpr std::string_view kLabels = "LABELS";      // label list paired with EMB_TXT
}  // namespace tags

/// Tags this build understands; anything else is skipped on read.
bool is_known_tag(std::string_view tag);

/// One section. The payload is kept as raw little-endian bytes so a
/// read-then-write cycle reproduces the input exactly.
struct Section {
  std::string tag;
  DType dtype = DType::kF64;
  std::uint64_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<std::byte> payload;

  static Section from_f64(std::string tag, std::uint64_t rows, std::uint32_t dim,
                          std::span<const double> values);
  static Section from_f32(std::string tag, std::uint64_t rows, std::uint32_t dim,
                          std::span<const float> values);

  /// Payload decoded to doubles (single precision is widened exactly).
  std::vector<double> values() const;
  double at(std::uint64_t row, std::uint32_t col) const;

  std::size_t payload_bytes() const { return payload.size(); }

  friend bool operator==(const Section&, const Section&) = default;
};

struct Container {
  std::vector<Section> sections;
  /// Tags of sections that were present in the file but skipped.
  std::vector<std::string> skipped_tags;

  /// First section with this tag, or nullptr.
  const Section* find(std::string_view tag) const;
  const Section& require(std::string_view tag) const;
};

/// Serialized bytes. Throws InvalidArgument for malformed sections (bad tag,
/// payload length not rows*dim*dtype size).
std::vector<std::byte> encode(std::span<const Section> sections);

/// Parses bytes. Throws BadMagic, VersionUnsupported, TruncatedPayload or
/// DTypeUnknown.
Container decode(std::span<const std::byte> bytes);

/// Returns the number of bytes written.
std::size_t write_container(const std::filesystem::path& path, std::span<const Section> sections);
Container read_container(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);

}  // namespace roughcount::io
