#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace roughcount {

/// Largest count representable by the three-place codec.
inline constexpr int kMaxCount = 999;
inline constexpr int kCandidatesPerStage = 10;
inline constexpr int kStageCount = 3;

/// Decoding stages, coarse to fine. The enumerator order is the decoding order.
enum class Stage { kHundreds = 0, kTens = 1, kUnits = 2 };

inline constexpr std::array<Stage, kStageCount> kStages = {Stage::kHundreds, Stage::kTens,
                                                         Stage::kUnits};

std::string_view to_string(Stage stage);

/// Per-place supervision labels for one count.
///
/// The hundreds and tens labels are band midpoints (123 -> 150, 125); the
/// units label is the count itself.
struct DigitLabels {
  int hundreds_label = 50;
  int tens_label = 5;
  int units_label = 0;

  int at(Stage stage) const;
  friend bool operator==(const DigitLabels&, const DigitLabels&) = default;
};

struct Digits {
  int hundreds = 0;
  int tens = 0;
  int units = 0;

  friend bool operator==(const Digits&, const Digits&) = default;
};

/// The ten labels matched at one stage, strictly increasing.
struct CandidateSet {
  Stage stage = Stage::kHundreds;
  std::array<int, kCandidatesPerStage> labels{};
};

DigitLabels encode_places(int count);

CandidateSet stage_candidates(Stage stage, std::optional<int> hundreds_digit = std::nullopt,
                              std::optional<int> tens_digit = std::nullopt);

int compose(int hundreds, int tens, int units);
inline int compose(const Digits& d) { return compose(d.hundreds, d.tens, d.units); }

Digits decompose(int count);

/// Digit of `label` at the place `stage` decides (hundreds/tens/units).
int place_digit(Stage stage, int label);

}  // namespace roughcount
