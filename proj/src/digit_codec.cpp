#include "roughcount/digit_codec.hpp"

#include <string>

#include "roughcount/error.hpp"

namespace roughcount {
namespace {

void check_count(int count) {
  if (count < 0 || count > kMaxCount) {
    throw Error(ErrorCode::kOutOfRange,
                "count " + std::to_string(count) + " outside [0, " + std::to_string(kMaxCount) + "]");
  }
}

void check_digit(int digit, ErrorCode code) {
  if (digit < 0 || digit > 9) {
    throw Error(code, "digit " + std::to_string(digit) + " outside [0, 9]");
  }
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kHundreds: return "hundreds";
    case Stage::kTens: return "tens";
    case Stage::kUnits: return "units";
  }
  return "?";
}

int DigitLabels::at(Stage stage) const {
  switch (stage) {
    case Stage::kHundreds: return hundreds_label;
    case Stage::kTens: return tens_label;
    case Stage::kUnits: return units_label;
  }
  return units_label;
}

DigitLabels encode_places(int count) {
  check_count(count);
  return DigitLabels{100 * (count / 100) + 50, 10 * (count / 10) + 5, count};
}

CandidateSet stage_candidates(Stage stage, std::optional<int> hundreds_digit,
                              std::optional<int> tens_digit) {
  CandidateSet set;
  set.stage = stage;
  int base = 0;
  int step = 1;
  switch (stage) {
    case Stage::kHundreds:
      base = 50;
      step = 100;
      break;
    case Stage::kTens:
      if (!hundreds_digit) {
        throw Error(ErrorCode::kMissingPriorDigit, "tens stage needs the hundreds digit");
      }
      check_digit(*hundreds_digit, ErrorCode::kDigitOutOfRange);
      base = 100 * *hundreds_digit + 5;
      step = 10;
      break;
    case Stage::kUnits:
      if (!hundreds_digit || !tens_digit) {
        throw Error(ErrorCode::kMissingPriorDigit, "units stage needs hundreds and tens digits");
      }
      check_digit(*hundreds_digit, ErrorCode::kDigitOutOfRange);
      check_digit(*tens_digit, ErrorCode::kDigitOutOfRange);
      base = 100 * *hundreds_digit + 10 * *tens_digit;
      step = 1;
      break;
  }
  for (int i = 0; i < kCandidatesPerStage; ++i) set.labels[i] = base + i * step;
  return set;
}

int compose(int hundreds, int tens, int units) {
  check_digit(hundreds, ErrorCode::kDigitOutOfRange);
  check_digit(tens, ErrorCode::kDigitOutOfRange);
  check_digit(units, ErrorCode::kDigitOutOfRange);
  return 100 * hundreds + 10 * tens + units;
}

Digits decompose(int count) {
  check_count(count);
  return Digits{count / 100, (count / 10) % 10, count % 10};
}

int place_digit(Stage stage, int label) {
  check_count(label);
  switch (stage) {
    case Stage::kHundreds: return label / 100;
    case Stage::kTens: return (label / 10) % 10;
    case Stage::kUnits: return label % 10;
  }
  return 0;
}

}  // namespace roughcount
