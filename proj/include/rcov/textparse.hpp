#pragma once

// Extraction of structured values from free-form model replies. None of the
// parse_* functions throw on malformed text except parse_judge_scores, whose
// contract is all-or-nothing.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcov/domain.hpp"

namespace rcov {

namespace diag {
inline constexpr std::string_view kClamped = "clamped";
inline constexpr std::string_view kExtraText = "extra text ignored";
inline constexpr std::string_view kDegenerate = "degenerate";
inline constexpr std::string_view kNoList = "no coordinate list";
inline constexpr std::string_view kUnparseableVerdict = "unparseable verdict";
}  // namespace diag

/// A parsed value or the reasons there is none. An absent value always
/// comes with at least one diagnostic.
template <typename T>
struct ParseOutcome {
  std::optional<T> value;
  std::vector<std::string> diagnostics;

  bool has_value() const noexcept { return value.has_value(); }
  bool has_diagnostic(std::string_view d) const noexcept {
    for (const auto& x : diagnostics)
      if (x == d) return true;
    return false;
  }
};

/// First bracketed list of exactly four reals, clamped to [0,1]. Inverted or
/// zero-area boxes come back absent with "degenerate".
ParseOutcome<BBoxNorm> parse_bbox(std::string_view text);

/// Leading yes/no token, case-insensitive, ignoring surrounding punctuation.
ParseOutcome<Vote> parse_yes_no(std::string_view text);

/// Period-separated object list: trimmed, lowercased, deduplicated in first
/// occurrence order. A lone "None" means no entities.
std::vector<std::string> parse_entities(std::string_view text);

struct ScorePair {
  double first = 0.0;
  double second = 0.0;
  friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

struct JudgeScores {
  ScorePair accuracy;
  ScorePair relevancy;
  friend bool operator==(const JudgeScores&, const JudgeScores&) = default;
};

/// Reads the "Accuracy:" and "Relevancy:" headings (any case), each followed
/// by two scores in [1, 10]. Throws ParseError with the raw reply attached.
JudgeScores parse_judge_scores(std::string_view text);

}  // namespace rcov
