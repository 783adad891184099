#include "rcov/textparse.hpp"

#include <array>
#include <cstdlib>
#include <unordered_set>

#include "rcov/errors.hpp"
#include "rcov/strings.hpp"

namespace rcov {
namespace {

// Length of a real-number literal starting at pos, or 0 when there is none.
// Grammar: [+-]? (D+ ('.' D*)? | '.' D+) ([eE] [+-]? D+)?
std::size_t scan_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++frac_digits;
  }
  if (int_digits == 0 && frac_digits == 0) return 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    std::size_t exp_digits = 0;
    while (j < s.size() && is_digit(s[j])) ++j, ++exp_digits;
    if (exp_digits > 0) i = j;
  }
  return i - pos;
}

double to_double(std::string_view token) {
  // strtod needs a terminator; tokens are short.
  const std::string buf(token);
  return std::strtod(buf.c_str(), nullptr);
}

void skip_spaces(std::string_view s, std::size_t& i) {
  while (i < s.size() && is_space(s[i])) ++i;
}

struct ListMatch {
  std::array<double, 4> values{};
  std::size_t end = 0;  // one past the closing bracket
};

// Tries to read "n, n, n, n]" starting right after an opening bracket.
std::optional<ListMatch> match_list(std::string_view s, std::size_t i) {
  ListMatch m;
  std::size_t count = 0;
  skip_spaces(s, i);
  for (;;) {
    const auto len = scan_number(s, i);
    if (len == 0 || count == 4) return std::nullopt;
    m.values[count++] = to_double(s.substr(i, len));
    i += len;
    const auto before_ws = i;
    skip_spaces(s, i);
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ']') {
      if (count != 4) return std::nullopt;
      m.end = i + 1;
      return m;
    }
    if (s[i] == ',') {
      ++i;
      skip_spaces(s, i);
    } else if (i == before_ws) {
      return std::nullopt;  // numbers must be separated
    }
  }
}

bool has_non_space(std::string_view s) {
  for (char c : s)
    if (!is_space(c)) return true;
  return false;
}

}  // namespace

ParseOutcome<BBoxNorm> parse_bbox(std::string_view text) {
  ParseOutcome<BBoxNorm> out;
  for (std::size_t open = text.find('['); open != std::string_view::npos;
       open = text.find('[', open + 1)) {
    auto m = match_list(text, open + 1);
    if (!m) continue;

    if (has_non_space(text.substr(0, open)) || has_non_space(text.substr(m->end))) {
      out.diagnostics.emplace_back(diag::kExtraText);
    }
    bool clamped = false;
    for (auto& v : m->values) {
      if (v < 0.0) v = 0.0, clamped = true;
      if (v > 1.0) v = 1.0, clamped = true;
      v += 0.0;  // folds -0.0 into +0.0
    }
    if (clamped) out.diagnostics.emplace_back(diag::kClamped);

    const auto [x0, y0, x1, y1] = m->values;
    if (!(x0 < x1) || !(y0 < y1)) {
      out.diagnostics.emplace_back(diag::kDegenerate);
      return out;
    }
    out.value.emplace(x0, y0, x1, y1);
    return out;
  }
  out.diagnostics.emplace_back(diag::kNoList);
  return out;
}

ParseOutcome<Vote> parse_yes_no(std::string_view text) {
  ParseOutcome<Vote> out;
  std::size_t i = 0;
  while (i < text.size() && !is_alnum(text[i])) ++i;
  const auto start = i;
  while (i < text.size() && is_alnum(text[i])) ++i;
  const auto token = text.substr(start, i - start);

  if (iequals(token, "yes")) {
    out.value = Vote::yes;
  } else if (iequals(token, "no")) {
    out.value = Vote::no;
  } else {
    out.diagnostics.emplace_back(diag::kUnparseableVerdict);
    return out;
  }
  for (; i < text.size(); ++i) {
    if (is_alnum(text[i])) {
      out.diagnostics.emplace_back(diag::kExtraText);
      break;
    }
  }
  return out;
}

std::vector<std::string> parse_entities(std::string_view text) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (auto part : split(text, '.')) {
    auto name = to_lower(trim(part));
    if (name.empty() || seen.contains(name)) continue;
    seen.insert(name);
    names.push_back(std::move(name));
  }
  if (names.size() == 1 && names.front() == "none") names.clear();
  return names;
}

namespace {

// Position right after "<heading>[ws]:" where the heading starts a word, or npos.
std::size_t find_heading(std::string_view text, std::string_view heading) {
  for (std::size_t i = 0; i + heading.size() <= text.size(); ++i) {
    if (i > 0 && is_alpha(text[i - 1])) continue;
    if (!iequals(text.substr(i, heading.size()), heading)) continue;
    std::size_t j = i + heading.size();
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    if (j < text.size() && text[j] == ':') return j + 1;
  }
  return std::string_view::npos;
}

ScorePair read_score_pair(std::string_view text, std::string_view heading) {
  const auto start = find_heading(text, heading);
  const std::string label(heading);
  if (start == std::string_view::npos) {
    throw ParseError("judge reply has no " + label + " line", std::string(text));
  }
  auto blank = [&](std::size_t& i) {
    // '*' tolerates markdown emphasis such as "**Accuracy:** 6 8".
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == ',' || text[i] == '*')) {
      ++i;
    }
  };
  std::array<double, 2> scores{};
  std::size_t i = start;
  for (std::size_t k = 0; k < 2; ++k) {
    blank(i);
    const auto len = scan_number(text, i);
    if (len == 0) {
      throw ParseError(k == 0 ? label + ": scores missing" : label + ": two scores required",
                       std::string(text));
    }
    scores[k] = to_double(text.substr(i, len));
    if (!(scores[k] >= 1.0 && scores[k] <= 10.0)) {
      throw ParseError(label + ": score outside [1, 10]", std::string(text));
    }
    i += len;
  }
  return {scores[0], scores[1]};
}

}  // namespace

JudgeScores parse_judge_scores(std::string_view text) {
  return {read_score_pair(text, "Accuracy"), read_score_pair(text, "Relevancy")};
}

}  // namespace rcov
