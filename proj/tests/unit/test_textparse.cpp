#include <gtest/gtest.h>

#include <regex>

#include "rcov/errors.hpp"
#include "rcov/strings.hpp"
#include "rcov/textparse.hpp"
#include "test_support.hpp"

using namespace rcov;

namespace {

void expect_box(const ParseOutcome<BBoxNorm>& o, double a, double b, double c, double d) {
  ASSERT_TRUE(o.value) << "diagnostics: " << join(o.diagnostics, "; ");
  EXPECT_DOUBLE_EQ(o.value->x_min(), a);
  EXPECT_DOUBLE_EQ(o.value->y_min(), b);
  EXPECT_DOUBLE_EQ(o.value->x_max(), c);
  EXPECT_DOUBLE_EQ(o.value->y_max(), d);
}

// Regular-grammar reference for parse_bbox, written against std::regex.
std::optional<std::array<double, 4>> regex_first_list(const std::string& text) {
  static const std::string num = R"([+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)";
  static const std::string sep = R"((?:[ \t\n\r\f\v]*,[ \t\n\r\f\v]*|[ \t\n\r\f\v]+))";
  static const std::regex list("^[ \\t\\n\\r\\f\\v]*(" + num + ")" + sep + "(" + num + ")" + sep +
                               "(" + num + ")" + sep + "(" + num + ")[ \\t\\n\\r\\f\\v]*\\]");
  for (std::size_t open = text.find('['); open != std::string::npos;
       open = text.find('[', open + 1)) {
    std::smatch m;
    const std::string tail = text.substr(open + 1);
    if (std::regex_search(tail, m, list, std::regex_constants::match_continuous)) {
      std::array<double, 4> v{};
      for (int k = 0; k < 4; ++k) v[static_cast<std::size_t>(k)] = std::stod(m[k + 1].str());
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST(ParseBBox, Examples) {
  const auto a = parse_bbox("[0.12, 0.30, 0.55, 0.78]");
  expect_box(a, 0.12, 0.30, 0.55, 0.78);
  EXPECT_TRUE(a.diagnostics.empty());

  const auto b = parse_bbox("The box is [0.1,0.2,0.3,0.4].");
  expect_box(b, 0.1, 0.2, 0.3, 0.4);
  EXPECT_TRUE(b.has_diagnostic(diag::kExtraText));

  const auto c = parse_bbox("[1.2, -0.1, 0.5, 0.9]");
  EXPECT_FALSE(c.value);
  EXPECT_TRUE(c.has_diagnostic(diag::kDegenerate));
  EXPECT_TRUE(c.has_diagnostic(diag::kClamped));
}

TEST(ParseBBox, Variants) {
  expect_box(parse_bbox("[0.1 0.2 0.3 0.4]"), 0.1, 0.2, 0.3, 0.4);
  expect_box(parse_bbox("[ .1 ,\n.2, 3e-1 , 4E-1 ]"), 0.1, 0.2, 0.3, 0.4);
  expect_box(parse_bbox("[1, 2, 3] then [0.0, 0.0, 0.5, 0.5]"), 0.0, 0.0, 0.5, 0.5);
  // First list of exactly four wins even when a later one is also valid.
  expect_box(parse_bbox("[0.1,0.1,0.2,0.2] [0.3,0.3,0.4,0.4]"), 0.1, 0.1, 0.2, 0.2);
  const auto clamped = parse_bbox("[-0.2, 0.1, 1.3, 0.5]");
  expect_box(clamped, 0.0, 0.1, 1.0, 0.5);
  EXPECT_TRUE(clamped.has_diagnostic(diag::kClamped));
  EXPECT_FALSE(std::signbit(clamped.value->x_min()));
}

TEST(ParseBBox, AbsentCases) {
  for (const char* text : {"", "I cannot find it", "[0.1, 0.2, 0.3]", "[0.1,0.2,0.3,0.4,0.5]",
                           "[a, b, c, d]", "[0.1, 0.2, 0.3, 0.4", "[0.1,,0.2,0.3,0.4]"}) {
    const auto o = parse_bbox(text);
    EXPECT_FALSE(o.value) << text;
    EXPECT_FALSE(o.diagnostics.empty()) << text;
  }
  EXPECT_TRUE(parse_bbox("nothing").has_diagnostic(diag::kNoList));
  EXPECT_TRUE(parse_bbox("[0.9,0.1,0.2,0.3]").has_diagnostic(diag::kDegenerate));
  EXPECT_TRUE(parse_bbox("[0.5,0.1,0.5,0.3]").has_diagnostic(diag::kDegenerate));
}

TEST(ParseBBox, MatchesRegexOracleOnFuzz) {
  rcov::testing::Gen g(2024);
  for (int iter = 0; iter < 3000; ++iter) {
    std::string text = g.parser_text(48);
    if (g.coin(0.3)) {
      text += "[" + std::to_string(g.unit() * 1.4 - 0.2) + (g.coin() ? ", " : " ") +
              std::to_string(g.unit()) + "," + std::to_string(g.unit()) + " " +
              std::to_string(g.unit()) + "]" + g.parser_text(8);
    }
    const auto got = parse_bbox(text);
    const auto ref = regex_first_list(text);
    if (!ref) {
      EXPECT_FALSE(got.value) << text;
      EXPECT_TRUE(got.has_diagnostic(diag::kNoList)) << text;
      continue;
    }
    auto v = *ref;
    for (auto& x : v) x = std::clamp(x, 0.0, 1.0) + 0.0;
    if (v[0] < v[2] && v[1] < v[3]) {
      ASSERT_TRUE(got.value) << text;
      EXPECT_EQ(got.value->x_min(), v[0]);
      EXPECT_EQ(got.value->y_min(), v[1]);
      EXPECT_EQ(got.value->x_max(), v[2]);
      EXPECT_EQ(got.value->y_max(), v[3]);
    } else {
      EXPECT_FALSE(got.value) << text;
      EXPECT_TRUE(got.has_diagnostic(diag::kDegenerate)) << text;
    }
  }
}

TEST(ParseYesNo, Examples) {
  EXPECT_EQ(parse_yes_no("Yes").value, Vote::yes);
  EXPECT_EQ(parse_yes_no("no.").value, Vote::no);
  const auto u = parse_yes_no("It is unclear");
  EXPECT_FALSE(u.value);
  EXPECT_TRUE(u.has_diagnostic(diag::kUnparseableVerdict));
}

TEST(ParseYesNo, Variants) {
  EXPECT_EQ(parse_yes_no("  \"YES\"  ").value, Vote::yes);
  EXPECT_EQ(parse_yes_no("**No**").value, Vote::no);
  const auto extra = parse_yes_no("Yes, there is a truck.");
  EXPECT_EQ(extra.value, Vote::yes);
  EXPECT_TRUE(extra.has_diagnostic(diag::kExtraText));
  EXPECT_FALSE(parse_yes_no("Yesterday").value);
  EXPECT_FALSE(parse_yes_no("nope").value);
  EXPECT_FALSE(parse_yes_no("maybe").value);
  EXPECT_FALSE(parse_yes_no("").value);
}

TEST(ParseEntities, Examples) {
  EXPECT_EQ(parse_entities("Dog. Frisbee. Dog"), (std::vector<std::string>{"dog", "frisbee"}));
  EXPECT_TRUE(parse_entities("None").empty());
  EXPECT_TRUE(parse_entities("none.").empty());
  EXPECT_EQ(parse_entities("  cat .  "), (std::vector<std::string>{"cat"}));
  EXPECT_EQ(parse_entities("Chair. Potted plant. Clock. Vase.").size(), 4u);
  EXPECT_EQ(parse_entities("None. Dog."), (std::vector<std::string>{"none", "dog"}));
}

TEST(Parsers, FuzzNeverAbortsAndOutputsSatisfyInvariants) {
  rcov::testing::Gen g(7);
  for (int iter = 0; iter < 5000; ++iter) {
    const auto text = g.coin() ? g.bytes(96) : g.parser_text(96);
    const auto b = parse_bbox(text);
    if (b.value) {
      EXPECT_TRUE(b.value->has_area());
      EXPECT_GE(b.value->x_min(), 0.0);
      EXPECT_LE(b.value->x_max(), 1.0);
    } else {
      EXPECT_FALSE(b.diagnostics.empty());
    }
    const auto v = parse_yes_no(text);
    EXPECT_TRUE(v.value.has_value() || !v.diagnostics.empty());

    const auto ents = parse_entities(text);
    std::set<std::string> unique(ents.begin(), ents.end());
    EXPECT_EQ(unique.size(), ents.size());
    for (const auto& e : ents) {
      EXPECT_FALSE(e.empty());
      EXPECT_EQ(e.find('.'), std::string::npos);
      EXPECT_EQ(to_lower(e), e);
      EXPECT_EQ(std::string(trim(e)), e);
    }
    EXPECT_EQ(parse_entities(join(ents, ". ")), ents);
  }
}

TEST(ParseJudge, Examples) {
  const auto a = parse_judge_scores("Accuracy: 6 8\nReason: fine\n\nRelevancy: 9 9\nReason: ok");
  EXPECT_EQ(a, (JudgeScores{{6, 8}, {9, 9}}));
  try {
    parse_judge_scores("Accuracy: 6\nReason: x\nRelevancy: 7 7");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("two scores required"), std::string::npos);
  }
  EXPECT_EQ(parse_judge_scores("accuracy: 4 7 because\nRelevancy: 8 8 also"),
            (JudgeScores{{4, 7}, {8, 8}}));
}

TEST(ParseJudge, MissingLineCarriesRawReply) {
  const std::string raw = "Accuracy: 5 7\nReason: the second is better.";
  try {
    parse_judge_scores(raw);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.raw(), raw);
    EXPECT_NE(std::string(e.what()).find("Relevancy"), std::string::npos);
  }
  EXPECT_THROW(parse_judge_scores("Accuracy: 0 7\nRelevancy: 8 8"), ParseError);
  EXPECT_THROW(parse_judge_scores("Accuracy: 11 7\nRelevancy: 8 8"), ParseError);
  EXPECT_THROW(parse_judge_scores("Accuracy:\nRelevancy: 8 8"), ParseError);
}

// Synthetic replies in the shapes judges commonly produce; no recorded
// replies are available, so this corpus stands in for them.
TEST(ParseJudge, ReplyCorpus) {
  const std::vector<std::pair<std::string, JudgeScores>> corpus = {
      {"Accuracy: 6 8\nReason: a\n\nRelevancy: 9 9\nReason: b", {{6, 8}, {9, 9}}},
      {"accuracy: 4 7\nreason: a\nrelevancy: 8 8\nreason: b", {{4, 7}, {8, 8}}},
      {"ACCURACY: 3 5\nRELEVANCY: 6 6", {{3, 5}, {6, 6}}},
      {"Accuracy : 7 9\nRelevancy : 10 10", {{7, 9}, {10, 10}}},
      {"Accuracy: 7, 9\nRelevancy: 8, 9", {{7, 9}, {8, 9}}},
      {"Accuracy:\t5\t6\nRelevancy:\t7\t7", {{5, 6}, {7, 7}}},
      {"**Accuracy:** 5 6\n**Relevancy:** 8 9", {{5, 6}, {8, 9}}},
      {"1: Accuracy: 5 6\n2: Relevancy: 8 9", {{5, 6}, {8, 9}}},
      {"Scores follow.\nAccuracy: 2 8\nReason: assistant 1 invents a dog.\n\nRelevancy: 7 8\nReason: both on topic.",
       {{2, 8}, {7, 8}}},
      {"Accuracy: 8.5 9\nRelevancy: 9 9.5", {{8.5, 9}, {9, 9.5}}},
      {"Relevancy: 9 8\nAccuracy: 6 7", {{6, 7}, {9, 8}}},
      {"Accuracy: 1 10\nRelevancy: 1 10", {{1, 10}, {1, 10}}},
      {"Accuracy: 6 8 (assistant 2 is more faithful)\nRelevancy: 9 9", {{6, 8}, {9, 9}}},
      {"accuracy:6 8\nrelevancy:9 9", {{6, 8}, {9, 9}}},
      {"Inaccuracy: 3 3\nAccuracy: 5 5\nRelevancy: 5 5", {{5, 5}, {5, 5}}},
      {"Accuracy: 6  8\r\nReason: x\r\nRelevancy: 9  9\r\n", {{6, 8}, {9, 9}}},
      {"Accuracy: 7 7\nReason: tie\nRelevancy: 7 7\nReason: tie", {{7, 7}, {7, 7}}},
      {"Here are my scores.\n\nAccuracy: 3 9\n\nRelevancy: 4 9\n", {{3, 9}, {4, 9}}},
      {"Accuracy: 5 out of 10", {{0, 0}, {0, 0}}},  // second score missing
      {"Relevancy: 8 8", {{0, 0}, {0, 0}}},          // no accuracy line
  };
  ASSERT_EQ(corpus.size(), 20u);
  for (const auto& [text, expected] : corpus) {
    if (expected.accuracy.first == 0) {
      EXPECT_THROW(parse_judge_scores(text), ParseError) << text;
    } else {
      EXPECT_EQ(parse_judge_scores(text), expected) << text;
    }
  }
}
