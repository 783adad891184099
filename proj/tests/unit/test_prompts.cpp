#include <gtest/gtest.h>

#include "rcov/errors.hpp"
#include "rcov/prompts.hpp"
#include "test_support.hpp"

using namespace rcov;
using rcov::testing::TempDir;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

Bindings bindings_for(TemplateId id, const std::string& v) {
  switch (id) {
    case TemplateId::entity_extraction: return {{"sentence", v}};
    case TemplateId::coordinate_generation: return {{"entity", v}};
    case TemplateId::region_description: return {{"coordinate", v}};
    case TemplateId::verification: return {{"statement", v}, {"object", v}};
    case TemplateId::final_response: return {{"query", v}, {"passage", v}, {"information", v}};
    case TemplateId::judge: return {{"response_a", v}, {"response_b", v}};
  }
  return {};
}

const TemplateId kAll[] = {TemplateId::entity_extraction, TemplateId::coordinate_generation,
                           TemplateId::region_description, TemplateId::verification,
                           TemplateId::final_response,     TemplateId::judge};

}  // namespace

TEST(Prompts, RegionDescriptionExample) {
  PromptSet p;
  const auto r = p.render(TemplateId::region_description, {{"coordinate", "[0.20, 0.20, 0.60, 0.60]"}});
  EXPECT_EQ(r.user_text, "Describe [0.20, 0.20, 0.60, 0.60] in the image in detail.");
  EXPECT_TRUE(r.system_text.empty());
}

TEST(Prompts, VerificationEndsWithQuestion) {
  PromptSet p;
  const auto r = p.render(TemplateId::verification, {{"statement", "A red car."}, {"object", "truck"}});
  EXPECT_EQ(r.system_text,
            "You are a language assistant that helps to answer the question according to instructions.");
  const std::string tail = "[Question]\nIs there a truck in the statement?\n\n[Response]\n";
  ASSERT_GE(r.user_text.size(), tail.size());
  EXPECT_EQ(r.user_text.substr(r.user_text.size() - tail.size()), tail);
  EXPECT_NE(r.user_text.find("[Statement]\nA red car.\n"), std::string::npos);
}

TEST(Prompts, EmptyStringBinds) {
  PromptSet p;
  const auto r = p.render(TemplateId::entity_extraction, {{"sentence", ""}});
  EXPECT_NE(r.user_text.find("[Sentence]\n\n"), std::string::npos);
  try {
    p.render(TemplateId::entity_extraction, {});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "missing binding: sentence");
  }
}

TEST(Prompts, UnknownTemplateId) {
  PromptSet p;
  EXPECT_THROW(p.render("stage7", {}), std::invalid_argument);
  EXPECT_EQ(parse_template_id("judge"), TemplateId::judge);
}

TEST(Prompts, CoordinateTemplateNamesEntity) {
  PromptSet p;
  const auto r = p.render(TemplateId::coordinate_generation, {{"entity", "handbag"}});
  EXPECT_NE(r.user_text.find("Locate the handbag and return its bounding box"), std::string::npos);
  EXPECT_NE(r.user_text.find("Output only the four numbers in a single list."), std::string::npos);
}

TEST(Prompts, RenderedTextHasNoDelimitersAndValuesRoundTrip) {
  PromptSet p;
  rcov::testing::Gen g(5);
  for (auto id : kAll) {
    for (int iter = 0; iter < 20; ++iter) {
      std::string v = "v" + std::to_string(g.next() % 100000) + "<" + std::to_string(iter) + ">";
      const auto r = p.render(id, bindings_for(id, v));
      for (const auto* text : {&r.system_text, &r.user_text}) {
        EXPECT_EQ(text->find('{'), std::string::npos);
        EXPECT_EQ(text->find('}'), std::string::npos);
      }
      std::size_t expected = 0;
      for (const auto& name : placeholders(p.get(id).body_text)) {
        if (name != "examples") expected += count(p.get(id).body_text, "{" + name + "}");
      }
      EXPECT_EQ(count(r.user_text, v), expected) << to_string(id);
      EXPECT_EQ(p.render(id, bindings_for(id, v)).user_text, r.user_text);
    }
  }
}

TEST(Prompts, BoundValuesAreNotRescanned) {
  PromptSet p;
  const auto r = p.render(TemplateId::coordinate_generation, {{"entity", "{entity}"}});
  EXPECT_NE(r.user_text.find("Locate the {entity} and"), std::string::npos);
}

TEST(Substitute, EscapesAndErrors) {
  EXPECT_EQ(substitute("a {{b}} {c}", {{"c", "C"}}), "a {b} C");
  EXPECT_THROW(substitute("a {b", {}), std::invalid_argument);
  EXPECT_THROW(substitute("a } b", {}), std::invalid_argument);
  EXPECT_EQ(placeholders("{a} {b} {a} {{c}}"), (std::vector<std::string>{"a", "b"}));
}

TEST(Prompts, ExamplesInjectedInOrder) {
  PromptSet p;
  p.get(TemplateId::entity_extraction).examples = {{"A dog runs.", "dog."}, {"Two cats.", "cat."}};
  const auto r = p.render(TemplateId::entity_extraction, {{"sentence", "A bus."}});
  const auto first = r.user_text.find("[Sentence]\nA dog runs.\n\n[Response]\ndog.\n");
  const auto second = r.user_text.find("[Sentence]\nTwo cats.\n\n[Response]\ncat.\n");
  const auto query = r.user_text.find("[Sentence]\nA bus.\n");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_LT(second, query);
  EXPECT_THROW(p.render(TemplateId::entity_extraction, {{"sentence", "x"}, {"examples", "y"}}),
               std::invalid_argument);
}

TEST(Prompts, LoadExamplesAndTemplateFiles) {
  TempDir dir;
  rcov::testing::write_text(dir / "final_response.jsonl",
                            "{\"input\": \"[Query]\\nq\", \"output\": \"o\"}\n\n");
  PromptSet p;
  p.load_examples_dir(dir.path());
  ASSERT_EQ(p.get(TemplateId::final_response).examples.size(), 1u);
  EXPECT_TRUE(p.get(TemplateId::entity_extraction).examples.empty());

  rcov::testing::write_text(dir / "bad.jsonl", "{\"input\": 1}\n");
  EXPECT_THROW(p.load_examples(TemplateId::final_response, dir / "bad.jsonl"), ConfigError);
  EXPECT_THROW(p.load_examples(TemplateId::judge, dir / "final_response.jsonl"), ConfigError);

  rcov::testing::write_text(dir / "judge.txt", "SYS\n---\nBody {response_a} {response_b}");
  p.load_template_file(TemplateId::judge, dir / "judge.txt");
  const auto r = p.render(TemplateId::judge, {{"response_a", "A"}, {"response_b", "B"}});
  EXPECT_EQ(r.system_text, "SYS");
  EXPECT_EQ(r.user_text, "Body A B");
}

TEST(Prompts, ShippedDemonstrationsLoad) {
  PromptSet p;
  p.load_examples_dir(rcov::testing::source_dir() / "data" / "prompts");
  EXPECT_EQ(p.get(TemplateId::entity_extraction).examples.size(), 2u);
  EXPECT_EQ(p.get(TemplateId::final_response).examples.size(), 2u);
}

TEST(FormatCoordinate, TwoDecimals) {
  EXPECT_EQ(format_coordinate(BBoxNorm(0.2, 0.2, 0.6, 0.6)), "[0.20, 0.20, 0.60, 0.60]");
  EXPECT_EQ(format_coordinate(BBoxNorm(0.0, 0.125, 1.0, 0.333)), "[0.00, 0.12, 1.00, 0.33]");
}
