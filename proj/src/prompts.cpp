#include "rcov/prompts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rcov/errors.hpp"
#include "rcov/strings.hpp"

namespace rcov {
namespace {

constexpr std::string_view kExtractionSystem =
    "You are a language assistant that helps to extract information from given sentences.";

constexpr std::string_view kExtractionBody =
    "You are given a sentence, extract the entities within the sentence for me.\n"
    "\n"
    "[Task]\n"
    "Your task is to extract the common objects and summarize them as general categories "
    "without repetition, merging essentially similar objects. Avoid extracting abstract or "
    "non-specific entities. Extract entity in the singular form. Output all the extracted "
    "types of items in one line and separate each object type with a period. If there is "
    "nothing to output, then output a single \"None\". DO NOT RESPOND WITH ANYTHING ELSE.\n"
    "\n"
    "Here are examples:\n"
    "{examples}\n"
    "\n"
    "Now complete the following:\n"
    "\n"
    "[Sentence]\n"
    "{sentence}\n"
    "\n"
    "[Response]\n";

constexpr std::string_view kExtractionExample =
    "[Sentence]\n{input}\n\n[Response]\n{output}\n";

constexpr std::string_view kCoordinateBody =
    "Assume the image width and height are normalized to [0, 1]. Locate the {entity} and "
    "return its bounding box in the format [x_min, y_min, x_max, y_max], where [x_min, "
    "y_min] is the top-left corner and [x_max, y_max] is the bottom-right corner of the "
    "bounding box. Output only the four numbers in a single list. Do not include any "
    "explanation or extra text.";

constexpr std::string_view kRegionBody = "Describe {coordinate} in the image in detail.";

constexpr std::string_view kVerificationSystem =
    "You are a language assistant that helps to answer the question according to instructions.";

constexpr std::string_view kVerificationBody =
    "You are given a statement and a question.\n"
    "\n"
    "[Task]\n"
    "Your task is to answer the question based on the statement. The statement is about some "
    "objects. The question is to ask whether some specific object exists.\n"
    "1. Your response should be limited to one of the following two choices: \"Yes\"/\"No\".\n"
    "2. Note that instances of a certain category can also belong to its super-categories. "
    "For example, a baseball is a subclass of the sports ball.\n"
    "3. Note that the table is equivalent to the dining table here.\n"
    "4. DO NOT RESPOND WITH ANYTHING ELSE.\n"
    "\n"
    "[Response Format]\n"
    "Yes/No\n"
    "\n"
    "Now complete the following:\n"
    "\n"
    "[Statement]\n"
    "{statement}\n"
    "\n"
    "[Question]\n"
    "Is there a {object} in the statement?\n"
    "\n"
    "[Response]\n";

constexpr std::string_view kFinalSystem =
    "You are a language assistant that helps to refine a passage according to instructions.";

constexpr std::string_view kFinalBody =
    "You are given a query, a passage and supplementary information.\n"
    "\n"
    "[Task]\n"
    "You are required to correct and output the refined passage in a fluent and natural "
    "style, following these rules:\n"
    "1. Correct the sentences in the passage if they are inconsistent with the supplementary "
    "information. Remove the objects that are confirmed to not exist in the supplementary "
    "information.\n"
    "2. Do not modify correct sentences and introduce additional information.\n"
    "3. When giving refined passage, also pay attention to the given query. The refined "
    "passage should be a reasonable answer to the query.\n"
    "4. Note the dining table is equivalent to the table.\n"
    "Output only the corrected passage, without introducing extra contents.\n"
    "\n"
    "Here are examples:\n"
    "{examples}\n"
    "\n"
    "Now complete the following:\n"
    "\n"
    "[Query]\n"
    "{query}\n"
    "\n"
    "[Passage]\n"
    "{passage}\n"
    "\n"
    "[Supplementary Information]\n"
    "{information}\n"
    "\n"
    "[Response]\n";

// Demonstration inputs for the final-response slot are the full
// Query/Passage/Supplementary Information block.
constexpr std::string_view kFinalExample = "{input}\n\n[Response]\n{output}\n";

constexpr std::string_view kJudgeSystem =
    "You are required to score the performance of two AI assistants in describing a given image.";

constexpr std::string_view kJudgeBody =
    "You should pay extra attention to the hallucination, which refers to the part of "
    "descriptions that are inconsistent with the image content, such as claiming the "
    "existence of something not present in the image or describing incorrectly in terms of "
    "the counts, positions, or colors of objects in the image. Please rate the responses of "
    "the assistants on a scale of 1 to 10, where a higher score indicates better performance, "
    "according to the following criteria:\n"
    "1: Accuracy: whether the response is accurate with respect to the image content. "
    "Responses with fewer hallucinations should be given higher scores.\n"
    "2: Relevancy: whether the response directly follows the instruction.\n"
    "Please output the scores for each criterion, containing only two values indicating the "
    "scores for Assistant 1 and 2, respectively. The two scores are separated by a space. "
    "Following the scores, please provide an explanation of your evaluation, avoiding any "
    "potential bias and ensuring that the order in which the responses were presented does "
    "not affect your judgment.\n"
    "\n"
    "[Assistant 1]\n"
    "{response_a}\n"
    "[End of Assistant 1]\n"
    "\n"
    "[Assistant 2]\n"
    "{response_b}\n"
    "[End of Assistant 2]\n"
    "\n"
    "Output format:\n"
    "\n"
    "Accuracy: <Scores of the two answers>\n"
    "Reason:\n"
    "\n"
    "Relevancy: <Scores of the two answers>\n"
    "Reason:\n";

constexpr TemplateId kAllIds[] = {
    TemplateId::entity_extraction, TemplateId::coordinate_generation,
    TemplateId::region_description, TemplateId::verification,
    TemplateId::final_response, TemplateId::judge,
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scans text once; emits literal runs and placeholder names in order.
template <typename OnText, typename OnName>
void scan_template(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      on_text(std::string_view("{"));
      i += 2;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      on_text(std::string_view("}"));
      i += 2;
    } else if (c == '{') {
      const auto close = text.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw std::invalid_argument("unterminated placeholder in template");
      }
      on_name(text.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (c == '}') {
      throw std::invalid_argument("stray '}' in template");
    } else {
      const auto next = text.find_first_of("{}", i);
      const auto end = next == std::string_view::npos ? text.size() : next;
      on_text(text.substr(i, end - i));
      i = end;
    }
  }
}

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
  switch (id) {
    case TemplateId::entity_extraction: return "entity_extraction";
    case TemplateId::coordinate_generation: return "coordinate_generation";
    case TemplateId::region_description: return "region_description";
    case TemplateId::verification: return "verification";
    case TemplateId::final_response: return "final_response";
    case TemplateId::judge: return "judge";
  }
  return "?";
}

TemplateId parse_template_id(std::string_view text) {
  for (auto id : kAllIds) {
    if (to_string(id) == text) return id;
  }
  throw std::invalid_argument("unknown template id '" + std::string(text) + "'");
}

std::string substitute(std::string_view text, const Bindings& bindings) {
  std::string out;
  out.reserve(text.size());
  scan_template(
      text, [&](std::string_view literal) { out += literal; },
      [&](std::string_view name) {
        const auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw std::invalid_argument("missing binding: " + std::string(name));
        }
        out += it->second;
      });
  return out;
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> names;
  scan_template(
      text, [](std::string_view) {},
      [&](std::string_view name) {
        for (const auto& n : names)
          if (n == name) return;
        names.emplace_back(name);
      });
  return names;
}

PromptSet::PromptSet() {
  templates_ = {
      {TemplateId::entity_extraction, std::string(kExtractionSystem),
       std::string(kExtractionBody), std::string(kExtractionExample), {}},
      {TemplateId::coordinate_generation, "", std::string(kCoordinateBody), "", {}},
      {TemplateId::region_description, "", std::string(kRegionBody), "", {}},
      {TemplateId::verification, std::string(kVerificationSystem),
       std::string(kVerificationBody), "", {}},
      {TemplateId::final_response, std::string(kFinalSystem), std::string(kFinalBody),
       std::string(kFinalExample), {}},
      {TemplateId::judge, std::string(kJudgeSystem), std::string(kJudgeBody), "", {}},
  };
}

const PromptTemplate& PromptSet::get(TemplateId id) const {
  return templates_.at(static_cast<std::size_t>(id));
}

PromptTemplate& PromptSet::get(TemplateId id) {
  return templates_.at(static_cast<std::size_t>(id));
}

RenderedPrompt PromptSet::render(TemplateId id, const Bindings& bindings) const {
  const auto& t = get(id);
  if (!t.has_example_slot()) {
    return {substitute(t.system_text, bindings), substitute(t.body_text, bindings)};
  }
  if (bindings.contains("examples")) {
    throw std::invalid_argument("'examples' is filled from the template's demonstrations");
  }
  std::string slot;
  for (std::size_t i = 0; i < t.examples.size(); ++i) {
    if (i) slot += '\n';
    slot += substitute(t.example_format,
                       Bindings{{"input", t.examples[i].input}, {"output", t.examples[i].output}});
  }
  Bindings full = bindings;
  full.emplace("examples", std::move(slot));
  return {substitute(t.system_text, full), substitute(t.body_text, full)};
}

RenderedPrompt PromptSet::render(std::string_view id, const Bindings& bindings) const {
  return render(parse_template_id(id), bindings);
}

std::vector<Demonstration> parse_demonstrations(std::string_view jsonl) {
  std::vector<Demonstration> out;
  std::size_t line_no = 0;
  for (auto line : split(jsonl, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("input").get<std::string>(), j.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("example line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void PromptSet::load_examples(TemplateId id, const std::filesystem::path& path) {
  auto& t = get(id);
  if (!t.has_example_slot()) {
    throw ConfigError(std::string(to_string(id)) + " has no example slot");
  }
  t.examples = parse_demonstrations(read_file(path));
}

void PromptSet::load_examples_dir(const std::filesystem::path& dir) {
  for (auto& t : templates_) {
    if (!t.has_example_slot()) continue;
    const auto path = dir / (std::string(to_string(t.id)) + ".jsonl");
    if (std::filesystem::exists(path)) t.examples = parse_demonstrations(read_file(path));
  }
}

void PromptSet::load_template_file(TemplateId id, const std::filesystem::path& path) {
  const auto text = read_file(path);
  auto& t = get(id);
  const auto sep = text.find("\n---\n");
  if (sep == std::string::npos) {
    t.body_text = text;
  } else {
    t.system_text = text.substr(0, sep);
    t.body_text = text.substr(sep + 5);
  }
  placeholders(t.system_text);  // validates brace balance
  placeholders(t.body_text);
}

std::string format_coordinate(const BBoxNorm& box) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.2f, %.2f, %.2f, %.2f]", box.x_min(), box.y_min(),
                box.x_max(), box.y_max());
  return buf;
}

}  // namespace rcov
