#pragma once

// Prompt templates for every model call the pipeline and the judge make.
//
// Placeholders are written `{name}`; `{{` and `}}` produce literal braces.
// Substitution is single-pass, so bound values are never re-scanned.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcov/domain.hpp"

namespace rcov {

enum class TemplateId {
  entity_extraction,
  coordinate_generation,
  region_description,
  verification,
  final_response,
  judge,
};

std::string_view to_string(TemplateId id) noexcept;
/// Throws std::invalid_argument("unknown template id ...").
TemplateId parse_template_id(std::string_view text);

struct Demonstration {
  std::string input;
  std::string output;
};

struct PromptTemplate {
  TemplateId id{};
  std::string system_text;  // empty: no system message
  std::string body_text;
  /// How one demonstration is laid out inside the `{examples}` slot; uses
  /// the `{input}` and `{output}` placeholders. Empty when the template has
  /// no example slot.
  std::string example_format;
  std::vector<Demonstration> examples;

  bool has_example_slot() const noexcept { return !example_format.empty(); }
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Replaces every `{name}` in text. Throws std::invalid_argument("missing
/// binding: name") for the first unbound placeholder and on unbalanced braces.
std::string substitute(std::string_view text, const Bindings& bindings);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view text);

/// The template set used by the pipeline. Built-in texts carry an empty
/// example slot; demonstrations are loaded separately.
class PromptSet {
 public:
  PromptSet();

  const PromptTemplate& get(TemplateId id) const;
  PromptTemplate& get(TemplateId id);

  /// Renders a template. `{examples}` is filled from the template's
  /// demonstrations and must not be supplied by the caller.
  RenderedPrompt render(TemplateId id, const Bindings& bindings) const;
  RenderedPrompt render(std::string_view id, const Bindings& bindings) const;

  /// Loads demonstrations for one template from a JSONL file of
  /// {"input": ..., "output": ...} records.
  void load_examples(TemplateId id, const std::filesystem::path& path);

  /// Loads `<template id>.jsonl` for every template that has an example slot
  /// and a matching file in dir.
  void load_examples_dir(const std::filesystem::path& dir);

  /// Replaces a template's texts from a file. Lines before a line holding
  /// only `---` are the system text; the rest is the body. A file without
  /// the separator replaces just the body.
  void load_template_file(TemplateId id, const std::filesystem::path& path);

 private:
  std::vector<PromptTemplate> templates_;
};

/// "[0.20, 0.20, 0.60, 0.60]": two decimals, comma-space separated.
std::string format_coordinate(const BBoxNorm& box);

std::vector<Demonstration> parse_demonstrations(std::string_view jsonl);

}  // namespace rcov
