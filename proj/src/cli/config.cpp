#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rcov/cli.hpp"
#include "rcov/errors.hpp"
#include "rcov/strings.hpp"

namespace rcov::cli {
namespace fs = std::filesystem;
using Value = ConfigDocument::Value;

namespace {

[[noreturn]] void fail_line(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

bool is_key_char(char c) { return is_alnum(c) || c == '_' || c == '-'; }

std::string parse_quoted(std::string_view& rest, int line) {
  std::string out;
  std::size_t i = 1;  // past the opening quote
  for (; i < rest.size(); ++i) {
    const char c = rest[i];
    if (c == '"') break;
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i == rest.size()) break;
    switch (rest[i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default: fail_line(line, std::string("unknown escape \\") + rest[i]);
    }
  }
  if (i >= rest.size()) fail_line(line, "unterminated string");
  rest.remove_prefix(i + 1);
  return out;
}

Value parse_value(std::string_view raw, int line) {
  Value v;
  v.line = line;
  auto rest = trim(raw);
  if (rest.empty()) fail_line(line, "missing value");
  if (rest.front() == '"') {
    v.type = Value::Type::string;
    v.text = parse_quoted(rest, line);
  } else {
    std::size_t end = 0;
    while (end < rest.size() && rest[end] != '#' && !is_space(rest[end])) ++end;
    const auto word = rest.substr(0, end);
    rest.remove_prefix(end);
    v.text = std::string(word);
    if (word == "true" || word == "false") {
      v.type = Value::Type::boolean;
      v.boolean = word == "true";
    } else {
      const auto* first = word.data();
      const auto* last = word.data() + word.size();
      if (auto [p, ec] = std::from_chars(first, last, v.integer); ec == std::errc() && p == last) {
        v.type = Value::Type::integer;
        v.real = static_cast<double>(v.integer);
      } else if (auto [q, ec2] = std::from_chars(first, last, v.real);
                 ec2 == std::errc() && q == last) {
        v.type = Value::Type::real;
      } else {
        fail_line(line, "cannot read value '" + std::string(word) + "'");
      }
    }
  }
  rest = trim(rest);
  if (!rest.empty() && rest.front() != '#') fail_line(line, "trailing text after value");
  return v;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::string section;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) fail_line(line_no, "unterminated section header");
      const auto tail = trim(line.substr(close + 1));
      if (!tail.empty() && tail.front() != '#') fail_line(line_no, "text after section header");
      section = std::string(trim(line.substr(1, close - 1)));
      if (section.empty() || !std::all_of(section.begin(), section.end(), is_key_char)) {
        fail_line(line_no, "bad section name '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail_line(line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char)) {
      fail_line(line_no, "bad key '" + std::string(key) + "'");
    }
    if (section.empty()) fail_line(line_no, "key outside any section");
    auto full = section + "." + std::string(key);
    if (doc.entries_.contains(full)) fail_line(line_no, "duplicate key '" + full + "'");
    doc.entries_.emplace(std::move(full), parse_value(line.substr(eq + 1), line_no));
  }
  return doc;
}

namespace {

class Reader {
 public:
  Reader(const ConfigDocument& doc, fs::path base) : doc_(doc), base_(std::move(base)) {}

  const Value* find(std::string_view key) {
    used_.insert(std::string(key));
    const auto it = doc_.entries().find(key);
    return it == doc_.entries().end() ? nullptr : &it->second;
  }

  bool has_section(std::string_view section) const {
    const auto prefix = std::string(section) + ".";
    const auto it = doc_.entries().lower_bound(prefix);
    return it != doc_.entries().end() && it->first.starts_with(prefix);
  }

  [[noreturn]] static void bad(std::string_view key, const std::string& what) {
    throw ConfigError("config key '" + std::string(key) + "': " + what);
  }

  void string(std::string_view key, std::string& out) {
    if (const auto* v = find(key)) {
      if (v->type != Value::Type::string) bad(key, "expected a string");
      out = v->text;
    }
  }

  template <typename Parse, typename T>
  void parsed(std::string_view key, T& out, Parse parse) {
    std::string text;
    string(key, text);
    if (find(key) == nullptr) return;
    try {
      out = parse(text);
    } catch (const std::exception& e) {
      bad(key, e.what());
    }
  }

  template <typename T>
  void integer(std::string_view key, T& out, std::int64_t min, std::int64_t max) {
    if (const auto* v = find(key)) {
      if (v->type != Value::Type::integer) bad(key, "expected an integer");
      if (v->integer < min || v->integer > max) bad(key, "out of range");
      out = static_cast<T>(v->integer);
    }
  }

  void real(std::string_view key, double& out) {
    if (const auto* v = find(key)) {
      if (v->type != Value::Type::integer && v->type != Value::Type::real) {
        bad(key, "expected a number");
      }
      out = v->real;
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (const auto* v = find(key)) {
      if (v->type != Value::Type::boolean) bad(key, "expected true or false");
      out = v->boolean;
    }
  }

  void path(std::string_view key, std::optional<fs::path>& out, bool must_exist = true) {
    std::string text;
    string(key, text);
    if (find(key) == nullptr) return;
    fs::path p(text);
    if (p.is_relative()) p = base_ / p;
    if (must_exist && !fs::exists(p)) bad(key, "no such path " + p.string());
    out = std::move(p);
  }

  void check_unused() const {
    for (const auto& [key, v] : doc_.entries()) {
      if (!used_.contains(key)) {
        throw ConfigError("config line " + std::to_string(v.line) + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  const ConfigDocument& doc_;
  fs::path base_;
  std::set<std::string, std::less<>> used_;
};

void read_endpoint(Reader& r, std::string_view section, EndpointDescriptor& ep) {
  const auto k = [&](std::string_view name) { return std::string(section) + "." + std::string(name); };
  std::string kind;
  r.string(k("kind"), kind);
  if (kind == "http") {
    ep.kind = EndpointDescriptor::Kind::http;
  } else if (kind == "scripted") {
    ep.kind = EndpointDescriptor::Kind::scripted;
  } else if (!kind.empty()) {
    Reader::bad(k("kind"), "expected \"http\" or \"scripted\"");
  }
  r.string(k("model"), ep.model);
  r.string(k("base_url"), ep.base_url);
  r.string(k("api_key"), ep.api_key);
  if (r.find(k("seed"))) {
    std::uint64_t seed = 0;
    r.integer(k("seed"), seed, 0, std::numeric_limits<std::int64_t>::max());
    ep.seed = seed;
  }
  if (r.find(k("max_tokens"))) {
    int n = 0;
    r.integer(k("max_tokens"), n, 1, 1 << 20);
    ep.max_tokens = n;
  }
  std::int64_t timeout = ep.timeout.count();
  r.integer(k("timeout_s"), timeout, 1, 3600);
  ep.timeout = std::chrono::seconds(timeout);
  std::optional<fs::path> fixture;
  r.path(k("fixture"), fixture);
  if (fixture) ep.fixture = *fixture;
}

}  // namespace

RunConfig apply_config(const ConfigDocument& doc, const fs::path& base_dir, RunConfig cfg) {
  Reader r(doc, base_dir);

  auto& p = cfg.pipeline;
  r.integer("pipeline.samples", p.num_samples, 1, 1000);
  r.real("pipeline.threshold", p.threshold);
  r.parsed("pipeline.prompt_kind", p.image_prompt_kind, parse_prompt_kind);
  r.parsed("pipeline.shape", p.box_shape, parse_box_shape);
  r.parsed("pipeline.color", p.box_color, parse_color);
  r.integer("pipeline.stroke", p.box_stroke_px, 1, 1000);
  r.real("pipeline.temperature", p.sampling_temperature);
  r.integer("pipeline.seed", p.seed, 0, std::numeric_limits<std::int64_t>::max());
  r.integer("pipeline.parallelism", p.parallelism, 1, 256);

  r.boolean("gateway.cache", cfg.cache_enabled);
  r.path("gateway.cache_dir", cfg.paths.cache_dir, false);
  r.integer("gateway.max_retries", cfg.max_retries, 0, 10);

  read_endpoint(r, "vision", cfg.binding.vision);
  if (r.has_section("text")) {
    std::string kind;
    r.string("text.kind", kind);
    if (kind == "same-as-vision") {
      cfg.binding.text.reset();
    } else {
      EndpointDescriptor text = cfg.binding.text.value_or(EndpointDescriptor{});
      read_endpoint(r, "text", text);
      cfg.binding.text = std::move(text);
    }
  }
  if (r.has_section("judge")) {
    EndpointDescriptor judge = cfg.judge.value_or(EndpointDescriptor{});
    read_endpoint(r, "judge", judge);
    cfg.judge = std::move(judge);
  }

  r.path("prompts.examples_dir", cfg.paths.examples_dir);
  for (const auto& [key, value] : doc.entries()) {
    if (!key.starts_with("prompts.template_")) continue;
    const auto id_text = std::string_view(key).substr(std::string_view("prompts.template_").size());
    TemplateId id{};
    try {
      id = parse_template_id(id_text);
    } catch (const std::exception& e) {
      Reader::bad(key, e.what());
    }
    std::optional<fs::path> file;
    r.path(key, file);
    cfg.template_files[id] = *file;
  }

  r.path("eval.annotations", cfg.paths.annotations);
  r.path("eval.vocabulary", cfg.paths.vocabulary);
  r.path("eval.images_dir", cfg.paths.images_dir);
  r.path("eval.questions", cfg.paths.questions);
  r.path("eval.captions", cfg.paths.captions);
  std::optional<fs::path> out_dir;
  r.path("eval.output_dir", out_dir, false);
  if (out_dir) cfg.paths.output_dir = *out_dir;
  r.parsed("eval.split", cfg.eval.split, parse_pope_split);
  r.integer("eval.images", cfg.eval.images, 1, 1'000'000);
  r.integer("eval.questions_per_image", cfg.eval.questions_per_image, 2, 1000);
  r.string("eval.caption_prompt", cfg.eval.caption_prompt);

  r.check_unused();
  try {
    cfg.pipeline.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return apply_config(ConfigDocument::parse(ss.str()), path.parent_path());
}

}  // namespace rcov::cli
