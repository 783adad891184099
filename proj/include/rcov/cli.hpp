#pragma once

// Command-line driver: configuration loading, commands, run directories.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 unreadable image,
// 3 endpoint unreachable after retries, 4 anything else.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcov/domain.hpp"
#include "rcov/evalkit.hpp"
#include "rcov/gateway.hpp"
#include "rcov/prompts.hpp"

namespace rcov::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitImage = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitOther = 4;

/// Parsed `key = value` document: "section.key" -> value. Values are
/// strings, integers, floats or booleans.
class ConfigDocument {
 public:
  struct Value {
    enum class Type { string, integer, real, boolean };
    Type type = Type::string;
    std::string text;  // string payload, or the literal as written
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;
    int line = 0;
  };

  /// Throws ConfigError("line N: ...").
  static ConfigDocument parse(std::string_view text);

  const std::map<std::string, Value, std::less<>>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Value, std::less<>> entries_;
};

struct EvalSettings {
  PopeSplit split = PopeSplit::random;
  std::size_t images = 50;
  std::size_t questions_per_image = 6;
  std::string caption_prompt = "Please describe this image in detail.";
};

struct PathSettings {
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> vocabulary;
  std::optional<std::filesystem::path> images_dir;
  std::optional<std::filesystem::path> questions;  // mme / judge JSONL
  std::optional<std::filesystem::path> captions;   // precomputed CHAIR captions
  std::optional<std::filesystem::path> examples_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path output_dir = "runs";
};

struct RunConfig {
  PipelineConfig pipeline;
  BackendBinding binding;
  std::optional<EndpointDescriptor> judge;
  bool cache_enabled = true;
  int max_retries = 3;
  PathSettings paths;
  EvalSettings eval;
  std::map<TemplateId, std::filesystem::path> template_files;
};

/// Applies a document on top of `base`. Relative paths resolve against
/// base_dir and must exist. Errors name the key.
RunConfig apply_config(const ConfigDocument& doc, const std::filesystem::path& base_dir,
                       RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

/// Runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcov::cli
