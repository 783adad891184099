#pragma once

// Core value types shared by the pipeline, renderer and evaluation code.
// Nothing in here performs I/O.

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcov {

/// Axis-aligned box in normalized image coordinates (fractions of width/height).
class BBoxNorm {
 public:
  /// Throws std::invalid_argument on non-finite components or when the
  /// ordering 0 <= min <= max <= 1 does not hold on either axis.
  BBoxNorm(double x_min, double y_min, double x_max, double y_max);

  static BBoxNorm full() { return {0.0, 0.0, 1.0, 1.0}; }

  double x_min() const noexcept { return x_min_; }
  double y_min() const noexcept { return y_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_max() const noexcept { return y_max_; }

  bool has_area() const noexcept { return x_max_ > x_min_ && y_max_ > y_min_; }

  friend bool operator==(const BBoxNorm&, const BBoxNorm&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Accepts a palette name (red, green, blue, white, black) or "R,G,B".
Rgb parse_color(std::string_view text);
std::string to_string(const Rgb& color);

enum class ImagePromptKind { original, overlaid, cropped };
enum class BoxShape { rectangle, incircle, circumcircle };

std::string_view to_string(ImagePromptKind kind) noexcept;
std::string_view to_string(BoxShape shape) noexcept;
ImagePromptKind parse_prompt_kind(std::string_view text);
BoxShape parse_box_shape(std::string_view text);

/// A single verification verdict: 1 when the sampled description mentions
/// the entity, 0 otherwise.
enum class Vote : std::uint8_t { no = 0, yes = 1 };

/// Exact mean of a vote vector, kept as (yes votes, samples).
class VoteScore {
 public:
  VoteScore(std::uint32_t yes_votes, std::uint32_t samples);

  std::uint32_t yes_votes() const noexcept { return yes_; }
  std::uint32_t samples() const noexcept { return samples_; }
  double value() const noexcept {
    return static_cast<double>(yes_) / static_cast<double>(samples_);
  }

  friend bool operator==(const VoteScore&, const VoteScore&) = default;

 private:
  std::uint32_t yes_;
  std::uint32_t samples_;
};

/// Mean of the votes. Throws std::invalid_argument("no samples") when empty.
VoteScore mean_vote_score(std::span<const Vote> votes);

/// Strict comparison: a score equal to the threshold is not a hallucination.
constexpr bool is_hallucinated(double score, double threshold) noexcept {
  return score < threshold;
}
inline bool is_hallucinated(const VoteScore& score, double threshold) noexcept {
  return is_hallucinated(score.value(), threshold);
}

struct EntityRecord {
  std::string name;
  std::optional<BBoxNorm> bbox;
  bool bbox_fallback = false;
  std::vector<std::string> descriptions;
  std::vector<Vote> votes;
  std::optional<VoteScore> score;
  std::optional<bool> flagged_hallucinated;
  std::vector<std::string> warnings;
};

/// Sets score and flag from the recorded votes. Throws std::logic_error if
/// votes and descriptions disagree in length.
void apply_votes(EntityRecord& entity, double threshold);

struct PipelineConfig {
  std::uint32_t num_samples = 7;
  double threshold = 0.1;
  ImagePromptKind image_prompt_kind = ImagePromptKind::overlaid;
  BoxShape box_shape = BoxShape::rectangle;
  Rgb box_color{255, 0, 0};
  std::uint32_t box_stroke_px = 1;
  double sampling_temperature = 1.0;
  std::uint64_t seed = 0;
  /// Upper bound on concurrent backend calls issued by one run.
  std::uint32_t parallelism = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class Stage : std::size_t {
  initial = 0,
  extract,
  coordinates,
  describe,
  verify,
  revise,
};
inline constexpr std::size_t kStageCount = 6;
std::string_view to_string(Stage stage) noexcept;

struct VerificationReport {
  std::string query_text;
  std::string image_id;
  std::string initial_response;
  std::vector<EntityRecord> entities;
  std::string final_response;
  std::array<std::chrono::nanoseconds, kStageCount> stage_timings{};
  std::uint64_t backend_call_count = 0;
  bool vanilla = false;
  std::vector<std::string> warnings;
  /// Set when the run aborted; the report then holds whatever finished.
  std::optional<std::string> error;

  bool any_flagged() const noexcept;
};

}  // namespace rcov
