#include "rcov/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "rcov/strings.hpp"

namespace rcov {

BBoxNorm::BBoxNorm(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  for (double v : {x_min, y_min, x_max, y_max}) {
    if (!std::isfinite(v)) throw std::invalid_argument("bbox component is not finite");
  }
  if (!(0.0 <= x_min && x_min <= x_max && x_max <= 1.0) ||
      !(0.0 <= y_min && y_min <= y_max && y_max <= 1.0)) {
    throw std::invalid_argument("bbox violates 0 <= min <= max <= 1");
  }
}

Rgb parse_color(std::string_view text) {
  const std::string name = to_lower(trim(text));
  if (name == "red") return {255, 0, 0};
  if (name == "green") return {0, 255, 0};
  if (name == "blue") return {0, 0, 255};
  if (name == "white") return {255, 255, 255};
  if (name == "black") return {0, 0, 0};

  std::array<std::uint8_t, 3> channels{};
  std::size_t idx = 0;
  for (auto part : split(name, ',')) {
    part = trim(part);
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (idx >= 3 || ec != std::errc{} || ptr != part.data() + part.size() || v > 255) {
      throw std::invalid_argument("bad color '" + std::string(text) + "'");
    }
    channels[idx++] = static_cast<std::uint8_t>(v);
  }
  if (idx != 3) throw std::invalid_argument("bad color '" + std::string(text) + "'");
  return {channels[0], channels[1], channels[2]};
}

std::string to_string(const Rgb& c) {
  return std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b);
}

std::string_view to_string(ImagePromptKind kind) noexcept {
  switch (kind) {
    case ImagePromptKind::original: return "original";
    case ImagePromptKind::overlaid: return "overlaid";
    case ImagePromptKind::cropped: return "cropped";
  }
  return "?";
}

std::string_view to_string(BoxShape shape) noexcept {
  switch (shape) {
    case BoxShape::rectangle: return "rectangle";
    case BoxShape::incircle: return "incircle";
    case BoxShape::circumcircle: return "circumcircle";
  }
  return "?";
}

ImagePromptKind parse_prompt_kind(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "original") return ImagePromptKind::original;
  if (t == "overlaid" || t == "overlay") return ImagePromptKind::overlaid;
  if (t == "cropped" || t == "crop") return ImagePromptKind::cropped;
  throw std::invalid_argument("unknown image prompt kind '" + std::string(text) + "'");
}

BoxShape parse_box_shape(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "rectangle") return BoxShape::rectangle;
  if (t == "incircle") return BoxShape::incircle;
  if (t == "circumcircle") return BoxShape::circumcircle;
  throw std::invalid_argument("unknown box shape '" + std::string(text) + "'");
}

VoteScore::VoteScore(std::uint32_t yes_votes, std::uint32_t samples)
    : yes_(yes_votes), samples_(samples) {
  if (samples == 0) throw std::invalid_argument("no samples");
  if (yes_votes > samples) throw std::invalid_argument("more yes votes than samples");
}

VoteScore mean_vote_score(std::span<const Vote> votes) {
  if (votes.empty()) throw std::invalid_argument("no samples");
  const auto yes = std::count(votes.begin(), votes.end(), Vote::yes);
  return {static_cast<std::uint32_t>(yes), static_cast<std::uint32_t>(votes.size())};
}

void apply_votes(EntityRecord& entity, double threshold) {
  if (entity.votes.size() != entity.descriptions.size()) {
    throw std::logic_error("entity '" + entity.name + "': votes/descriptions length mismatch");
  }
  entity.score = mean_vote_score(entity.votes);
  entity.flagged_hallucinated = is_hallucinated(*entity.score, threshold);
}

void PipelineConfig::validate() const {
  if (num_samples < 1) throw std::invalid_argument("pipeline.samples must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("pipeline.threshold must lie in [0, 1]");
  }
  if (box_stroke_px < 1) throw std::invalid_argument("pipeline.stroke must be >= 1");
  if (!(sampling_temperature >= 0.0) || !std::isfinite(sampling_temperature)) {
    throw std::invalid_argument("pipeline.temperature must be a non-negative real");
  }
  if (parallelism < 1) throw std::invalid_argument("pipeline.parallelism must be >= 1");
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::initial: return "initial_response";
    case Stage::extract: return "entity_extraction";
    case Stage::coordinates: return "coordinate_generation";
    case Stage::describe: return "region_description";
    case Stage::verify: return "verification";
    case Stage::revise: return "final_response";
  }
  return "?";
}

bool VerificationReport::any_flagged() const noexcept {
  return std::any_of(entities.begin(), entities.end(), [](const EntityRecord& e) {
    return e.flagged_hallucinated.value_or(false);
  });
}

}  // namespace rcov
