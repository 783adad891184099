#include "rcov/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "rcov/image_io.hpp"
#include "rcov/textparse.hpp"

namespace rcov {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void StagePlan::validate() const {
  config.validate();
  if (image.empty()) throw std::invalid_argument("plan has no image");
}

namespace {

std::string describe_exception(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

class StageTimer {
 public:
  StageTimer(VerificationReport& report, Stage stage)
      : slot_(report.stage_timings[static_cast<std::size_t>(stage)]), start_(Clock::now()) {}
  ~StageTimer() { slot_ += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_); }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::chrono::nanoseconds& slot_;
  Clock::time_point start_;
};

}  // namespace

PipelineError::PipelineError(VerificationReport partial, std::exception_ptr cause)
    : std::runtime_error(partial.error.value_or(describe_exception(cause))),
      partial_(std::move(partial)),
      cause_(std::move(cause)) {}

Pipeline::Pipeline(Gateway& gateway, const PromptSet& prompts, StagePlan plan)
    : gateway_(gateway), prompts_(prompts), plan_(std::move(plan)) {
  plan_.validate();
  original_png_ = encode_png(plan_.image);
}

std::string Pipeline::call(ChatRole role, ChatExchange exchange) {
  ++calls_;
  return gateway_.chat(role, std::move(exchange));
}

ChatExchange Pipeline::make_exchange(const RenderedPrompt& prompt,
                                     const std::vector<std::uint8_t>* png) const {
  ChatExchange ex;
  if (!prompt.system_text.empty()) {
    ex.messages.push_back({MessageRole::system, prompt.system_text, std::nullopt});
  }
  ChatMessage user{MessageRole::user, prompt.user_text, std::nullopt};
  if (png) user.image = ImageAttachment{"image/png", *png};
  ex.messages.push_back(std::move(user));
  return ex;
}

std::string Pipeline::stage1_initial() {
  if (plan_.question.empty()) throw std::invalid_argument("empty query");
  return call(ChatRole::vision, make_exchange({"", plan_.question}, &original_png_));
}

std::vector<std::string> Pipeline::stage2_extract(const std::string& response) {
  if (response.empty()) throw std::invalid_argument("empty response to extract from");
  const auto prompt = prompts_.render(TemplateId::entity_extraction, {{"sentence", response}});
  return parse_entities(call(ChatRole::text, make_exchange(prompt, nullptr)));
}

CoordinateResult Pipeline::stage3_coordinates(const std::string& entity) {
  if (entity.empty()) throw std::invalid_argument("empty entity");
  const auto prompt = prompts_.render(TemplateId::coordinate_generation, {{"entity", entity}});
  const auto reply = call(ChatRole::vision, make_exchange(prompt, &original_png_));
  auto parsed = parse_bbox(reply);
  CoordinateResult out;
  out.diagnostics = std::move(parsed.diagnostics);
  if (parsed.value) {
    out.bbox = *parsed.value;
  } else {
    out.fallback = true;
  }
  return out;
}

RasterImage Pipeline::region_image(const BBoxNorm& bbox, std::vector<std::string>* warnings) const {
  const auto& cfg = plan_.config;
  switch (cfg.image_prompt_kind) {
    case ImagePromptKind::original:
      return plan_.image;
    case ImagePromptKind::cropped:
      return crop(plan_.image, bbox);
    case ImagePromptKind::overlaid: {
      auto result = overlay(plan_.image, {bbox, cfg.box_shape, cfg.box_color,
                                          static_cast<int>(cfg.box_stroke_px)});
      if (result.fully_clipped && warnings) warnings->push_back("overlay fully clipped");
      return std::move(result.image);
    }
  }
  throw std::logic_error("unhandled image prompt kind");
}

std::vector<std::string> Pipeline::stage4_describe(const std::string& entity, const BBoxNorm& bbox,
                                                   std::vector<std::string>* warnings) {
  (void)entity;  // the description prompt names only the region
  const auto& cfg = plan_.config;
  const auto png = encode_png(region_image(bbox, warnings));
  const auto prompt =
      prompts_.render(TemplateId::region_description, {{"coordinate", format_coordinate(bbox)}});
  return ordered_parallel_map(cfg.num_samples, cfg.parallelism, [&](std::size_t j) {
    auto ex = make_exchange(prompt, &png);
    ex.temperature = cfg.sampling_temperature;
    ex.sample_index = static_cast<std::uint32_t>(j);
    return call(ChatRole::vision, std::move(ex));
  });
}

void Pipeline::stage5_verify(EntityRecord& entity) {
  if (entity.descriptions.empty()) throw std::invalid_argument("no descriptions to verify");
  const auto& cfg = plan_.config;
  const auto replies =
      ordered_parallel_map(entity.descriptions.size(), cfg.parallelism, [&](std::size_t j) {
        const auto prompt = prompts_.render(
            TemplateId::verification,
            {{"statement", entity.descriptions[j]}, {"object", entity.name}});
        auto ex = make_exchange(prompt, nullptr);
        ex.sample_index = static_cast<std::uint32_t>(j);
        return call(ChatRole::text, std::move(ex));
      });

  entity.votes.clear();
  for (std::size_t j = 0; j < replies.size(); ++j) {
    const auto verdict = parse_yes_no(replies[j]);
    if (verdict.value) {
      entity.votes.push_back(*verdict.value);
    } else {
      entity.votes.push_back(Vote::no);
      entity.warnings.push_back("unparseable verdict at sample " + std::to_string(j) +
                                ", counted as No");
    }
  }
  apply_votes(entity, cfg.threshold);
}

std::string verification_summary(const std::vector<EntityRecord>& entities) {
  std::string out;
  for (const auto& e : entities) {
    if (!e.flagged_hallucinated) continue;
    if (!out.empty()) out += '\n';
    out += *e.flagged_hallucinated ? "The " + e.name + " is confirmed to not exist in the image."
                                   : "The " + e.name + " is confirmed to exist in the image.";
  }
  return out;
}

std::string Pipeline::stage6_revise(const std::string& initial,
                                    const std::vector<EntityRecord>& entities) {
  for (const auto& e : entities) {
    if (!e.flagged_hallucinated) throw std::invalid_argument("entity '" + e.name + "' not scored");
  }
  const bool any = std::any_of(entities.begin(), entities.end(),
                               [](const EntityRecord& e) { return *e.flagged_hallucinated; });
  if (!any) return initial;
  const auto prompt = prompts_.render(TemplateId::final_response,
                                      {{"query", plan_.question},
                                       {"passage", initial},
                                       {"information", verification_summary(entities)}});
  return call(ChatRole::text, make_exchange(prompt, nullptr));
}

VerificationReport Pipeline::run() {
  VerificationReport report;
  report.query_text = plan_.question;
  report.image_id = plan_.image_id;
  try {
    {
      StageTimer t(report, Stage::initial);
      report.initial_response = stage1_initial();
    }
    std::vector<std::string> names;
    {
      StageTimer t(report, Stage::extract);
      names = stage2_extract(report.initial_response);
    }
    for (const auto& name : names) {
      auto& e = report.entities.emplace_back();
      e.name = name;
      {
        StageTimer t(report, Stage::coordinates);
        auto coords = stage3_coordinates(name);
        e.bbox = coords.bbox;
        e.bbox_fallback = coords.fallback;
        if (coords.fallback) {
          std::string why;
          for (const auto& d : coords.diagnostics) why += (why.empty() ? "" : ", ") + d;
          e.warnings.push_back("bbox fallback (" + why + ")");
        }
      }
      {
        StageTimer t(report, Stage::describe);
        e.descriptions = stage4_describe(name, *e.bbox, &e.warnings);
      }
      {
        StageTimer t(report, Stage::verify);
        stage5_verify(e);
      }
    }
    {
      StageTimer t(report, Stage::revise);
      report.final_response = stage6_revise(report.initial_response, report.entities);
    }
  } catch (...) {
    auto cause = std::current_exception();
    report.error = describe_exception(cause);
    report.backend_call_count = calls();
    throw PipelineError(std::move(report), cause);
  }
  for (const auto& e : report.entities) {
    for (const auto& w : e.warnings) report.warnings.push_back(e.name + ": " + w);
  }
  report.backend_call_count = calls();
  return report;
}

VerificationReport Pipeline::run_vanilla() {
  VerificationReport report;
  report.query_text = plan_.question;
  report.image_id = plan_.image_id;
  report.vanilla = true;
  try {
    StageTimer t(report, Stage::initial);
    report.initial_response = stage1_initial();
  } catch (...) {
    auto cause = std::current_exception();
    report.error = describe_exception(cause);
    report.backend_call_count = calls();
    throw PipelineError(std::move(report), cause);
  }
  report.final_response = report.initial_response;
  report.backend_call_count = calls();
  return report;
}

json report_to_json(const VerificationReport& report, const PipelineConfig& config,
                    bool include_timings) {
  json entities = json::array();
  for (const auto& e : report.entities) {
    json votes = json::array();
    for (auto v : e.votes) votes.push_back(static_cast<int>(v));
    entities.push_back({
        {"name", e.name},
        {"bbox", e.bbox ? json{e.bbox->x_min(), e.bbox->y_min(), e.bbox->x_max(), e.bbox->y_max()}
                        : json(nullptr)},
        {"bbox_fallback", e.bbox_fallback},
        {"descriptions", e.descriptions},
        {"votes", votes},
        {"score", e.score ? json{{"yes", e.score->yes_votes()},
                                 {"samples", e.score->samples()},
                                 {"value", e.score->value()}}
                          : json(nullptr)},
        {"hallucinated", e.flagged_hallucinated ? json(*e.flagged_hallucinated) : json(nullptr)},
        {"warnings", e.warnings},
    });
  }
  json doc = {
      {"query", report.query_text},
      {"image_id", report.image_id},
      {"vanilla", report.vanilla},
      {"initial_response", report.initial_response},
      {"entities", std::move(entities)},
      {"final_response", report.final_response},
      {"backend_call_count", report.backend_call_count},
      {"warnings", report.warnings},
      {"error", report.error ? json(*report.error) : json(nullptr)},
      {"config",
       {{"samples", config.num_samples},
        {"threshold", config.threshold},
        {"prompt_kind", to_string(config.image_prompt_kind)},
        {"shape", to_string(config.box_shape)},
        {"color", to_string(config.box_color)},
        {"stroke", config.box_stroke_px},
        {"temperature", config.sampling_temperature},
        {"seed", config.seed}}},
  };
  if (include_timings) {
    json timings = json::object();
    for (std::size_t i = 0; i < kStageCount; ++i) {
      timings[std::string(to_string(static_cast<Stage>(i)))] =
          std::chrono::duration<double, std::milli>(report.stage_timings[i]).count();
    }
    doc["stage_timings_ms"] = std::move(timings);
  }
  return doc;
}

}  // namespace rcov
