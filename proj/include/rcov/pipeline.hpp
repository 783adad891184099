#pragma once

// The six-stage region-aware verification pipeline:
//
//   1. initial response      vision   question + original image
//   2. entity extraction     text     object list from the response
//   3. coordinate generation vision   one box per entity, original image
//   4. region description    vision   L sampled descriptions per box
//   5. verification          text     L yes/no verdicts per entity
//   6. final response        text     revision, only if something is flagged
//
// A full run makes 2 + N + 2NL backend calls, plus one when any entity is
// flagged.

#include <atomic>
#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcov/domain.hpp"
#include "rcov/gateway.hpp"
#include "rcov/prompts.hpp"
#include "rcov/vprompt.hpp"

namespace rcov {

struct StagePlan {
  PipelineConfig config;
  RasterImage image;
  std::string image_id;
  std::string question;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Thrown when a stage fails; holds the report up to the failing stage.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(VerificationReport partial, std::exception_ptr cause);

  const VerificationReport& partial() const noexcept { return partial_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  VerificationReport partial_;
  std::exception_ptr cause_;
};

struct CoordinateResult {
  BBoxNorm bbox = BBoxNorm::full();
  bool fallback = false;
  std::vector<std::string> diagnostics;
};

/// One execution context over a plan. Stage methods may be called
/// individually; run() chains them. Calls made through this object are
/// counted in calls().
class Pipeline {
 public:
  Pipeline(Gateway& gateway, const PromptSet& prompts, StagePlan plan);

  std::string stage1_initial();
  std::vector<std::string> stage2_extract(const std::string& response);
  CoordinateResult stage3_coordinates(const std::string& entity);
  std::vector<std::string> stage4_describe(const std::string& entity, const BBoxNorm& bbox,
                                           std::vector<std::string>* warnings = nullptr);
  /// Fills votes, score and flag. Unparseable verdicts count as "No" and
  /// leave a warning on the record.
  void stage5_verify(EntityRecord& entity);
  std::string stage6_revise(const std::string& initial, const std::vector<EntityRecord>& entities);

  /// The image a region description call receives for this box.
  RasterImage region_image(const BBoxNorm& bbox, std::vector<std::string>* warnings = nullptr) const;

  /// Throws PipelineError.
  VerificationReport run();
  /// Stage 1 only; final_response equals the initial response.
  VerificationReport run_vanilla();

  std::uint64_t calls() const noexcept { return calls_.load(); }
  const StagePlan& plan() const noexcept { return plan_; }

 private:
  std::string call(ChatRole role, ChatExchange exchange);
  ChatExchange make_exchange(const RenderedPrompt& prompt,
                             const std::vector<std::uint8_t>* png) const;

  Gateway& gateway_;
  const PromptSet& prompts_;
  StagePlan plan_;
  std::vector<std::uint8_t> original_png_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Runs fn(0..count-1) with at most `limit` in flight; results come back in
/// index order. The exception of the lowest failing index is rethrown.
template <typename Fn>
auto ordered_parallel_map(std::size_t count, std::size_t limit, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))>;

/// The supplementary-information block for the final-response prompt.
std::string verification_summary(const std::vector<EntityRecord>& entities);

/// One run-log record. Timings are omitted when include_timings is false so
/// that repeated runs can be compared byte for byte.
nlohmann::json report_to_json(const VerificationReport& report, const PipelineConfig& config,
                              bool include_timings = true);

}  // namespace rcov

#include "rcov/detail/parallel_map.hpp"
