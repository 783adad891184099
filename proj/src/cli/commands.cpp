#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcov/cli.hpp"
#include "rcov/errors.hpp"
#include "rcov/image_io.hpp"
#include "rcov/pipeline.hpp"
#include "rcov/strings.hpp"

#ifndef RCOV_DATA_DIR
#define RCOV_DATA_DIR "data"
#endif

namespace rcov::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  bool vanilla = false;
  std::optional<std::uint32_t> parallelism;
  std::optional<fs::path> cache_dir;
  std::optional<fs::path> output_dir;
  std::optional<std::uint32_t> samples;
  std::optional<double> threshold;
  std::optional<std::string> prompt_kind;
  std::optional<std::string> shape;
  std::optional<std::string> color;
  std::optional<std::uint32_t> stroke;
};

void add_common_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "Configuration file");
  cmd.add_option("--seed", o.seed, "Seed for sampling and question generation");
  cmd.add_option("--parallelism", o.parallelism, "Concurrent backend calls");
  cmd.add_option("--cache-dir", o.cache_dir, "Persistent response cache directory");
  cmd.add_option("--output-dir", o.output_dir, "Parent of the run directory");
  cmd.add_option("--samples", o.samples, "Descriptions per entity (L)");
  cmd.add_option("--threshold", o.threshold, "Hallucination threshold (tau)");
  cmd.add_option("--prompt-kind", o.prompt_kind, "original | overlaid | cropped");
  cmd.add_option("--shape", o.shape, "rectangle | incircle | circumcircle");
  cmd.add_option("--color", o.color, "Overlay color name or R,G,B");
  cmd.add_option("--stroke", o.stroke, "Overlay stroke width in pixels");
}

template <typename T, typename Parse>
void override_with(const std::optional<std::string>& flag, std::string_view name, T& out,
                   Parse parse) {
  if (!flag) return;
  try {
    out = parse(*flag);
  } catch (const std::exception& e) {
    throw ConfigError("--" + std::string(name) + ": " + e.what());
  }
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.config ? load_config(*o.config) : RunConfig{};
  auto& p = cfg.pipeline;
  if (o.seed) p.seed = *o.seed;
  if (o.parallelism) p.parallelism = *o.parallelism;
  if (o.samples) p.num_samples = *o.samples;
  if (o.threshold) p.threshold = *o.threshold;
  if (o.stroke) p.box_stroke_px = *o.stroke;
  override_with(o.prompt_kind, "prompt-kind", p.image_prompt_kind, parse_prompt_kind);
  override_with(o.shape, "shape", p.box_shape, parse_box_shape);
  override_with(o.color, "color", p.box_color, parse_color);
  if (o.cache_dir) cfg.paths.cache_dir = *o.cache_dir;
  if (o.output_dir) cfg.paths.output_dir = *o.output_dir;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

EndpointDescriptor prepare_endpoint(EndpointDescriptor ep, std::string_view section,
                                    const PipelineConfig& pipeline) {
  const auto key = [&](std::string_view k) { return std::string(section) + "." + std::string(k); };
  if (ep.kind == EndpointDescriptor::Kind::scripted) {
    if (ep.fixture.empty()) throw ConfigError(key("fixture") + ": required for scripted endpoints");
    return ep;
  }
  if (ep.base_url.empty()) throw ConfigError(key("base_url") + ": required for http endpoints");
  if (ep.model.empty()) throw ConfigError(key("model") + ": required for http endpoints");
  if (ep.api_key.empty()) {
    if (const char* env = std::getenv("RCOV_API_KEY")) ep.api_key = env;
  }
  if (!ep.seed && pipeline.seed != 0) ep.seed = pipeline.seed;
  return ep;
}

GatewayOptions gateway_options(const RunConfig& cfg) {
  GatewayOptions opts;
  opts.cache_enabled = cfg.cache_enabled;
  opts.cache_dir = cfg.paths.cache_dir;
  opts.retry.max_retries = cfg.max_retries;
  return opts;
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg) {
  auto vision = Gateway::make_backend(prepare_endpoint(cfg.binding.vision, "vision", cfg.pipeline));
  std::shared_ptr<ChatBackend> text;
  if (cfg.binding.text) {
    text = Gateway::make_backend(prepare_endpoint(*cfg.binding.text, "text", cfg.pipeline));
  }
  return std::make_unique<Gateway>(std::move(vision), std::move(text), gateway_options(cfg));
}

std::unique_ptr<Gateway> make_judge_gateway(const RunConfig& cfg) {
  const auto& ep = cfg.judge ? *cfg.judge : cfg.binding.vision;
  auto backend = Gateway::make_backend(prepare_endpoint(ep, cfg.judge ? "judge" : "vision", cfg.pipeline));
  return std::make_unique<Gateway>(std::move(backend), nullptr, gateway_options(cfg));
}

PromptSet make_prompts(const RunConfig& cfg) {
  PromptSet prompts;
  fs::path dir = cfg.paths.examples_dir.value_or(fs::path(RCOV_DATA_DIR) / "prompts");
  if (fs::is_directory(dir)) prompts.load_examples_dir(dir);
  for (const auto& [id, file] : cfg.template_files) prompts.load_template_file(id, file);
  return prompts;
}

CategoryVocabulary load_vocabulary(const RunConfig& cfg) {
  return CategoryVocabulary::load(
      cfg.paths.vocabulary.value_or(fs::path(RCOV_DATA_DIR) / "vocab" / "coco_vocabulary.json"));
}

const fs::path& require(const std::optional<fs::path>& p, std::string_view key) {
  if (!p) throw ConfigError(std::string(key) + ": required for this command");
  return *p;
}

// ---- run directory ---------------------------------------------------------

class RunDirectory {
 public:
  RunDirectory(fs::path parent, std::string command)
      : parent_(std::move(parent)), command_(std::move(command)) {}

  const fs::path& path() {
    if (dir_.empty()) create();
    return dir_;
  }

  void append_report(const json& record) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path() / "reports.jsonl", std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir_ / "reports.jsonl").string());
  }

  void write_json(const std::string& name, const json& doc) {
    std::ofstream out(path() / name, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  }

  void write_jsonl(const std::string& name, const std::vector<json>& rows) {
    std::ofstream out(path() / name, std::ios::binary);
    for (const auto& r : rows) out << r.dump() << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  }

 private:
  void create() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const std::string base = std::string(stamp) + "-" + command_;
    fs::create_directories(parent_);
    for (int n = 0;; ++n) {
      auto candidate = parent_ / (n == 0 ? base : base + "-" + std::to_string(n));
      if (fs::create_directory(candidate)) {
        dir_ = std::move(candidate);
        return;
      }
    }
  }

  fs::path parent_;
  std::string command_;
  fs::path dir_;
  std::mutex mutex_;
};

// ---- items -----------------------------------------------------------------

struct Item {
  std::string image_id;
  fs::path image_path;
  std::string question;
  json meta = json::object();
};

fs::path find_image(const fs::path& dir, const std::string& image_id) {
  for (const char* ext : {"", ".png", ".jpg", ".jpeg"}) {
    auto p = dir / (image_id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  throw ImageError("cannot read image " + image_id + ": not found in " + dir.string());
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<json> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string image_id_of(const json& row) {
  const auto& id = row.at("image_id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

// Question files carry image_id and question, optionally an image path.
std::vector<Item> read_question_items(const RunConfig& cfg) {
  const auto& file = require(cfg.paths.questions, "eval.questions");
  std::vector<Item> items;
  try {
    for (auto& row : read_jsonl(file)) {
      Item item;
      item.image_id = image_id_of(row);
      item.question = row.at("question").get<std::string>();
      if (row.contains("image")) {
        item.image_path = file.parent_path() / row.at("image").get<std::string>();
      } else {
        item.image_path = find_image(require(cfg.paths.images_dir, "eval.images_dir"), item.image_id);
      }
      item.meta = std::move(row);
      items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return items;
}

struct ItemOutcome {
  json record;
  std::string initial;
  std::string final_text;
  std::exception_ptr error;
};

// Runs one pipeline per item, up to `parallelism` items at a time. Each
// run issues its own calls serially, so the bound holds overall.
std::vector<ItemOutcome> run_items(const std::vector<Item>& items, const RunConfig& cfg,
                                   Gateway& gateway, const PromptSet& prompts, bool vanilla) {
  std::map<fs::path, RasterImage> images;
  for (const auto& item : items) {
    if (!images.contains(item.image_path)) images.emplace(item.image_path, read_image(item.image_path));
  }
  return ordered_parallel_map(items.size(), cfg.pipeline.parallelism, [&](std::size_t i) {
    const auto& item = items[i];
    StagePlan plan{cfg.pipeline, images.at(item.image_path), item.image_id, item.question};
    plan.config.parallelism = 1;
    ItemOutcome out;
    try {
      Pipeline pipeline(gateway, prompts, std::move(plan));
      const auto report = vanilla ? pipeline.run_vanilla() : pipeline.run();
      out.record = report_to_json(report, cfg.pipeline);
      out.initial = report.initial_response;
      out.final_text = report.final_response;
    } catch (const PipelineError& e) {
      out.record = report_to_json(e.partial(), cfg.pipeline);
      out.error = e.cause();
    } catch (...) {
      out.error = std::current_exception();
    }
    out.record["item"] = item.meta;
    return out;
  });
}

/// Logs every outcome; rethrows the first failure.
void log_outcomes(std::vector<ItemOutcome>& outcomes, RunDirectory& run) {
  for (const auto& o : outcomes) run.append_report(o.record);
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
  }
}

json metrics_object(std::initializer_list<const MetricReport*> metrics) {
  json out = json::object();
  for (const auto* m : metrics) out[m->name] = to_json(*m);
  return out;
}

std::string mode_name(bool vanilla) { return vanilla ? "vanilla" : "rcov"; }

// ---- commands --------------------------------------------------------------

int cmd_verify(const Overrides& o, const fs::path& image_path, const std::string& question,
               std::optional<std::string> image_id, std::ostream& out, std::ostream& err) {
  const auto cfg = resolve_config(o);
  const auto image = read_image(image_path);
  auto gateway = make_gateway(cfg);
  const auto prompts = make_prompts(cfg);
  RunDirectory run(cfg.paths.output_dir, "verify");

  StagePlan plan{cfg.pipeline, image, image_id.value_or(image_path.stem().string()), question};
  Pipeline pipeline(*gateway, prompts, std::move(plan));
  try {
    const auto report = o.vanilla ? pipeline.run_vanilla() : pipeline.run();
    run.append_report(report_to_json(report, cfg.pipeline));
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    out << report.final_response << '\n';
  } catch (const PipelineError& e) {
    run.append_report(report_to_json(e.partial(), cfg.pipeline));
    err << "run directory: " << run.path().string() << '\n';
    std::rethrow_exception(e.cause());
  }
  err << "run directory: " << run.path().string() << '\n';
  return kExitOk;
}

int cmd_eval_pope(const Overrides& o, std::ostream& err) {
  const auto cfg = resolve_config(o);
  const auto vocab = load_vocabulary(cfg);
  const auto corpus = load_annotations(require(cfg.paths.annotations, "eval.annotations"), vocab);
  const auto& images_dir = require(cfg.paths.images_dir, "eval.images_dir");

  PopeOptions opts{cfg.eval.split, cfg.eval.images, cfg.eval.questions_per_image, cfg.pipeline.seed};
  PopeSet set;
  try {
    set = generate_pope(corpus, vocab, opts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("pope: ") + e.what());
  }
  for (const auto& w : set.warnings) err << "warning: " << w << '\n';

  std::vector<Item> items;
  std::vector<json> question_rows;
  for (const auto& q : set.questions) {
    json meta = {{"image_id", q.image_id},
                 {"object", q.object},
                 {"label", std::string(to_string(q.label))},
                 {"split", std::string(to_string(q.split))},
                 {"question", q.text()}};
    question_rows.push_back(meta);
    items.push_back({q.image_id, find_image(images_dir, q.image_id), q.text(), std::move(meta)});
  }

  auto gateway = make_gateway(cfg);
  const auto prompts = make_prompts(cfg);
  RunDirectory run(cfg.paths.output_dir, "eval-pope");
  run.write_jsonl("questions.jsonl", question_rows);
  auto outcomes = run_items(items, cfg, *gateway, prompts, o.vanilla);
  log_outcomes(outcomes, run);

  std::vector<YesNo> predictions;
  std::vector<YesNo> labels;
  for (std::size_t i = 0; i < items.size(); ++i) {
    predictions.push_back(answer_to_yes_no(outcomes[i].final_text));
    labels.push_back(set.questions[i].label);
  }
  const auto scores = score_binary(predictions, labels);
  run.write_json("metrics.json",
                 {{"benchmark", "pope"},
                  {"mode", mode_name(o.vanilla)},
                  {"split", std::string(to_string(cfg.eval.split))},
                  {"seed", cfg.pipeline.seed},
                  {"questions", items.size()},
                  {"metrics", metrics_object({&scores.accuracy, &scores.f1})},
                  {"confusion", {{"tp", scores.tp}, {"fp", scores.fp}, {"tn", scores.tn}, {"fn", scores.fn}}},
                  {"warnings", set.warnings}});
  err << "run directory: " << run.path().string() << '\n';
  return kExitOk;
}

int cmd_eval_mme(const Overrides& o, std::ostream& err) {
  const auto cfg = resolve_config(o);
  auto items = read_question_items(cfg);
  std::vector<YesNo> labels;
  for (const auto& item : items) {
    try {
      const auto label = to_lower(trim(item.meta.at("label").get<std::string>()));
      if (label != "yes" && label != "no") throw ConfigError("label must be yes or no");
      labels.push_back(label == "yes" ? YesNo::yes : YesNo::no);
    } catch (const json::exception& e) {
      throw ConfigError("eval.questions: image " + item.image_id + ": " + e.what());
    }
  }

  auto gateway = make_gateway(cfg);
  const auto prompts = make_prompts(cfg);
  RunDirectory run(cfg.paths.output_dir, "eval-mme");
  auto outcomes = run_items(items, cfg, *gateway, prompts, o.vanilla);
  log_outcomes(outcomes, run);

  std::vector<MmeRecord> records;
  for (std::size_t i = 0; i < items.size(); ++i) {
    records.push_back({items[i].image_id, answer_to_yes_no(outcomes[i].final_text), labels[i]});
  }
  MmeScores scores;
  try {
    scores = score_mme(records);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mme: ") + e.what());
  }
  run.write_json("metrics.json", {{"benchmark", "mme"},
                                  {"mode", mode_name(o.vanilla)},
                                  {"questions", items.size()},
                                  {"metrics", metrics_object({&scores.accuracy, &scores.accuracy_plus})}});
  err << "run directory: " << run.path().string() << '\n';
  return kExitOk;
}

int cmd_eval_chair(const Overrides& o, std::ostream& err) {
  const auto cfg = resolve_config(o);
  const auto vocab = load_vocabulary(cfg);
  const auto corpus = load_annotations(require(cfg.paths.annotations, "eval.annotations"), vocab);
  RunDirectory run(cfg.paths.output_dir, "eval-chair");

  std::vector<CaptionRecord> captions;
  std::string source;
  if (cfg.paths.captions) {
    source = "captions file";
    try {
      for (const auto& row : read_jsonl(*cfg.paths.captions)) {
        captions.push_back({image_id_of(row), row.at("caption").get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw ConfigError("eval.captions: " + std::string(e.what()));
    }
  } else {
    source = mode_name(o.vanilla);
    const auto& images_dir = require(cfg.paths.images_dir, "eval.images_dir");
    std::vector<Item> items;
    for (std::size_t i = 0; i < corpus.size() && i < cfg.eval.images; ++i) {
      const auto& id = corpus[i].image_id;
      items.push_back({id, find_image(images_dir, id), cfg.eval.caption_prompt, {{"image_id", id}}});
    }
    auto gateway = make_gateway(cfg);
    const auto prompts = make_prompts(cfg);
    auto outcomes = run_items(items, cfg, *gateway, prompts, o.vanilla);
    log_outcomes(outcomes, run);
    for (std::size_t i = 0; i < items.size(); ++i) captions.push_back({items[i].image_id, outcomes[i].final_text});
  }

  ChairScores scores;
  try {
    scores = score_chair(captions, corpus, vocab);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("chair: ") + e.what());
  }
  run.write_json("metrics.json",
                 {{"benchmark", "chair"},
                  {"source", source},
                  {"captions", captions.size()},
                  {"metrics", metrics_object({&scores.chair_s, &scores.chair_i, &scores.precision,
                                              &scores.recall, &scores.f1})},
                  {"f1_definition",
                   "micro-averaged over unique category mentions per caption: precision = correct "
                   "mentions / mentions, recall = mentioned ground-truth categories / ground-truth "
                   "categories"}});
  err << "run directory: " << run.path().string() << '\n';
  return kExitOk;
}

int cmd_eval_judge(const Overrides& o, std::ostream& err) {
  if (o.vanilla) throw ConfigError("--vanilla: the judge compares vanilla and verified responses already");
  const auto cfg = resolve_config(o);
  auto items = read_question_items(cfg);
  auto gateway = make_gateway(cfg);
  auto judge = make_judge_gateway(cfg);
  const auto prompts = make_prompts(cfg);
  RunDirectory run(cfg.paths.output_dir, "eval-judge");
  auto outcomes = run_items(items, cfg, *gateway, prompts, false);
  log_outcomes(outcomes, run);

  std::vector<JudgeScores> scores(items.size());
  std::vector<json> rows;
  const auto judged = ordered_parallel_map(items.size(), cfg.pipeline.parallelism, [&](std::size_t i) {
    return judge_pair(*judge, prompts, read_image(items[i].image_path), outcomes[i].initial,
                      outcomes[i].final_text);
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    scores[i] = judged[i];
    rows.push_back({{"image_id", items[i].image_id},
                    {"accuracy", {judged[i].accuracy.first, judged[i].accuracy.second}},
                    {"relevancy", {judged[i].relevancy.first, judged[i].relevancy.second}}});
  }
  run.write_jsonl("judgements.jsonl", rows);
  const auto s = summarize_judge(scores);
  run.write_json("metrics.json",
                 {{"benchmark", "judge"},
                  {"assistant_1", "vanilla"},
                  {"assistant_2", "rcov"},
                  {"items", items.size()},
                  {"metrics", metrics_object({&s.accuracy_a, &s.accuracy_b, &s.relevancy_a, &s.relevancy_b})}});
  err << "run directory: " << run.path().string() << '\n';
  return kExitOk;
}

int cmd_render_preview(const Overrides& o, const fs::path& image_path, const std::string& bbox_text,
                       const fs::path& out_path, std::ostream& out) {
  const auto cfg = resolve_config(o);
  auto parsed = parse_bbox("[" + bbox_text + "]");
  if (!parsed.value) throw ConfigError("--bbox: expected four numbers x0,y0,x1,y1 with x0<x1, y0<y1");
  for (const auto& d : parsed.diagnostics) out << "note: bbox " << d << '\n';
  const auto image = read_image(image_path);
  RasterImage result;
  switch (cfg.pipeline.image_prompt_kind) {
    case ImagePromptKind::original: result = image; break;
    case ImagePromptKind::cropped: result = crop(image, *parsed.value); break;
    case ImagePromptKind::overlaid: {
      auto r = overlay(image, {*parsed.value, cfg.pipeline.box_shape, cfg.pipeline.box_color,
                               static_cast<int>(cfg.pipeline.box_stroke_px)});
      if (r.fully_clipped) out << "warning: overlay fully clipped\n";
      result = std::move(r.image);
      break;
    }
  }
  write_png(out_path, result);
  out << out_path.string() << " " << result.width() << "x" << result.height() << '\n';
  return kExitOk;
}

int cmd_convert_coco(const fs::path& instances, const std::optional<fs::path>& vocab_path,
                     const fs::path& out_path, std::ostream& out) {
  RunConfig cfg;
  cfg.paths.vocabulary = vocab_path;
  const auto vocab = load_vocabulary(cfg);
  std::ifstream in(instances, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + instances.string());
  json coco;
  try {
    coco = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(instances.string() + ": " + e.what());
  }
  const auto corpus = convert_coco_instances(coco, vocab);
  std::ofstream o(out_path, std::ios::binary);
  o << annotations_to_json(corpus).dump(1) << '\n';
  if (!o) throw std::runtime_error("cannot write " + out_path.string());
  out << corpus.size() << " images written to " << out_path.string() << '\n';
  return kExitOk;
}

int exit_code_for(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const PipelineError& ex) {
    return exit_code_for(ex.cause(), err);
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const ImageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitImage;
  } catch (const TransportError& ex) {
    err << "error: endpoint unreachable after retries: " << ex.what() << '\n';
    return kExitTransport;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << "\nraw reply:\n" << ex.raw() << '\n';
    return kExitOther;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitOther;
  } catch (...) {
    err << "error: unknown failure\n";
    return kExitOther;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-aware verification of vision-language model responses", "rcov"};
  app.require_subcommand(1);
  Overrides o;

  std::string image;
  std::string question;
  std::optional<std::string> image_id;
  auto* verify = app.add_subcommand("verify", "Run the verification pipeline on one image");
  verify->add_option("image", image, "Image file (PNG or JPEG)")->required();
  verify->add_option("question", question, "Question or instruction")->required();
  verify->add_option("--image-id", image_id, "Identifier recorded in the report");
  verify->add_flag("--vanilla", o.vanilla, "Stop after the initial response");
  add_common_flags(*verify, o);

  auto* eval = app.add_subcommand("eval", "Run a benchmark");
  eval->require_subcommand(1);
  std::vector<CLI::App*> benches;
  for (const char* name : {"pope", "mme", "chair", "judge"}) {
    auto* b = eval->add_subcommand(name, std::string(name) + " benchmark");
    b->add_flag("--vanilla", o.vanilla, "Score initial responses only");
    add_common_flags(*b, o);
    benches.push_back(b);
  }

  std::string bbox;
  std::string preview_out = "preview.png";
  auto* preview = app.add_subcommand("render-preview", "Write the image a region description call receives");
  preview->add_option("image", image, "Image file")->required();
  preview->add_option("--bbox", bbox, "Normalized box x0,y0,x1,y1")->required();
  preview->add_option("--out", preview_out, "Output PNG");
  add_common_flags(*preview, o);

  std::string instances;
  std::optional<fs::path> vocab_path;
  std::string annotations_out;
  auto* convert = app.add_subcommand("convert-coco", "Convert COCO instance annotations");
  convert->add_option("instances", instances, "COCO instances JSON")->required();
  convert->add_option("--vocabulary", vocab_path, "Vocabulary JSON");
  convert->add_option("--out", annotations_out, "Annotations JSON to write")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(o, image, question, image_id, out, err);
    if (*benches[0]) return cmd_eval_pope(o, err);
    if (*benches[1]) return cmd_eval_mme(o, err);
    if (*benches[2]) return cmd_eval_chair(o, err);
    if (*benches[3]) return cmd_eval_judge(o, err);
    if (*preview) return cmd_render_preview(o, image, bbox, preview_out, out);
    if (*convert) return cmd_convert_coco(instances, vocab_path, annotations_out, out);
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace rcov::cli
