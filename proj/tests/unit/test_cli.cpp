#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rcov/cli.hpp"
#include "rcov/errors.hpp"
#include "rcov/image_io.hpp"
#include "test_support.hpp"

using namespace rcov;
using nlohmann::json;
using rcov::testing::read_text;
using rcov::testing::TempDir;
using rcov::testing::write_text;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string expect_config_error(std::string_view text) {
  try {
    cli::apply_config(cli::ConfigDocument::parse(text), fs::temp_directory_path());
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

// The only subdirectory of an output dir.
fs::path run_dir(const fs::path& output) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(output)) dirs.push_back(e.path());
  EXPECT_EQ(dirs.size(), 1u);
  return dirs.empty() ? fs::path() : dirs.front();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

// A small benchmark workspace with a scripted model that says yes only to
// dogs and never finds entities to check.
class Workspace {
 public:
  Workspace() {
    fs::create_directories(dir_ / "images");
    for (const char* id : {"1", "2", "3", "4"}) {
      write_png(dir_ / "images" / (std::string(id) + ".png"), RasterImage(16, 12));
    }
    write_text(dir_ / "annotations.json", R"([
      {"image_id": "1", "objects": ["dog", "cat", "person"]},
      {"image_id": "2", "objects": ["car", "bus", "truck"]},
      {"image_id": "3", "objects": ["dog", "bench", "bird"]},
      {"image_id": "4", "objects": ["cup", "fork", "knife"]}])");
    write_text(dir_ / "fixture.jsonl",
               R"({"role": "vision", "contains": ["[Assistant 1]"], "responses": ["Accuracy: 5 8\nRelevancy: 6 9"]}
{"role": "text", "contains": ["[Supplementary Information]"], "responses": ["Revised."]}
{"role": "text", "contains": ["[Statement]"], "responses": ["Yes"]}
{"role": "text", "contains": ["[Sentence]"], "responses": ["None"]}
{"role": "vision", "contains": ["Locate the"], "responses": ["[0.1, 0.1, 0.5, 0.5]"]}
{"role": "vision", "contains": ["in the image in detail"], "responses": ["A region."]}
{"role": "vision", "contains": ["Please describe"], "responses": ["A dog sits next to a cat."]}
{"role": "vision", "contains": ["Is there a dog"], "responses": ["Yes, there is a dog."]}
{"role": "vision", "contains": ["Is there"], "responses": ["No, there is not."]}
)");
    write_text(dir_ / "mme.jsonl", R"({"image_id": "1", "question": "Is there a dog in the image?", "label": "yes"}
{"image_id": "1", "question": "Is there a car in the image?", "label": "no"}
{"image_id": "2", "question": "Is there a car in the image?", "label": "yes"}
{"image_id": "2", "question": "Is there a dog in the image?", "label": "no"}
)");
    write_text(dir_ / "captions.jsonl", R"({"image_id": "1", "caption": "A dog and a cat."}
{"image_id": 3, "caption": "A dog on a bench next to a car."}
)");
    write_text(dir_ / "config.toml", R"(# test workspace
[pipeline]
samples = 2
parallelism = 2

[gateway]
cache = true

[vision]
kind = "scripted"
fixture = "fixture.jsonl"

[text]
kind = "same-as-vision"

[eval]
annotations = "annotations.json"
images_dir = "images"
questions = "mme.jsonl"
images = 4
questions_per_image = 2
)");
  }

  fs::path config() const { return dir_ / "config.toml"; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }
  fs::path out() const { return dir_ / "runs"; }

  std::vector<std::string> eval(const std::string& bench, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{"eval", bench, "--config", config().string(), "--output-dir",
                                  out().string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }

 private:
  TempDir dir_;
};

}  // namespace

TEST(ConfigDocument, ParsesTypedValues) {
  const auto doc = cli::ConfigDocument::parse(
      "# comment\n[pipeline]\nsamples = 5  # trailing\nthreshold = 0.25\n"
      "[vision]\nmodel = \"a \\\"b\\\" # c\"\n[gateway]\ncache = false\n");
  const auto& e = doc.entries();
  EXPECT_EQ(e.at("pipeline.samples").integer, 5);
  EXPECT_EQ(e.at("pipeline.samples").line, 3);
  EXPECT_EQ(e.at("pipeline.threshold").real, 0.25);
  EXPECT_EQ(e.at("vision.model").text, "a \"b\" # c");
  EXPECT_FALSE(e.at("gateway.cache").boolean);
}

TEST(ConfigDocument, SyntaxErrorsNameTheLine) {
  EXPECT_EQ(expect_config_error("[pipeline]\nsamples 5\n"), "config line 2: expected key = value");
  EXPECT_EQ(expect_config_error("samples = 5\n"), "config line 1: key outside any section");
  EXPECT_EQ(expect_config_error("[vision]\nmodel = \"abc\n"), "config line 2: unterminated string");
  EXPECT_EQ(expect_config_error("[pipeline]\nsamples = 5\nsamples = 6\n"),
            "config line 3: duplicate key 'pipeline.samples'");
  EXPECT_EQ(expect_config_error("[pipeline\n"), "config line 1: unterminated section header");
  EXPECT_EQ(expect_config_error("[pipeline]\nseed = 12abc\n"), "config line 2: cannot read value '12abc'");
}

TEST(Config, KeyErrorsNameTheKey) {
  EXPECT_EQ(expect_config_error("[pipeline]\n\nbogus = 1\n"), "config line 3: unknown key 'pipeline.bogus'");
  EXPECT_EQ(expect_config_error("[pipeline]\nsamples = \"7\"\n"),
            "config key 'pipeline.samples': expected an integer");
  EXPECT_EQ(expect_config_error("[pipeline]\nsamples = 0\n"), "config key 'pipeline.samples': out of range");
  EXPECT_EQ(expect_config_error("[pipeline]\nshape = \"oval\"\n").rfind("config key 'pipeline.shape': ", 0), 0u);
  EXPECT_EQ(expect_config_error("[vision]\nkind = \"grpc\"\n"),
            "config key 'vision.kind': expected \"http\" or \"scripted\"");
  EXPECT_EQ(expect_config_error("[eval]\nannotations = \"/no/such/file.json\"\n")
                .rfind("config key 'eval.annotations': no such path", 0),
            0u);
  EXPECT_NE(expect_config_error("[pipeline]\nthreshold = 1.5\n").find("threshold"), std::string::npos);
}

TEST(Config, AppliesSectionsAndResolvesPaths) {
  TempDir dir;
  write_text(dir / "f.jsonl", "{\"responses\": [\"x\"]}\n");
  write_text(dir / "c.toml", R"([pipeline]
samples = 3
threshold = 0.2
prompt_kind = "cropped"
shape = "circumcircle"
color = "0,128,255"
stroke = 2
seed = 5

[gateway]
cache_dir = "cache"
max_retries = 0

[vision]
kind = "http"
model = "llava"
base_url = "http://localhost:8000/v1"
max_tokens = 64

[text]
kind = "scripted"
fixture = "f.jsonl"

[eval]
split = "adversarial"
)");
  const auto cfg = cli::load_config(dir / "c.toml");
  EXPECT_EQ(cfg.pipeline.num_samples, 3u);
  EXPECT_EQ(cfg.pipeline.image_prompt_kind, ImagePromptKind::cropped);
  EXPECT_EQ(cfg.pipeline.box_shape, BoxShape::circumcircle);
  EXPECT_EQ(cfg.pipeline.box_color, (Rgb{0, 128, 255}));
  EXPECT_EQ(cfg.pipeline.seed, 5u);
  EXPECT_EQ(cfg.max_retries, 0);
  EXPECT_EQ(*cfg.paths.cache_dir, dir / "cache");
  EXPECT_EQ(cfg.binding.vision.model, "llava");
  EXPECT_EQ(cfg.binding.vision.max_tokens, 64);
  ASSERT_TRUE(cfg.binding.text);
  EXPECT_EQ(cfg.binding.text->kind, EndpointDescriptor::Kind::scripted);
  EXPECT_EQ(cfg.binding.text->fixture, dir / "f.jsonl");
  EXPECT_EQ(cfg.eval.split, PopeSplit::adversarial);
  EXPECT_FALSE(cfg.judge);
}

TEST(Cli, DemoVerifyRun) {
  TempDir out;
  const auto demo = rcov::testing::source_dir() / "data" / "demo";
  const auto r = run_cli({"verify", (demo / "street.png").string(), "Describe the street scene in this image.",
                          "--config", (demo / "walkthrough.toml").string(), "--output-dir",
                          out.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "A woman walks along the sidewalk carrying a handbag.\n");
  EXPECT_NE(r.err.find("run directory: "), std::string::npos);
  const auto rows = read_jsonl(run_dir(out.path()) / "reports.jsonl");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["backend_call_count"], 17);
  EXPECT_EQ(rows[0]["entities"][1]["name"], "truck");
  EXPECT_EQ(rows[0]["entities"][1]["hallucinated"], true);
  EXPECT_EQ(rows[0]["entities"][0]["hallucinated"], false);
}

TEST(Cli, MissingImageExitsTwo) {
  TempDir out;
  const auto demo = rcov::testing::source_dir() / "data" / "demo";
  const auto r = run_cli({"verify", "/no/such/image.png", "What is this?", "--config",
                          (demo / "walkthrough.toml").string(), "--output-dir", out.path().string()});
  EXPECT_EQ(r.code, cli::kExitImage);
  EXPECT_NE(r.err.find("error: "), std::string::npos);

  write_text(out / "junk.png", "not an image");
  EXPECT_EQ(run_cli({"verify", (out / "junk.png").string(), "q", "--config", (demo / "walkthrough.toml").string(),
                     "--output-dir", out.path().string()})
                .code,
            cli::kExitImage);
}

TEST(Cli, UnreachableEndpointExitsThree) {
  TempDir dir;
  write_text(dir / "c.toml", R"([gateway]
cache = false
max_retries = 0

[vision]
kind = "http"
model = "m"
base_url = "http://127.0.0.1:9/v1"
timeout_s = 2
)");
  const auto image = rcov::testing::source_dir() / "data" / "demo" / "street.png";
  const auto r = run_cli({"verify", image.string(), "What is this?", "--config", (dir / "c.toml").string(),
                          "--output-dir", (dir / "runs").string()});
  EXPECT_EQ(r.code, cli::kExitTransport);
  EXPECT_NE(r.err.find("endpoint unreachable"), std::string::npos);
  EXPECT_NE(r.err.find("(after 1 attempts)"), std::string::npos);
  // The partial report is still logged.
  const auto rows = read_jsonl(run_dir(dir / "runs") / "reports.jsonl");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0]["error"].is_null());
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"eval", "bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"verify"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);

  Workspace ws;
  EXPECT_EQ(run_cli(ws.eval("pope", {"--threshold", "2"})).code, cli::kExitUsage);
  EXPECT_EQ(run_cli(ws.eval("pope", {"--color", "purple"})).code, cli::kExitUsage);
  EXPECT_EQ(run_cli(ws.eval("judge", {"--vanilla"})).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"eval", "pope", "--config", "/no/such.toml"}).code, cli::kExitUsage);
  const auto r = run_cli(ws.eval("pope", {"--samples", "0"}));
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("samples"), std::string::npos);
}

TEST(Cli, PopeVanillaScoresAndIsReproducible) {
  Workspace ws;
  std::string metrics[2], questions[2];
  for (int i = 0; i < 2; ++i) {
    fs::remove_all(ws.out());
    const auto r = run_cli(ws.eval("pope", {"--vanilla", "--seed", "7"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto dir = run_dir(ws.out());
    metrics[i] = read_text(dir / "metrics.json");
    questions[i] = read_text(dir / "questions.jsonl");
    EXPECT_EQ(read_jsonl(dir / "reports.jsonl").size(), 8u);
  }
  EXPECT_EQ(metrics[0], metrics[1]);
  EXPECT_EQ(questions[0], questions[1]);

  const auto m = json::parse(metrics[0]);
  EXPECT_EQ(m["benchmark"], "pope");
  EXPECT_EQ(m["mode"], "vanilla");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["questions"], 8);
  // The model says yes exactly to dogs; images 1 and 3 hold a dog.
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& q : read_jsonl(run_dir(ws.out()) / "questions.jsonl")) {
    const bool said_yes = q["object"] == "dog";
    const bool truth = q["label"] == "yes";
    (said_yes ? (truth ? tp : fp) : (truth ? fn : tn))++;
  }
  EXPECT_EQ(m["confusion"]["tp"], tp);
  EXPECT_EQ(m["confusion"]["fn"], fn);
  EXPECT_DOUBLE_EQ(m["metrics"]["accuracy"]["value"].get<double>(), static_cast<double>(tp + tn) / 8.0);
}

TEST(Cli, PopeFullPipelineRuns) {
  Workspace ws;
  const auto r = run_cli(ws.eval("pope", {"--seed", "3"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = run_dir(ws.out());
  const auto rows = read_jsonl(dir / "reports.jsonl");
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& row : rows) {
    EXPECT_EQ(row["backend_call_count"], 2);  // extraction answers "None"
    EXPECT_TRUE(row["item"].contains("label"));
  }
  EXPECT_EQ(json::parse(read_text(dir / "metrics.json"))["mode"], "rcov");
}

TEST(Cli, MmeScoresPairs) {
  Workspace ws;
  const auto r = run_cli(ws.eval("mme"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(read_text(run_dir(ws.out()) / "metrics.json"));
  EXPECT_DOUBLE_EQ(m["metrics"]["accuracy"]["value"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(m["metrics"]["accuracy_plus"]["value"].get<double>(), 0.5);
}

TEST(Cli, ChairFromFileAndGenerated) {
  Workspace ws;
  auto r = run_cli(ws.eval("chair", {}));
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = json::parse(read_text(run_dir(ws.out()) / "metrics.json"));
  // Every caption is "A dog sits next to a cat."
  EXPECT_EQ(m["captions"], 4);
  EXPECT_DOUBLE_EQ(m["metrics"]["chair_s"]["value"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(m["metrics"]["chair_i"]["value"].get<double>(), 5.0 / 8.0);

  fs::remove_all(ws.out());
  write_text(ws / "c2.toml", read_text(ws.config()) + "captions = \"captions.jsonl\"\n");
  r = run_cli({"eval", "chair", "--config", (ws / "c2.toml").string(), "--output-dir", ws.out().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  m = json::parse(read_text(run_dir(ws.out()) / "metrics.json"));
  EXPECT_EQ(m["source"], "captions file");
  EXPECT_DOUBLE_EQ(m["metrics"]["chair_s"]["value"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(m["metrics"]["chair_i"]["value"].get<double>(), 0.2);
  EXPECT_TRUE(m.contains("f1_definition"));
}

TEST(Cli, JudgeComparesVanillaAndVerified) {
  Workspace ws;
  const auto r = run_cli(ws.eval("judge"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = run_dir(ws.out());
  const auto m = json::parse(read_text(dir / "metrics.json"));
  EXPECT_EQ(m["assistant_1"], "vanilla");
  EXPECT_DOUBLE_EQ(m["metrics"]["accuracy_a"]["value"].get<double>(), 5.0);
  EXPECT_DOUBLE_EQ(m["metrics"]["relevancy_b"]["value"].get<double>(), 9.0);
  EXPECT_EQ(read_jsonl(dir / "judgements.jsonl").size(), 4u);
}

TEST(Cli, RenderPreviewAndConvertCoco) {
  TempDir dir;
  write_png(dir / "in.png", RasterImage(100, 100));
  auto r = run_cli({"render-preview", (dir / "in.png").string(), "--bbox", "0.2,0.2,0.6,0.6", "--prompt-kind",
                    "cropped", "--out", (dir / "out.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto img = read_image(dir / "out.png");
  EXPECT_EQ(img.width(), 41);
  EXPECT_EQ(img.height(), 41);
  EXPECT_EQ(run_cli({"render-preview", (dir / "in.png").string(), "--bbox", "0.6,0.2,0.2,0.6", "--out",
                     (dir / "x.png").string()})
                .code,
            cli::kExitUsage);

  write_text(dir / "instances.json", R"({"categories": [{"id": 3, "name": "car"}],
    "images": [{"id": 10}, {"id": 11}], "annotations": [{"image_id": 10, "category_id": 3}]})");
  r = run_cli({"convert-coco", (dir / "instances.json").string(), "--out", (dir / "ann.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ann = json::parse(read_text(dir / "ann.json"));
  ASSERT_EQ(ann.size(), 2u);
  EXPECT_EQ(ann[0]["image_id"], "10");
  EXPECT_EQ(ann[0]["objects"], json::array({"car"}));
  EXPECT_TRUE(ann[1]["objects"].empty());
}
