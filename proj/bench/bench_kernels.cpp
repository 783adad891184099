// Serial reference vs OpenMP kernel timings.

#include <benchmark/benchmark.h>

#include <random>

#include "rcov/evalkit.hpp"
#include "rcov/vprompt.hpp"

using namespace rcov;

namespace {

RasterImage noise(int w, int h) {
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (auto& b : px) b = static_cast<std::uint8_t>(rng());
  return {w, h, std::move(px)};
}

const CategoryVocabulary& coco() {
  static const auto v =
      CategoryVocabulary::load(std::filesystem::path(RCOV_SOURCE_DIR) / "data" / "vocab" / "coco_vocabulary.json");
  return v;
}

AnnotationCorpus corpus(std::size_t images) {
  std::mt19937_64 rng(2);
  const auto& cats = coco().categories();
  AnnotationCorpus out;
  for (std::size_t i = 0; i < images; ++i) {
    AnnotatedImage img{std::to_string(i), {}};
    for (int k = 0; k < 6; ++k) img.objects.insert(cats[rng() % cats.size()]);
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<CaptionRecord> captions(const AnnotationCorpus& c) {
  std::mt19937_64 rng(3);
  const auto& cats = coco().categories();
  std::vector<CaptionRecord> out;
  for (const auto& img : c) {
    std::string text = "A photo showing";
    for (int k = 0; k < 5; ++k) text += " a " + cats[rng() % cats.size()] + " and";
    text += " nothing else. It was taken outdoors on a sunny day.";
    out.push_back({img.image_id, std::move(text)});
  }
  return out;
}

template <OverlayResult (*Fn)(const RasterImage&, const OverlaySpec&)>
void BM_Overlay(benchmark::State& state) {
  const auto img = noise(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const OverlaySpec spec{{0.1, 0.1, 0.9, 0.9}, static_cast<BoxShape>(state.range(1)), {255, 0, 0}, 4};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(img, spec));
}

template <CorpusStats (*Fn)(const AnnotationCorpus&, const CategoryVocabulary&)>
void BM_CorpusStats(benchmark::State& state) {
  const auto c = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c, coco()));
}

template <ChairScores (*Fn)(std::span<const CaptionRecord>, const AnnotationCorpus&, const CategoryVocabulary&)>
void BM_Chair(benchmark::State& state) {
  const auto c = corpus(static_cast<std::size_t>(state.range(0)));
  const auto caps = captions(c);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(caps, c, coco()));
}

}  // namespace

BENCHMARK(BM_Overlay<overlay_serial>)->ArgsProduct({{512, 2048}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Overlay<overlay>)->ArgsProduct({{512, 2048}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CorpusStats<corpus_stats_serial>)->Arg(5000)->Arg(40000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorpusStats<corpus_stats>)->Arg(5000)->Arg(40000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Chair<score_chair_serial>)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Chair<score_chair>)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
