#pragma once

// Benchmark construction and scoring: POPE question sets, MME existence
// scoring, CHAIR caption metrics and pairwise judge evaluation.
//
// Corpus statistics and CHAIR tallies have OpenMP kernels alongside the
// serial references (`*_serial`) they are tested against.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rcov/gateway.hpp"
#include "rcov/prompts.hpp"
#include "rcov/textparse.hpp"
#include "rcov/vprompt.hpp"

namespace rcov {

/// Lowercase words joined by single spaces; any non-alphanumeric byte
/// separates words.
std::string normalize_phrase(std::string_view text);

class CategoryVocabulary {
 public:
  CategoryVocabulary() = default;

  /// JSON list of {"category": name, "synonyms": [...]}. Throws ConfigError
  /// when a phrase would map to two categories.
  static CategoryVocabulary from_json(const nlohmann::json& doc);
  static CategoryVocabulary load(const std::filesystem::path& path);

  void add_category(std::string_view name, const std::vector<std::string>& synonyms = {});

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  /// Canonical category for a phrase (normalized first), if any.
  std::optional<std::string> canonical(std::string_view phrase) const;
  std::optional<std::size_t> index_of(std::string_view category) const;
  const std::map<std::string, std::string, std::less<>>& synonyms() const noexcept {
    return synonyms_;
  }
  std::size_t max_phrase_words() const noexcept { return max_words_; }

 private:
  void add_synonym(const std::string& phrase, const std::string& category);
  void link_table_aliases();

  std::vector<std::string> categories_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, std::string, std::less<>> synonyms_;
  std::size_t max_words_ = 1;
};

struct AnnotatedImage {
  std::string image_id;
  std::set<std::string> objects;  // canonical names
};

using AnnotationCorpus = std::vector<AnnotatedImage>;

/// JSON list of {"image_id": ..., "objects": [...]}; object names go through
/// the vocabulary. Unknown names throw ConfigError.
AnnotationCorpus parse_annotations(const nlohmann::json& doc, const CategoryVocabulary& vocab);
AnnotationCorpus load_annotations(const std::filesystem::path& path,
                                  const CategoryVocabulary& vocab);
nlohmann::json annotations_to_json(const AnnotationCorpus& corpus);

/// COCO instances JSON -> corpus, through the vocabulary. Images without
/// annotations are kept with an empty object set.
AnnotationCorpus convert_coco_instances(const nlohmann::json& coco,
                                        const CategoryVocabulary& vocab);

// ---- POPE ----------------------------------------------------------------

enum class YesNo : std::uint8_t { no = 0, yes = 1 };
enum class PopeSplit { random, popular, adversarial };

std::string_view to_string(YesNo v) noexcept;
std::string_view to_string(PopeSplit split) noexcept;
PopeSplit parse_pope_split(std::string_view text);

struct PopeQuestion {
  std::string image_id;
  std::string object;
  YesNo label = YesNo::no;
  PopeSplit split = PopeSplit::random;

  /// "Is there a/an <object> in the image?"
  std::string text() const;
};

struct PopeOptions {
  PopeSplit split = PopeSplit::random;
  std::size_t images = 50;
  std::size_t questions_per_image = 6;
  std::uint64_t seed = 0;
};

struct PopeSet {
  std::vector<PopeQuestion> questions;
  std::vector<std::string> warnings;
};

/// Per-category image counts and pairwise co-occurrence counts, indexed by
/// vocabulary position.
struct CorpusStats {
  std::size_t categories = 0;
  std::vector<std::uint64_t> frequency;
  std::vector<std::uint64_t> cooccurrence;  // categories x categories, row-major

  std::uint64_t cooc(std::size_t a, std::size_t b) const noexcept {
    return cooccurrence[a * categories + b];
  }
};

CorpusStats corpus_stats(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab);
CorpusStats corpus_stats_serial(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab);

/// Half positives from each sampled image's objects, half negatives chosen
/// by the split rule: uniform over absent categories (random), most frequent
/// absent categories (popular), or absent categories co-occurring most with
/// the image's objects (adversarial). Ties go to the smaller name.
/// Images with too few objects are skipped with a warning; throws
/// std::invalid_argument when the corpus cannot fill the request.
PopeSet generate_pope(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab,
                      const PopeOptions& options);

// ---- metrics -------------------------------------------------------------

struct MetricReport {
  std::string name;
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};

/// value = numerator / denominator, or 0 when the denominator is 0.
MetricReport make_metric(std::string name, double numerator, double denominator);
nlohmann::json to_json(const MetricReport& m);

struct BinaryScores {
  MetricReport accuracy;
  MetricReport f1;  // numerator 2TP, denominator 2TP + FP + FN
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// "yes" is the positive class. Throws std::invalid_argument on empty or
/// mismatched inputs.
BinaryScores score_binary(std::span<const YesNo> predictions, std::span<const YesNo> labels);

/// Yes/no reading of a free-form answer: the leading verdict when there is
/// one, otherwise "no" if a negation word appears, otherwise "yes".
YesNo answer_to_yes_no(std::string_view answer);

struct MmeRecord {
  std::string image_id;
  YesNo prediction = YesNo::no;
  YesNo label = YesNo::no;
};

struct MmeScores {
  MetricReport accuracy;
  MetricReport accuracy_plus;
};

/// Records are grouped by image id (first-appearance order); every image
/// needs exactly two. Throws std::invalid_argument("odd grouping ...").
MmeScores score_mme(std::span<const MmeRecord> records);

/// Canonical categories mentioned in a caption. Matching runs per sentence,
/// longest synonym first, on whole words only.
std::set<std::string> extract_caption_objects(std::string_view caption,
                                              const CategoryVocabulary& vocab);

struct CaptionRecord {
  std::string image_id;
  std::string caption;
};

/// CHAIR_I counts unique categories per caption, summed over captions.
/// Precision is non-hallucinated mentions over mentions, recall is
/// mentioned ground-truth categories over ground-truth categories, and F1
/// combines those micro-averages.
struct ChairScores {
  MetricReport chair_s;
  MetricReport chair_i;
  MetricReport precision;
  MetricReport recall;
  MetricReport f1;
};

/// Throws std::invalid_argument for a caption whose image is not annotated.
ChairScores score_chair(std::span<const CaptionRecord> captions, const AnnotationCorpus& corpus,
                        const CategoryVocabulary& vocab);
ChairScores score_chair_serial(std::span<const CaptionRecord> captions,
                               const AnnotationCorpus& corpus, const CategoryVocabulary& vocab);

// ---- judge ---------------------------------------------------------------

/// One vision call to the judge with the image and both responses.
/// Parse failures surface as ParseError carrying the raw reply.
JudgeScores judge_pair(Gateway& judge, const PromptSet& prompts, const RasterImage& image,
                       const std::string& response_a, const std::string& response_b);

struct JudgeSummary {
  MetricReport accuracy_a;
  MetricReport accuracy_b;
  MetricReport relevancy_a;
  MetricReport relevancy_b;
};

JudgeSummary summarize_judge(std::span<const JudgeScores> scores);

}  // namespace rcov
