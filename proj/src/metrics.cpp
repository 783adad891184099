#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "rcov/evalkit.hpp"
#include "rcov/image_io.hpp"
#include "rcov/strings.hpp"

namespace rcov {

using nlohmann::json;

MetricReport make_metric(std::string name, double numerator, double denominator) {
  return {std::move(name), denominator == 0.0 ? 0.0 : numerator / denominator, numerator,
          denominator};
}

json to_json(const MetricReport& m) {
  return {{"name", m.name},
          {"value", m.value},
          {"numerator", m.numerator},
          {"denominator", m.denominator}};
}

BinaryScores score_binary(std::span<const YesNo> predictions, std::span<const YesNo> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("predictions and labels differ in length");
  }
  if (predictions.empty()) throw std::invalid_argument("no predictions to score");
  BinaryScores s;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] == YesNo::yes;
    const bool l = labels[i] == YesNo::yes;
    if (p && l) ++s.tp;
    else if (p) ++s.fp;
    else if (l) ++s.fn;
    else ++s.tn;
  }
  s.accuracy = make_metric("accuracy", static_cast<double>(s.tp + s.tn),
                           static_cast<double>(predictions.size()));
  s.f1 = make_metric("f1", 2.0 * static_cast<double>(s.tp),
                     static_cast<double>(2 * s.tp + s.fp + s.fn));
  return s;
}

YesNo answer_to_yes_no(std::string_view answer) {
  if (const auto v = parse_yes_no(answer).value) return *v == Vote::yes ? YesNo::yes : YesNo::no;
  static const std::set<std::string, std::less<>> kNegations = {
      "no",    "not",    "none",  "nothing", "never", "neither", "nor",
      "cannot", "isnt", "arent", "doesnt",  "dont",  "cant",    "nobody"};
  std::string word;
  auto flush = [&] {
    const bool hit = kNegations.contains(word);
    word.clear();
    return hit;
  };
  for (char c : answer) {
    if (is_alnum(c)) {
      word += lower(c);
    } else if (c == '\'') {
      continue;  // "isn't" -> "isnt"
    } else if (flush()) {
      return YesNo::no;
    }
  }
  return flush() ? YesNo::no : YesNo::yes;
}

MmeScores score_mme(std::span<const MmeRecord> records) {
  if (records.empty()) throw std::invalid_argument("no records to score");
  std::vector<std::string> order;
  std::map<std::string, std::vector<bool>, std::less<>> groups;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.image_id);
    if (inserted) order.push_back(r.image_id);
    it->second.push_back(r.prediction == r.label);
  }
  std::uint64_t correct = 0;
  std::uint64_t both = 0;
  for (const auto& id : order) {
    const auto& g = groups.at(id);
    if (g.size() != 2) {
      throw std::invalid_argument("odd grouping: image " + id + " has " +
                                  std::to_string(g.size()) + " questions, expected 2");
    }
    correct += static_cast<std::uint64_t>(g[0]) + static_cast<std::uint64_t>(g[1]);
    if (g[0] && g[1]) ++both;
  }
  return {make_metric("accuracy", static_cast<double>(correct), static_cast<double>(records.size())),
          make_metric("accuracy_plus", static_cast<double>(both), static_cast<double>(order.size()))};
}

// ---- CHAIR ---------------------------------------------------------------

namespace {

bool sentence_end(char c) { return c == '.' || c == '!' || c == '?' || c == '\n'; }

void match_sentence(std::string_view sentence, const CategoryVocabulary& vocab,
                    std::set<std::string>& out) {
  std::vector<std::string> words;
  {
    std::string cur;
    for (char c : sentence) {
      if (is_alnum(c)) {
        cur += lower(c);
      } else if (!cur.empty()) {
        words.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
  }

  const auto& table = vocab.synonyms();
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t taken = 0;
    const auto longest = std::min(vocab.max_phrase_words(), words.size() - i);
    for (std::size_t n = longest; n >= 1 && taken == 0; --n) {
      std::string phrase = words[i];
      for (std::size_t k = 1; k < n; ++k) phrase += ' ' + words[i + k];
      if (const auto it = table.find(phrase); it != table.end()) {
        out.insert(it->second);
        taken = n;
      }
    }
    i += taken == 0 ? 1 : taken;
  }
}

struct ChairTally {
  std::uint64_t captions = 0;
  std::uint64_t hallucinated_captions = 0;
  std::uint64_t mentions = 0;
  std::uint64_t hallucinated_mentions = 0;
  std::uint64_t ground_truth = 0;
  std::uint64_t recalled = 0;
};

void tally_caption(const std::set<std::string>& mentioned, const std::set<std::string>& truth,
                   ChairTally& t) {
  std::uint64_t bad = 0;
  for (const auto& m : mentioned) {
    if (!truth.contains(m)) ++bad;
  }
  ++t.captions;
  t.mentions += mentioned.size();
  t.hallucinated_mentions += bad;
  t.hallucinated_captions += bad > 0 ? 1 : 0;
  t.ground_truth += truth.size();
  t.recalled += mentioned.size() - bad;
}

ChairScores finish(const ChairTally& t) {
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  const auto correct = t.mentions - t.hallucinated_mentions;
  return {make_metric("chair_s", d(t.hallucinated_captions), d(t.captions)),
          make_metric("chair_i", d(t.hallucinated_mentions), d(t.mentions)),
          make_metric("precision", d(correct), d(t.mentions)),
          make_metric("recall", d(t.recalled), d(t.ground_truth)),
          make_metric("f1", 2.0 * d(correct), d(t.mentions + t.ground_truth))};
}

std::vector<const AnnotatedImage*> resolve_images(std::span<const CaptionRecord> captions,
                                                  const AnnotationCorpus& corpus) {
  std::unordered_map<std::string_view, const AnnotatedImage*> by_id;
  for (const auto& img : corpus) by_id.emplace(img.image_id, &img);
  std::vector<const AnnotatedImage*> out;
  out.reserve(captions.size());
  for (const auto& c : captions) {
    const auto it = by_id.find(c.image_id);
    if (it == by_id.end()) throw std::invalid_argument("caption for unannotated image " + c.image_id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

std::set<std::string> extract_caption_objects(std::string_view caption,
                                              const CategoryVocabulary& vocab) {
  std::set<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= caption.size(); ++i) {
    if (i == caption.size() || sentence_end(caption[i])) {
      match_sentence(caption.substr(start, i - start), vocab, out);
      start = i + 1;
    }
  }
  return out;
}

ChairScores score_chair_serial(std::span<const CaptionRecord> captions,
                               const AnnotationCorpus& corpus, const CategoryVocabulary& vocab) {
  const auto images = resolve_images(captions, corpus);
  ChairTally t;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    tally_caption(extract_caption_objects(captions[i].caption, vocab), images[i]->objects, t);
  }
  return finish(t);
}

ChairScores score_chair(std::span<const CaptionRecord> captions, const AnnotationCorpus& corpus,
                        const CategoryVocabulary& vocab) {
  const auto images = resolve_images(captions, corpus);
  std::uint64_t caps = 0, hcaps = 0, ments = 0, hments = 0, gt = 0, rec = 0;
  const auto n = static_cast<std::int64_t>(captions.size());
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : caps, hcaps, ments, hments, gt, rec)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    ChairTally t;
    tally_caption(extract_caption_objects(captions[k].caption, vocab), images[k]->objects, t);
    caps += t.captions;
    hcaps += t.hallucinated_captions;
    ments += t.mentions;
    hments += t.hallucinated_mentions;
    gt += t.ground_truth;
    rec += t.recalled;
  }
  return finish({caps, hcaps, ments, hments, gt, rec});
}

// ---- judge ---------------------------------------------------------------

JudgeScores judge_pair(Gateway& judge, const PromptSet& prompts, const RasterImage& image,
                       const std::string& response_a, const std::string& response_b) {
  const auto prompt =
      prompts.render(TemplateId::judge, {{"response_a", response_a}, {"response_b", response_b}});
  ChatExchange ex;
  if (!prompt.system_text.empty()) {
    ex.messages.push_back({MessageRole::system, prompt.system_text, std::nullopt});
  }
  ex.messages.push_back(
      {MessageRole::user, prompt.user_text, ImageAttachment{"image/png", encode_png(image)}});
  return parse_judge_scores(judge.chat(ChatRole::vision, std::move(ex)));
}

JudgeSummary summarize_judge(std::span<const JudgeScores> scores) {
  double acc_a = 0, acc_b = 0, rel_a = 0, rel_b = 0;
  for (const auto& s : scores) {
    acc_a += s.accuracy.first;
    acc_b += s.accuracy.second;
    rel_a += s.relevancy.first;
    rel_b += s.relevancy.second;
  }
  const auto n = static_cast<double>(scores.size());
  return {make_metric("accuracy_a", acc_a, n), make_metric("accuracy_b", acc_b, n),
          make_metric("relevancy_a", rel_a, n), make_metric("relevancy_b", rel_b, n)};
}

}  // namespace rcov
