#include "rcov/evalkit.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rcov/errors.hpp"
#include "rcov/strings.hpp"

namespace rcov {

using nlohmann::json;

std::string normalize_phrase(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_alnum(c) || static_cast<unsigned char>(c) >= 0x80) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += lower(c);
    } else {
      pending_space = true;
    }
  }
  return out;
}

// ---- vocabulary ----------------------------------------------------------

void CategoryVocabulary::add_synonym(const std::string& phrase, const std::string& category) {
  if (phrase.empty()) return;
  auto [it, inserted] = synonyms_.emplace(phrase, category);
  if (!inserted && it->second != category) {
    throw ConfigError("synonym '" + phrase + "' maps to both '" + it->second + "' and '" +
                      category + "'");
  }
  max_words_ = std::max<std::size_t>(max_words_, 1 + std::count(phrase.begin(), phrase.end(), ' '));
}

void CategoryVocabulary::add_category(std::string_view name,
                                      const std::vector<std::string>& synonyms) {
  const auto canonical = normalize_phrase(name);
  if (canonical.empty()) throw ConfigError("empty category name");
  if (index_.contains(canonical)) throw ConfigError("duplicate category '" + canonical + "'");
  index_.emplace(canonical, categories_.size());
  categories_.push_back(canonical);
  add_synonym(canonical, canonical);
  for (const auto& s : synonyms) add_synonym(normalize_phrase(s), canonical);
  link_table_aliases();
}

// "table" and "dining table" always name the same category.
void CategoryVocabulary::link_table_aliases() {
  const auto a = synonyms_.find("dining table");
  const auto b = synonyms_.find("table");
  if (a != synonyms_.end() && b == synonyms_.end()) {
    add_synonym("table", a->second);
  } else if (b != synonyms_.end() && a == synonyms_.end()) {
    add_synonym("dining table", b->second);
  } else if (a != synonyms_.end() && a->second != b->second) {
    throw ConfigError("'table' and 'dining table' must map to the same category");
  }
}

CategoryVocabulary CategoryVocabulary::from_json(const json& doc) {
  CategoryVocabulary vocab;
  try {
    for (const auto& entry : doc) {
      vocab.add_category(entry.at("category").get<std::string>(),
                         entry.value("synonyms", std::vector<std::string>{}));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("vocabulary: ") + e.what());
  }
  return vocab;
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

CategoryVocabulary CategoryVocabulary::load(const std::filesystem::path& path) {
  return from_json(read_json(path));
}

std::optional<std::string> CategoryVocabulary::canonical(std::string_view phrase) const {
  const auto it = synonyms_.find(normalize_phrase(phrase));
  if (it == synonyms_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> CategoryVocabulary::index_of(std::string_view category) const {
  const auto it = index_.find(category);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---- annotations ---------------------------------------------------------

AnnotationCorpus parse_annotations(const json& doc, const CategoryVocabulary& vocab) {
  AnnotationCorpus corpus;
  std::set<std::string> seen_ids;
  try {
    for (const auto& entry : doc) {
      AnnotatedImage img;
      const auto& id = entry.at("image_id");
      img.image_id = id.is_string() ? id.get<std::string>() : id.dump();
      if (!seen_ids.insert(img.image_id).second) {
        throw ConfigError("duplicate image_id '" + img.image_id + "'");
      }
      for (const auto& obj : entry.at("objects")) {
        const auto name = obj.get<std::string>();
        auto c = vocab.canonical(name);
        if (!c) throw ConfigError("image " + img.image_id + ": unknown category '" + name + "'");
        img.objects.insert(*c);
      }
      corpus.push_back(std::move(img));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("annotations: ") + e.what());
  }
  return corpus;
}

AnnotationCorpus load_annotations(const std::filesystem::path& path,
                                  const CategoryVocabulary& vocab) {
  return parse_annotations(read_json(path), vocab);
}

json annotations_to_json(const AnnotationCorpus& corpus) {
  json out = json::array();
  for (const auto& img : corpus) {
    out.push_back({{"image_id", img.image_id},
                   {"objects", std::vector<std::string>(img.objects.begin(), img.objects.end())}});
  }
  return out;
}

AnnotationCorpus convert_coco_instances(const json& coco, const CategoryVocabulary& vocab) {
  std::map<std::int64_t, std::string> category_names;
  std::map<std::int64_t, std::size_t> image_slot;
  AnnotationCorpus corpus;
  try {
    for (const auto& c : coco.at("categories")) {
      const auto name = c.at("name").get<std::string>();
      auto canon = vocab.canonical(name);
      if (!canon) throw ConfigError("COCO category '" + name + "' is not in the vocabulary");
      category_names[c.at("id").get<std::int64_t>()] = *canon;
    }
    for (const auto& im : coco.at("images")) {
      const auto id = im.at("id").get<std::int64_t>();
      image_slot[id] = corpus.size();
      corpus.push_back({std::to_string(id), {}});
    }
    for (const auto& a : coco.at("annotations")) {
      const auto img = image_slot.find(a.at("image_id").get<std::int64_t>());
      const auto cat = category_names.find(a.at("category_id").get<std::int64_t>());
      if (img == image_slot.end() || cat == category_names.end()) {
        throw ConfigError("COCO annotation references an unknown image or category");
      }
      corpus[img->second].objects.insert(cat->second);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("COCO instances: ") + e.what());
  }
  return corpus;
}

// ---- POPE ----------------------------------------------------------------

std::string_view to_string(YesNo v) noexcept { return v == YesNo::yes ? "yes" : "no"; }

std::string_view to_string(PopeSplit split) noexcept {
  switch (split) {
    case PopeSplit::random: return "random";
    case PopeSplit::popular: return "popular";
    case PopeSplit::adversarial: return "adversarial";
  }
  return "?";
}

PopeSplit parse_pope_split(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "random") return PopeSplit::random;
  if (t == "popular") return PopeSplit::popular;
  if (t == "adversarial") return PopeSplit::adversarial;
  throw std::invalid_argument("unknown POPE split '" + std::string(text) + "'");
}

std::string PopeQuestion::text() const {
  const bool vowel = !object.empty() && std::string_view("aeiou").find(lower(object[0])) !=
                                            std::string_view::npos;
  return std::string("Is there ") + (vowel ? "an " : "a ") + object + " in the image?";
}

CorpusStats corpus_stats_serial(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab) {
  const auto k = vocab.categories().size();
  CorpusStats stats{k, std::vector<std::uint64_t>(k, 0), std::vector<std::uint64_t>(k * k, 0)};
  for (const auto& img : corpus) {
    for (const auto& a : img.objects) {
      const auto ia = *vocab.index_of(a);
      ++stats.frequency[ia];
      for (const auto& b : img.objects) {
        if (a != b) ++stats.cooccurrence[ia * k + *vocab.index_of(b)];
      }
    }
  }
  return stats;
}

CorpusStats corpus_stats(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab) {
  const auto k = vocab.categories().size();
  CorpusStats stats{k, std::vector<std::uint64_t>(k, 0), std::vector<std::uint64_t>(k * k, 0)};
  if (k == 0) return stats;

  // Index lists first so the parallel loop never touches the string maps.
  std::vector<std::vector<std::size_t>> ids(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& o : corpus[i].objects) ids[i].push_back(*vocab.index_of(o));
  }

  std::uint64_t* freq = stats.frequency.data();
  std::uint64_t* cooc = stats.cooccurrence.data();
  const auto n = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : freq[:k], cooc[:k * k])
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& objs = ids[static_cast<std::size_t>(i)];
    for (auto a : objs) {
      ++freq[a];
      for (auto b : objs) {
        if (a != b) ++cooc[a * k + b];
      }
    }
  }
  return stats;
}

namespace {

// Uniform integer in [0, n) from raw mt19937_64 output; the distribution
// classes are implementation-defined, this is not.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = (std::numeric_limits<std::uint64_t>::max() / n) * n;
  for (;;) {
    const auto x = rng();
    if (x < limit) return x % n;
  }
}

// First `count` elements after a partial Fisher-Yates shuffle.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t count,
                                          std::mt19937_64& rng) {
  count = std::min(count, items.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + uniform_below(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

}  // namespace

PopeSet generate_pope(const AnnotationCorpus& corpus, const CategoryVocabulary& vocab,
                      const PopeOptions& options) {
  const auto q = options.questions_per_image;
  if (q == 0 || q % 2 != 0) throw std::invalid_argument("questions_per_image must be even and > 0");
  const auto half = q / 2;

  PopeSet out;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].objects.size() >= half) {
      eligible.push_back(i);
    } else {
      out.warnings.push_back("image " + corpus[i].image_id + " skipped: " +
                             std::to_string(corpus[i].objects.size()) +
                             " annotated objects, need " + std::to_string(half));
    }
  }
  if (eligible.size() < options.images) {
    throw std::invalid_argument("corpus too small: " + std::to_string(eligible.size()) +
                                " eligible images, need " + std::to_string(options.images));
  }

  std::mt19937_64 rng(options.seed);
  const auto chosen = sample_without_replacement(eligible, options.images, rng);
  const auto stats = options.split == PopeSplit::random ? CorpusStats{} : corpus_stats(corpus, vocab);
  const auto& cats = vocab.categories();

  for (auto idx : chosen) {
    const auto& img = corpus[idx];
    std::vector<std::string> present(img.objects.begin(), img.objects.end());
    std::vector<std::string> absent;
    for (const auto& c : cats) {
      if (!img.objects.contains(c)) absent.push_back(c);
    }
    if (absent.size() < half) {
      throw std::invalid_argument("corpus too small to fill split: image " + img.image_id +
                                  " has only " + std::to_string(absent.size()) +
                                  " absent categories");
    }

    for (auto& obj : sample_without_replacement(present, half, rng)) {
      out.questions.push_back({img.image_id, std::move(obj), YesNo::yes, options.split});
    }

    std::vector<std::string> negatives;
    if (options.split == PopeSplit::random) {
      negatives = sample_without_replacement(absent, half, rng);
    } else {
      std::vector<std::pair<std::uint64_t, std::string>> ranked;
      for (const auto& c : absent) {
        const auto ic = *vocab.index_of(c);
        std::uint64_t score = 0;
        if (options.split == PopeSplit::popular) {
          score = stats.frequency[ic];
        } else {
          for (const auto& g : img.objects) score += stats.cooc(*vocab.index_of(g), ic);
        }
        ranked.emplace_back(score, c);
      }
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (std::size_t i = 0; i < half; ++i) negatives.push_back(ranked[i].second);
    }
    for (auto& obj : negatives) {
      out.questions.push_back({img.image_id, std::move(obj), YesNo::no, options.split});
    }
  }
  return out;
}

}  // namespace rcov
