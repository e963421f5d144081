#include "tracexp/static_xai/tfidf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_set>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

namespace {

// Sorted, so membership is a binary search.
constexpr std::array<std::string_view, 318> kEnglishStopwords = {
    "a", "about", "above", "across", "after", "afterwards", "again", "against", "all",
    "almost", "alone", "along", "already", "also", "although", "always", "am", "among",
    "amongst", "amoungst", "amount", "an", "and", "another", "any", "anyhow", "anyone",
    "anything", "anyway", "anywhere", "are", "around", "as", "at", "back", "be",
    "became", "because", "become", "becomes", "becoming", "been", "before",
    "beforehand", "behind", "being", "below", "beside", "besides", "between", "beyond",
    "bill", "both", "bottom", "but", "by", "call", "can", "cannot", "cant", "co", "con",
    "could", "couldnt", "cry", "de", "describe", "detail", "do", "done", "down", "due",
    "during", "each", "eg", "eight", "either", "eleven", "else", "elsewhere", "empty",
    "enough", "etc", "even", "ever", "every", "everyone", "everything", "everywhere",
    "except", "few", "fifteen", "fifty", "fill", "find", "fire", "first", "five", "for",
    "former", "formerly", "forty", "found", "four", "from", "front", "full", "further",
    "get", "give", "go", "had", "has", "hasnt", "have", "he", "hence", "her", "here",
    "hereafter", "hereby", "herein", "hereupon", "hers", "herself", "him", "himself",
    "his", "how", "however", "hundred", "i", "ie", "if", "in", "inc", "indeed",
    "interest", "into", "is", "it", "its", "itself", "keep", "last", "latter",
    "latterly", "least", "less", "ltd", "made", "many", "may", "me", "meanwhile",
    "might", "mill", "mine", "more", "moreover", "most", "mostly", "move", "much",
    "must", "my", "myself", "name", "namely", "neither", "never", "nevertheless",
    "next", "nine", "no", "nobody", "none", "noone", "nor", "not", "nothing", "now",
    "nowhere", "of", "off", "often", "on", "once", "one", "only", "onto", "or", "other",
    "others", "otherwise", "our", "ours", "ourselves", "out", "over", "own", "part",
    "per", "perhaps", "please", "put", "rather", "re", "same", "see", "seem", "seemed",
    "seeming", "seems", "serious", "several", "she", "should", "show", "side", "since",
    "sincere", "six", "sixty", "so", "some", "somehow", "someone", "something",
    "sometime", "sometimes", "somewhere", "still", "such", "system", "take", "ten",
    "than", "that", "the", "their", "them", "themselves", "then", "thence", "there",
    "thereafter", "thereby", "therefore", "therein", "thereupon", "these", "they",
    "thick", "thin", "third", "this", "those", "though", "three", "through",
    "throughout", "thru", "thus", "to", "together", "too", "top", "toward", "towards",
    "twelve", "twenty", "two", "un", "under", "until", "up", "upon", "us", "very",
    "via", "was", "we", "well", "were", "what", "whatever", "when", "whence",
    "whenever", "where", "whereafter", "whereas", "whereby", "wherein", "whereupon",
    "wherever", "whether", "which", "while", "whither", "who", "whoever", "whole",
    "whom", "whose", "why", "will", "with", "within", "without", "would", "yet", "you",
    "your", "yours", "yourself", "yourselves",
};

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c >= 0x80;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

void validate(const TfIdfConfig& config) {
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min) {
    throw DataError("invalid n-gram range");
  }
  if (config.min_df < 1) throw DataError("min_df must be >= 1");
  if (!(config.max_df > 0.0 && config.max_df <= 1.0)) throw DataError("max_df must be in (0, 1]");
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (is_word_byte(static_cast<unsigned char>(ch))) {
      cur.push_back(ascii_lower(ch));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_english_stopword(std::string_view token) {
  return std::binary_search(kEnglishStopwords.begin(), kEnglishStopwords.end(), token);
}

std::vector<std::string> analyze(std::string_view text, const TfIdfConfig& config) {
  std::vector<std::string> tokens = tokenize(text);
  if (config.stopwords == StopwordList::kEnglish) {
    std::erase_if(tokens, [](const std::string& t) { return is_english_stopword(t); });
  }
  std::vector<std::string> terms;
  const auto n = static_cast<int>(tokens.size());
  for (int len = config.ngram_min; len <= config.ngram_max; ++len) {
    for (int start = 0; start + len <= n; ++start) {
      std::string term = tokens[static_cast<std::size_t>(start)];
      for (int k = 1; k < len; ++k) {
        term += ' ';
        term += tokens[static_cast<std::size_t>(start + k)];
      }
      terms.push_back(std::move(term));
    }
  }
  return terms;
}

std::int64_t TfIdfModel::column(std::string_view term) const {
  auto it = vocabulary.find(std::string(term));
  return it == vocabulary.end() ? -1 : static_cast<std::int64_t>(it->second);
}

void reindex(TfIdfModel& model) {
  model.vocabulary.clear();
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    model.vocabulary.emplace(model.terms[i], static_cast<std::uint32_t>(i));
  }
}

TfIdfModel fit_tfidf(std::span<const std::string> corpus, const TfIdfConfig& config) {
  validate(config);
  if (corpus.empty()) throw DataError("cannot fit TF-IDF on an empty corpus");

  std::map<std::string, std::int64_t> df;
  for (const std::string& doc : corpus) {
    std::vector<std::string> terms = analyze(doc, config);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[std::move(t)];
  }

  TfIdfModel model;
  model.config = config;
  model.n_docs = corpus.size();
  const double n = static_cast<double>(corpus.size());
  const double max_count = config.max_df * n;
  for (const auto& [term, count] : df) {
    if (count < config.min_df || static_cast<double>(count) > max_count) continue;
    model.terms.push_back(term);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  if (model.terms.empty()) throw EmptyVocabulary();
  reindex(model);
  return model;
}

SparseVector transform(const TfIdfModel& model, std::string_view doc) {
  std::vector<std::pair<std::uint32_t, double>> counts;
  for (const std::string& term : analyze(doc, model.config)) {
    auto it = model.vocabulary.find(term);
    if (it != model.vocabulary.end()) counts.emplace_back(it->second, 1.0);
  }
  SparseVector v = SparseVector::from_pairs(model.dim(), std::move(counts));
  double norm2 = 0.0;
  for (std::size_t k = 0; k < v.nnz(); ++k) {
    v.values[k] *= model.idf[v.indices[k]];
    norm2 += v.values[k] * v.values[k];
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v.values) x *= inv;
  }
  return v;
}

SparseMatrix transform_all(const TfIdfModel& model, std::span<const std::string> docs) {
  SparseMatrix X;
  X.n_cols = model.dim();
  X.rows.reserve(docs.size());
  for (const std::string& doc : docs) X.rows.push_back(transform(model, doc));
  return X;
}

}  // namespace tracexp::xai
