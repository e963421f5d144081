#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracexp/static_xai/sparse.hpp"

namespace tracexp::xai {

enum class StopwordList {
  kNone,
  // The 318-word English list shipped by scikit-learn (ENGLISH_STOP_WORDS).
  kEnglish,
};

struct TfIdfConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  std::int64_t min_df = 5;  // absolute document count
  double max_df = 0.9;      // fraction of documents
  StopwordList stopwords = StopwordList::kEnglish;
};

// Lower-cased word tokens: maximal runs of ASCII letters, digits, '_' or
// non-ASCII bytes.
std::vector<std::string> tokenize(std::string_view text);

bool is_english_stopword(std::string_view token);

// Tokens after stopword removal, then all n-grams in [ngram_min, ngram_max]
// joined by single spaces.
std::vector<std::string> analyze(std::string_view text, const TfIdfConfig& config);

struct TfIdfModel {
  TfIdfConfig config;
  std::vector<std::string> terms;  // sorted; position = column index
  std::vector<double> idf;         // aligned with terms
  std::unordered_map<std::string, std::uint32_t> vocabulary;
  std::size_t n_docs = 0;

  std::size_t dim() const { return terms.size(); }
  // Column of `term`, or -1.
  std::int64_t column(std::string_view term) const;
};

// Smoothed idf(t) = ln((1 + n) / (1 + df(t))) + 1, keeping terms with
// min_df <= df(t) <= max_df * n. Throws EmptyVocabulary, DataError on an
// empty corpus or invalid config.
TfIdfModel fit_tfidf(std::span<const std::string> corpus, const TfIdfConfig& config = {});

// Raw term counts times idf, L2-normalised; out-of-vocabulary terms ignored.
SparseVector transform(const TfIdfModel& model, std::string_view doc);

SparseMatrix transform_all(const TfIdfModel& model, std::span<const std::string> docs);

// Rebuilds `vocabulary` from `terms` (after deserialisation).
void reindex(TfIdfModel& model);

}  // namespace tracexp::xai
