#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "tracexp/static_xai/logreg.hpp"
#include "tracexp/static_xai/tfidf.hpp"

namespace tracexp::xai {

struct TextDataset {
  std::vector<std::string> texts;
  std::vector<int> labels;  // 0/1
};

struct CsvColumns {
  std::string text = "text";
  std::string label = "label";
};

// RFC 4180 CSV with a header naming the text and label columns (others
// ignored). Labels are 0/1 or true/false (any of the usual casings). Throws
// MalformedRecord with a 1-based physical line number.
TextDataset read_text_csv(std::istream& in, const CsvColumns& columns = {});
TextDataset read_text_csv(const std::filesystem::path& path, const CsvColumns& columns = {});

struct StaticModel {
  TfIdfModel tfidf;
  LinearModel linear;
};

inline constexpr int kStaticModelVersion = 1;

nlohmann::ordered_json static_model_to_json(const StaticModel& m);
// Throws SchemaVersionMismatch or DataError.
StaticModel static_model_from_json(const nlohmann::json& j);

void save_static_model(const StaticModel& m, const std::filesystem::path& path);
StaticModel load_static_model(const std::filesystem::path& path);

}  // namespace tracexp::xai
