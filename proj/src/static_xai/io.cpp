#include "tracexp/static_xai/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

namespace {

// Reads one CSV record. Returns false at end of input. line_no tracks the
// physical line on which the record ends.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.peek();
  if (c == EOF) return false;
  ++line_no;
  const std::size_t start_line = line_no;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (quoted) throw MalformedRecord(start_line, "unterminated quoted field");
      break;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || was_quoted) {
        throw MalformedRecord(line_no, "quote inside an unquoted field");
      }
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (ch == '\r') {
      if (in.peek() == '\n') continue;
      field += ch;
    } else if (ch == '\n') {
      break;
    } else {
      if (was_quoted) throw MalformedRecord(line_no, "text after closing quote");
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string stopwords_name(StopwordList s) { return s == StopwordList::kEnglish ? "english" : "none"; }

StopwordList parse_stopwords(const std::string& s) {
  if (s == "english") return StopwordList::kEnglish;
  if (s == "none") return StopwordList::kNone;
  throw DataError("unknown stopword list '" + s + "'");
}

std::vector<double> finite_vector(const nlohmann::json& j, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
    throw DataError(std::string(what) + " contains non-finite values");
  }
  return v;
}

}  // namespace

TextDataset read_text_csv(std::istream& in, const CsvColumns& columns) {
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!read_record(in, fields, line_no)) throw MalformedRecord(1, "missing header");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  const auto text_col = std::find(fields.begin(), fields.end(), columns.text) - fields.begin();
  const auto label_col = std::find(fields.begin(), fields.end(), columns.label) - fields.begin();
  const auto width = static_cast<std::ptrdiff_t>(fields.size());
  if (text_col == width || label_col == width) {
    throw MalformedRecord(line_no, "header must contain '" + columns.text + "' and '" +
                                       columns.label + "'");
  }
  TextDataset out;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (static_cast<std::ptrdiff_t>(fields.size()) != width) {
      throw MalformedRecord(line_no, "expected " + std::to_string(width) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    const std::string& label = fields[static_cast<std::size_t>(label_col)];
    int y;
    if (label == "1" || label == "true" || label == "True" || label == "TRUE") {
      y = 1;
    } else if (label == "0" || label == "false" || label == "False" || label == "FALSE") {
      y = 0;
    } else {
      throw MalformedRecord(line_no, "label must be 0 or 1, got '" + label + "'");
    }
    out.texts.push_back(std::move(fields[static_cast<std::size_t>(text_col)]));
    out.labels.push_back(y);
  }
  return out;
}

TextDataset read_text_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_text_csv(in, columns);
}

nlohmann::ordered_json static_model_to_json(const StaticModel& m) {
  nlohmann::ordered_json j;
  j["v"] = kStaticModelVersion;
  j["kind"] = "static_model";
  auto& t = j["tfidf"];
  t["ngram_min"] = m.tfidf.config.ngram_min;
  t["ngram_max"] = m.tfidf.config.ngram_max;
  t["min_df"] = m.tfidf.config.min_df;
  t["max_df"] = m.tfidf.config.max_df;
  t["stopwords"] = stopwords_name(m.tfidf.config.stopwords);
  t["n_docs"] = m.tfidf.n_docs;
  t["terms"] = m.tfidf.terms;
  t["idf"] = m.tfidf.idf;
  auto& l = j["linear"];
  l["bias"] = m.linear.bias;
  l["weights"] = m.linear.weights;
  l["background_means"] = m.linear.background_means;
  return j;
}

StaticModel static_model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("v")) throw DataError("static model: missing version");
    if (j.at("v") != kStaticModelVersion) {
      throw SchemaVersionMismatch("static model version " + j.at("v").dump() + " is not supported");
    }
    StaticModel m;
    const auto& t = j.at("tfidf");
    m.tfidf.config.ngram_min = t.at("ngram_min").get<int>();
    m.tfidf.config.ngram_max = t.at("ngram_max").get<int>();
    m.tfidf.config.min_df = t.at("min_df").get<std::int64_t>();
    m.tfidf.config.max_df = t.at("max_df").get<double>();
    m.tfidf.config.stopwords = parse_stopwords(t.at("stopwords").get<std::string>());
    m.tfidf.n_docs = t.at("n_docs").get<std::size_t>();
    m.tfidf.terms = t.at("terms").get<std::vector<std::string>>();
    m.tfidf.idf = finite_vector(t.at("idf"), "idf");
    if (m.tfidf.idf.size() != m.tfidf.terms.size()) {
      throw DimensionMismatch(m.tfidf.terms.size(), m.tfidf.idf.size());
    }
    if (!std::is_sorted(m.tfidf.terms.begin(), m.tfidf.terms.end())) {
      throw DataError("static model: terms are not sorted");
    }
    reindex(m.tfidf);
    const auto& l = j.at("linear");
    m.linear.bias = l.at("bias").get<double>();
    m.linear.weights = finite_vector(l.at("weights"), "weights");
    m.linear.background_means = finite_vector(l.at("background_means"), "background_means");
    m.linear.validate();
    if (m.linear.dim() != m.tfidf.dim()) throw DimensionMismatch(m.tfidf.dim(), m.linear.dim());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("static model: ") + e.what());
  }
}

void save_static_model(const StaticModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << static_model_to_json(m).dump() << '\n';
}

StaticModel load_static_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("static model: " + std::string(e.what()));
  }
  return static_model_from_json(j);
}

}  // namespace tracexp::xai
