#include "cli_support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tracexp/cli.hpp"
#include "tracexp/digest.hpp"
#include "tracexp/errors.hpp"

namespace tracexp::cli {

namespace detail {

template <>
std::optional<std::string> from_toml<std::string>(const toml::node& node) {
  return node.value<std::string>();
}
template <>
std::optional<double> from_toml<double>(const toml::node& node) {
  return node.value<double>();
}
template <>
std::optional<std::int64_t> from_toml<std::int64_t>(const toml::node& node) {
  return node.value<std::int64_t>();
}
template <>
std::optional<int> from_toml<int>(const toml::node& node) {
  auto v = node.value<std::int64_t>();
  if (!v) return std::nullopt;
  return static_cast<int>(*v);
}
template <>
std::optional<std::uint64_t> from_toml<std::uint64_t>(const toml::node& node) {
  auto v = node.value<std::int64_t>();
  if (!v || *v < 0) return std::nullopt;
  return static_cast<std::uint64_t>(*v);
}
template <>
std::optional<bool> from_toml<bool>(const toml::node& node) {
  return node.value<bool>();
}

}  // namespace detail

void Settings::record(const std::string& key, OJson value, std::string source) {
  entries_.push_back({key, std::move(value), std::move(source), false});
}

void Settings::reject_unknown(const std::vector<std::string>& also_allowed) const {
  if (!section_) return;
  for (const auto& [k, _] : *section_) {
    const std::string key(k.str());
    const bool used = std::any_of(entries_.begin(), entries_.end(),
                                  [&](const Entry& e) { return e.key == key; }) ||
                      std::find(also_allowed.begin(), also_allowed.end(), key) !=
                          also_allowed.end();
    if (!used) throw DataError("unknown config key '" + key + "' in [" + command_ + "]");
  }
}

void Settings::print(std::ostream& err) const {
  for (const auto& e : entries_) {
    err << command_ << ": " << e.key << " = " << (e.secret ? std::string("<redacted>") : e.value.dump())
        << " (" << e.source << ")\n";
  }
}

OJson Settings::to_json() const {
  OJson j = OJson::object();
  for (const auto& e : entries_) {
    j[e.key] = OJson{{"value", e.secret ? OJson("<redacted>") : e.value}, {"source", e.source}};
  }
  return j;
}

toml::table load_toml(const std::string& path) {
  try {
    return toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw DataError("config " + path + ": " + std::string(e.description()));
  }
}

std::optional<toml::table> load_section(const std::string& path, const std::string& section) {
  if (path.empty()) return std::nullopt;
  if (!std::filesystem::exists(path)) throw DataError("config file not found: " + path);
  toml::table root = load_toml(path);
  if (auto* t = root[section].as_table()) return *t;
  return toml::table{};
}

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void Manifest::add_output(const std::string& name) {
  outputs_.emplace_back(name, sha256_file(out_dir_ / name));
}

void Manifest::write() const {
  OJson j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["argv"] = argv_;
  j["seed"] = seed_ ? OJson(*seed_) : OJson(nullptr);
  j["config"] = config_;
  j["inputs"] = OJson::array();
  for (const auto& [p, h] : inputs_) j["inputs"].push_back(OJson{{"path", p}, {"sha256", h}});
  j["outputs"] = OJson::array();
  for (const auto& [p, h] : outputs_) j["outputs"].push_back(OJson{{"path", p}, {"sha256", h}});
  if (!notes_.empty()) j["notes"] = notes_;
  write_file(out_dir_ / "run.json", j.dump(2) + "\n");
}

void prepare_paths(const std::vector<std::filesystem::path>& inputs,
                   const std::filesystem::path& out_dir) {
  for (const auto& p : inputs) {
    if (!std::filesystem::is_regular_file(p)) throw DataError("input not found: " + p.string());
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace tracexp::cli
