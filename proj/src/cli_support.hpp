#pragma once

// Shared plumbing for the subcommands: layered settings and run manifests.

#include <filesystem>
#include <optional>
#include <sstream>
#include <type_traits>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toml.hpp"

namespace tracexp::cli {

using OJson = nlohmann::ordered_json;

// Resolves each setting from, in order: command-line flag, TOML config
// section, environment variable, built-in default. Every lookup is recorded
// with its source.
class Settings {
 public:
  Settings(std::string command, std::optional<toml::table> section)
      : command_(std::move(command)), section_(std::move(section)) {}

  template <class T>
  T get(const std::string& key, const CLI::Option* flag, const T& flag_value, const T& fallback,
        const char* env = nullptr, bool secret = false);

  // Records a value whose source is decided by the caller.
  void record(const std::string& key, OJson value, std::string source);

  // Throws DataError for config keys that no setting consumed.
  void reject_unknown(const std::vector<std::string>& also_allowed = {}) const;

  void print(std::ostream& err) const;
  OJson to_json() const;

 private:
  struct Entry {
    std::string key;
    OJson value;
    std::string source;
    bool secret = false;
  };
  std::string command_;
  std::optional<toml::table> section_;
  std::vector<Entry> entries_;
};

// Reads [<section>] from a TOML file, or nothing when path is empty.
std::optional<toml::table> load_section(const std::string& path, const std::string& section);
toml::table load_toml(const std::string& path);

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv, std::filesystem::path out_dir)
      : command_(std::move(command)), argv_(std::move(argv)), out_dir_(std::move(out_dir)) {}

  void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }
  void set_config(OJson config) { config_ = std::move(config); }
  void add_input(const std::filesystem::path& path);
  // Hashes out_dir / name; call after the file is closed.
  void add_output(const std::string& name);
  void add_note(std::string note) { notes_.push_back(std::move(note)); }
  // Writes out_dir/run.json.
  void write() const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::filesystem::path out_dir_;
  std::optional<std::uint64_t> seed_;
  OJson config_ = OJson::object();
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::string> notes_;
};

// Checks that each input exists and creates the output directory.
void prepare_paths(const std::vector<std::filesystem::path>& inputs,
                   const std::filesystem::path& out_dir);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// --- template implementation ---

namespace detail {
template <class T>
std::optional<T> from_toml(const toml::node& node);
template <class T>
T from_env(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else {
    T v{};
    std::istringstream in(text);
    if (!(in >> v) || !(in >> std::ws).eof()) {
      throw CLI::ValidationError("environment value for '" + key + "' is not valid");
    }
    return v;
  }
}

template <> std::optional<std::string> from_toml<std::string>(const toml::node&);
template <> std::optional<double> from_toml<double>(const toml::node&);
template <> std::optional<std::int64_t> from_toml<std::int64_t>(const toml::node&);
template <> std::optional<int> from_toml<int>(const toml::node&);
template <> std::optional<std::uint64_t> from_toml<std::uint64_t>(const toml::node&);
template <> std::optional<bool> from_toml<bool>(const toml::node&);
}  // namespace detail

template <class T>
T Settings::get(const std::string& key, const CLI::Option* flag, const T& flag_value,
                const T& fallback, const char* env, bool secret) {
  T value = fallback;
  std::string source = "default";
  if (flag != nullptr && flag->count() > 0) {
    value = flag_value;
    source = "flag";
  } else if (const toml::node* node = section_ ? section_->get(key) : nullptr) {
    auto v = detail::from_toml<T>(*node);
    if (!v) throw CLI::ValidationError("config key '" + key + "' has the wrong type");
    value = *v;
    source = "config";
  } else if (env != nullptr) {
    if (const char* e = std::getenv(env); e != nullptr && *e != '\0') {
      value = detail::from_env<T>(key, e);
      source = std::string("env:") + env;
    }
  }
  entries_.push_back({key, OJson(value), source, secret});
  return value;
}

}  // namespace tracexp::cli
