#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fluidground/errors.hpp"
#include "fluidground/geometry/types.hpp"

namespace fg::io {

using Json = nlohmann::ordered_json;

/// Reads a JSON file; parse failures are ConfigErrors naming the file.
Json load_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline, written to a temporary and renamed.
void save_json(const std::filesystem::path& path, const Json& value);

/// Scalar and vector readers. `path` names the value in error messages, e.g. "scene.preset.dt".
void read_json(const Json& j, const std::string& path, double& out);
void read_json(const Json& j, const std::string& path, int& out);
void read_json(const Json& j, const std::string& path, std::uint64_t& out);
void read_json(const Json& j, const std::string& path, bool& out);
void read_json(const Json& j, const std::string& path, std::string& out);
void read_json(const Json& j, const std::string& path, Vec3& out);
void read_json(const Json& j, const std::string& path, Box& out);

template <class T>
void read_json(const Json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<T> items(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) read_json(j[i], path + "[" + std::to_string(i) + "]", items[i]);
  out = std::move(items);
}

/// null clears the value.
template <class T>
void read_json(const Json& j, const std::string& path, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T value{};
  read_json(j, path, value);
  out = std::move(value);
}

Json to_json(const Vec3& v);
Json to_json(const Box& b);

/// Object view that rejects keys nobody asked for. Call finish() after reading.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path);

  /// Reads `key` into `out` when present; leaves the default otherwise.
  template <class T>
  void optional(std::string_view key, T& out) {
    if (const Json* v = find(key)) read_json(*v, child_path(key), out);
  }

  template <class T>
  void required(std::string_view key, T& out) {
    const Json* v = find(key);
    if (!v) throw ConfigError(child_path(key) + ": required key is missing");
    read_json(*v, child_path(key), out);
  }

  /// Marks `key` as consumed and returns it, or nullptr when absent.
  const Json* find(std::string_view key);
  std::string child_path(std::string_view key) const;
  const std::string& path() const { return path_; }

  /// Throws ConfigError listing the first key that was never consumed.
  void finish() const;

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

}  // namespace fg::io
