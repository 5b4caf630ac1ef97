#include "fluidground/io/json.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace fg::io {

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& value) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << value.dump(2) << '\n';
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

namespace {

[[noreturn]] void type_error(const std::string& path, const char* expected, const Json& j) {
  throw ConfigError(path + ": expected " + expected + ", got " + std::string(j.type_name()));
}

template <class Int>
void read_integer(const Json& j, const std::string& path, Int& out) {
  if (j.is_number_integer() || j.is_number_unsigned()) {
    if constexpr (std::is_unsigned_v<Int>) {
      if (j.is_number_integer() && j.get<std::int64_t>() < 0) throw ConfigError(path + ": must be non-negative");
    } else {
      if (j.is_number_unsigned() && j.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<Int>::max())) {
        throw ConfigError(path + ": out of range");
      }
    }
    out = j.get<Int>();
    return;
  }
  type_error(path, "an integer", j);
}

}  // namespace

void read_json(const Json& j, const std::string& path, double& out) {
  if (!j.is_number()) type_error(path, "a number", j);
  out = j.get<double>();
  if (!std::isfinite(out)) throw ConfigError(path + ": must be finite");
}

void read_json(const Json& j, const std::string& path, int& out) { read_integer(j, path, out); }
void read_json(const Json& j, const std::string& path, std::uint64_t& out) { read_integer(j, path, out); }

void read_json(const Json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) type_error(path, "a boolean", j);
  out = j.get<bool>();
}

void read_json(const Json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) type_error(path, "a string", j);
  out = j.get<std::string>();
}

void read_json(const Json& j, const std::string& path, Vec3& out) {
  if (!j.is_array() || j.size() != 3) type_error(path, "an array of 3 numbers", j);
  for (int a = 0; a < 3; ++a) read_json(j[a], path + "[" + std::to_string(a) + "]", out[a]);
}

void read_json(const Json& j, const std::string& path, Box& out) {
  StrictObject o(j, path);
  o.required("lo", out.lo);
  o.required("hi", out.hi);
  o.finish();
  if (!(out.lo.array() < out.hi.array()).all()) throw ConfigError(path + ": lo must be below hi on every axis");
}

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json to_json(const Box& b) { return Json{{"lo", to_json(b.lo)}, {"hi", to_json(b.hi)}}; }

StrictObject::StrictObject(const Json& j, std::string path) : json_(j), path_(std::move(path)) {
  if (!j.is_object()) type_error(path_, "an object", j);
}

const Json* StrictObject::find(std::string_view key) {
  auto it = json_.find(key);
  if (it == json_.end()) return nullptr;
  seen_.emplace(key);
  return &*it;
}

std::string StrictObject::child_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

void StrictObject::finish() const {
  for (const auto& [key, value] : json_.items()) {
    if (!seen_.contains(key)) throw ConfigError(child_path(key) + ": unknown key");
  }
}

}  // namespace fg::io
