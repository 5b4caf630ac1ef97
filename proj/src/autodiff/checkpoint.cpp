#include "fluidground/autodiff/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "fluidground/errors.hpp"
#include "fluidground/io/binary.hpp"

namespace fg::ad {

namespace {

using io::put;

template <class T>
T get(std::istream& in) {
  return io::get<T>(in, "checkpoint");
}

constexpr std::uint32_t kMaxRank = 16;
constexpr std::uint32_t kMaxName = 4096;

}  // namespace

void write_tensors(std::ostream& out, const NamedTensors& tensors) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (auto e : t.shape()) put<std::uint64_t>(out, e);
    for (auto v : t.values()) put<double>(out, static_cast<double>(v));
  }
  if (!out) throw IoError("failed writing tensor container");
}

NamedTensors read_tensors(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("not a tensor container (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported tensor container version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in);
  NamedTensors out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in);
    if (len > kMaxName) throw IoError("corrupt tensor container (name length)");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw IoError("checkpoint truncated");
    const auto rank = get<std::uint32_t>(in);
    if (rank > kMaxRank) throw IoError("corrupt tensor container (rank)");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& e : shape) {
      e = get<std::uint64_t>(in);
      n *= e;
      if (n > (std::uint64_t{1} << 34)) throw IoError("corrupt tensor container (extent)");
    }
    std::vector<Real> values(n);
    for (auto& v : values) v = static_cast<Real>(get<double>(in));
    out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    write_tensors(out, tensors);
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  try {
    return read_tensors(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

const Tensor* find_named(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::size_t assign_named(const NamedTensors& source, NamedTensors& destination, const std::string& prefix) {
  std::size_t copied = 0;
  for (auto& [name, dst] : destination) {
    const auto* src = find_named(source, prefix + name);
    if (!src) continue;
    if (src->shape() != dst.shape()) {
      throw IoError("tensor '" + name + "' has shape " + shape_string(src->shape()) + ", expected " +
                    shape_string(dst.shape()));
    }
    std::copy(src->values().begin(), src->values().end(), dst.values_mut().begin());
    ++copied;
  }
  return copied;
}

}  // namespace fg::ad
