#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "fluidground/autodiff/tensor.hpp"

namespace fg::ad {

/// Flat binary container of named tensors:
///   magic "FGTENSOR", u32 version, u64 count, then per tensor
///   u32 name length, UTF-8 name, u32 rank, u64 extents[rank],
///   little-endian float64 payload.
inline constexpr char kCheckpointMagic[8] = {'F', 'G', 'T', 'E', 'N', 'S', 'O', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensors(std::ostream& out, const NamedTensors& tensors);
NamedTensors read_tensors(std::istream& in);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into every destination tensor whose name,
/// prefixed by `prefix`, is present. Returns the number of tensors copied.
/// Shape mismatches raise IoError.
std::size_t assign_named(const NamedTensors& source, NamedTensors& destination,
                         const std::string& prefix = "");

const Tensor* find_named(const NamedTensors& tensors, const std::string& name);

}  // namespace fg::ad
