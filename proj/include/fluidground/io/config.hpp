#pragma once

#include "fluidground/geometry/camera.hpp"
#include "fluidground/io/json.hpp"
#include "fluidground/sph/preset.hpp"
#include "fluidground/sph/reference_render.hpp"

// Readers live in the namespace of the type they read so that
// StrictObject's templated lookups find them through ADL.

namespace fg {

/// {"width", "height", "focal", "origin", "rotation": 3 rows}
void read_json(const io::Json& j, const std::string& path, Camera& out);
io::Json to_json(const Camera& camera);

}  // namespace fg

namespace fg::sph {

/// A preset name, or an object whose optional "base" names the preset the
/// remaining keys override.
void read_json(const io::Json& j, const std::string& path, FluidPreset& out);
io::Json to_json(const FluidPreset& preset);

void read_json(const io::Json& j, const std::string& path, AppearanceModel& out);
io::Json to_json(const AppearanceModel& appearance);

}  // namespace fg::sph
