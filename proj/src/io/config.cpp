#include "fluidground/io/config.hpp"

namespace fg {

using io::Json;
using io::StrictObject;
using io::read_json;
using io::to_json;

void read_json(const Json& j, const std::string& path, Camera& out) {
  StrictObject o(j, path);
  o.required("width", out.width);
  o.required("height", out.height);
  o.required("focal", out.focal);
  o.required("origin", out.origin);
  if (const Json* rot = o.find("rotation")) {
    if (!rot->is_array() || rot->size() != 3) throw ConfigError(o.child_path("rotation") + ": expected 3 rows");
    for (int r = 0; r < 3; ++r) {
      Vec3 row;
      read_json((*rot)[r], o.child_path("rotation") + "[" + std::to_string(r) + "]", row);
      out.rotation.row(r) = row.transpose();
    }
  } else {
    throw ConfigError(o.child_path("rotation") + ": required key is missing");
  }
  o.finish();
  try {
    out.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json to_json(const Camera& camera) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(to_json(Vec3(camera.rotation.row(r).transpose())));
  return Json{{"width", camera.width},
              {"height", camera.height},
              {"focal", camera.focal},
              {"origin", to_json(camera.origin)},
              {"rotation", rows}};
}

}  // namespace fg

namespace fg::sph {

using io::Json;
using io::StrictObject;
using io::read_json;
using io::to_json;

void read_json(const Json& j, const std::string& path, FluidPreset& out) {
  if (j.is_string()) {
    out = preset_by_name(j.get<std::string>());
    return;
  }
  StrictObject o(j, path);
  if (const Json* base = o.find("base")) {
    std::string name;
    read_json(*base, o.child_path("base"), name);
    out = preset_by_name(name);
  }
  o.optional("name", out.name);
  if (const Json* shape = o.find("shape")) {
    std::string s;
    read_json(*shape, o.child_path("shape"), s);
    out.shape = shape_from_string(s);
  }
  o.optional("shape_center", out.shape_center);
  o.optional("shape_size", out.shape_size);
  o.optional("viscosity", out.viscosity);
  o.optional("rest_density", out.rest_density);
  o.optional("particle_radius", out.particle_radius);
  o.optional("box", out.box);
  o.optional("gravity", out.gravity);
  o.optional("dt", out.dt);
  o.optional("steps", out.steps);
  o.optional("substeps", out.substeps);
  o.optional("seed", out.seed);
  o.optional("kernel_radius_factor", out.kernel_radius_factor);
  o.optional("sound_speed", out.sound_speed);
  o.optional("viscosity_scale", out.viscosity_scale);
  o.optional("wall_stiffness", out.wall_stiffness);
  o.optional("wall_damping", out.wall_damping);
  o.optional("jitter", out.jitter);
  o.optional("max_speed", out.max_speed);
  o.finish();
  try {
    out.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json to_json(const FluidPreset& p) {
  return Json{{"name", p.name},
              {"shape", std::string(to_string(p.shape))},
              {"shape_center", to_json(p.shape_center)},
              {"shape_size", p.shape_size},
              {"viscosity", p.viscosity},
              {"rest_density", p.rest_density},
              {"particle_radius", p.particle_radius},
              {"box", to_json(p.box)},
              {"gravity", to_json(p.gravity)},
              {"dt", p.dt},
              {"steps", p.steps},
              {"substeps", p.substeps},
              {"seed", p.seed},
              {"kernel_radius_factor", p.kernel_radius_factor},
              {"sound_speed", p.sound_speed},
              {"viscosity_scale", p.viscosity_scale},
              {"wall_stiffness", p.wall_stiffness},
              {"wall_damping", p.wall_damping},
              {"jitter", p.jitter},
              {"max_speed", p.max_speed}};
}

void read_json(const Json& j, const std::string& path, AppearanceModel& out) {
  StrictObject o(j, path);
  o.optional("density_gain", out.density_gain);
  o.optional("base_color", out.base_color);
  o.optional("view_tint_gain", out.view_tint_gain);
  o.optional("background_color", out.background_color);
  o.optional("search_radius_factor", out.search_radius_factor);
  o.optional("step_factor", out.step_factor);
  o.finish();
  try {
    out.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json to_json(const AppearanceModel& a) {
  return Json{{"density_gain", a.density_gain},
              {"base_color", to_json(a.base_color)},
              {"view_tint_gain", a.view_tint_gain},
              {"background_color", to_json(a.background_color)},
              {"search_radius_factor", a.search_radius_factor},
              {"step_factor", a.step_factor}};
}

}  // namespace fg::sph
