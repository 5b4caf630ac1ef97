#include "fluidground/cli/scene_config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "fluidground/random.hpp"

namespace fg::render {

using io::Json;
using io::read_json;
using io::StrictObject;
using io::to_json;

void read_json(const Json& j, const std::string& path, FieldConfig& out) {
  StrictObject o(j, path);
  o.optional("depth", out.depth);
  o.optional("width", out.width);
  o.optional("skip_layer", out.skip_layer);
  o.optional("color_width", out.color_width);
  o.optional("density_shift", out.density_shift);
  o.finish();
}

void read_json(const Json& j, const std::string& path, RendererConfig& out) {
  StrictObject o(j, path);
  o.optional("field", out.field);
  o.optional("encoding", out.encoding);
  o.optional("n_coarse", out.n_coarse);
  o.optional("n_fine", out.n_fine);
  o.optional("search_radius_factor", out.search_radius_factor);
  o.optional("box_margin", out.box_margin);
  o.optional("near", out.near_override);
  o.optional("far", out.far_override);
  o.optional("background", out.background);
  o.finish();
}

Json to_json(const RendererConfig& c) {
  const auto& f = c.field;
  const auto& e = c.encoding;
  return Json{{"field",
               {{"depth", f.depth},
                {"width", f.width},
                {"skip_layer", f.skip_layer ? Json(*f.skip_layer) : Json(nullptr)},
                {"color_width", f.color_width},
                {"density_shift", f.density_shift}}},
              {"encoding",
               {{"point_levels", e.point_levels},
                {"dir_levels", e.dir_levels},
                {"sigma_cap", e.sigma_cap},
                {"normalized_center", e.normalized_center},
                {"per_axis_deformation", e.per_axis_deformation}}},
              {"n_coarse", c.n_coarse},
              {"n_fine", c.n_fine},
              {"search_radius_factor", c.search_radius_factor},
              {"box_margin", c.box_margin},
              {"near", c.near_override ? Json(*c.near_override) : Json(nullptr)},
              {"far", c.far_override ? Json(*c.far_override) : Json(nullptr)},
              {"background", to_json(c.background)}};
}

}  // namespace fg::render

namespace fg::enc {

void read_json(const io::Json& j, const std::string& path, EncodingOptions& out) {
  io::StrictObject o(j, path);
  o.optional("point_levels", out.point_levels);
  o.optional("dir_levels", out.dir_levels);
  o.optional("sigma_cap", out.sigma_cap);
  o.optional("normalized_center", out.normalized_center);
  o.optional("per_axis_deformation", out.per_axis_deformation);
  o.finish();
}

}  // namespace fg::enc

namespace fg::sph {

void read_json(const io::Json& j, const std::string& path, CameraRig& out) {
  io::StrictObject o(j, path);
  o.optional("ring_views", out.ring_views);
  o.optional("heldout_index", out.heldout_index);
  o.optional("distance", out.distance);
  o.optional("elevation_deg", out.elevation_deg);
  o.optional("azimuth_offset_deg", out.azimuth_offset_deg);
  o.optional("train_azimuth_deg", out.train_azimuth_deg);
  o.optional("train_elevation_deg", out.train_elevation_deg);
  o.optional("fov_deg", out.fov_deg);
  o.optional("width", out.width);
  o.optional("height", out.height);
  o.finish();
}

io::Json to_json(const CameraRig& r) {
  return io::Json{{"ring_views", r.ring_views},
                  {"heldout_index", r.heldout_index},
                  {"distance", r.distance},
                  {"elevation_deg", r.elevation_deg},
                  {"azimuth_offset_deg", r.azimuth_offset_deg},
                  {"train_azimuth_deg", r.train_azimuth_deg},
                  {"train_elevation_deg", r.train_elevation_deg},
                  {"fov_deg", r.fov_deg},
                  {"width", r.width},
                  {"height", r.height}};
}

}  // namespace fg::sph

namespace fg::train {

using io::Json;
using io::read_json;
using io::StrictObject;

void read_json(const Json& j, const std::string& path, DecayEvent& out) {
  StrictObject o(j, path);
  o.required("step", out.step);
  o.required("factor", out.factor);
  o.finish();
}

void read_json(const Json& j, const std::string& path, ComponentSchedule& out) {
  StrictObject o(j, path);
  o.optional("lr", out.lr);
  o.optional("decay", out.decay);
  o.optional("exp_gamma", out.exp_gamma);
  o.optional("exp_horizon", out.exp_horizon);
  o.finish();
}

namespace {

TrainSchedule named_schedule(const std::string& name, const std::string& path) {
  if (name == "desk") return TrainSchedule::desk();
  if (name == "full") return TrainSchedule::full();
  throw ConfigError(path + ": unknown schedule '" + name + "' (expected \"desk\" or \"full\")");
}

Json to_json(const ComponentSchedule& c) {
  Json decay = Json::array();
  for (const auto& e : c.decay) decay.push_back(Json{{"step", e.step}, {"factor", e.factor}});
  return Json{{"lr", c.lr}, {"decay", decay}, {"exp_gamma", c.exp_gamma}, {"exp_horizon", c.exp_horizon}};
}

}  // namespace

void read_json(const Json& j, const std::string& path, TrainSchedule& out) {
  if (j.is_string()) {
    out = named_schedule(j.get<std::string>(), path);
    return;
  }
  StrictObject o(j, path);
  if (const Json* base = o.find("base")) {
    std::string name;
    read_json(*base, o.child_path("base"), name);
    out = named_schedule(name, o.child_path("base"));
  }
  o.optional("warmup_steps", out.warmup_steps);
  o.optional("joint_steps", out.joint_steps);
  o.optional("rays_per_batch", out.rays_per_batch);
  o.optional("warmup_renderer", out.warmup_renderer);
  o.optional("joint_renderer", out.joint_renderer);
  o.optional("joint_transition", out.joint_transition);
  o.optional("bptt_window", out.bptt_window);
  o.optional("sequential_time", out.sequential_time);
  o.optional("perturb", out.perturb);
  o.optional("checkpoint_every", out.checkpoint_every);
  o.optional("log_every", out.log_every);
  o.finish();
}

Json to_json(const TrainSchedule& s) {
  return Json{{"warmup_steps", s.warmup_steps},
              {"joint_steps", s.joint_steps},
              {"rays_per_batch", s.rays_per_batch},
              {"warmup_renderer", to_json(s.warmup_renderer)},
              {"joint_renderer", to_json(s.joint_renderer)},
              {"joint_transition", to_json(s.joint_transition)},
              {"bptt_window", s.bptt_window},
              {"sequential_time", s.sequential_time},
              {"perturb", s.perturb},
              {"checkpoint_every", s.checkpoint_every},
              {"log_every", s.log_every}};
}

}  // namespace fg::train

namespace fg::cli {

using io::Json;
using io::read_json;
using io::StrictObject;
using io::to_json;

namespace {

std::string_view init_name(TransitionInit i) {
  switch (i) {
    case TransitionInit::Ballistic:
      return "ballistic";
    case TransitionInit::Checkpoint:
      return "checkpoint";
    case TransitionInit::Pretrain:
      return "pretrain";
  }
  return "ballistic";
}

TransitionInit init_from_name(const std::string& s, const std::string& path) {
  if (s == "ballistic") return TransitionInit::Ballistic;
  if (s == "checkpoint") return TransitionInit::Checkpoint;
  if (s == "pretrain") return TransitionInit::Pretrain;
  throw ConfigError(path + ": unknown transition init '" + s + "' (expected ballistic, checkpoint or pretrain)");
}

void read_transition(const Json& j, const std::string& path, SceneConfig& out) {
  StrictObject o(j, path);
  auto& t = out.transition;
  o.optional("conv_radius_factor", t.conv_radius_factor);
  o.optional("channels", t.channels);
  o.optional("kernel_hidden", t.kernel_hidden);
  o.optional("output_hidden", t.output_hidden);
  o.optional("aggregate_scale", t.aggregate_scale);
  o.optional("correction_scale", t.correction_scale);
  o.optional("max_correction", t.max_correction);
  o.optional("box_clamp", t.box_clamp);
  o.optional("divergence_factor", t.divergence_factor);
  if (const Json* init = o.find("init")) {
    std::string name;
    read_json(*init, o.child_path("init"), name);
    out.transition_init = init_from_name(name, o.child_path("init"));
  }
  if (const Json* ckpt = o.find("checkpoint")) {
    std::string p;
    read_json(*ckpt, o.child_path("checkpoint"), p);
    out.transition_checkpoint = p;
  }
  if (const Json* pre = o.find("pretrain")) {
    StrictObject po(*pre, o.child_path("pretrain"));
    po.optional("preset", out.pretrain.preset);
    po.optional("epochs", out.pretrain.options.epochs);
    po.optional("lr", out.pretrain.options.lr);
    po.optional("batch_size", out.pretrain.options.batch_size);
    po.optional("frames", out.pretrain.options.frames);
    po.finish();
  }
  o.finish();
}

void read_eval(const Json& j, const std::string& path, EvalConfig& out) {
  StrictObject o(j, path);
  o.optional("views", out.views);
  o.optional("frames", out.frames);
  if (const Json* mode = o.find("mode")) {
    std::string name;
    read_json(*mode, o.child_path("mode"), name);
    try {
      out.mode = distance_mode_from_string(name);
    } catch (const ConfigError& e) {
      throw ConfigError(o.child_path("mode") + ": " + e.what());
    }
  }
  o.finish();
}

template <class F>
void with_path(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

void SceneConfig::resolve() {
  if (frames < 2) throw ConfigError("split.frames must be >= 2");
  if (observed_frames < 2 || observed_frames > frames)
    throw ConfigError("split.observed must lie in [2, split.frames]");
  preset.steps = frames;
  preset.seed = seed;
  with_path("preset", [&] { preset.validate(); });
  with_path("cameras", [&] { cameras.validate(); });
  if (appearance) with_path("appearance", [&] { appearance->validate(); });

  renderer.seed = derive_seed(seed, {1});
  with_path("renderer", [&] { renderer.validate(); });

  transition.gravity = preset.gravity;
  transition.dt = preset.dt;
  transition.particle_radius = preset.particle_radius;
  transition.box = preset.box;
  transition.seed = derive_seed(seed, {2});
  with_path("transition", [&] { transition.validate(); });
  if (transition_init == TransitionInit::Checkpoint && transition_checkpoint.empty())
    throw ConfigError("transition.checkpoint: required when transition.init is \"checkpoint\"");
  if (transition_init == TransitionInit::Pretrain) {
    const auto other = sph::preset_by_name(pretrain.preset);
    if (other.name == preset.name)
      throw ConfigError("transition.pretrain.preset must differ from the grounding preset");
    if (pretrain.options.epochs < 1) throw ConfigError("transition.pretrain.epochs must be >= 1");
    pretrain.options.seed = derive_seed(seed, {3});
  }
  schedule.validate();
  if (warmup_views && warmup_views->empty()) throw ConfigError("views: warm-up needs at least one view");
}

sph::AppearanceModel SceneConfig::resolved_appearance() const {
  return appearance ? *appearance : sph::appearance_for_density(preset.rest_density);
}

train::TrainerConfig SceneConfig::trainer_config() const {
  train::TrainerConfig c;
  c.renderer = renderer;
  c.transition = transition;
  c.schedule = schedule;
  c.seed = seed;
  c.warmup_views = warmup_views;
  c.train_view = train_view;
  return c;
}

SceneConfig scene_config_from_json(const Json& j) {
  SceneConfig c;
  StrictObject o(j, "");
  o.optional("seed", c.seed);
  o.optional("preset", c.preset);
  o.optional("appearance", c.appearance);
  o.optional("cameras", c.cameras);
  if (const Json* split = o.find("split")) {
    StrictObject so(*split, "split");
    so.optional("frames", c.frames);
    so.optional("observed", c.observed_frames);
    so.finish();
  }
  if (const Json* out = o.find("output")) {
    std::string p;
    read_json(*out, "output", p);
    c.output = p;
  }
  o.optional("write_pfm", c.write_pfm);
  o.optional("renderer", c.renderer);
  if (const Json* t = o.find("transition")) read_transition(*t, "transition", c);
  o.optional("schedule", c.schedule);
  o.optional("views", c.warmup_views);
  o.optional("train_view", c.train_view);
  if (const Json* e = o.find("eval")) read_eval(*e, "eval", c.eval);
  o.finish();
  c.resolve();
  return c;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  try {
    return scene_config_from_json(io::load_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Json to_json(const SceneConfig& c) {
  const auto& t = c.transition;
  Json transition{{"conv_radius_factor", t.conv_radius_factor},
                  {"channels", t.channels},
                  {"kernel_hidden", t.kernel_hidden},
                  {"output_hidden", t.output_hidden},
                  {"aggregate_scale", t.aggregate_scale},
                  {"correction_scale", t.correction_scale},
                  {"max_correction", t.max_correction},
                  {"box_clamp", t.box_clamp},
                  {"divergence_factor", t.divergence_factor},
                  {"init", std::string(init_name(c.transition_init))},
                  {"checkpoint", c.transition_checkpoint.string()},
                  {"pretrain",
                   {{"preset", c.pretrain.preset},
                    {"epochs", c.pretrain.options.epochs},
                    {"lr", c.pretrain.options.lr},
                    {"batch_size", c.pretrain.options.batch_size},
                    {"frames", c.pretrain.options.frames}}}};
  return Json{{"seed", c.seed},
              {"preset", to_json(c.preset)},
              {"appearance", c.appearance ? to_json(*c.appearance) : Json(nullptr)},
              {"cameras", to_json(c.cameras)},
              {"split", {{"frames", c.frames}, {"observed", c.observed_frames}}},
              {"output", c.output.string()},
              {"write_pfm", c.write_pfm},
              {"renderer", to_json(c.renderer)},
              {"transition", transition},
              {"schedule", to_json(c.schedule)},
              {"views", c.warmup_views ? Json(*c.warmup_views) : Json(nullptr)},
              {"train_view", c.train_view},
              {"eval",
               {{"views", c.eval.views},
                {"frames", c.eval.frames},
                {"mode", std::string(to_string(c.eval.mode))}}}};
}

namespace {

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"seed", "Master seed: preset jitter, network initialization, ray and time sampling."},
      {"preset", "Preset name (water_cube, water_sphere, honey_cone) or an object; \"base\" names the preset the other keys override."},
      {"preset.viscosity", "Viscosity coefficient; scaled by viscosity_scale into m^2/s."},
      {"preset.steps", "Overwritten by split.frames."},
      {"preset.seed", "Overwritten by the master seed."},
      {"appearance", "Reference appearance; null picks water or honey colors from the rest density."},
      {"cameras", "Ring of cameras around the box plus one training camera."},
      {"cameras.heldout_index", "Ring camera kept out of warm-up for novel-view scores; -1 keeps all."},
      {"split.frames", "Simulated frames including the initial one."},
      {"split.observed", "Frames [0, observed) are observations; the rest are the prediction horizon."},
      {"output", "Root directory; commands use benchmark/, train/, eval/ and render/ below it."},
      {"write_pfm", "Also write float PFM images next to the PNGs."},
      {"renderer.n_coarse", "Stratified samples per ray."},
      {"renderer.n_fine", "Importance samples per ray drawn from the coarse weights."},
      {"renderer.search_radius_factor", "Neighbor search radius in particle radii."},
      {"renderer.encoding.sigma_cap", "Upper bound applied to the soft density before encoding."},
      {"renderer.near", "Fixed near bound; null derives it from the grown scene box."},
      {"renderer.far", "Fixed far bound; null derives it from the grown scene box."},
      {"transition.init", "ballistic (zero correction), checkpoint, or pretrain on a different preset."},
      {"transition.checkpoint", "Transition checkpoint used when init is \"checkpoint\"."},
      {"transition.max_correction", "Per-step correction bound in particle radii."},
      {"transition.box_clamp", "Keep fluid particles at least one radius inside the box."},
      {"schedule", "\"desk\", \"full\", or an object; \"base\" names the schedule the other keys override."},
      {"schedule.bptt_window", "Rollout steps recorded for backpropagation; 0 keeps the whole rollout."},
      {"schedule.sequential_time", "Sweep joint time steps in order instead of sampling them uniformly."},
      {"views", "Warm-up cameras; null uses every camera with role \"warmup\"."},
      {"train_view", "Joint-phase camera; empty uses the camera with role \"train\"."},
      {"eval.views", "Cameras scored by eval; empty uses the held-out cameras."},
      {"eval.frames", "Frames scored by eval; empty uses the first, last observed and last frame."},
      {"eval.mode", "Particle distance: chamfer or index_matched."},
  };
  return d;
}

void walk(const Json& j, const std::string& path, std::ostringstream& out) {
  if (j.is_object() && !j.empty()) {
    if (!path.empty()) {
      auto it = descriptions().find(path);
      out << "| `" << path << "` | | " << (it != descriptions().end() ? it->second : "") << " |\n";
    }
    for (const auto& [key, value] : j.items()) walk(value, path.empty() ? key : path + "." + key, out);
    return;
  }
  auto it = descriptions().find(path);
  out << "| `" << path << "` | `" << j.dump() << "` | " << (it != descriptions().end() ? it->second : "") << " |\n";
}

}  // namespace

std::string config_reference() {
  SceneConfig defaults;
  defaults.resolve();
  std::ostringstream out;
  out << "# Configuration reference\n\n"
      << "Every command reads one JSON file (`--config`). Unknown keys are errors. Omitted keys take the\n"
      << "defaults below. Each output directory receives the fully resolved configuration.\n\n"
      << "| key | default | meaning |\n|---|---|---|\n";
  walk(to_json(defaults), "", out);
  return out.str();
}

}  // namespace fg::cli
