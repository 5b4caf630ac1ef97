#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fluidground/geometry/particle_distance.hpp"
#include "fluidground/io/config.hpp"
#include "fluidground/render/renderer.hpp"
#include "fluidground/sph/benchmark.hpp"
#include "fluidground/train/schedule.hpp"
#include "fluidground/train/trainer.hpp"
#include "fluidground/transition/model.hpp"
#include "fluidground/transition/pretrain.hpp"

namespace fg::render {
void read_json(const io::Json& j, const std::string& path, FieldConfig& out);
void read_json(const io::Json& j, const std::string& path, RendererConfig& out);
io::Json to_json(const RendererConfig& c);
}  // namespace fg::render

namespace fg::enc {
void read_json(const io::Json& j, const std::string& path, EncodingOptions& out);
}  // namespace fg::enc

namespace fg::sph {
void read_json(const io::Json& j, const std::string& path, CameraRig& out);
io::Json to_json(const CameraRig& rig);
}  // namespace fg::sph

namespace fg::train {
void read_json(const io::Json& j, const std::string& path, DecayEvent& out);
void read_json(const io::Json& j, const std::string& path, ComponentSchedule& out);
/// "desk", "full", or an object with an optional "base" of either name.
void read_json(const io::Json& j, const std::string& path, TrainSchedule& out);
io::Json to_json(const TrainSchedule& s);
}  // namespace fg::train

namespace fg::cli {

/// How the transition model starts before joint training.
enum class TransitionInit { Ballistic, Checkpoint, Pretrain };

struct PretrainConfig {
  std::string preset = "water_sphere";  // must differ from the grounding preset
  transition::PretrainOptions options;
};

struct EvalConfig {
  std::vector<std::string> views;  // empty: held-out cameras
  std::vector<int> frames;         // empty: first, last observed, last
  DistanceMode mode = DistanceMode::Chamfer;
};

/// Everything a command needs, resolved from one config file plus flags.
/// The master seed sets the preset jitter seed and derives the network
/// initialization seeds; the trainer uses it for ray and time sampling.
struct SceneConfig {
  std::uint64_t seed = 1;
  sph::FluidPreset preset;
  std::optional<sph::AppearanceModel> appearance;  // unset: chosen from the preset density
  sph::CameraRig cameras;
  int frames = 60;
  int observed_frames = 50;
  std::filesystem::path output = "fluidground_out";
  bool write_pfm = false;
  render::RendererConfig renderer;
  transition::TransitionConfig transition;  // dynamics fields follow the preset
  TransitionInit transition_init = TransitionInit::Ballistic;
  std::filesystem::path transition_checkpoint;
  PretrainConfig pretrain;
  train::TrainSchedule schedule = train::TrainSchedule::desk();
  std::optional<std::vector<std::string>> warmup_views;
  std::string train_view;
  EvalConfig eval;

  /// Applies the seed derivations and preset-dependent fields, then validates.
  void resolve();
  sph::AppearanceModel resolved_appearance() const;
  train::TrainerConfig trainer_config() const;

  std::filesystem::path benchmark_dir() const { return output / "benchmark"; }
  std::filesystem::path train_dir() const { return output / "train"; }
  std::filesystem::path eval_dir() const { return output / "eval"; }
};

/// Parses and resolves; unknown keys are errors naming their path.
SceneConfig scene_config_from_json(const io::Json& j);
SceneConfig load_scene_config(const std::filesystem::path& path);
/// Fully resolved configuration, suitable for echoing into outputs.
io::Json to_json(const SceneConfig& config);

/// Markdown page listing every key with its default.
std::string config_reference();

}  // namespace fg::cli
