#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fluidground/cli/scene_config.hpp"
#include "fluidground/eval/evaluate.hpp"
#include "fluidground/sph/benchmark.hpp"

namespace fg::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;

/// Resolved config plus version, written next to every command's outputs.
io::Json config_echo(const SceneConfig& config);

sph::BenchmarkManifest cmd_generate(const SceneConfig& config, const std::filesystem::path& out_dir);

enum class PhaseSelection { All, Warmup, Joint };

struct TrainOptions {
  PhaseSelection phase = PhaseSelection::All;
  bool resume = false;
  int print_every = 100;  // progress lines on `log`; 0 silences them
};

/// Runs the selected phases; returns the last checkpoint written.
std::filesystem::path cmd_train(const SceneConfig& config, const std::filesystem::path& benchmark_dir,
                                const std::filesystem::path& out_dir, const TrainOptions& options, std::ostream& log);

/// Models built from the config with parameters from a checkpoint. The
/// renderer is absent when the checkpoint holds transition tensors only.
struct LoadedModels {
  transition::TransitionModel transition;
  std::optional<render::Renderer> renderer;
};
LoadedModels load_models(const SceneConfig& config, const std::filesystem::path& checkpoint);

/// Writes eval.json and eval.txt into `out_dir`.
eval::EvalReport cmd_eval(const SceneConfig& config, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& benchmark_dir, const std::filesystem::path& out_dir);

/// Where rendered particles come from.
struct ParticleSource {
  enum class Kind { Rollout, Oracle, File } kind = Kind::Rollout;
  std::filesystem::path file;  // Kind::File: a trajectory file
};

struct RenderedImage {
  int frame = 0;
  std::string camera;
  std::filesystem::path png;
  std::optional<double> psnr;  // against the benchmark image when one exists
};

/// Renders `frames` from `cameras` (benchmark camera names, or the extra
/// camera when given) and writes PNGs plus render.json into `out_dir`.
std::vector<RenderedImage> cmd_render(const SceneConfig& config, const std::filesystem::path& checkpoint,
                                      const std::filesystem::path& benchmark_dir, const ParticleSource& source,
                                      const std::vector<std::string>& cameras,
                                      const std::optional<Camera>& extra_camera, const std::vector<int>& frames,
                                      const std::filesystem::path& out_dir);

/// Rolls the transition model out from benchmark frame 0 for `frames` frames
/// and saves the sequence as a trajectory file.
Trajectory cmd_rollout(const SceneConfig& config, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& benchmark_dir, int frames, const std::filesystem::path& out_file);

/// Parses "0,5,10-12" into {0, 5, 10, 11, 12}.
std::vector<int> parse_frame_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

/// Entry point of the command-line tool; returns the exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fg::cli
