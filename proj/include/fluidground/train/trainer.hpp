#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluidground/autodiff/adam.hpp"
#include "fluidground/io/image.hpp"
#include "fluidground/io/json.hpp"
#include "fluidground/render/renderer.hpp"
#include "fluidground/sph/benchmark.hpp"
#include "fluidground/train/schedule.hpp"
#include "fluidground/transition/model.hpp"

namespace fg::train {

/// Per-pixel squared RGB error summed over channels and averaged over pixels.
double pixel_loss(const Image& rendered, const Image& observed);
/// Same on ray batches [R, 3]: Σ_r ‖rendered_r - observed_r‖² / R.
ad::Tensor pixel_loss(ad::Tape& tape, const ad::Tensor& rendered, const ad::Tensor& observed);

enum class Phase { Warmup, Joint };
std::string_view to_string(Phase phase);

struct LossReport {
  int step = 0;
  Phase phase = Phase::Warmup;
  double loss = 0;                    // coarse + fine pixel loss of the batch
  std::map<std::string, double> mse;  // channel-mean MSE of the fine output per view
  double psnr = 0;                    // from the batch's channel-mean MSE
  int frame = 0;                      // rendered time step
  double wall_clock = 0;              // seconds since the run started
};

io::Json to_json(const LossReport& report);
/// Drops fields that legitimately differ between identical runs (wall-clock time).
io::Json strip_wall_clock(io::Json record);

/// A generated benchmark as seen by the trainer: the manifest, the known
/// initial state (frame 0 plus walls), and lazily loaded observation images.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const sph::BenchmarkManifest& manifest() const { return manifest_; }
  const ParticleState& initial_state() const { return initial_; }
  const Box& box() const { return box_; }
  const Image& image(int frame, const std::string& camera) const;

 private:
  std::filesystem::path dir_;
  sph::BenchmarkManifest manifest_;
  ParticleState initial_;
  Box box_;
  mutable std::map<std::pair<int, std::string>, Image> cache_;
};

struct TrainerConfig {
  render::RendererConfig renderer;
  transition::TransitionConfig transition;
  TrainSchedule schedule = TrainSchedule::desk();
  std::uint64_t seed = 1;
  std::optional<std::vector<std::string>> warmup_views;  // unset: every camera with role "warmup"
  std::string train_view;                 // empty: the camera with role "train"
};

/// Two-phase optimization: renderer warm-up on frame 0 from several views,
/// then joint training of transition and renderer on the training view.
class Trainer {
 public:
  /// Checkpoints and the loss log go to `out_dir`.
  Trainer(TrainerConfig config, const Dataset& data, std::filesystem::path out_dir);

  const TrainerConfig& config() const { return config_; }
  render::Renderer& renderer() { return renderer_; }
  const render::Renderer& renderer() const { return renderer_; }
  transition::TransitionModel& transition() { return transition_; }
  const transition::TransitionModel& transition() const { return transition_; }
  const std::vector<std::string>& warmup_views() const { return warmup_views_; }
  const std::string& train_view() const { return train_view_; }

  /// One optimization step; `step` selects the random stream and learning rate.
  LossReport warmup_step(int step);
  LossReport joint_step(int step);
  /// The time step a joint iteration renders.
  int joint_frame(int step) const;

  using ReportFn = std::function<void(const LossReport&)>;
  /// Runs the remaining steps of the requested phases, resuming from the
  /// latest checkpoint in the output directory when `resume` is set.
  void run(bool warmup, bool joint, bool resume, const ReportFn& on_report = {});

  /// Every parameter, renderer and transition.
  ad::NamedTensors parameters() const;
  /// Writes "{phase}-{step}.ckpt" with parameters, optimizer state and seed.
  std::filesystem::path save_checkpoint(Phase phase, int completed_steps) const;
  /// Restores a checkpoint; returns its phase and completed step count.
  std::pair<Phase, int> load_checkpoint(const std::filesystem::path& path);
  /// Copies the "transition/" tensors of a checkpoint into the model; returns the count copied.
  std::size_t load_transition(const std::filesystem::path& path);
  std::optional<std::filesystem::path> latest_checkpoint() const;

  std::filesystem::path log_path() const { return out_dir_ / "loss.jsonl"; }

 private:
  struct Batch {
    std::vector<Ray> rays;
    std::vector<std::string> views;
    ad::Tensor target;
  };
  Batch sample_batch(Rng& rng, const std::vector<std::string>& views, int frame) const;
  LossReport finish_step(ad::Tape& tape, const render::RayBatchOutput& out, const Batch& batch, Phase phase, int step,
                         int frame);
  void ensure_optimizers();
  void append_log(const LossReport& report) const;
  void truncate_log(Phase phase, int completed_steps) const;

  TrainerConfig config_;
  const Dataset* data_;
  std::filesystem::path out_dir_;
  render::Renderer renderer_;
  transition::TransitionModel transition_;
  std::vector<std::string> warmup_views_;
  std::string train_view_;
  std::shared_ptr<const SpatialHash> initial_hash_;
  transition::StateTensors initial_;
  ad::Adam warmup_adam_;
  ad::Adam joint_renderer_adam_;
  ad::Adam joint_transition_adam_;
  double clock_offset_ = 0;
  std::chrono::steady_clock::time_point started_;
  double last_loss_ = 0;
};

}  // namespace fg::train
