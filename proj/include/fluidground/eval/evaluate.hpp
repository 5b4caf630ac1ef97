#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluidground/geometry/particle_distance.hpp"
#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/io/image.hpp"
#include "fluidground/io/json.hpp"
#include "fluidground/render/renderer.hpp"
#include "fluidground/sph/benchmark.hpp"
#include "fluidground/transition/model.hpp"

namespace fg::eval {

struct ViewScore {
  std::string camera;
  int frame = 0;
  double psnr = 0;         // io::kIdenticalPsnr when identical
  bool identical = false;  // zero MSE
  double ssim = 0;
};

/// Grounding and prediction distances plus image scores for one model.
struct EvalReport {
  std::string version;
  DistanceMode mode = DistanceMode::Chamfer;
  int frames = 0;
  int observed_frames = 0;
  std::vector<double> distance;  // per frame, estimated vs reference
  double observed_avg = 0;       // mean over frames 1 .. observed-1
  double observed_last = 0;      // frame observed-1
  double future_avg = 0;         // mean over frames observed .. frames-1
  double future_last = 0;        // frame frames-1
  std::vector<ViewScore> views;
  io::Json config;
};

/// Fills the distance columns of a report from an estimated sequence.
/// Both sequences must cover at least `frames` frames.
EvalReport score_trajectory(const std::vector<std::vector<Vec3>>& estimated,
                            const std::vector<std::vector<Vec3>>& reference, int frames, int observed_frames,
                            DistanceMode mode = DistanceMode::Chamfer);

ViewScore score_image(const Image& rendered, const Image& reference, const std::string& camera, int frame);

struct EvalOptions {
  DistanceMode mode = DistanceMode::Chamfer;
  std::vector<std::string> views;  // empty: every "heldout" camera
  std::vector<int> frames;         // empty: first, last observed and last frame
  int horizon = 0;                 // frames to evaluate; 0 = every benchmark frame
};

/// Rolls the transition model out from frame 0 of the benchmark, scores the
/// particles against the oracle trajectory, and renders the requested views
/// from the rolled-out particles for comparison with the benchmark images.
/// `renderer` may be null to skip image scores.
EvalReport evaluate(const transition::TransitionModel& model, const render::Renderer* renderer,
                    const std::filesystem::path& benchmark_dir, const EvalOptions& options);

io::Json to_json(const EvalReport& report);
/// Aligned text table: one row for the distance columns, then one per view score.
std::string format_table(const EvalReport& report);

}  // namespace fg::eval
