#include "fluidground/eval/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "fluidground/errors.hpp"
#include "fluidground/io/image_io.hpp"
#include "fluidground/io/metrics.hpp"
#include "fluidground/version.hpp"

namespace fg::eval {

EvalReport score_trajectory(const std::vector<std::vector<Vec3>>& estimated,
                            const std::vector<std::vector<Vec3>>& reference, int frames, int observed_frames,
                            DistanceMode mode) {
  if (observed_frames < 2 || observed_frames > frames)
    throw ConfigError("evaluation needs 2 <= observed frames <= frames, got " + std::to_string(observed_frames) +
                      " of " + std::to_string(frames));
  if (static_cast<int>(estimated.size()) < frames || static_cast<int>(reference.size()) < frames)
    throw ConfigError("evaluation horizon " + std::to_string(frames) + " exceeds the trajectory length");
  EvalReport r;
  r.mode = mode;
  r.frames = frames;
  r.observed_frames = observed_frames;
  for (int t = 0; t < frames; ++t) r.distance.push_back(particle_distance(estimated[t], reference[t], mode));
  for (int t = 1; t < observed_frames; ++t) r.observed_avg += r.distance[t];
  r.observed_avg /= observed_frames - 1;
  r.observed_last = r.distance[observed_frames - 1];
  if (frames > observed_frames) {
    for (int t = observed_frames; t < frames; ++t) r.future_avg += r.distance[t];
    r.future_avg /= frames - observed_frames;
    r.future_last = r.distance[frames - 1];
  }
  return r;
}

ViewScore score_image(const Image& rendered, const Image& reference, const std::string& camera, int frame) {
  ViewScore s;
  s.camera = camera;
  s.frame = frame;
  const double m = io::mse(rendered, reference);
  s.identical = m == 0;
  s.psnr = io::psnr_from_mse(m);
  s.ssim = io::ssim(rendered, reference);
  return s;
}

EvalReport evaluate(const transition::TransitionModel& model, const render::Renderer* renderer,
                    const std::filesystem::path& benchmark_dir, const EvalOptions& options) {
  const auto manifest = sph::load_manifest(benchmark_dir);
  const auto traj = load_trajectory(benchmark_dir / manifest.trajectory);
  const int frames = options.horizon > 0 ? options.horizon : manifest.frames;
  if (frames > static_cast<int>(traj.frame_count()))
    throw ConfigError("evaluation horizon " + std::to_string(frames) + " exceeds the " +
                      std::to_string(traj.frame_count()) + "-frame trajectory");

  auto initial = traj.state(0);
  initial.particle_radius = manifest.preset.particle_radius;
  const auto rollout = model.rollout(initial, frames - 1);
  std::vector<std::vector<Vec3>> estimated;
  estimated.reserve(rollout.size());
  for (const auto& s : rollout) estimated.push_back(s.positions);

  EvalReport report =
      score_trajectory(estimated, traj.positions, frames, std::min(manifest.observed_frames, frames), options.mode);
  report.version = version_string();

  if (renderer) {
    std::vector<std::string> views = options.views;
    if (views.empty())
      for (const auto* c : manifest.cameras_with_role("heldout")) views.push_back(c->name);
    std::vector<int> eval_frames = options.frames;
    if (eval_frames.empty()) {
      const std::set<int> defaults{0, report.observed_frames - 1, frames - 1};
      eval_frames.assign(defaults.begin(), defaults.end());
    }
    for (int f : eval_frames)
      if (f < 0 || f >= frames)
        throw ConfigError("eval frame " + std::to_string(f) + " is outside the " + std::to_string(frames) +
                          "-frame horizon");
    for (const auto& view : views) {
      const auto& cam = manifest.camera(view).camera;
      for (int f : eval_frames) {
        const Image rendered = renderer->render_image(estimated[f], cam);
        const Image reference = io::read_png(benchmark_dir / manifest.image(f, view).png);
        report.views.push_back(score_image(rendered, reference, view, f));
      }
    }
  }
  return report;
}

io::Json to_json(const EvalReport& r) {
  io::Json j;
  j["version"] = r.version;
  j["mode"] = std::string(to_string(r.mode));
  j["frames"] = r.frames;
  j["observed_frames"] = r.observed_frames;
  j["observed_avg"] = r.observed_avg;
  j["observed_last"] = r.observed_last;
  j["future_avg"] = r.future_avg;
  j["future_last"] = r.future_last;
  j["distance"] = r.distance;
  io::Json views = io::Json::array();
  for (const auto& v : r.views) {
    io::Json e;
    e["camera"] = v.camera;
    e["frame"] = v.frame;
    if (v.identical)
      e["psnr"] = "identical";
    else
      e["psnr"] = v.psnr;
    e["ssim"] = v.ssim;
    views.push_back(std::move(e));
  }
  j["views"] = std::move(views);
  j["config"] = r.config;
  return j;
}

std::string format_table(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  const int last_obs = r.observed_frames - 1, last = r.frames - 1;
  const std::string c1 = "d_avg t<" + std::to_string(r.observed_frames);
  const std::string c2 = "d t=" + std::to_string(last_obs);
  const std::string c3 = "d_avg t>=" + std::to_string(r.observed_frames);
  const std::string c4 = "d t=" + std::to_string(last);
  std::snprintf(line, sizeof line, "%-14s %12s %12s %12s %12s\n", "distance", c1.c_str(), c2.c_str(), c3.c_str(),
                c4.c_str());
  out << line;
  const bool has_future = r.frames > r.observed_frames;
  std::snprintf(line, sizeof line, "%-14s %12.6f %12.6f ", std::string(to_string(r.mode)).c_str(), r.observed_avg,
                r.observed_last);
  out << line;
  if (has_future)
    std::snprintf(line, sizeof line, "%12.6f %12.6f\n", r.future_avg, r.future_last);
  else
    std::snprintf(line, sizeof line, "%12s %12s\n", "-", "-");
  out << line;
  if (!r.views.empty()) {
    out << '\n';
    std::snprintf(line, sizeof line, "%-14s %6s %10s %8s\n", "view", "frame", "PSNR", "SSIM");
    out << line;
    for (const auto& v : r.views) {
      const std::string psnr = v.identical ? "identical" : [&] {
        char b[32];
        std::snprintf(b, sizeof b, "%.3f", v.psnr);
        return std::string(b);
      }();
      std::snprintf(line, sizeof line, "%-14s %6d %10s %8.4f\n", v.camera.c_str(), v.frame, psnr.c_str(), v.ssim);
      out << line;
    }
  }
  return out.str();
}

}  // namespace fg::eval
