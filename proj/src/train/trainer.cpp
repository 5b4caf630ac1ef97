#include "fluidground/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fluidground/autodiff/checkpoint.hpp"
#include "fluidground/autodiff/ops.hpp"
#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/io/image_io.hpp"
#include "fluidground/io/metrics.hpp"

namespace fg::train {

double pixel_loss(const Image& rendered, const Image& observed) {
  require_same_shape(rendered, observed);
  if (rendered.pixel_count() == 0) throw DimensionError("pixel_loss of an empty image");
  double total = 0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = double(rendered.data[i]) - double(observed.data[i]);
    total += d * d;
  }
  return total / static_cast<double>(rendered.pixel_count());
}

ad::Tensor pixel_loss(ad::Tape& tape, const ad::Tensor& rendered, const ad::Tensor& observed) {
  if (rendered.shape() != observed.shape() || rendered.rank() != 2 || rendered.cols() != 3)
    throw DimensionError("pixel_loss expects matching [R, 3] tensors, got " + ad::shape_string(rendered.shape()) +
                         " and " + ad::shape_string(observed.shape()));
  if (rendered.rows() == 0) throw DimensionError("pixel_loss of an empty ray batch");
  const auto sq = ad::sum(tape, ad::square(tape, ad::sub(tape, rendered, observed)));
  return ad::scale(tape, sq, ad::Real(1) / static_cast<ad::Real>(rendered.rows()));
}

std::string_view to_string(Phase phase) { return phase == Phase::Warmup ? "warmup" : "joint"; }

namespace {

Phase parse_phase(const std::string& s) {
  if (s == "warmup") return Phase::Warmup;
  if (s == "joint") return Phase::Joint;
  throw IoError("unknown training phase '" + s + "'");
}

// Orders checkpoints: every warm-up step precedes every joint step.
std::pair<int, int> phase_key(Phase phase, int step) { return {phase == Phase::Warmup ? 0 : 1, step}; }

ad::Tensor scalar_tensor(double v) { return ad::Tensor::from({1}, {static_cast<ad::Real>(v)}); }

double scalar_at(const ad::NamedTensors& tensors, const std::string& name, const std::filesystem::path& path) {
  const auto* t = ad::find_named(tensors, name);
  if (!t) throw IoError(path.string() + ": checkpoint is missing '" + name + "'");
  return static_cast<double>(t->item());
}

}  // namespace

io::Json to_json(const LossReport& r) {
  io::Json j;
  j["step"] = r.step;
  j["phase"] = std::string(to_string(r.phase));
  j["frame"] = r.frame;
  j["loss"] = r.loss;
  io::Json views = io::Json::object();
  for (const auto& [name, v] : r.mse) views[name] = v;
  j["mse"] = std::move(views);
  j["psnr"] = r.psnr;
  j["wall_clock"] = r.wall_clock;
  return j;
}

io::Json strip_wall_clock(io::Json record) {
  if (record.is_object()) record.erase("wall_clock");
  return record;
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  Dataset d;
  d.dir_ = dir;
  d.manifest_ = sph::load_manifest(dir);
  const auto traj = load_trajectory(dir / d.manifest_.trajectory);
  if (traj.frame_count() == 0) throw IoError((dir / d.manifest_.trajectory).string() + ": trajectory has no frames");
  // Only the initial state is known to the learner; later frames are observed through images.
  d.initial_ = traj.state(0);
  // The trajectory file stores float32; the manifest keeps the exact preset values.
  d.initial_.particle_radius = d.manifest_.preset.particle_radius;
  d.box_ = d.manifest_.preset.box;
  return d;
}

const Image& Dataset::image(int frame, const std::string& camera) const {
  const auto key = std::make_pair(frame, camera);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto& entry = manifest_.image(frame, camera);
  return cache_.emplace(key, io::read_png(dir_ / entry.png)).first->second;
}

Trainer::Trainer(TrainerConfig config, const Dataset& data, std::filesystem::path out_dir)
    : config_(std::move(config)), data_(&data), out_dir_(std::move(out_dir)) {
  config_.schedule.validate();
  config_.renderer.validate();
  config_.transition.validate();
  const auto& manifest = data.manifest();
  if (manifest.observed_frames < 2) throw ConfigError("joint training needs at least two observed frames");

  if (config_.warmup_views)
    warmup_views_ = *config_.warmup_views;
  else
    for (const auto* c : manifest.cameras_with_role("warmup")) warmup_views_.push_back(c->name);
  if (warmup_views_.empty()) throw ConfigError("trainer.views: warm-up needs at least one view");
  for (const auto& v : warmup_views_) (void)manifest.camera(v);

  train_view_ = config_.train_view;
  if (train_view_.empty()) {
    const auto train = manifest.cameras_with_role("train");
    if (train.empty()) throw ConfigError("trainer.train_view: the benchmark has no camera with role \"train\"");
    train_view_ = train.front()->name;
  }
  (void)manifest.camera(train_view_);

  const auto& initial = data.initial_state();
  if (std::abs(config_.transition.particle_radius - initial.particle_radius) > 1e-12)
    throw ConfigError("transition.particle_radius does not match the benchmark");

  renderer_ = render::Renderer(config_.renderer, data.box(), initial.particle_radius);
  transition_ = transition::TransitionModel(config_.transition);
  initial_ = transition::to_tensors(initial);
  initial_hash_ = std::make_shared<const SpatialHash>(initial.positions, renderer_.search_radius());
  ensure_optimizers();
  started_ = std::chrono::steady_clock::now();
}

void Trainer::ensure_optimizers() {
  const auto& s = config_.schedule;
  warmup_adam_ = ad::Adam(renderer_.parameters(), {.lr = s.warmup_renderer.lr});
  joint_renderer_adam_ = ad::Adam(renderer_.parameters(), {.lr = s.joint_renderer.lr});
  joint_transition_adam_ = ad::Adam(transition_.parameters(), {.lr = s.joint_transition.lr});
}

ad::NamedTensors Trainer::parameters() const {
  auto out = renderer_.parameters();
  for (auto& p : transition_.parameters()) out.push_back(std::move(p));
  return out;
}

Trainer::Batch Trainer::sample_batch(Rng& rng, const std::vector<std::string>& views, int frame) const {
  const int n = config_.schedule.rays_per_batch;
  Batch b;
  b.rays.reserve(n);
  b.views.reserve(n);
  std::vector<ad::Real> target;
  target.reserve(3 * std::size_t(n));
  for (int r = 0; r < n; ++r) {
    const auto& view = views[std::min<std::size_t>(views.size() - 1, std::size_t(uniform01(rng) * views.size()))];
    const auto& cam = data_->manifest().camera(view).camera;
    const int u = std::min(cam.width - 1, int(uniform01(rng) * cam.width));
    const int v = std::min(cam.height - 1, int(uniform01(rng) * cam.height));
    const Image& img = data_->image(frame, view);
    if (img.width != cam.width || img.height != cam.height)
      throw IoError("image of " + view + " at frame " + std::to_string(frame) + " does not match its camera");
    b.rays.push_back(generate_ray(cam, u, v));
    b.views.push_back(view);
    for (int c = 0; c < 3; ++c) target.push_back(img.at(u, v, c));
  }
  b.target = ad::Tensor::from({std::size_t(n), 3}, std::move(target));
  return b;
}

LossReport Trainer::finish_step(ad::Tape& tape, const render::RayBatchOutput& out, const Batch& batch, Phase phase,
                                int step, int frame) {
  const auto loss = ad::add(tape, pixel_loss(tape, out.coarse, batch.target), pixel_loss(tape, out.fine, batch.target));

  LossReport report;
  report.step = step;
  report.phase = phase;
  report.frame = frame;
  report.loss = static_cast<double>(loss.item());
  std::map<std::string, std::pair<double, int>> per_view;
  double total = 0;
  const auto fine = out.fine.values();
  const auto target = batch.target.values();
  for (std::size_t r = 0; r < batch.rays.size(); ++r) {
    double se = 0;
    for (int c = 0; c < 3; ++c) {
      const double d = double(fine[3 * r + c]) - double(target[3 * r + c]);
      se += d * d;
    }
    auto& acc = per_view[batch.views[r]];
    acc.first += se / 3;
    acc.second += 1;
    total += se / 3;
  }
  for (const auto& [name, acc] : per_view) report.mse[name] = acc.first / acc.second;
  report.psnr = io::psnr_from_mse(total / static_cast<double>(batch.rays.size()));
  report.wall_clock =
      clock_offset_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();

  if (!std::isfinite(report.loss)) {
    tape.reset();
    const auto saved = save_checkpoint(phase, step);
    throw DivergenceError(std::string(to_string(phase)) + " step " + std::to_string(step) +
                          ": non-finite loss; last good parameters saved to " + saved.string());
  }
  tape.backward(loss);
  last_loss_ = report.loss;
  return report;
}

namespace {

// Applies one Adam update at `lr`, or drops the gradients when lr is zero so
// the parameters stay bit-identical.
void apply(ad::Adam& adam, double lr) {
  if (lr > 0) {
    for (auto [name, p] : adam.parameters()) (void)p.grad_mut();
    adam.set_lr(lr);
    adam.step();
  }
  adam.zero_grad();
}

}  // namespace

LossReport Trainer::warmup_step(int step) {
  Rng rng(derive_seed(config_.seed, {0, static_cast<std::uint64_t>(step)}));
  const auto batch = sample_batch(rng, warmup_views_, 0);
  ad::Tape tape;
  const auto out =
      renderer_.render_rays(tape, initial_.x, batch.rays, config_.schedule.perturb ? &rng : nullptr, initial_hash_);
  auto report = finish_step(tape, out, batch, Phase::Warmup, step, 0);
  apply(warmup_adam_, config_.schedule.warmup_renderer.lr_at(step));
  return report;
}

int Trainer::joint_frame(int step) const {
  const int horizon = data_->manifest().observed_frames - 1;
  if (config_.schedule.sequential_time) return 1 + step % horizon;
  Rng rng(derive_seed(config_.seed, {2, static_cast<std::uint64_t>(step)}));
  return 1 + std::min(horizon - 1, static_cast<int>(uniform01(rng) * horizon));
}

LossReport Trainer::joint_step(int step) {
  const int frame = joint_frame(step);
  Rng rng(derive_seed(config_.seed, {1, static_cast<std::uint64_t>(step)}));
  const auto batch = sample_batch(rng, {train_view_}, frame);
  ad::Tape tape;
  std::vector<transition::StateTensors> states;
  try {
    states = transition_.rollout(tape, initial_, data_->initial_state().boundary_positions, frame,
                                 config_.schedule.bptt_window);
  } catch (const DivergenceError& e) {
    tape.reset();
    const auto saved = save_checkpoint(Phase::Joint, step);
    throw DivergenceError("joint step " + std::to_string(step) + " (frame " + std::to_string(frame) +
                          "): " + e.what() + "; last good parameters saved to " + saved.string());
  }
  const auto out = renderer_.render_rays(tape, states.back().x, batch.rays,
                                         config_.schedule.perturb ? &rng : nullptr);
  auto report = finish_step(tape, out, batch, Phase::Joint, step, frame);
  apply(joint_renderer_adam_, config_.schedule.joint_renderer.lr_at(step));
  apply(joint_transition_adam_, config_.schedule.joint_transition.lr_at(step));
  return report;
}

std::filesystem::path Trainer::save_checkpoint(Phase phase, int completed_steps) const {
  auto tensors = parameters();
  auto add_all = [&](ad::NamedTensors more) {
    for (auto& t : more) tensors.push_back(std::move(t));
  };
  add_all(warmup_adam_.state("adam/warmup_renderer"));
  add_all(joint_renderer_adam_.state("adam/joint_renderer"));
  add_all(joint_transition_adam_.state("adam/joint_transition"));
  tensors.emplace_back("trainer/phase", scalar_tensor(phase == Phase::Warmup ? 0 : 1));
  tensors.emplace_back("trainer/step", scalar_tensor(completed_steps));
  // 64-bit seed split into exactly representable halves.
  tensors.emplace_back("trainer/seed_hi", scalar_tensor(static_cast<double>(config_.seed >> 32)));
  tensors.emplace_back("trainer/seed_lo", scalar_tensor(static_cast<double>(config_.seed & 0xffffffffULL)));
  tensors.emplace_back(
      "trainer/wall_clock",
      scalar_tensor(clock_offset_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count()));
  std::filesystem::create_directories(out_dir_);
  const auto path = out_dir_ / (std::string(to_string(phase)) + "-" + std::to_string(completed_steps) + ".ckpt");
  ad::save_checkpoint(path, tensors);
  return path;
}

std::pair<Phase, int> Trainer::load_checkpoint(const std::filesystem::path& path) {
  const auto tensors = ad::load_checkpoint(path);
  auto params = parameters();
  const auto copied = ad::assign_named(tensors, params);
  if (copied != params.size())
    throw IoError(path.string() + ": checkpoint holds " + std::to_string(copied) + " of " +
                  std::to_string(params.size()) + " parameters");
  warmup_adam_.load_state(tensors, "adam/warmup_renderer");
  joint_renderer_adam_.load_state(tensors, "adam/joint_renderer");
  joint_transition_adam_.load_state(tensors, "adam/joint_transition");
  const auto seed = (static_cast<std::uint64_t>(scalar_at(tensors, "trainer/seed_hi", path)) << 32) |
                    static_cast<std::uint64_t>(scalar_at(tensors, "trainer/seed_lo", path));
  if (seed != config_.seed)
    throw ConfigError(path.string() + ": checkpoint seed " + std::to_string(seed) + " differs from configured seed " +
                      std::to_string(config_.seed));
  clock_offset_ = scalar_at(tensors, "trainer/wall_clock", path);
  started_ = std::chrono::steady_clock::now();
  const Phase phase = scalar_at(tensors, "trainer/phase", path) == 0 ? Phase::Warmup : Phase::Joint;
  return {phase, static_cast<int>(scalar_at(tensors, "trainer/step", path))};
}

std::size_t Trainer::load_transition(const std::filesystem::path& path) {
  const auto tensors = ad::load_checkpoint(path);
  auto params = transition_.parameters();
  const auto copied = ad::assign_named(tensors, params);
  if (copied != params.size())
    throw IoError(path.string() + ": holds " + std::to_string(copied) + " of " + std::to_string(params.size()) +
                  " transition parameters");
  return copied;
}

std::optional<std::filesystem::path> Trainer::latest_checkpoint() const {
  std::optional<std::filesystem::path> best;
  std::pair<int, int> best_key{-1, -1};
  if (!std::filesystem::is_directory(out_dir_)) return best;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir_)) {
    if (entry.path().extension() != ".ckpt") continue;
    const auto stem = entry.path().stem().string();
    const auto dash = stem.find('-');
    if (dash == std::string::npos) continue;
    const auto phase_name = stem.substr(0, dash);
    if (phase_name != "warmup" && phase_name != "joint") continue;
    const auto digits = stem.substr(dash + 1);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    const auto key = phase_key(parse_phase(phase_name), std::stoi(digits));
    if (key > best_key) {
      best_key = key;
      best = entry.path();
    }
  }
  return best;
}

void Trainer::append_log(const LossReport& report) const {
  std::filesystem::create_directories(out_dir_);
  std::ofstream out(log_path(), std::ios::app);
  out << to_json(report).dump() << '\n';
  if (!out) throw IoError(log_path().string() + ": cannot append loss record");
}

void Trainer::truncate_log(Phase phase, int completed_steps) const {
  if (!std::filesystem::exists(log_path())) return;
  std::vector<std::string> kept;
  {
    std::ifstream in(log_path());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      io::Json j;
      try {
        j = io::Json::parse(line);
      } catch (const std::exception&) {
        break;  // a torn final line from an interrupted run
      }
      const auto key = phase_key(parse_phase(j.at("phase").get<std::string>()), j.at("step").get<int>());
      if (key < phase_key(phase, completed_steps)) kept.push_back(line);
    }
  }
  std::ofstream out(log_path(), std::ios::trunc);
  for (const auto& l : kept) out << l << '\n';
  if (!out) throw IoError(log_path().string() + ": cannot rewrite loss log");
}

void Trainer::run(bool warmup, bool joint, bool resume, const ReportFn& on_report) {
  const auto& s = config_.schedule;
  Phase phase = Phase::Warmup;
  int done = 0;
  std::optional<std::filesystem::path> from;
  if (resume) from = latest_checkpoint();
  if (from) {
    std::tie(phase, done) = load_checkpoint(*from);
    truncate_log(phase, done);
  } else {
    std::filesystem::create_directories(out_dir_);
    std::filesystem::remove(log_path());
  }

  auto emit = [&](const LossReport& r) {
    if (r.step % s.log_every == 0) append_log(r);
    if (on_report) on_report(r);
  };

  if (warmup && phase == Phase::Warmup) {
    for (int step = done; step < s.warmup_steps; ++step) {
      emit(warmup_step(step));
      if ((step + 1) % s.checkpoint_every == 0 || step + 1 == s.warmup_steps) save_checkpoint(Phase::Warmup, step + 1);
    }
  }
  if (joint) {
    const int start = phase == Phase::Joint ? done : 0;
    for (int step = start; step < s.joint_steps; ++step) {
      emit(joint_step(step));
      if ((step + 1) % s.checkpoint_every == 0 || step + 1 == s.joint_steps) save_checkpoint(Phase::Joint, step + 1);
    }
  }
}

}  // namespace fg::train
