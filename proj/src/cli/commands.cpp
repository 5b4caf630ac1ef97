#include "fluidground/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "fluidground/autodiff/checkpoint.hpp"
#include "fluidground/geometry/trajectory.hpp"
#include "fluidground/io/image_io.hpp"
#include "fluidground/io/metrics.hpp"
#include "fluidground/sph/solver.hpp"
#include "fluidground/train/trainer.hpp"
#include "fluidground/transition/pretrain.hpp"
#include "fluidground/version.hpp"

namespace fg::cli {

io::Json config_echo(const SceneConfig& config) {
  return io::Json{{"version", version_string()}, {"config", to_json(config)}};
}

sph::BenchmarkManifest cmd_generate(const SceneConfig& config, const std::filesystem::path& out_dir) {
  sph::BenchmarkOptions opts;
  opts.observed_frames = config.observed_frames;
  opts.write_pfm = config.write_pfm;
  opts.config = to_json(config);
  const auto cameras = sph::build_cameras(config.cameras, config.preset.box);
  return sph::generate_benchmark(config.preset, cameras, config.resolved_appearance(), out_dir, opts);
}

namespace {

void initialize_transition(const SceneConfig& config, train::Trainer& trainer, const std::filesystem::path& out_dir,
                           std::ostream& log) {
  switch (config.transition_init) {
    case TransitionInit::Ballistic:
      return;
    case TransitionInit::Checkpoint:
      trainer.load_transition(config.transition_checkpoint);
      log << "transition initialized from " << config.transition_checkpoint.string() << '\n';
      return;
    case TransitionInit::Pretrain: {
      auto preset = sph::preset_by_name(config.pretrain.preset);
      if (std::abs(preset.particle_radius - config.preset.particle_radius) > 1e-12 ||
          std::abs(preset.dt - config.preset.dt) > 1e-12)
        throw ConfigError("transition.pretrain.preset must share particle_radius and dt with the grounding preset");
      preset.seed = config.seed;
      const auto traj = sph::simulate(preset);
      const auto report = transition::pretrain_on_oracle(
          trainer.transition(), traj, config.pretrain.options,
          [&](int epoch, double loss) { log << "pretrain epoch " << epoch << " loss " << loss << '\n'; });
      (void)report;
      const auto path = out_dir / "transition-pretrained.ckpt";
      ad::save_checkpoint(path, trainer.transition().parameters());
      log << "pretrained transition saved to " << path.string() << '\n';
      return;
    }
  }
}

}  // namespace

std::filesystem::path cmd_train(const SceneConfig& config, const std::filesystem::path& benchmark_dir,
                                const std::filesystem::path& out_dir, const TrainOptions& options, std::ostream& log) {
  const auto data = train::Dataset::load(benchmark_dir);
  if (data.manifest().preset.name != config.preset.name ||
      std::abs(data.manifest().preset.particle_radius - config.preset.particle_radius) > 1e-12)
    throw ConfigError("benchmark " + benchmark_dir.string() + " was generated for preset '" +
                      data.manifest().preset.name + "', config names '" + config.preset.name + "'");
  std::filesystem::create_directories(out_dir);
  train::Trainer trainer(config.trainer_config(), data, out_dir);

  const bool warmup = options.phase != PhaseSelection::Joint;
  const bool joint = options.phase != PhaseSelection::Warmup;
  // The joint phase alone continues from the warm-up checkpoint in out_dir.
  const bool resume = options.resume || options.phase == PhaseSelection::Joint;
  const auto latest = trainer.latest_checkpoint();
  if (options.phase == PhaseSelection::Joint && !latest)
    throw ConfigError("--phase joint needs a warm-up checkpoint in " + out_dir.string());
  if (!(resume && latest)) initialize_transition(config, trainer, out_dir, log);

  io::save_json(out_dir / "run.json", config_echo(config));
  trainer.run(warmup, joint, resume, [&](const train::LossReport& r) {
    if (options.print_every > 0 && r.step % options.print_every == 0) {
      char line[160];
      std::snprintf(line, sizeof line, "%-6s step %7d  frame %3d  loss %.6f  psnr %.2f\n",
                    std::string(train::to_string(r.phase)).c_str(), r.step, r.frame, r.loss, r.psnr);
      log << line << std::flush;
    }
  });
  const auto last = trainer.latest_checkpoint();
  if (!last) throw IoError("training wrote no checkpoint into " + out_dir.string());
  return *last;
}

LoadedModels load_models(const SceneConfig& config, const std::filesystem::path& checkpoint) {
  const auto tensors = ad::load_checkpoint(checkpoint);
  LoadedModels m{transition::TransitionModel(config.transition), std::nullopt};
  auto tp = m.transition.parameters();
  const auto copied = ad::assign_named(tensors, tp);
  if (copied != tp.size())
    throw IoError(checkpoint.string() + ": holds " + std::to_string(copied) + " of " + std::to_string(tp.size()) +
                  " transition parameters");
  render::Renderer renderer(config.renderer, config.preset.box, config.preset.particle_radius);
  auto rp = renderer.parameters();
  const auto rcopied = ad::assign_named(tensors, rp);
  if (rcopied == rp.size())
    m.renderer = std::move(renderer);
  else if (rcopied != 0)
    throw IoError(checkpoint.string() + ": holds " + std::to_string(rcopied) + " of " + std::to_string(rp.size()) +
                  " renderer parameters");
  return m;
}

eval::EvalReport cmd_eval(const SceneConfig& config, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& benchmark_dir, const std::filesystem::path& out_dir) {
  const auto models = load_models(config, checkpoint);
  eval::EvalOptions opts;
  opts.mode = config.eval.mode;
  opts.views = config.eval.views;
  opts.frames = config.eval.frames;
  auto report = eval::evaluate(models.transition, models.renderer ? &*models.renderer : nullptr, benchmark_dir, opts);
  report.config = to_json(config);
  std::filesystem::create_directories(out_dir);
  auto j = eval::to_json(report);
  j["checkpoint"] = checkpoint.filename().string();
  io::save_json(out_dir / "eval.json", j);
  std::ofstream txt(out_dir / "eval.txt");
  txt << eval::format_table(report);
  if (!txt) throw IoError((out_dir / "eval.txt").string() + ": cannot write");
  return report;
}

namespace {

std::vector<std::vector<Vec3>> particle_frames(const SceneConfig& config, const std::filesystem::path& checkpoint,
                                               const std::filesystem::path& benchmark_dir,
                                               const ParticleSource& source, int needed,
                                               const transition::TransitionModel* model) {
  std::vector<std::vector<Vec3>> out;
  if (source.kind == ParticleSource::Kind::File) {
    out = load_trajectory(source.file).positions;
  } else {
    const auto manifest = sph::load_manifest(benchmark_dir);
    const auto traj = load_trajectory(benchmark_dir / manifest.trajectory);
    if (source.kind == ParticleSource::Kind::Oracle) {
      out = traj.positions;
    } else {
      auto initial = traj.state(0);
      initial.particle_radius = config.preset.particle_radius;
      for (const auto& s : model->rollout(initial, std::max(0, needed - 1))) out.push_back(s.positions);
    }
  }
  (void)checkpoint;
  if (static_cast<int>(out.size()) < needed)
    throw ConfigError("particle source has " + std::to_string(out.size()) + " frames; frame " +
                      std::to_string(needed - 1) + " was requested");
  return out;
}

}  // namespace

std::vector<RenderedImage> cmd_render(const SceneConfig& config, const std::filesystem::path& checkpoint,
                                      const std::filesystem::path& benchmark_dir, const ParticleSource& source,
                                      const std::vector<std::string>& cameras,
                                      const std::optional<Camera>& extra_camera, const std::vector<int>& frames,
                                      const std::filesystem::path& out_dir) {
  if (frames.empty()) throw ConfigError("--frames: nothing to render");
  const auto models = load_models(config, checkpoint);
  if (!models.renderer) throw ConfigError(checkpoint.string() + ": checkpoint holds no renderer parameters");
  const int needed = *std::max_element(frames.begin(), frames.end()) + 1;
  const auto particles = particle_frames(config, checkpoint, benchmark_dir, source, needed, &models.transition);

  std::optional<sph::BenchmarkManifest> manifest;
  if (std::filesystem::exists(benchmark_dir / sph::kManifestName)) manifest = sph::load_manifest(benchmark_dir);
  std::vector<std::pair<std::string, Camera>> views;
  for (const auto& name : cameras) {
    if (!manifest) throw ConfigError("camera '" + name + "' needs a benchmark manifest in " + benchmark_dir.string());
    views.emplace_back(name, manifest->camera(name).camera);
  }
  if (extra_camera) views.emplace_back("custom", *extra_camera);
  if (views.empty()) throw ConfigError("--views: no camera to render from");

  std::filesystem::create_directories(out_dir);
  std::vector<RenderedImage> out;
  io::Json images = io::Json::array();
  for (const auto& [name, cam] : views) {
    for (int f : frames) {
      if (f < 0) throw ConfigError("--frames: negative frame " + std::to_string(f));
      const Image im = models.renderer->render_image(particles[f], cam);
      char file[64];
      std::snprintf(file, sizeof file, "f%03d_%s.png", f, name.c_str());
      io::write_png(out_dir / file, im);
      RenderedImage r{f, name, out_dir / file, std::nullopt};
      io::Json e{{"frame", f}, {"camera", name}, {"png", std::string(file)}};
      if (manifest && name != "custom" && f < manifest->frames) {
        r.psnr = io::psnr(im, io::read_png(benchmark_dir / manifest->image(f, name).png));
        e["psnr"] = *r.psnr;
      }
      images.push_back(std::move(e));
      out.push_back(std::move(r));
    }
  }
  auto j = config_echo(config);
  j["checkpoint"] = checkpoint.filename().string();
  j["source"] = source.kind == ParticleSource::Kind::Rollout  ? "rollout"
                : source.kind == ParticleSource::Kind::Oracle ? "oracle"
                                                              : source.file.string();
  j["images"] = std::move(images);
  io::save_json(out_dir / "render.json", j);
  return out;
}

Trajectory cmd_rollout(const SceneConfig& config, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& benchmark_dir, int frames, const std::filesystem::path& out_file) {
  if (frames < 1) throw ConfigError("--frames: a rollout needs at least one frame");
  const auto models = load_models(config, checkpoint);
  const auto manifest = sph::load_manifest(benchmark_dir);
  const auto oracle = load_trajectory(benchmark_dir / manifest.trajectory);
  auto initial = oracle.state(0);
  initial.particle_radius = config.preset.particle_radius;
  Trajectory traj;
  traj.particle_radius = config.preset.particle_radius;
  traj.box = config.preset.box;
  traj.boundary_positions = initial.boundary_positions;
  for (const auto& s : models.transition.rollout(initial, frames - 1)) traj.append(s);
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  save_trajectory(out_file, traj);
  auto echo = config_echo(config);
  echo["checkpoint"] = checkpoint.filename().string();
  echo["frames"] = frames;
  io::save_json(out_file.string() + ".json", echo);
  return traj;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<int> parse_frame_list(const std::string& text) {
  std::vector<int> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || v < 0) throw ConfigError("--frames: cannot parse '" + s + "'");
    return v;
  };
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(item));
    } else {
      const int a = number(item.substr(0, dash)), b = number(item.substr(dash + 1));
      if (b < a) throw ConfigError("--frames: empty range '" + item + "'");
      for (int f = a; f <= b; ++f) out.push_back(f);
    }
  }
  if (out.empty()) throw ConfigError("--frames: no frames given");
  return out;
}

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string benchmark;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_benchmark) {
  cmd->add_option("--config", f.config, "Scene configuration (JSON)")->required();
  cmd->add_option("--seed", f.seed, "Override the master seed");
  cmd->add_option("--out", f.out, "Output directory");
  if (with_benchmark) cmd->add_option("--benchmark", f.benchmark, "Benchmark directory (default: <output>/benchmark)");
}

SceneConfig load_config(const CommonFlags& f) {
  auto c = load_scene_config(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    c.resolve();
  }
  return c;
}

std::filesystem::path or_default(const std::string& flag, const std::filesystem::path& fallback) {
  return flag.empty() ? fallback : std::filesystem::path(flag);
}

std::filesystem::path resolve_checkpoint(const std::string& flag, const SceneConfig& config) {
  if (!flag.empty()) return flag;
  const auto dir = config.train_dir();
  std::optional<std::filesystem::path> best;
  std::pair<int, int> best_key{-1, -1};
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto stem = e.path().stem().string();
      if (e.path().extension() != ".ckpt") continue;
      const auto dash = stem.find('-');
      if (dash == std::string::npos) continue;
      const auto phase = stem.substr(0, dash), digits = stem.substr(dash + 1);
      if ((phase != "warmup" && phase != "joint") || digits.empty() ||
          !std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        continue;
      const std::pair<int, int> key{phase == "joint" ? 1 : 0, std::stoi(digits)};
      if (key > best_key) {
        best_key = key;
        best = e.path();
      }
    }
  }
  if (!best) throw IoError("no checkpoint found in " + dir.string() + "; pass --checkpoint");
  return *best;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground particle fluid dynamics from rendered image sequences."};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "Simulate a preset and render its benchmark images");
  add_common(gen, gen_flags, false);

  CommonFlags train_flags;
  std::string phase = "all";
  bool resume = false;
  std::string train_views;
  int print_every = 100;
  auto* train = app.add_subcommand("train", "Warm up the renderer, then train transition and renderer jointly");
  add_common(train, train_flags, true);
  train->add_option("--phase", phase, "warmup, joint or all")->check(CLI::IsMember({"warmup", "joint", "all"}));
  train->add_flag("--resume", resume, "Continue from the latest checkpoint in the output directory");
  train->add_option("--views", train_views, "Comma-separated warm-up cameras");
  train->add_option("--print-every", print_every, "Progress line interval in steps (0 = quiet)");

  CommonFlags eval_flags;
  std::string eval_ckpt, eval_views, eval_frames;
  auto* evalc = app.add_subcommand("eval", "Score particle distances and novel views of a checkpoint");
  add_common(evalc, eval_flags, true);
  evalc->add_option("--checkpoint", eval_ckpt, "Checkpoint (default: latest in <output>/train)");
  evalc->add_option("--views", eval_views, "Comma-separated cameras to score");
  evalc->add_option("--frames", eval_frames, "Frames to score, e.g. 0,49,59 or 40-59");

  CommonFlags render_flags;
  std::string render_ckpt, render_views, render_frames = "0", render_source = "rollout", camera_file;
  auto* render = app.add_subcommand("render", "Render particles from a rollout or trajectory with a trained renderer");
  add_common(render, render_flags, true);
  render->add_option("--checkpoint", render_ckpt, "Checkpoint (default: latest in <output>/train)");
  render->add_option("--source", render_source, "rollout, oracle, or a trajectory file");
  render->add_option("--views", render_views, "Comma-separated benchmark cameras");
  render->add_option("--camera", camera_file, "JSON camera to render from in addition to --views");
  render->add_option("--frames", render_frames, "Frames to render");

  CommonFlags rollout_flags;
  std::string rollout_ckpt, rollout_frames;
  auto* rollout = app.add_subcommand("rollout", "Roll the transition model out and save the trajectory");
  add_common(rollout, rollout_flags, true);
  rollout->add_option("--checkpoint", rollout_ckpt, "Checkpoint (default: latest in <output>/train)");
  rollout->add_option("--frames", rollout_frames, "Frames to produce (highest listed frame + 1)");

  std::string schema_out;
  bool schema_json = false;
  auto* schema = app.add_subcommand("config-schema", "Print the configuration reference");
  schema->add_option("--out", schema_out, "Write to a file instead of stdout");
  schema->add_flag("--json", schema_json, "Print the resolved default configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      const auto config = load_config(gen_flags);
      const auto dir = or_default(gen_flags.out, config.benchmark_dir());
      const auto m = cmd_generate(config, dir);
      out << "generated " << m.frames << " frames (" << m.observed_frames << " observed), " << m.images.size()
          << " images in " << dir.string() << "\n" << version_string() << '\n';
    } else if (*train) {
      auto config = load_config(train_flags);
      if (!train_views.empty()) {
        config.warmup_views = split_list(train_views);
        config.resolve();
      }
      TrainOptions opts;
      opts.phase = phase == "warmup" ? PhaseSelection::Warmup
                   : phase == "joint" ? PhaseSelection::Joint
                                      : PhaseSelection::All;
      opts.resume = resume;
      opts.print_every = print_every;
      const auto last = cmd_train(config, or_default(train_flags.benchmark, config.benchmark_dir()),
                                  or_default(train_flags.out, config.train_dir()), opts, out);
      out << "final checkpoint " << last.string() << '\n';
    } else if (*evalc) {
      auto config = load_config(eval_flags);
      if (!eval_views.empty()) config.eval.views = split_list(eval_views);
      if (!eval_frames.empty()) config.eval.frames = parse_frame_list(eval_frames);
      const auto report = cmd_eval(config, resolve_checkpoint(eval_ckpt, config),
                                   or_default(eval_flags.benchmark, config.benchmark_dir()),
                                   or_default(eval_flags.out, config.eval_dir()));
      out << eval::format_table(report) << report.version << '\n';
    } else if (*render) {
      const auto config = load_config(render_flags);
      ParticleSource source;
      if (render_source == "rollout")
        source.kind = ParticleSource::Kind::Rollout;
      else if (render_source == "oracle")
        source.kind = ParticleSource::Kind::Oracle;
      else
        source = {ParticleSource::Kind::File, render_source};
      std::optional<Camera> extra;
      if (!camera_file.empty()) {
        Camera c;
        read_json(io::load_json(camera_file), "camera", c);
        extra = c;
      }
      auto views = split_list(render_views);
      if (views.empty() && !extra) views.push_back(config.train_view.empty() ? "train" : config.train_view);
      const auto images = cmd_render(config, resolve_checkpoint(render_ckpt, config),
                                     or_default(render_flags.benchmark, config.benchmark_dir()), source, views, extra,
                                     parse_frame_list(render_frames), or_default(render_flags.out, config.output / "render"));
      for (const auto& im : images) {
        out << im.png.string();
        if (im.psnr) out << "  psnr " << *im.psnr;
        out << '\n';
      }
    } else if (*rollout) {
      const auto config = load_config(rollout_flags);
      int frames = config.frames;
      if (!rollout_frames.empty()) {
        const auto list = parse_frame_list(rollout_frames);
        frames = *std::max_element(list.begin(), list.end()) + 1;
      }
      const auto file = or_default(rollout_flags.out, config.output / "rollout") / "rollout.fgtraj";
      cmd_rollout(config, resolve_checkpoint(rollout_ckpt, config),
                  or_default(rollout_flags.benchmark, config.benchmark_dir()), frames, file);
      out << "wrote " << frames << " frames to " << file.string() << '\n';
    } else if (*schema) {
      SceneConfig defaults;
      defaults.resolve();
      const std::string text = schema_json ? config_echo(defaults).dump(2) + "\n" : config_reference();
      if (schema_out.empty()) {
        out << text;
      } else {
        std::ofstream f(schema_out);
        f << text;
        if (!f) throw IoError(schema_out + ": cannot write");
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace fg::cli
