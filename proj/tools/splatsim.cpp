#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "splatsim/common/error.hpp"
#include "splatsim/common/image_io.hpp"
#include "splatsim/data/dataset.hpp"
#include "splatsim/data/synthetic.hpp"
#include "splatsim/mesh/extract.hpp"
#include "splatsim/optim/trainer.hpp"
#include "splatsim/proto/remote_policy.hpp"
#include "splatsim/proto/server.hpp"
#include "splatsim/proto/session.hpp"
#include "splatsim/sim/demo.hpp"
#include "splatsim/sim/policy.hpp"
#include "splatsim/splat/rasterizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatsim;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw InvalidParameter("address must be host:port, got '" + address + "'");
  const int port = std::stoi(address.substr(colon + 1));
  if (port <= 0 || port > 65535) throw InvalidParameter("port out of range in '" + address + "'");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

// ----- make-demo

struct MakeDemoArgs {
  std::string out;
  int frames = 24;
  int width = 64;
  int height = 48;
  std::uint64_t seed = 1;
  double corridor_length = 40;
};

// Small textured ground patch with blobs above it, orbited by the capture cameras.
splat::SplatSet capture_scene(std::uint64_t seed) {
  auto set = data::textured_plane_scene(1.5, 12, seed);
  for (auto s : data::random_blob_scene(40, 0.8, seed + 1).splats) {
    s.mean.z() = std::abs(s.mean.z()) + 0.15;
    set.splats.push_back(s);
  }
  return set;
}

int run_make_demo(const MakeDemoArgs& a) {
  const fs::path root(a.out);
  const auto config = sim::write_demo(sim::make_corridor(a.corridor_length, 6.0, a.seed), root / "scene");

  const auto reference = capture_scene(a.seed);
  const auto cams = data::orbit_cameras(a.frames, 3.5, 1.2, 2.0, Vec3(0, 0, 0.3), a.width, a.height, 0.9 * a.width);
  auto dataset = data::render_dataset(reference, cams);
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << i;
    dataset.frames[i].name = name.str();
  }
  data::save_dataset(root / "dataset", dataset);
  optim::save_checkpoint((root / "dataset" / "reference.ckpt").string(), reference);
  optim::save_checkpoint((root / "dataset" / "init.ckpt").string(), data::perturb(reference, 1.0, a.seed + 7));

  std::cout << "scene config: " << config.string() << "\n"
            << "dataset:      " << (root / "dataset").string() << " (" << dataset.frames.size() << " frames, "
            << dataset.test.size() << " test)\n";
  return 0;
}

// ----- reconstruct

struct ReconstructArgs {
  std::string scene;
  std::string out;
  std::string init;
  int iters = 2000;
  bool rgb_only = false;
  bool no_densify = false;
  std::uint64_t seed = 0;
  bool json_report = false;
};

splat::SplatSet load_init(const ReconstructArgs& a) {
  fs::path init = a.init;
  if (init.empty()) {
    for (const char* candidate : {"init.ckpt", "points.txt"})
      if (fs::exists(fs::path(a.scene) / candidate)) {
        init = fs::path(a.scene) / candidate;
        break;
      }
    if (init.empty()) throw IoError("no --init given and neither init.ckpt nor points.txt in " + a.scene);
  }
  if (init.extension() == ".ckpt") return optim::load_checkpoint(init.string());
  std::vector<Vec3> points, colors;
  optim::read_point_cloud(init.string(), points, colors);
  return optim::init_from_points(points, colors);
}

int run_reconstruct(const ReconstructArgs& a) {
  const auto dataset = data::load_dataset(a.scene);
  const auto init = load_init(a);
  optim::TrainConfig cfg;
  cfg.iterations = a.iters;
  cfg.seed = a.seed;
  cfg.geometry = !a.rgb_only;
  cfg.scale_loss = !a.rgb_only;
  cfg.densify.enabled = !a.no_densify;
  cfg.geometry_start = std::min(cfg.geometry_start, std::max(0, a.iters / 4));
  const auto result = optim::train(dataset, init, cfg);
  optim::save_checkpoint(a.out, result.splats);
  const auto& r = result.report;
  if (a.json_report) {
    json views = json::array();
    for (const auto& v : r.final_views)
      views.push_back({{"frame", dataset.frames[v.frame].name}, {"psnr", v.psnr}, {"ssim", v.ssim}});
    std::cout << json{{"iterations", a.iters},
                      {"splats", result.splats.size()},
                      {"initial_psnr", r.initial_psnr},
                      {"final_psnr", r.final_psnr},
                      {"final_ssim", r.final_ssim},
                      {"test_views", views}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "trained " << a.iters << " iterations, " << result.splats.size() << " splats\n"
              << "held-out PSNR " << std::fixed << std::setprecision(2) << r.initial_psnr << " -> " << r.final_psnr
              << " dB, SSIM " << std::setprecision(4) << r.final_ssim << "\n"
              << "checkpoint: " << a.out << "\n";
  }
  return 0;
}

// ----- extract-mesh

struct ExtractArgs {
  std::string ckpt;
  std::string out;
  std::string cameras;
  std::string scene;
  double voxel = 0.05;
  double truncation = 0;
  std::string ground = "mask";
  int orbit_views = 48;
};

std::vector<splat::Camera> default_cameras(const splat::SplatSet& set, int count) {
  if (set.size() == 0) throw EmptySupport("checkpoint has no splats");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const auto& s : set.splats) {
    lo = lo.cwiseMin(s.mean);
    hi = hi.cwiseMax(s.mean);
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double reach = std::max(0.5 * (hi - lo).head<2>().norm(), 0.5);
  return data::orbit_cameras(count, 1.6 * reach, center.z() + 0.5 * reach, center.z() + reach, center, 128, 96, 100);
}

int run_extract(const ExtractArgs& a) {
  const auto set = optim::load_checkpoint(a.ckpt);
  std::vector<splat::Camera> cams;
  if (!a.cameras.empty())
    cams = data::load_cameras(a.cameras);
  else if (!a.scene.empty())
    cams = data::load_cameras(fs::path(a.scene) / "cameras.json");
  else
    cams = default_cameras(set, a.orbit_views);
  mesh::ExtractConfig cfg;
  cfg.voxel = a.voxel;
  cfg.truncation = a.truncation > 0 ? a.truncation : 4 * a.voxel;
  cfg.ground_method = mesh::parse_ground_method(a.ground);
  const auto result = mesh::extract_mesh(set, cams, cfg);
  mesh::write_obj(a.out, result.mesh);
  const auto sidecar = fs::path(a.out).replace_extension(".mesh");
  mesh::write_mesh_binary(sidecar.string(), result.mesh);
  std::cout << "grid " << result.dims[0] << "x" << result.dims[1] << "x" << result.dims[2] << ", raw "
            << result.raw.faces.size() << " faces, kept " << result.mesh.faces.size() << " after ground removal ("
            << mesh::to_string(result.ground.method_used) << ")\n"
            << "wrote " << a.out << " and " << sidecar.string() << "\n";
  return 0;
}

// ----- simulate / eval / serve share scene loading

struct SceneArgs {
  std::string config;
  std::string task = "pointnav";
  double cull_alpha = -1;  // < 0 keeps the config value
  bool no_render = false;
};

std::shared_ptr<const sim::Scene> load_scene(const SceneArgs& a) {
  auto cfg = sim::load_scene_config(a.config);
  if (a.cull_alpha >= 0) cfg.cull_alpha = a.cull_alpha;
  return sim::load_scene(cfg);
}

sim::EnvOptions env_options(const SceneArgs& a) { return {sim::parse_task(a.task), !a.no_render}; }

std::unique_ptr<sim::Policy> make_policy(const std::string& kind, std::uint64_t seed, const std::string& agent) {
  if (kind == "oracle") return std::make_unique<sim::OraclePolicy>();
  if (kind == "random") return std::make_unique<sim::RandomPolicy>(seed);
  if (kind == "remote") {
    const auto [host, port] = parse_address(agent);
    return std::make_unique<proto::RemotePolicy>(host, port);
  }
  throw InvalidParameter("unknown policy '" + kind + "'");
}

struct SimulateArgs {
  SceneArgs scene;
  std::string policy = "oracle";
  std::string agent = "127.0.0.1:5556";
  std::uint64_t seed = 0;
  std::string frames_dir;
};

int run_simulate(const SimulateArgs& a) {
  sim::NavEnv env(load_scene(a.scene), env_options(a.scene));
  auto policy = make_policy(a.policy, a.seed, a.agent);
  if (!a.frames_dir.empty()) fs::create_directories(a.frames_dir);
  int step = 0;
  const auto save_frame = [&](const sim::Observation& obs) {
    if (a.frames_dir.empty()) return;
    std::ostringstream name;
    name << "step_" << std::setw(5) << std::setfill('0') << step << ".png";
    io::write_png8(fs::path(a.frames_dir) / name.str(), io::to_rgb8(*obs.frames.back()));
  };
  const auto record = sim::run_episode(env, *policy, a.seed, [&](const sim::StepResult& r) {
    ++step;
    save_frame(r.observation);
    const auto& st = env.state();
    std::cout << json{{"step", step},
                      {"reward", r.reward},
                      {"breakdown", proto::breakdown_json(r.breakdown)},
                      {"terminated", r.terminated},
                      {"truncated", r.truncated},
                      {"position", {st.agent.position.x(), st.agent.position.y()}},
                      {"heading", st.agent.heading}}
                     .dump()
              << "\n";
  });
  std::cout << json{{"episode", proto::record_json(record)}}.dump() << "\n";
  return 0;
}

struct EvalArgs {
  SceneArgs scene;
  std::string policy = "oracle";
  std::string agent = "127.0.0.1:5556";
  int episodes = 25;
  std::uint64_t seed = 0;
  bool json_report = false;
  std::string log;
};

int run_eval(const EvalArgs& a) {
  if (a.episodes <= 0) throw InvalidParameter("--episodes must be positive");
  sim::NavEnv env(load_scene(a.scene), env_options(a.scene));
  auto policy = make_policy(a.policy, a.seed, a.agent);
  const auto records = sim::run_episodes(env, *policy, a.episodes, a.seed);
  const auto metrics = sim::compute_metrics(records);
  json episodes = json::array();
  for (const auto& r : records) episodes.push_back(proto::record_json(r));
  if (!a.log.empty()) {
    std::ofstream log(a.log);
    if (!log) throw IoError("cannot write " + a.log);
    for (const auto& e : episodes) log << e.dump() << "\n";
  }
  if (a.json_report) {
    std::cout << json{{"task", a.scene.task},
                      {"policy", a.policy},
                      {"base_seed", a.seed},
                      {"summary", proto::metrics_json(metrics)},
                      {"episodes", episodes}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::cout << "task " << a.scene.task << ", policy " << a.policy << ", " << metrics.episodes << " episodes\n"
            << std::fixed << std::setprecision(3) << "  SR    " << metrics.sr << "\n  SPL   " << metrics.spl
            << "\n  SNS   " << metrics.sns << "\n  Cost  " << metrics.cost << "\n";
  return 0;
}

struct ServeArgs {
  SceneArgs scene;
  bool stdio = false;
  int port = 5555;
  std::string host = "127.0.0.1";
  std::uint64_t seed = 0;
  std::size_t max_line = proto::kDefaultMaxLine;
};

int run_serve(const ServeArgs& a) {
  const auto scene = load_scene(a.scene);
  const proto::SessionOptions opts{env_options(a.scene), a.seed};
  if (a.stdio) {
    std::ios::sync_with_stdio(false);
    proto::Session session(scene, opts);
    proto::serve_stream(std::cin, std::cout, session, a.max_line);
    return 0;
  }
  if (a.port < 0 || a.port > 65535) throw InvalidParameter("--port out of range");
  proto::TcpServer server([scene, opts] { return std::make_unique<proto::Session>(scene, opts); },
                          static_cast<std::uint16_t>(a.port), a.host, a.max_line);
  std::cerr << "listening on " << a.host << ":" << server.port() << std::endl;
  server.run();
  return 0;
}

// ----- render-views

struct RenderViewsArgs {
  std::string ckpt;
  std::string scene;
  std::string split = "test";
  std::string out;
  bool json_report = false;
};

int run_render_views(const RenderViewsArgs& a) {
  const auto set = optim::load_checkpoint(a.ckpt);
  const auto dataset = data::load_dataset(a.scene);
  std::vector<std::size_t> views;
  if (a.split == "test") views = dataset.test;
  else if (a.split == "train") views = dataset.train;
  else if (a.split == "all") for (std::size_t i = 0; i < dataset.frames.size(); ++i) views.push_back(i);
  else throw InvalidParameter("--split must be test, train or all");
  if (views.empty()) throw EmptySupport("split '" + a.split + "' has no frames");
  if (!a.out.empty()) fs::create_directories(a.out);

  json rows = json::array();
  double psnr_sum = 0, ssim_sum = 0;
  for (const auto i : views) {
    const auto& frame = dataset.frames[i];
    const auto m = optim::evaluate_view(set, frame);
    psnr_sum += m.psnr;
    ssim_sum += m.ssim;
    rows.push_back({{"frame", frame.name}, {"psnr", m.psnr}, {"ssim", m.ssim}});
    if (!a.out.empty())
      io::write_png8(fs::path(a.out) / (frame.name + ".png"), io::to_rgb8(splat::rasterize(set, frame.camera).color));
  }
  const double n = static_cast<double>(views.size());
  const json report{{"split", a.split}, {"views", rows}, {"mean_psnr", psnr_sum / n}, {"mean_ssim", ssim_sum / n}};
  if (!a.out.empty()) write_text(fs::path(a.out) / "report.json", report.dump(2) + "\n");
  if (a.json_report) {
    std::cout << report.dump(2) << "\n";
    return 0;
  }
  std::cout << std::left << std::setw(24) << "frame" << std::right << std::setw(10) << "PSNR" << std::setw(10)
            << "SSIM" << "\n"
            << std::fixed;
  for (const auto& r : rows)
    std::cout << std::left << std::setw(24) << r["frame"].get<std::string>() << std::right << std::setprecision(2)
              << std::setw(10) << r["psnr"].get<double>() << std::setprecision(4) << std::setw(10)
              << r["ssim"].get<double>() << "\n";
  std::cout << std::left << std::setw(24) << "mean" << std::right << std::setprecision(2) << std::setw(10)
            << psnr_sum / n << std::setprecision(4) << std::setw(10) << ssim_sum / n << "\n";
  return 0;
}

void add_scene_options(CLI::App* cmd, SceneArgs& s) {
  cmd->add_option("--scene-config", s.config, "Scene JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--task", s.task, "pointnav or socialnav")->check(CLI::IsMember({"pointnav", "socialnav"}));
  cmd->add_option("--cull-alpha", s.cull_alpha, "Override the splat culling fraction (0 disables)");
  cmd->add_flag("--no-render", s.no_render, "Skip rendering; observations stay black");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splat scene reconstruction, meshing and navigation simulation"};
  app.require_subcommand(1);

  MakeDemoArgs demo;
  auto* make_demo = app.add_subcommand("make-demo", "Write a corridor scene and a small synthetic capture");
  make_demo->add_option("--out", demo.out, "Output directory")->required();
  make_demo->add_option("--frames", demo.frames, "Capture frames")->check(CLI::PositiveNumber);
  make_demo->add_option("--width", demo.width)->check(CLI::PositiveNumber);
  make_demo->add_option("--height", demo.height)->check(CLI::PositiveNumber);
  make_demo->add_option("--length", demo.corridor_length, "Corridor length, m")->check(CLI::PositiveNumber);
  make_demo->add_option("--seed", demo.seed);

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Optimize splats against a posed frame dataset");
  reconstruct->add_option("--scene", rec.scene, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  reconstruct->add_option("--out", rec.out, "Output checkpoint")->required();
  reconstruct->add_option("--iters", rec.iters, "Iterations (0 writes the initialization)")->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--init", rec.init, "Initial .ckpt or point cloud (default: init.ckpt or points.txt in the dataset)");
  reconstruct->add_flag("--rgb-only", rec.rgb_only, "Disable the geometry and scale losses");
  reconstruct->add_flag("--no-densify", rec.no_densify);
  reconstruct->add_option("--seed", rec.seed);
  reconstruct->add_flag("--json", rec.json_report);

  ExtractArgs ext;
  auto* extract = app.add_subcommand("extract-mesh", "Fuse rendered depth into a collision mesh");
  extract->add_option("--ckpt", ext.ckpt)->required()->check(CLI::ExistingFile);
  extract->add_option("--out", ext.out, "OBJ path; a binary .mesh sidecar is written next to it")->required();
  extract->add_option("--cameras", ext.cameras, "cameras.json to render from")->check(CLI::ExistingFile);
  extract->add_option("--scene", ext.scene, "Dataset directory whose cameras to use")->check(CLI::ExistingDirectory);
  extract->add_option("--voxel", ext.voxel)->check(CLI::PositiveNumber);
  extract->add_option("--truncation", ext.truncation, "Default: 4 voxels");
  extract->add_option("--ground-removal", ext.ground, "mask, vector or none")
      ->check(CLI::IsMember({"mask", "vector", "none"}));
  extract->add_option("--views", ext.orbit_views, "Orbit views when no cameras are given")->check(CLI::PositiveNumber);

  SimulateArgs simu;
  auto* simulate = app.add_subcommand("simulate", "Run one episode and print the per-step reward stream");
  add_scene_options(simulate, simu.scene);
  simulate->add_option("--policy", simu.policy)->check(CLI::IsMember({"oracle", "random", "remote"}));
  simulate->add_option("--agent", simu.agent, "host:port of a remote agent");
  simulate->add_option("--seed", simu.seed);
  simulate->add_option("--frames-dir", simu.frames_dir, "Write the live camera frame of every step as PNG");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Roll out seeded episodes and report SR, SPL, SNS and Cost");
  add_scene_options(eval, ev.scene);
  eval->add_option("--policy", ev.policy)->check(CLI::IsMember({"oracle", "random", "remote"}));
  eval->add_option("--agent", ev.agent, "host:port of a remote agent");
  eval->add_option("--episodes", ev.episodes)->check(CLI::PositiveNumber);
  eval->add_option("--seed", ev.seed, "Seed of the first episode");
  eval->add_flag("--json", ev.json_report, "Machine-readable report with per-episode records");
  eval->add_option("--log", ev.log, "Per-episode JSON lines");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Expose reset/step/render as line-delimited JSON");
  add_scene_options(serve, srv.scene);
  serve->add_flag("--stdio", srv.stdio, "Serve one session on stdin/stdout instead of TCP");
  serve->add_option("--port", srv.port, "TCP port (0 picks one)");
  serve->add_option("--host", srv.host);
  serve->add_option("--seed", srv.seed, "Seed of the first reset without an explicit seed");
  serve->add_option("--max-line", srv.max_line, "Longest accepted request line, bytes")->check(CLI::PositiveNumber);

  RenderViewsArgs rv;
  auto* render_views = app.add_subcommand("render-views", "Render dataset views and report PSNR/SSIM");
  render_views->add_option("--ckpt", rv.ckpt)->required()->check(CLI::ExistingFile);
  render_views->add_option("--scene", rv.scene, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  render_views->add_option("--split", rv.split)->check(CLI::IsMember({"test", "train", "all"}));
  render_views->add_option("--out", rv.out, "Directory for renders and report.json");
  render_views->add_flag("--json", rv.json_report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_demo) return run_make_demo(demo);
    if (*reconstruct) return run_reconstruct(rec);
    if (*extract) return run_extract(ext);
    if (*simulate) return run_simulate(simu);
    if (*eval) return run_eval(ev);
    if (*serve) return run_serve(srv);
    if (*render_views) return run_render_views(rv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
