#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <sys/wait.h>

#include "splatsim/mesh/triangle_mesh.hpp"
#include "splatsim/optim/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SPLATSIM_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "splatsim_cli";
    fs::remove_all(root_);
    const auto r = run("make-demo --out " + root_.string() + " --frames 16 --width 48 --height 36");
    ASSERT_EQ(r.status, 0) << r.out;
  }
  static fs::path root_;
  std::string scene_config() const { return (root_ / "scene" / "scene.json").string(); }
  std::string dataset() const { return (root_ / "dataset").string(); }
};

fs::path Cli::root_;

}  // namespace

TEST_F(Cli, ReconstructWithZeroIterationsWritesTheInit) {
  const auto out = root_ / "zero.ckpt";
  const auto r = run("reconstruct --scene " + dataset() + " --iters 0 --out " + out.string());
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(slurp(out), slurp(root_ / "dataset" / "init.ckpt"));
}

TEST_F(Cli, ReconstructImprovesHeldOutViews) {
  const auto out = root_ / "trained.ckpt";
  const auto r = run("reconstruct --scene " + dataset() + " --iters 150 --json --out " + out.string());
  ASSERT_EQ(r.status, 0);
  const auto report = json::parse(r.out);
  EXPECT_GT(report["final_psnr"].get<double>(), report["initial_psnr"].get<double>());
  EXPECT_EQ(report["test_views"].size(), 2u);  // 16 frames, every 8th held out
  EXPECT_NO_THROW(splatsim::optim::load_checkpoint(out.string()));
}

TEST_F(Cli, EvalReportMatchesPerEpisodeRecords) {
  const auto log = root_ / "episodes.jsonl";
  const auto r = run("eval --scene-config " + scene_config() +
                     " --task pointnav --episodes 25 --policy oracle --json --no-render --log " + log.string());
  ASSERT_EQ(r.status, 0);
  const auto report = json::parse(r.out);
  const auto& eps = report["episodes"];
  ASSERT_EQ(eps.size(), 25u);
  double sr = 0, spl = 0, sns = 0, cost = 0;
  for (const auto& e : eps) {
    const bool ok = e["success"].get<bool>();
    const double l = e["shortest_path"].get<double>(), p = e["path_length"].get<double>();
    const int steps = e["steps"].get<int>();
    sr += ok;
    spl += ok ? l / std::max(p, l) : 0.0;
    sns += ok ? 1.0 - static_cast<double>(e["social_violations"].get<int>()) / steps : 0.0;
    cost += e["collisions"].get<int>();
  }
  const auto& s = report["summary"];
  EXPECT_NEAR(s["sr"].get<double>(), sr / 25, 1e-9);
  EXPECT_NEAR(s["spl"].get<double>(), spl / 25, 1e-9);
  EXPECT_NEAR(s["sns"].get<double>(), sns / 25, 1e-9);
  EXPECT_NEAR(s["cost"].get<double>(), cost / 25, 1e-9);
  EXPECT_EQ(s["sr"].get<double>(), 1.0);
  std::ifstream in(log);
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) EXPECT_EQ(json::parse(line), eps[i++]);
  EXPECT_EQ(i, 25u);
}

TEST_F(Cli, EvalTableHasAllMetrics) {
  const auto r = run("eval --scene-config " + scene_config() + " --task socialnav --episodes 3 --policy random --no-render");
  ASSERT_EQ(r.status, 0);
  for (const char* key : {"SR", "SPL", "SNS", "Cost"}) EXPECT_NE(r.out.find(key), std::string::npos) << key;
}

TEST_F(Cli, RenderViewsEmitsPsnrTableAndRenders) {
  const auto out = root_ / "views";
  const auto r = run("render-views --ckpt " + (root_ / "dataset" / "reference.ckpt").string() + " --scene " + dataset() +
                     " --split test --out " + out.string());
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("PSNR"), std::string::npos);
  EXPECT_NE(r.out.find("mean"), std::string::npos);
  const auto report = json::parse(slurp(out / "report.json"));
  ASSERT_EQ(report["views"].size(), 2u);
  // The reference splats rendered the dataset, so the views match to 8-bit quantization.
  EXPECT_GT(report["mean_psnr"].get<double>(), 45.0);
  EXPECT_TRUE(fs::exists(out / "frame_0000.png"));
}

TEST_F(Cli, ExtractMeshWritesObjAndSidecar) {
  const auto out = root_ / "capture.obj";
  const auto r = run("extract-mesh --ckpt " + (root_ / "dataset" / "reference.ckpt").string() + " --scene " + dataset() +
                     " --voxel 0.08 --ground-removal mask --out " + out.string());
  ASSERT_EQ(r.status, 0);
  const auto obj = splatsim::mesh::read_obj(out.string());
  const auto bin = splatsim::mesh::read_mesh_binary((root_ / "capture.mesh").string());
  EXPECT_GT(obj.faces.size(), 0u);
  EXPECT_EQ(obj.faces, bin.faces);
  ASSERT_EQ(obj.vertices.size(), bin.vertices.size());
  for (std::size_t i = 0; i < obj.vertices.size(); ++i) EXPECT_LT((obj.vertices[i] - bin.vertices[i]).norm(), 1e-9);
}

TEST_F(Cli, SimulatePrintsOneLinePerStep) {
  const auto r = run("simulate --scene-config " + scene_config() + " --seed 2 --no-render");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string line;
  int steps = 0;
  json last;
  while (std::getline(in, line)) {
    last = json::parse(line);
    if (last.contains("step")) EXPECT_EQ(last["step"], ++steps);
  }
  ASSERT_TRUE(last.contains("episode"));
  EXPECT_EQ(last["episode"]["steps"], steps);
}

TEST_F(Cli, ServeOverStdio) {
  const auto requests = root_ / "requests.txt";
  std::ofstream(requests) << R"({"id":1,"cmd":"spec"})" "\n"
                          << R"({"id":2,"cmd":"step","payload":{"action":[0,0]}})" "\n"
                          << "not json\n"
                          << R"({"id":3,"cmd":"reset","payload":{"seed":4}})" "\n"
                          << R"({"id":4,"cmd":"step","payload":{"action":[0,0.5]}})" "\n"
                          << R"({"id":4,"cmd":"step","payload":{"action":[0,0.5]}})" "\n"
                          << R"({"id":5,"cmd":"close"})" "\n";
  const auto r = run("serve --stdio --scene-config " + scene_config() + " < " + requests.string());
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::vector<json> responses;
  std::string line;
  while (std::getline(in, line)) responses.push_back(json::parse(line));
  ASSERT_EQ(responses.size(), 7u);
  EXPECT_EQ(responses[0]["payload"]["protocol_version"], 1);
  EXPECT_EQ(responses[1]["error"]["code"], "protocol_error");
  EXPECT_EQ(responses[2]["error"]["code"], "parse_error");
  EXPECT_TRUE(responses[3]["ok"].get<bool>());
  EXPECT_TRUE(responses[4]["ok"].get<bool>());
  EXPECT_EQ(responses[5]["error"]["code"], "duplicate_id");
  EXPECT_EQ(responses[6]["id"], 5);
}

TEST_F(Cli, FailuresExitNonZero) {
  EXPECT_NE(run("reconstruct --scene " + (root_ / "scene").string() + " --iters 0 --out /tmp/x.ckpt").status, 0);
  EXPECT_NE(run("eval --scene-config /nonexistent.json").status, 0);
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("eval --scene-config " + scene_config() + " --policy remote --agent 127.0.0.1:1 --episodes 1").status, 0);
}
