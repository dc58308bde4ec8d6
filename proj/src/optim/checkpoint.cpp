#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "splatsim/common/error.hpp"
#include "splatsim/optim/trainer.hpp"

namespace splatsim::optim {
namespace {

constexpr const char* kFormat = "splatsim-ckpt";
constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

}  // namespace

void save_checkpoint(const std::string& path, const splat::SplatSet& splats) {
  nlohmann::json header = {{"format", kFormat},
                           {"version", kVersion},
                           {"count", splats.size()},
                           {"fields", kCheckpointFields}};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f << header.dump() << '\n';
  std::vector<double> row(14);
  for (const auto& s : splats.splats) {
    const Vec4& q = s.rotation;  // stored as is; every consumer normalizes
    row = {s.mean.x(),   s.mean.y(),   s.mean.z(),   q[0],        q[1],
           q[2],         q[3],         s.scales.x(), s.scales.y(), s.scales.z(),
           s.opacity,    s.color.x(),  s.color.y(),  s.color.z()};
    f.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * row.size());
  }
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

splat::SplatSet load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("checkpoint has no header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint header is not JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != kFormat) throw IoError("not a splatsim checkpoint: " + path);
  if (header.value("version", -1) != kVersion)
    throw IoError("unsupported checkpoint version in " + path);
  const auto fields = header.value("fields", std::vector<std::string>{});
  if (fields.size() != 14 || !std::equal(fields.begin(), fields.end(), std::begin(kCheckpointFields)))
    throw IoError("checkpoint field list does not match this build: " + path);
  const auto count = header.value("count", std::size_t{0});

  splat::SplatSet set;
  set.splats.resize(count);
  double row[14];
  for (std::size_t i = 0; i < count; ++i) {
    if (!f.read(reinterpret_cast<char*>(row), sizeof(row)))
      throw IoError("checkpoint truncated at splat " + std::to_string(i) + ": " + path);
    auto& s = set.splats[i];
    s.mean = Vec3(row[0], row[1], row[2]);
    s.rotation = Vec4(row[3], row[4], row[5], row[6]);
    s.scales = Vec3(row[7], row[8], row[9]);
    s.opacity = row[10];
    s.color = Vec3(row[11], row[12], row[13]);
    splat::validate(s);
  }
  if (f.peek() != std::char_traits<char>::eof()) throw IoError("trailing data in checkpoint: " + path);
  return set;
}

void read_point_cloud(const std::string& path, std::vector<Vec3>& points, std::vector<Vec3>& colors) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open point cloud: " + path);
  points.clear();
  colors.clear();
  std::string line;
  int lineno = 0;
  bool any_color = false, all_color = true, byte_colors = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (!ss.eof()) throw IoError(path + ":" + std::to_string(lineno) + ": not a number");
    if (v.empty()) continue;
    if (v.size() != 3 && v.size() != 6)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 3 or 6 values");
    points.emplace_back(v[0], v[1], v[2]);
    if (v.size() == 6) {
      any_color = true;
      colors.emplace_back(v[3], v[4], v[5]);
      if (colors.back().maxCoeff() > 1.0) byte_colors = true;
    } else {
      all_color = false;
      colors.emplace_back(0.5, 0.5, 0.5);
    }
  }
  if (points.empty()) throw IoError("point cloud is empty: " + path);
  if (!any_color) colors.clear();
  if (any_color && !all_color) throw IoError("point cloud mixes colored and uncolored points: " + path);
  if (byte_colors)
    for (auto& c : colors) c /= 255.0;
}

}  // namespace splatsim::optim
