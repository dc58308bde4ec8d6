#include "splatsim/data/dataset.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "splatsim/common/error.hpp"
#include "splatsim/common/image_io.hpp"

namespace splatsim::data {
namespace {

using nlohmann::json;

struct CameraFile {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  struct Entry {
    std::string file;
    Mat4 w2c;
  };
  std::vector<Entry> frames;
};

CameraFile read_camera_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing " + path.string());
  CameraFile cf;
  try {
    const json j = json::parse(in);
    cf.fx = j.at("fx").get<double>();
    cf.fy = j.at("fy").get<double>();
    cf.cx = j.at("cx").get<double>();
    cf.cy = j.at("cy").get<double>();
    cf.width = j.at("width").get<int>();
    cf.height = j.at("height").get<int>();
    std::size_t index = 0;
    for (const auto& f : j.at("frames")) {
      CameraFile::Entry e;
      e.file = f.at("file").get<std::string>();
      const auto& m = f.at("w2c");
      if (!m.is_array() || m.size() != 16)
        throw IoError("frame " + std::to_string(index) + " (" + e.file + "): w2c must hold 16 numbers");
      for (int k = 0; k < 16; ++k) e.w2c(k / 4, k % 4) = m.at(k).get<double>();
      cf.frames.push_back(std::move(e));
      ++index;
    }
  } catch (const json::exception& e) {
    throw IoError("malformed " + path.string() + ": " + e.what());
  }
  if (!(cf.fx > 0 && cf.fy > 0) || cf.width <= 0 || cf.height <= 0)
    throw InvalidParameter("cameras.json: intrinsics and image size must be positive");
  if (!std::isfinite(cf.cx) || !std::isfinite(cf.cy)) throw InvalidParameter("cameras.json: principal point must be finite");
  return cf;
}

splat::Camera make_camera(const CameraFile& cf, const CameraFile::Entry& e, const std::string& label) {
  splat::Camera cam;
  cam.fx = cf.fx;
  cam.fy = cf.fy;
  cam.cx = cf.cx;
  cam.cy = cf.cy;
  cam.width = cf.width;
  cam.height = cf.height;
  if (!e.w2c.allFinite() || (e.w2c.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidParameter(label + ": w2c must be a finite rigid transform with last row 0 0 0 1");
  cam.set_world_to_camera(e.w2c);
  try {
    splat::validate(cam);
  } catch (const InvalidParameter& err) {
    throw InvalidParameter(label + ": " + err.what());
  }
  return cam;
}

}  // namespace

std::vector<splat::Camera> load_cameras(const std::filesystem::path& cameras_json) {
  const auto cf = read_camera_file(cameras_json);
  std::vector<splat::Camera> cams;
  for (std::size_t i = 0; i < cf.frames.size(); ++i)
    cams.push_back(make_camera(cf, cf.frames[i], "frame " + std::to_string(i) + " (" + cf.frames[i].file + ")"));
  return cams;
}

FrameDataset load_dataset(const std::filesystem::path& root, const LoadOptions& opts) {
  if (opts.test_every == 0) throw InvalidParameter("test_every must be positive");
  const auto cf = read_camera_file(root / "cameras.json");
  FrameDataset ds;
  for (std::size_t i = 0; i < cf.frames.size(); ++i) {
    const auto& e = cf.frames[i];
    const std::string label = "frame " + std::to_string(i) + " (" + e.file + ")";
    const std::string stem = std::filesystem::path(e.file).stem().string();
    Frame frame;
    frame.name = stem;
    frame.camera = make_camera(cf, e, label);

    const auto image_path = root / "images" / e.file;
    if (!std::filesystem::exists(image_path)) throw IoError(label + ": missing image " + image_path.string());
    frame.image = io::from_rgb8(io::read_png8(image_path));
    if (frame.image.channels != 3) throw IoError(label + ": image must be RGB");
    if (frame.image.width != cf.width || frame.image.height != cf.height)
      throw IoError(label + ": image is " + std::to_string(frame.image.width) + "x" + std::to_string(frame.image.height) +
                    ", cameras.json says " + std::to_string(cf.width) + "x" + std::to_string(cf.height));

    std::filesystem::path depth_path;
    for (const char* ext : {".pfm", ".png"})
      if (std::filesystem::exists(root / "depth" / (stem + ext))) {
        depth_path = root / "depth" / (stem + ext);
        break;
      }
    if (depth_path.empty()) throw IoError(label + ": missing depth depth/" + stem + ".pfm or .png");
    frame.depth = io::read_depth(depth_path);
    if (!frame.depth.same_size(frame.image)) throw IoError(label + ": depth size differs from the image");

    const auto mask_path = root / "masks" / (stem + ".png");
    if (opts.load_masks && std::filesystem::exists(mask_path)) {
      const auto raw = io::read_png8(mask_path);
      if (!raw.same_size(frame.image)) throw IoError(label + ": mask size differs from the image");
      frame.dynamic_mask = Mask(raw.width, raw.height, 1, 0);
      for (std::size_t p = 0; p < frame.dynamic_mask.data.size(); ++p)
        for (int c = 0; c < raw.channels; ++c)
          if (raw.data[p * raw.channels + c]) frame.dynamic_mask.data[p] = 1;
    }
    ds.frames.push_back(std::move(frame));
  }
  ds.split_every(opts.test_every);
  return ds;
}

void save_dataset(const std::filesystem::path& root, const FrameDataset& dataset, const std::string& depth_ext) {
  if (depth_ext != ".pfm" && depth_ext != ".png") throw InvalidParameter("depth extension must be .pfm or .png");
  if (dataset.frames.empty()) throw InvalidParameter("dataset has no frames");
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "depth");
  const auto& c0 = dataset.frames.front().camera;
  json j{{"fx", c0.fx}, {"fy", c0.fy}, {"cx", c0.cx}, {"cy", c0.cy}, {"width", c0.width}, {"height", c0.height}};
  j["frames"] = json::array();
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    const auto& f = dataset.frames[i];
    const auto& c = f.camera;
    if (c.fx != c0.fx || c.fy != c0.fy || c.cx != c0.cx || c.cy != c0.cy || c.width != c0.width || c.height != c0.height)
      throw InvalidParameter("save_dataset needs shared intrinsics");
    const std::string stem = f.name.empty() ? "frame_" + std::to_string(i) : f.name;
    io::write_png8(root / "images" / (stem + ".png"), io::to_rgb8(f.image));
    if (!f.depth.empty()) io::write_depth(root / "depth" / (stem + depth_ext), f.depth);
    if (!f.dynamic_mask.empty()) {
      std::filesystem::create_directories(root / "masks");
      Image8 m(f.dynamic_mask.width, f.dynamic_mask.height, 1, 0);
      for (std::size_t p = 0; p < m.data.size(); ++p) m.data[p] = f.dynamic_mask.data[p] ? 255 : 0;
      io::write_png8(root / "masks" / (stem + ".png"), m);
    }
    const Mat4 w2c = c.world_to_camera();
    json m = json::array();
    for (int k = 0; k < 16; ++k) m.push_back(w2c(k / 4, k % 4));
    j["frames"].push_back({{"file", stem + ".png"}, {"w2c", m}});
  }
  std::ofstream out(root / "cameras.json");
  if (!out) throw IoError("cannot write " + (root / "cameras.json").string());
  out << j.dump(1) << '\n';
}

}  // namespace splatsim::data
