#include "splatsim/mesh/triangle_mesh.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "splatsim/common/error.hpp"

namespace splatsim::mesh {

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

Vec3 TriangleMesh::centroid(std::size_t f) const {
  const auto& t = faces[f];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

void TriangleMesh::compute_normals() {
  normals.assign(vertices.size(), Vec3::Zero());
  for (const auto& t : faces) {
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    for (const auto v : t) normals[v] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    if (len > 0) n /= len;
  }
}

TriangleMesh TriangleMesh::subset(const std::vector<std::uint8_t>& keep) const {
  TriangleMesh out;
  std::vector<std::int64_t> remap(vertices.size(), -1);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (!keep[f]) continue;
    Face nf;
    for (int k = 0; k < 3; ++k) {
      const auto v = faces[f][k];
      if (remap[v] < 0) {
        remap[v] = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(vertices[v]);
        if (normals.size() == vertices.size()) out.normals.push_back(normals[v]);
      }
      nf[k] = static_cast<std::uint32_t>(remap[v]);
    }
    out.faces.push_back(nf);
  }
  if (out.normals.size() != out.vertices.size()) out.compute_normals();
  return out;
}

void TriangleMesh::remove_degenerate(double min_area) {
  std::vector<std::uint8_t> keep(faces.size(), 1);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || !(face_area(f) > min_area)) keep[f] = 0;
  }
  *this = subset(keep);
}

void TriangleMesh::append(const TriangleMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  const bool had_normals = normals.size() == vertices.size();
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (auto f : other.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  if (had_normals && other.normals.size() == other.vertices.size())
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  else
    compute_normals();
}

void TriangleMesh::transform(const Mat3& r, const Vec3& t) {
  for (auto& v : vertices) v = r * v + t;
  for (auto& n : normals) n = r * n;
}

long TriangleMesh::euler_characteristic() const {
  std::unordered_set<std::uint64_t> edges;
  std::vector<std::uint8_t> used(vertices.size(), 0);
  for (const auto& t : faces)
    for (int k = 0; k < 3; ++k) {
      used[t[k]] = 1;
      const std::uint64_t a = std::min(t[k], t[(k + 1) % 3]), b = std::max(t[k], t[(k + 1) % 3]);
      edges.insert((a << 32) | b);
    }
  const long v = std::count(used.begin(), used.end(), 1);
  return v - static_cast<long>(edges.size()) + static_cast<long>(faces.size());
}

void TriangleMesh::validate() const {
  for (const auto& v : vertices)
    if (!v.allFinite()) throw InvalidParameter("mesh has a non-finite vertex");
  for (const auto& t : faces)
    for (const auto i : t)
      if (i >= vertices.size()) throw InvalidParameter("mesh face index out of range");
  if (!normals.empty() && normals.size() != vertices.size())
    throw InvalidParameter("mesh normal count differs from vertex count");
}

void write_obj(const std::string& path, const TriangleMesh& m) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open mesh for writing: " + path);
  f.precision(9);
  f << "# splatsim mesh: " << m.vertices.size() << " vertices, " << m.faces.size() << " faces\n";
  for (const auto& v : m.vertices) f << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  const bool with_normals = m.normals.size() == m.vertices.size();
  if (with_normals)
    for (const auto& n : m.normals) f << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  for (const auto& t : m.faces) {
    f << 'f';
    for (const auto i : t) {
      f << ' ' << i + 1;
      if (with_normals) f << "//" << i + 1;
    }
    f << '\n';
  }
  if (!f) throw IoError("failed writing mesh: " + path);
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open mesh: " + path);
  TriangleMesh m;
  std::vector<Vec3> vn;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v" || tag == "vn") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z()))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad " + tag + " record");
      (tag == "v" ? m.vertices : vn).push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ss >> tok) {
        const long i = std::stol(tok.substr(0, tok.find('/')));
        const long resolved = i < 0 ? static_cast<long>(m.vertices.size()) + i : i - 1;
        if (resolved < 0) throw IoError(path + ":" + std::to_string(lineno) + ": bad face index");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) throw IoError(path + ":" + std::to_string(lineno) + ": face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) m.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  if (vn.size() == m.vertices.size())
    m.normals = vn;
  else
    m.compute_normals();
  m.validate();
  return m;
}

namespace {

constexpr const char* kMeshFormat = "splatsim-mesh";
static_assert(std::endian::native == std::endian::little, "mesh IO assumes a little-endian host");

}  // namespace

void write_mesh_binary(const std::string& path, const TriangleMesh& in) {
  TriangleMesh m = in;
  if (m.normals.size() != m.vertices.size()) m.compute_normals();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open mesh for writing: " + path);
  const nlohmann::json header = {{"format", kMeshFormat},
                                 {"version", 1},
                                 {"vertices", m.vertices.size()},
                                 {"faces", m.faces.size()}};
  f << header.dump() << '\n';
  for (const auto& v : m.vertices) f.write(reinterpret_cast<const char*>(v.data()), 3 * sizeof(double));
  for (const auto& n : m.normals) f.write(reinterpret_cast<const char*>(n.data()), 3 * sizeof(double));
  for (const auto& t : m.faces) f.write(reinterpret_cast<const char*>(t.data()), 3 * sizeof(std::uint32_t));
  if (!f) throw IoError("failed writing mesh: " + path);
}

TriangleMesh read_mesh_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open mesh: " + path);
  std::string line;
  std::getline(f, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw IoError("mesh sidecar header is not JSON: " + path);
  }
  if (header.value("format", "") != kMeshFormat || header.value("version", 0) != 1)
    throw IoError("not a splatsim mesh sidecar: " + path);
  TriangleMesh m;
  m.vertices.resize(header.value("vertices", std::size_t{0}));
  m.normals.resize(m.vertices.size());
  m.faces.resize(header.value("faces", std::size_t{0}));
  for (auto& v : m.vertices) f.read(reinterpret_cast<char*>(v.data()), 3 * sizeof(double));
  for (auto& n : m.normals) f.read(reinterpret_cast<char*>(n.data()), 3 * sizeof(double));
  for (auto& t : m.faces) f.read(reinterpret_cast<char*>(t.data()), 3 * sizeof(std::uint32_t));
  if (!f) throw IoError("mesh sidecar truncated: " + path);
  m.validate();
  return m;
}

TriangleMesh load_mesh(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".obj" ? read_obj(path) : read_mesh_binary(path);
}

}  // namespace splatsim::mesh
