#include "staticmap/io_formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "staticmap/errors.hpp"

namespace staticmap {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(float) == 4);

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

template <typename T>
T load_le(const char* bytes) {
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&value);
    std::reverse(b, b + sizeof(T));
  }
  return value;
}

template <typename T>
void store_le(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(bytes, sizeof(T));
}

FrameId frame_from_stem(const fs::path& path) {
  const std::string stem = path.stem().string();
  if (stem.empty() || stem.size() > 9 || !std::all_of(stem.begin(), stem.end(), ::isdigit)) return 0;
  return static_cast<FrameId>(std::stoul(stem));
}

double normalize_yaw(double yaw) { return wrap_angle(yaw); }

}  // namespace

OrientedBox DetectionRecord::to_box() const {
  OrientedBox box;
  box.center = center;
  box.size = size;
  box.yaw = normalize_yaw(yaw);
  box.class_label = class_label;
  box.score = score;
  return box;
}

DetectionRecord DetectionRecord::from_box(FrameId frame_id, const OrientedBox& box) {
  return {frame_id, box.class_label, box.score, box.center, box.size, box.yaw};
}

PointCloud read_scan_binary(const fs::path& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() % 16 != 0) {
    throw MalformedFile(path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.frame_id = frame_from_stem(path);
  cloud.has_intensity = true;
  const std::size_t n = bytes.size() / 16;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = bytes.data() + 16 * i;
    const float x = load_le<float>(rec);
    const float y = load_le<float>(rec + 4);
    const float z = load_le<float>(rec + 8);
    const float intensity = load_le<float>(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(intensity)) {
      throw MalformedFile(path.string() + ": non-finite value in record " + std::to_string(i));
    }
    cloud.points.push_back({x, y, z, intensity});
  }
  return cloud;
}

void write_scan_binary(const PointCloud& cloud, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& p : cloud.points) {
    store_le(out, static_cast<float>(p.x));
    store_le(out, static_cast<float>(p.y));
    store_le(out, static_cast<float>(p.z));
    store_le(out, p.intensity);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<fs::path> list_scan_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("scan directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string scan_file_name(FrameId frame_id) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << frame_id << ".bin";
  return ss.str();
}

Trajectory read_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Trajectory trajectory;
  std::string line;
  std::size_t line_no = 0;
  FrameId frame = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<double> values;
    std::string token;
    while (ss >> token) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw MalformedFile(path.string() + ":" + std::to_string(line_no) + ": bad number '" + token + "'");
      }
      if (!std::isfinite(v)) {
        throw MalformedFile(path.string() + ":" + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
    }
    if (values.size() != 12) {
      throw MalformedFile(path.string() + ":" + std::to_string(line_no) + ": expected 12 values, got " +
                          std::to_string(values.size()));
    }
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = values[4 * row + col];
      t[row] = values[4 * row + 3];
    }
    if (std::abs(r.determinant() - 1.0) > 1e-2) {
      throw MalformedFile(path.string() + ":" + std::to_string(line_no) + ": rotation determinant is not 1");
    }
    trajectory.push_back(frame++, PoseSE3(r, t));
  }
  return trajectory;
}

void write_poses(const Trajectory& trajectory, const fs::path& path) {
  auto out = open_out(path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& entry : trajectory) {
    const auto& r = entry.pose.rotation();
    const auto& t = entry.pose.translation();
    for (int row = 0; row < 3; ++row) {
      out << r(row, 0) << ' ' << r(row, 1) << ' ' << r(row, 2) << ' ' << t[row];
      out << (row < 2 ? ' ' : '\n');
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DetectionMap read_detections(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  DetectionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    DetectionRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto frame = j.at("frame").get<std::int64_t>();
      if (frame < 0 || frame > std::numeric_limits<FrameId>::max()) throw MalformedFile(where + ": bad frame id");
      rec.frame_id = static_cast<FrameId>(frame);
      rec.class_label = j.at("class").get<std::string>();
      rec.score = j.at("score").get<double>();
      const auto center = j.at("center").get<std::vector<double>>();
      const auto size = j.at("size").get<std::vector<double>>();
      if (center.size() != 3 || size.size() != 3) throw MalformedFile(where + ": center and size need 3 values");
      rec.center = {center[0], center[1], center[2]};
      rec.size = {size[0], size[1], size[2]};
      rec.yaw = j.at("yaw").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw MalformedFile(where + ": " + e.what());
    }
    if (!rec.center.allFinite() || !rec.size.allFinite() || !std::isfinite(rec.yaw) || !std::isfinite(rec.score)) {
      throw MalformedFile(where + ": non-finite value");
    }
    if (!(rec.size.array() > 0.0).all()) throw ValueError(where + ": box sizes must be positive");
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) throw ValueError(where + ": score must lie in [0, 1]");
    rec.yaw = normalize_yaw(rec.yaw);
    out[rec.frame_id].push_back(std::move(rec));
  }
  return out;
}

void write_detections(const DetectionMap& detections, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& [frame, records] : detections) {
    for (const auto& rec : records) {
      nlohmann::json j;
      j["frame"] = frame;
      j["class"] = rec.class_label;
      j["score"] = rec.score;
      j["center"] = {rec.center.x(), rec.center.y(), rec.center.z()};
      j["size"] = {rec.size.x(), rec.size.y(), rec.size.z()};
      j["yaw"] = rec.yaw;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_cloud_ply(const PointCloud& cloud, const fs::path& path) {
  auto out = open_out(path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_intensity) out << "property float intensity\n";
  out << "end_header\n";
  for (const auto& p : cloud.points) {
    store_le(out, static_cast<float>(p.x));
    store_le(out, static_cast<float>(p.y));
    store_le(out, static_cast<float>(p.z));
    if (cloud.has_intensity) store_le(out, p.intensity);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  std::size_t offset = 0;
};

std::size_t ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

double ply_load(const char* p, const std::string& type) {
  if (type == "float" || type == "float32") return load_le<float>(p);
  if (type == "double" || type == "float64") return load_le<double>(p);
  if (type == "char" || type == "int8") return load_le<std::int8_t>(p);
  if (type == "uchar" || type == "uint8") return load_le<std::uint8_t>(p);
  if (type == "short" || type == "int16") return load_le<std::int16_t>(p);
  if (type == "ushort" || type == "uint16") return load_le<std::uint16_t>(p);
  if (type == "int" || type == "int32") return load_le<std::int32_t>(p);
  return load_le<std::uint32_t>(p);
}

}  // namespace

PointCloud read_cloud_ply(const fs::path& path) {
  const std::string bytes = read_all(path);
  const std::string where = path.string();
  const auto header_end = bytes.find("end_header\n");
  if (bytes.rfind("ply\n", 0) != 0 || header_end == std::string::npos) throw MalformedFile(where + ": not a PLY file");

  std::istringstream header(bytes.substr(0, header_end));
  std::string line;
  bool seen_format = false;
  bool in_vertex = false;
  bool vertex_done = false;
  std::size_t vertex_count = 0;
  std::size_t stride = 0;
  std::vector<PlyProperty> props;
  std::getline(header, line);  // "ply"
  while (std::getline(header, line)) {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "binary_little_endian") throw MalformedFile(where + ": unsupported PLY format " + fmt);
      seen_format = true;
    } else if (kw == "element") {
      std::string name;
      long long count = -1;
      ss >> name >> count;
      if (in_vertex) vertex_done = true;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (vertex_done || count < 0) throw MalformedFile(where + ": bad vertex element");
        vertex_count = static_cast<std::size_t>(count);
      } else if (!vertex_done) {
        throw MalformedFile(where + ": elements before vertex are not supported");
      }
    } else if (kw == "property" && in_vertex) {
      PlyProperty prop;
      ss >> prop.type >> prop.name;
      const std::size_t sz = ply_type_size(prop.type);
      if (sz == 0) throw MalformedFile(where + ": unsupported vertex property type " + prop.type);
      prop.offset = stride;
      stride += sz;
      props.push_back(prop);
    }
  }
  if (!seen_format) throw MalformedFile(where + ": missing format line");

  auto find = [&](const std::string& name) -> const PlyProperty* {
    for (const auto& p : props)
      if (p.name == name) return &p;
    return nullptr;
  };
  const PlyProperty* px = find("x");
  const PlyProperty* py = find("y");
  const PlyProperty* pz = find("z");
  const PlyProperty* pi = find("intensity");
  if (!px || !py || !pz) throw MalformedFile(where + ": vertex element lacks x/y/z");

  const std::size_t body = header_end + std::string("end_header\n").size();
  if (stride == 0 || (bytes.size() - body) / stride < vertex_count) {
    throw MalformedFile(where + ": truncated vertex data");
  }
  PointCloud cloud;
  cloud.frame_id = frame_from_stem(path);
  cloud.has_intensity = pi != nullptr;
  cloud.points.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const char* rec = bytes.data() + body + i * stride;
    Point3 p{ply_load(rec + px->offset, px->type), ply_load(rec + py->offset, py->type),
             ply_load(rec + pz->offset, pz->type), pi ? static_cast<float>(ply_load(rec + pi->offset, pi->type)) : 0.0f};
    if (!p.finite()) throw MalformedFile(where + ": non-finite value in vertex " + std::to_string(i));
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud quantize_to_float32(const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) {
    p.x = static_cast<float>(p.x);
    p.y = static_cast<float>(p.y);
    p.z = static_cast<float>(p.z);
  }
  return out;
}

}  // namespace staticmap
