#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "io_internal.h"
#include "worldguide/io.h"

namespace worldguide::io {

namespace internal {

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIoError, "short write to " + path.string());
}

}  // namespace internal

using internal::AppendBytes;
using internal::AppendLE;
using internal::FormatFail;
using internal::ReadFileBytes;
using internal::WriteFileBytes;

namespace {

// ---------------------------------------------------------------------------
// PLY

enum class PlyFormat { kAscii, kBinaryLE, kBinaryBE };

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

std::size_t PlyTypeSize(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8:
      return 1;
    case PlyType::kI16:
    case PlyType::kU16:
      return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32:
      return 4;
    case PlyType::kF64:
      return 8;
  }
  return 0;
}

bool ParsePlyType(const std::string& name, PlyType* type) {
  static const std::pair<const char*, PlyType> kNames[] = {
      {"char", PlyType::kI8},     {"int8", PlyType::kI8},
      {"uchar", PlyType::kU8},    {"uint8", PlyType::kU8},
      {"short", PlyType::kI16},   {"int16", PlyType::kI16},
      {"ushort", PlyType::kU16},  {"uint16", PlyType::kU16},
      {"int", PlyType::kI32},     {"int32", PlyType::kI32},
      {"uint", PlyType::kU32},    {"uint32", PlyType::kU32},
      {"float", PlyType::kF32},   {"float32", PlyType::kF32},
      {"double", PlyType::kF64},  {"float64", PlyType::kF64},
  };
  for (const auto& [n, t] : kNames) {
    if (name == n) {
      *type = t;
      return true;
    }
  }
  return false;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF32;
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<Color> colors;
  bool has_color = false;
  std::vector<std::vector<int>> faces;
};

class PlyCursor {
 public:
  PlyCursor(const fs::path& path, const std::vector<std::uint8_t>& bytes,
            std::size_t offset, PlyFormat format)
      : path_(path), bytes_(bytes), pos_(offset), format_(format) {}

  std::size_t pos() const { return pos_; }
  bool AtEnd() {
    if (format_ == PlyFormat::kAscii) SkipSpace();
    return pos_ >= bytes_.size();
  }

  // Returns false on end of data.
  bool Read(PlyType type, double* value) {
    if (format_ == PlyFormat::kAscii) return ReadAscii(value);
    const std::size_t size = PlyTypeSize(type);
    if (pos_ + size > bytes_.size()) return false;
    std::array<std::uint8_t, 8> raw{};
    std::memcpy(raw.data(), &bytes_[pos_], size);
    if (format_ == PlyFormat::kBinaryBE) std::reverse(raw.begin(), raw.begin() + size);
    pos_ += size;
    switch (type) {
      case PlyType::kI8: *value = Cast<std::int8_t>(raw); break;
      case PlyType::kU8: *value = Cast<std::uint8_t>(raw); break;
      case PlyType::kI16: *value = Cast<std::int16_t>(raw); break;
      case PlyType::kU16: *value = Cast<std::uint16_t>(raw); break;
      case PlyType::kI32: *value = Cast<std::int32_t>(raw); break;
      case PlyType::kU32: *value = Cast<std::uint32_t>(raw); break;
      case PlyType::kF32: *value = Cast<float>(raw); break;
      case PlyType::kF64: *value = Cast<double>(raw); break;
    }
    return true;
  }

 private:
  template <typename T>
  static T Cast(const std::array<std::uint8_t, 8>& raw) {
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

  void SkipSpace() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

  bool ReadAscii(double* value) {
    SkipSpace();
    if (pos_ >= bytes_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    const std::string token(bytes_.begin() + start, bytes_.begin() + pos_);
    char* end = nullptr;
    *value = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      FormatFail(path_, start, "invalid ascii number '" + token + "'");
    }
    return true;
  }

  const fs::path& path_;
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  PlyFormat format_;
};

PlyData ParsePly(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  std::size_t pos = 0;
  auto next_line = [&](std::size_t* line_start) -> std::string {
    *line_start = pos;
    if (pos >= bytes.size()) FormatFail(path, pos, "unexpected end of header");
    std::string line;
    while (pos < bytes.size() && bytes[pos] != '\n') {
      line.push_back(static_cast<char>(bytes[pos++]));
    }
    if (pos >= bytes.size()) FormatFail(path, pos, "unterminated header line");
    ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  std::size_t at = 0;
  if (next_line(&at) != "ply") FormatFail(path, 0, "missing 'ply' magic");

  PlyFormat format = PlyFormat::kBinaryLE;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string line = next_line(&at);
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword == "end_header") break;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") {
      continue;
    }
    if (keyword == "format") {
      std::string name, version;
      ss >> name >> version;
      if (name == "ascii") {
        format = PlyFormat::kAscii;
      } else if (name == "binary_little_endian") {
        format = PlyFormat::kBinaryLE;
      } else if (name == "binary_big_endian") {
        format = PlyFormat::kBinaryBE;
      } else {
        FormatFail(path, at, "unknown PLY format '" + name + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      PlyElement e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0) {
        FormatFail(path, at, "malformed element line '" + line + "'");
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (elements.empty()) FormatFail(path, at, "property before element");
      PlyProperty p;
      std::string type_name;
      ss >> type_name;
      if (type_name == "list") {
        std::string count_name, item_name;
        ss >> count_name >> item_name >> p.name;
        p.is_list = true;
        if (!ParsePlyType(count_name, &p.count_type) ||
            !ParsePlyType(item_name, &p.type)) {
          FormatFail(path, at, "unknown list property types in '" + line + "'");
        }
      } else {
        ss >> p.name;
        if (!ParsePlyType(type_name, &p.type)) {
          FormatFail(path, at, "unknown property type '" + type_name + "'");
        }
      }
      if (p.name.empty()) FormatFail(path, at, "property without a name");
      elements.back().properties.push_back(p);
    } else {
      FormatFail(path, at, "unexpected header keyword '" + keyword + "'");
    }
  }
  if (!have_format) FormatFail(path, pos, "header has no format line");

  PlyData data;
  PlyCursor cursor(path, bytes, pos, format);
  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, iface = -1;
    for (int k = 0; k < int(e.properties.size()); ++k) {
      const auto& n = e.properties[k].name;
      if (n == "x") ix = k;
      if (n == "y") iy = k;
      if (n == "z") iz = k;
      if (n == "red" || n == "r") ir = k;
      if (n == "green" || n == "g") ig = k;
      if (n == "blue" || n == "b") ib = k;
      if (n == "vertex_indices" || n == "vertex_index") iface = k;
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) {
      FormatFail(path, cursor.pos(), "vertex element lacks x/y/z properties");
    }
    const bool has_color = is_vertex && ir >= 0 && ig >= 0 && ib >= 0;
    if (is_vertex) {
      data.has_color = has_color;
      data.vertices.reserve(e.count);
    }

    std::vector<double> scalars(e.properties.size(), 0.0);
    std::vector<int> face;
    for (std::size_t row = 0; row < e.count; ++row) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        bool ok = true;
        if (!p.is_list) {
          ok = cursor.Read(p.type, &scalars[k]);
        } else {
          double n = 0;
          ok = cursor.Read(p.count_type, &n);
          if (ok && (n < 0 || n != std::floor(n))) {
            FormatFail(path, cursor.pos(), "invalid list length");
          }
          if (is_face && int(k) == iface) face.clear();
          for (std::size_t item = 0; ok && item < std::size_t(n); ++item) {
            double v = 0;
            ok = cursor.Read(p.type, &v);
            if (ok && is_face && int(k) == iface) face.push_back(int(v));
          }
        }
        if (!ok) {
          std::ostringstream why;
          why << "truncated PLY: element '" << e.name << "' expects "
              << e.count << " entries, found " << row;
          FormatFail(path, cursor.pos(), why.str());
        }
      }
      if (is_vertex) {
        data.vertices.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
        if (has_color) {
          const bool bytes_color = e.properties[ir].type == PlyType::kU8;
          const float div = bytes_color ? 255.f : 1.f;
          data.colors.emplace_back(float(scalars[ir]) / div,
                                   float(scalars[ig]) / div,
                                   float(scalars[ib]) / div);
        }
      } else if (is_face && iface >= 0) {
        data.faces.push_back(face);
      }
    }
  }
  return data;
}

}  // namespace

PointCloud ReadPly(const fs::path& path) {
  PlyData data = ParsePly(path);
  PointCloud cloud;
  cloud.positions = std::move(data.vertices);
  if (data.has_color) {
    cloud.colors = std::move(data.colors);
  } else {
    cloud.colors.assign(cloud.positions.size(), Color(0.5f, 0.5f, 0.5f));
  }
  return cloud;
}

void WritePly(const fs::path& path, const PointCloud& cloud) {
  if (cloud.colors.size() != cloud.positions.size()) {
    Fail(ErrorCode::kInvalidArgument, "cloud positions and colors differ");
  }
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << cloud.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         << "end_header\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + cloud.size() * 15);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) AppendLE(out, float(cloud.positions[i][c]));
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(cloud.colors[i][c], 0.f, 1.f);
      AppendLE(out, std::uint8_t(std::lround(v * 255.f)));
    }
  }
  WriteFileBytes(path, out);
}

namespace {

void FanTriangulate(const std::vector<int>& polygon,
                    std::vector<std::array<int, 3>>* faces) {
  for (std::size_t k = 2; k < polygon.size(); ++k) {
    faces->push_back({polygon[0], polygon[k - 1], polygon[k]});
  }
}

TriangleMesh ReadObj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        FormatFail(path, line_offset, "malformed vertex line");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> polygon;
      std::string token;
      while (ss >> token) {
        const int idx = std::atoi(token.substr(0, token.find('/')).c_str());
        if (idx == 0) FormatFail(path, line_offset, "invalid face index");
        polygon.push_back(idx > 0 ? idx - 1
                                  : int(mesh.vertices.size()) + idx);
      }
      if (polygon.size() < 3) {
        FormatFail(path, line_offset, "face with fewer than 3 vertices");
      }
      FanTriangulate(polygon, &mesh.faces);
    }
  }
  return mesh;
}

}  // namespace

TriangleMesh ReadMesh(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".obj") return ReadObj(path);
  if (ext != ".ply") {
    Fail(ErrorCode::kFormatError, "unsupported mesh format " + path.string());
  }
  PlyData data = ParsePly(path);
  TriangleMesh mesh;
  mesh.vertices = std::move(data.vertices);
  for (const auto& polygon : data.faces) FanTriangulate(polygon, &mesh.faces);
  return mesh;
}

void WriteMeshPly(const fs::path& path, const TriangleMesh& mesh) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << mesh.vertices.size() << "\n"
         << "property double x\nproperty double y\nproperty double z\n"
         << "element face " << mesh.faces.size() << "\n"
         << "property list uchar int vertex_indices\nend_header\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  for (const auto& v : mesh.vertices) {
    for (int c = 0; c < 3; ++c) AppendLE(out, v[c]);
  }
  for (const auto& f : mesh.faces) {
    AppendLE(out, std::uint8_t(3));
    for (int k : f) AppendLE(out, std::int32_t(k));
  }
  WriteFileBytes(path, out);
}

// ---------------------------------------------------------------------------
// PFM

DepthMap ReadPfm(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  std::size_t pos = 0;
  auto token = [&]() -> std::pair<std::string, std::size_t> {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) FormatFail(path, start, "truncated PFM header");
    return {std::string(bytes.begin() + start, bytes.begin() + pos), start};
  };

  const auto [magic, magic_at] = token();
  if (magic == "PF") {
    FormatFail(path, magic_at, "color PFM given where a depth map is expected");
  }
  if (magic != "Pf") FormatFail(path, magic_at, "bad PFM magic '" + magic + "'");
  const auto [w_str, w_at] = token();
  const auto [h_str, h_at] = token();
  const auto [scale_str, scale_at] = token();
  const int width = std::atoi(w_str.c_str());
  const int height = std::atoi(h_str.c_str());
  if (width < 1) FormatFail(path, w_at, "invalid width '" + w_str + "'");
  if (height < 1) FormatFail(path, h_at, "invalid height '" + h_str + "'");
  char* end = nullptr;
  const double scale = std::strtod(scale_str.c_str(), &end);
  if (*end != '\0' || scale == 0.0 || !std::isfinite(scale)) {
    FormatFail(path, scale_at, "invalid scale '" + scale_str + "'");
  }
  // Exactly one whitespace byte separates the header from the raster.
  ++pos;
  const bool big_endian = scale > 0;
  const std::size_t needed = std::size_t(width) * height * 4;
  if (bytes.size() < pos + needed) {
    std::ostringstream why;
    why << "raster needs " << needed << " bytes, file has "
        << (bytes.size() > pos ? bytes.size() - pos : 0);
    FormatFail(path, pos, why.str());
  }

  DepthMap depth(width, height);
  for (int row = 0; row < height; ++row) {
    const int v = height - 1 - row;
    for (int u = 0; u < width; ++u) {
      std::array<std::uint8_t, 4> raw;
      std::memcpy(raw.data(), &bytes[pos + (std::size_t(row) * width + u) * 4],
                  4);
      if (big_endian) std::reverse(raw.begin(), raw.end());
      float value;
      std::memcpy(&value, raw.data(), 4);
      depth.Set(u, v, value);
    }
  }
  return depth;
}

void WritePfm(const fs::path& path, int width, int height,
              std::span<const double> values) {
  if (values.size() != std::size_t(width) * height) {
    Fail(ErrorCode::kDimensionMismatch, "PFM values do not match size");
  }
  std::ostringstream header;
  header << "Pf\n" << width << " " << height << "\n-1.0\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + values.size() * 4);
  for (int row = 0; row < height; ++row) {
    const int v = height - 1 - row;
    for (int u = 0; u < width; ++u) {
      AppendLE(out, float(values[std::size_t(v) * width + u]));
    }
  }
  WriteFileBytes(path, out);
}

void WritePfm(const fs::path& path, const DepthMap& depth) {
  std::vector<double> values(depth.values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = depth.valid[i] ? depth.values[i] : 0.0;
  }
  WritePfm(path, depth.width, depth.height, values);
}

// ---------------------------------------------------------------------------
// NPY

void WriteNpyFloat32(const fs::path& path, std::span<const std::size_t> shape,
                     std::span<const double> values) {
  std::size_t total = 1;
  std::ostringstream dims;
  dims << "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    total *= shape[k];
    dims << shape[k] << (shape.size() == 1 || k + 1 < shape.size() ? "," : "");
    if (k + 1 < shape.size()) dims << " ";
  }
  dims << ")";
  if (total != values.size()) {
    Fail(ErrorCode::kDimensionMismatch, "npy shape does not match values");
  }
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': " +
                     dims.str() + ", }";
  // Magic (6) + version (2) + length (2) + dict + newline, padded to 64.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');

  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  AppendLE(out, std::uint16_t(dict.size()));
  AppendBytes(out, dict.data(), dict.size());
  out.reserve(out.size() + values.size() * 4);
  for (double v : values) AppendLE(out, float(v));
  WriteFileBytes(path, out);
}

std::vector<float> ReadNpyFloat32(const fs::path& path,
                                  std::vector<std::size_t>* shape) {
  const auto bytes = ReadFileBytes(path);
  if (bytes.size() < 10 || bytes[0] != 0x93 ||
      std::string(bytes.begin() + 1, bytes.begin() + 6) != "NUMPY") {
    FormatFail(path, 0, "missing NPY magic");
  }
  if (bytes[6] != 1) FormatFail(path, 6, "only NPY version 1.x is supported");
  const std::size_t header_len = bytes[8] | (std::size_t(bytes[9]) << 8);
  if (bytes.size() < 10 + header_len) FormatFail(path, 10, "truncated header");
  const std::string header(bytes.begin() + 10,
                           bytes.begin() + 10 + header_len);
  if (header.find("'<f4'") == std::string::npos) {
    FormatFail(path, 10, "expected little-endian float32 data");
  }
  if (header.find("'fortran_order': False") == std::string::npos) {
    FormatFail(path, 10, "fortran order is not supported");
  }
  const auto open = header.find('(', header.find("'shape'"));
  const auto close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos) {
    FormatFail(path, 10, "shape tuple not found");
  }
  std::vector<std::size_t> dims;
  std::istringstream ss(header.substr(open + 1, close - open - 1));
  std::string item;
  std::size_t total = 1;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" ") == std::string::npos) continue;
    dims.push_back(std::stoull(item));
    total *= dims.back();
  }
  const std::size_t data_at = 10 + header_len;
  if (bytes.size() < data_at + total * 4) {
    FormatFail(path, data_at, "truncated NPY payload");
  }
  std::vector<float> values(total);
  std::memcpy(values.data(), &bytes[data_at], total * 4);
  if (shape) *shape = dims;
  return values;
}

// ---------------------------------------------------------------------------
// Packed guidance stream

PackedVideoWriter::PackedVideoWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) Fail(ErrorCode::kIoError, "cannot write " + path.string());
  out_.write("WGV1", 4);
}

void PackedVideoWriter::Append(const Image& frame) {
  std::vector<std::uint8_t> header;
  AppendLE(header, std::uint32_t(frame.height));
  AppendLE(header, std::uint32_t(frame.width));
  out_.write(reinterpret_cast<const char*>(header.data()), 8);
  out_.write(reinterpret_cast<const char*>(frame.rgb.data()),
             static_cast<std::streamsize>(frame.rgb.size() * sizeof(float)));
  if (!out_) Fail(ErrorCode::kIoError, "short write to " + path_.string());
}

void PackedVideoWriter::Close() {
  out_.close();
  if (!out_) Fail(ErrorCode::kIoError, "cannot finish " + path_.string());
}

void WritePackedVideo(const fs::path& path, const GuidanceVideo& video) {
  PackedVideoWriter writer(path);
  for (const auto& frame : video.frames) writer.Append(frame.color);
  writer.Close();
}

std::vector<Image> ReadPackedVideo(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != "WGV1") {
    FormatFail(path, 0, "missing WGV1 magic");
  }
  std::vector<Image> frames;
  std::size_t pos = 4;
  while (pos < bytes.size()) {
    if (pos + 8 > bytes.size()) FormatFail(path, pos, "truncated frame header");
    std::uint32_t h, w;
    std::memcpy(&h, &bytes[pos], 4);
    std::memcpy(&w, &bytes[pos + 4], 4);
    pos += 8;
    const std::size_t payload = std::size_t(h) * w * 3 * 4;
    if (pos + payload > bytes.size()) {
      FormatFail(path, pos, "truncated frame " + std::to_string(frames.size()));
    }
    Image img(static_cast<int>(w), static_cast<int>(h));
    std::memcpy(img.rgb.data(), &bytes[pos], payload);
    pos += payload;
    frames.push_back(std::move(img));
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Hashing

std::string Sha256Bytes(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    Fail(ErrorCode::kIoError, "SHA-256 computation failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 15]);
  }
  return hex;
}

std::string Sha256File(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  return Sha256Bytes(bytes);
}

FrameFiles WriteRenderFrame(const fs::path& dir, const std::string& stem,
                            const RenderFrame& frame) {
  FrameFiles files{dir / (stem + "_color.png"), dir / (stem + "_depth.pfm"),
                   dir / (stem + "_mask.png")};
  WritePng(files.color, frame.color);
  WritePfm(files.depth, frame.width, frame.height, frame.depth);
  WriteMaskPng(files.mask, frame.width, frame.height, frame.mask);
  return files;
}

}  // namespace worldguide::io
