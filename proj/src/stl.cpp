#include "bellow/stl.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <vector>

#include "bellow/error.hpp"

namespace bellow {

namespace {

static_assert(std::endian::native == std::endian::little, "STL I/O assumes a little-endian host");

void put_f32(char*& p, double v) {
  const float f = static_cast<float>(v);
  std::memcpy(p, &f, 4);
  p += 4;
}

float get_f32(const char*& p) {
  float f;
  std::memcpy(&f, p, 4);
  p += 4;
  return f;
}

}  // namespace

std::size_t stl_size(std::size_t triangles) { return 84 + 50 * triangles; }

void write_stl(std::ostream& os, const TriangleMesh& mesh) {
  std::array<char, 80> header{};
  const char tag[] = "bellow binary STL, units mm";
  std::memcpy(header.data(), tag, sizeof(tag) - 1);
  os.write(header.data(), header.size());
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  std::vector<char> buf(50 * mesh.triangles.size());
  char* p = buf.data();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Eigen::Vector3d n = mesh.normal(i);
    for (int k = 0; k < 3; ++k) put_f32(p, n[k]);
    for (auto v : mesh.triangles[i]) {
      for (int k = 0; k < 3; ++k) put_f32(p, mesh.vertices[v][k]);
    }
    *p++ = 0;
    *p++ = 0;
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("failed writing STL");
}

void write_stl(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  write_stl(os, mesh);
}

void write_stl_ascii(std::ostream& os, const TriangleMesh& mesh, const std::string& name) {
  os << "solid " << name << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Eigen::Vector3d n = mesh.normal(i);
    os << "  facet normal " << n.x() << ' ' << n.y() << ' ' << n.z() << "\n    outer loop\n";
    for (auto v : mesh.triangles[i]) {
      const auto& p = mesh.vertices[v];
      os << "      vertex " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    os << "    endloop\n  endfacet\n";
  }
  os << "endsolid " << name << '\n';
  if (!os) throw IoError("failed writing ASCII STL");
}

TriangleMesh read_stl(std::istream& is) {
  std::array<char, 84> head{};
  if (!is.read(head.data(), head.size())) throw FormatError("STL shorter than its 84-byte header");
  std::uint32_t count;
  std::memcpy(&count, head.data() + 80, 4);
  std::vector<char> buf(50 * static_cast<std::size_t>(count));
  if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
    throw FormatError("STL truncated: header promises " + std::to_string(count) + " triangles");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("STL has trailing bytes after its triangles");
  TriangleMesh mesh;
  mesh.vertices.reserve(3 * count);
  mesh.triangles.reserve(count);
  const char* p = buf.data();
  for (std::uint32_t i = 0; i < count; ++i) {
    p += 12;  // normal, recomputed on demand
    std::array<std::uint32_t, 3> tri{};
    for (int v = 0; v < 3; ++v) {
      const float x = get_f32(p), y = get_f32(p), z = get_f32(p);
      tri[v] = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.emplace_back(x, y, z);
    }
    p += 2;
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

TriangleMesh read_stl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read '" + path + "'");
  return read_stl(is);
}

}  // namespace bellow
