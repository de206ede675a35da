#pragma once

#include <iosfwd>
#include <string>

#include "bellow/cad.hpp"

namespace bellow {

// Binary little-endian STL: 80-byte header, uint32 count, then per triangle
// the unit normal and three vertices as float32 plus a zero uint16.
void write_stl(std::ostream& os, const TriangleMesh& mesh);
void write_stl(const std::string& path, const TriangleMesh& mesh);
void write_stl_ascii(std::ostream& os, const TriangleMesh& mesh, const std::string& name = "bellow");

// Reads binary STL; vertices are not merged. Throws FormatError on size
// mismatch or truncation.
TriangleMesh read_stl(std::istream& is);
TriangleMesh read_stl(const std::string& path);

std::size_t stl_size(std::size_t triangles);

}  // namespace bellow
