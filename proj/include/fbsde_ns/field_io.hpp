#pragma once

#include <filesystem>
#include <iosfwd>

#include "fbsde_ns/grid.hpp"

namespace fbsde {

// NSF1 binary field format, all values little-endian:
//   "NSF1" | u32 d | u32 n | f64 L | f64 time_tag | d * n^d f64 samples (component-major)
// A missing time tag is written as NaN.

void write_nsf1(std::ostream& os, const VectorField& v);
VectorField read_nsf1(std::istream& is);
void write_nsf1(const std::filesystem::path& path, const VectorField& v);
VectorField read_nsf1(const std::filesystem::path& path);

/// CSV with one row per node: i0,...,i_{d-1},v0,...,v_{d-1}.
void write_csv(std::ostream& os, const VectorField& v);

} // namespace fbsde
