#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blab/grid.hpp"

namespace blab {

// Binary field dump. 64-byte little-endian header:
//   0  char[4]  "BLAB"
//   4  u32      format version
//   8  u32      n
//   12 u32      Nt   (number of time intervals; Nt + 1 samples, 0 for a single slice)
//   16 u32      Nx
//   20 f64      T
//   28 f64      L
//   36 u32      number of stored components
//   40 u64      hash of the configuration that produced the dump (0: none)
//   48 ..63     zero
// followed by the components one after another, each row-major (t slowest, then x1, x2).
constexpr std::uint32_t kDumpVersion = 1;

struct DumpHeader {
    std::uint32_t version = kDumpVersion;
    std::uint32_t n = 1, Nt = 0, Nx = 0, ncomp = 1;
    double T = 0.0, L = 0.0;
    std::uint64_t config_hash = 0;
};

void write_dump(const std::string& path, const DumpHeader& h, const std::vector<Field>& comps);
std::vector<Field> read_dump(const std::string& path, DumpHeader& h);

void write_slab(const std::string& path, const SpacetimeGrid& g, const std::vector<Field>& comps,
                std::uint64_t config_hash = 0);
void write_slice(const std::string& path, const SpatialGrid& g, const std::vector<Field>& comps, double t = 0.0,
                 std::uint64_t config_hash = 0);

// 64-bit FNV-1a, used for configuration hashes (stable across platforms).
std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace blab
