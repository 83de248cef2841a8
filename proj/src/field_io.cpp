#include "blab/field_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <iomanip>

namespace blab {

namespace {

template <class T>
void put(std::array<unsigned char, 64>& buf, std::size_t off, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[off + i] = b[i];  // host is little-endian (checked below)
}

template <class T>
T get(const std::array<unsigned char, 64>& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

bool little_endian() {
    const std::uint16_t x = 1;
    unsigned char c;
    std::memcpy(&c, &x, 1);
    return c == 1;
}

std::size_t samples(const DumpHeader& h) {
    std::size_t s = h.n == 1 ? h.Nx : std::size_t(h.Nx) * h.Nx;
    return s * (std::size_t(h.Nt) + 1);
}

}  // namespace

void write_dump(const std::string& path, const DumpHeader& h, const std::vector<Field>& comps) {
    if (!little_endian()) throw Error("binary dumps require a little-endian host");
    if (comps.size() != h.ncomp) throw Error("dump component count mismatch");
    const std::size_t m = samples(h);
    for (const auto& c : comps)
        if (c.size() != m) throw Error("dump component has wrong size");
    std::array<unsigned char, 64> buf{};
    std::memcpy(buf.data(), "BLAB", 4);
    put(buf, 4, h.version);
    put(buf, 8, h.n);
    put(buf, 12, h.Nt);
    put(buf, 16, h.Nx);
    put(buf, 20, h.T);
    put(buf, 28, h.L);
    put(buf, 36, h.ncomp);
    put(buf, 40, h.config_hash);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(buf.data()), 64);
    for (const auto& c : comps) os.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * 8));
    if (!os) throw Error("write failed: " + path);
}

std::vector<Field> read_dump(const std::string& path, DumpHeader& h) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    std::array<unsigned char, 64> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), 64);
    if (!is || std::memcmp(buf.data(), "BLAB", 4) != 0) throw Error(path + ": not a field dump");
    h.version = get<std::uint32_t>(buf, 4);
    if (h.version != kDumpVersion) throw Error(path + ": unsupported dump version");
    h.n = get<std::uint32_t>(buf, 8);
    h.Nt = get<std::uint32_t>(buf, 12);
    h.Nx = get<std::uint32_t>(buf, 16);
    h.T = get<double>(buf, 20);
    h.L = get<double>(buf, 28);
    h.ncomp = get<std::uint32_t>(buf, 36);
    h.config_hash = get<std::uint64_t>(buf, 40);
    const std::size_t m = samples(h);
    std::vector<Field> comps(h.ncomp, Field(m));
    for (auto& c : comps) is.read(reinterpret_cast<char*>(c.data()), std::streamsize(m * 8));
    if (!is) throw Error(path + ": truncated dump");
    return comps;
}

void write_slab(const std::string& path, const SpacetimeGrid& g, const std::vector<Field>& comps,
                std::uint64_t config_hash) {
    DumpHeader h;
    h.config_hash = config_hash;
    h.n = std::uint32_t(g.n);
    h.Nt = std::uint32_t(g.Nt);
    h.Nx = std::uint32_t(g.Nx);
    h.T = g.T;
    h.L = g.L;
    h.ncomp = std::uint32_t(comps.size());
    write_dump(path, h, comps);
}

void write_slice(const std::string& path, const SpatialGrid& g, const std::vector<Field>& comps, double t,
                 std::uint64_t config_hash) {
    DumpHeader h;
    h.config_hash = config_hash;
    h.n = std::uint32_t(g.n);
    h.Nt = 0;
    h.Nx = std::uint32_t(g.Nx);
    h.T = t;
    h.L = g.L;
    h.ncomp = std::uint32_t(comps.size());
    write_dump(path, h, comps);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

}  // namespace blab
