#include "graspmap/belief_map_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "graspmap/image.hpp"

namespace graspmap {

namespace {

constexpr char kMagic[4] = {'G', 'B', 'M', '1'};

static_assert(std::endian::native == std::endian::little,
              "belief map io assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

} // namespace

void write_belief_map(const std::string& path, const BeliefMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_belief_map: cannot open " + path);
    out.write(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(map.width()));
    put_u32(out, static_cast<std::uint32_t>(map.height()));
    put_u32(out, 0);  // reserved
    std::vector<float> buf(map.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = static_cast<float>(map.values()[i]);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write_belief_map: write failed for " + path);
}

BeliefMap read_belief_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_belief_map: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("read_belief_map: bad magic in " + path);
    }
    const std::uint32_t width = get_u32(in);
    const std::uint32_t height = get_u32(in);
    get_u32(in);  // reserved
    if (!in || width == 0 || height == 0 || width > 1u << 16 || height > 1u << 16) {
        throw IoError("read_belief_map: bad header in " + path);
    }
    BeliefMap map(static_cast<int>(width), static_cast<int>(height));
    std::vector<float> buf(map.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("read_belief_map: truncated file " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) {
        map.values()[i] = buf[i];
    }
    return map;
}

void write_belief_map_png(const std::string& path, const BeliefMap& map) {
    std::vector<std::uint8_t> gray(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, map.values()[i]));
        gray[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    write_png_gray(path, gray, map.width(), map.height());
}

} // namespace graspmap
