#include "distillflow/flow_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "distillflow/image_io.hpp"

namespace distillflow {

namespace {

constexpr char kFloMagic[4] = {'P', 'I', 'E', 'H'};
constexpr std::int32_t kMaxFloDimension = 1 << 16;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
    if (!flow.all_finite()) throw InvalidArgument("write_flo: non-finite flow");
    std::vector<unsigned char> bytes(kFloMagic, kFloMagic + 4);
    bytes.reserve(12 + flow.data().size() * 4);
    put_u32(bytes, static_cast<std::uint32_t>(flow.width()));
    put_u32(bytes, static_cast<std::uint32_t>(flow.height()));
    for (double v : flow.data()) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() < 12) throw IoError("truncated .flo header: " + path.string());
    if (std::memcmp(bytes.data(), kFloMagic, 4) != 0) throw IoError("bad .flo magic: " + path.string());
    const auto width = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
    const auto height = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
    if (width < 1 || height < 1 || width > kMaxFloDimension || height > kMaxFloDimension) {
        throw IoError("implausible .flo dimensions in " + path.string());
    }
    const std::uint64_t payload = static_cast<std::uint64_t>(width) * height * 2 * 4;
    if (bytes.size() - 12 < payload) throw IoError("truncated .flo payload: " + path.string());

    FlowField flow(height, width);
    auto data = flow.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(get_u32(bytes.data() + 12 + 4 * i));
    }
    return flow;
}

void write_mask_pgm(const std::filesystem::path& path, const MaskMap& mask) {
    write_image(path, mask.as_image());
}

MaskMap read_mask_pgm(const std::filesystem::path& path) {
    Image img = read_image(path);
    if (img.channels() != 1) throw IoError("mask file is not single-channel: " + path.string());
    return MaskMap(std::move(img));
}

void write_disparity_pgm16(const std::filesystem::path& path, const ScalarMap& disparity) {
    std::vector<unsigned char> raster;
    raster.reserve(disparity.data().size() * 2);
    for (double d : disparity.data()) {
        const double scaled = std::clamp(std::round(d * 256.0), 0.0, 65535.0);
        const auto v = static_cast<std::uint16_t>(scaled);
        raster.push_back(static_cast<unsigned char>(v >> 8));
        raster.push_back(static_cast<unsigned char>(v & 0xFF));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << disparity.width() << ' ' << disparity.height() << "\n65535\n";
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

ScalarMap read_disparity_pgm16(const std::filesystem::path& path) {
    Image img = read_image(path);
    if (img.channels() != 1) throw IoError("disparity file is not single-channel: " + path.string());
    // read_image normalizes by maxval (65535); undo that and the 256 scale.
    for (double& v : img.data()) v = std::round(v * 65535.0) / 256.0;
    return ScalarMap(std::move(img));
}

}  // namespace distillflow
