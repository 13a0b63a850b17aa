#include "distillflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "distillflow/errors.hpp"

namespace distillflow {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Image read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    }
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("malformed PNG " + path.string() + ": " + image.message);
    }
    Image img(static_cast<int>(image.height), static_cast<int>(image.width), channels);
    std::transform(buffer.begin(), buffer.end(), img.data().begin(),
                   [](unsigned char b) { return b / 255.0; });
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw InvalidArgument("PNG output needs 1 or 3 channels");
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<unsigned char> bytes(img.data().size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), to_byte);
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw IoError("failed writing PNG " + path.string() + ": " + image.message);
    }
}

// Skips whitespace and '#' comments between PNM header tokens.
int read_pnm_int(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    if (!(in >> value)) throw IoError("malformed PNM header");
    return value;
}

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
        throw IoError("not a binary PGM/PPM file: " + path.string());
    }
    const int channels = magic[1] == '5' ? 1 : 3;
    const int width = read_pnm_int(in);
    const int height = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (width < 1 || height < 1 || width > (1 << 20) || height > (1 << 20)) {
        throw IoError("bad PNM dimensions: " + path.string());
    }
    if (maxval < 1 || maxval > 65535) throw IoError("bad PNM maxval: " + path.string());
    in.get();  // single whitespace before raster

    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buffer(count * bytes_per_sample);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (static_cast<std::size_t>(in.gcount()) != buffer.size()) {
        throw IoError("truncated PNM raster: " + path.string());
    }
    Image img(height, width, channels);
    auto data = img.data();
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned value = bytes_per_sample == 1
                                   ? buffer[i]
                                   : (static_cast<unsigned>(buffer[2 * i]) << 8) | buffer[2 * i + 1];
        data[i] = static_cast<double>(value) / maxval;
    }
    return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw InvalidArgument("PNM output needs 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (img.channels() == 1 ? "P5" : "P6") << '\n'
        << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.data().size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), to_byte);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
    throw IoError("unsupported image extension: " + path.string());
}

void write_image(const std::filesystem::path& path, const Image& img) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return write_png(path, img);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return write_pnm(path, img);
    throw IoError("unsupported image extension: " + path.string());
}

}  // namespace distillflow
