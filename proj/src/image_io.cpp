#include "noisegen/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "noisegen/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace ng {

namespace {

constexpr char kMagic[4] = {'N', 'G', 'F', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated tensor file '" + path + "'");
    return v;
}

void put_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& payload) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void save_tensor_f32(const std::string& path, const TensorF& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write tensor file '" + path + "'");
    os.write(kMagic, 4);
    write_raw(os, std::uint32_t{1});  // version
    write_raw(os, std::uint32_t{4});  // rank
    write_raw(os, std::uint32_t{0});  // reserved
    const std::uint32_t dims[4] = {
        static_cast<std::uint32_t>(t.shape.n), static_cast<std::uint32_t>(t.shape.c),
        static_cast<std::uint32_t>(t.shape.h), static_cast<std::uint32_t>(t.shape.w)};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!os) throw IoError("short write on tensor file '" + path + "'");
}

TensorF load_tensor_f32(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open tensor file '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not an NGF1 tensor file");
    }
    const auto version = read_raw<std::uint32_t>(is, path);
    if (version != 1) throw IoError("unsupported tensor file version in '" + path + "'");
    const auto rank = read_raw<std::uint32_t>(is, path);
    if (rank != 4) throw IoError("expected rank-4 tensor in '" + path + "'");
    read_raw<std::uint32_t>(is, path);  // reserved
    Shape s;
    s.n = static_cast<int>(read_raw<std::uint32_t>(is, path));
    s.c = static_cast<int>(read_raw<std::uint32_t>(is, path));
    s.h = static_cast<int>(read_raw<std::uint32_t>(is, path));
    s.w = static_cast<int>(read_raw<std::uint32_t>(is, path));
    TensorF t(s);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw IoError("truncated tensor file '" + path + "'");
    return t;
}

void write_png(const std::string& path, const TensorF& img) {
    if (img.shape.n != 1 || (img.shape.c != 3 && img.shape.c != 1)) {
        throw ShapeError("write_png: expected (1,3,H,W) or (1,1,H,W), got " + img.shape.str());
    }
    const int h = img.shape.h, w = img.shape.w, ch = img.shape.c;
    // filter byte 0 per scanline, 8-bit samples
    std::vector<unsigned char> raster;
    raster.reserve(static_cast<std::size_t>(h) * (1 + static_cast<std::size_t>(w) * ch));
    for (int y = 0; y < h; ++y) {
        raster.push_back(0);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                const float v = std::clamp(img.at(0, c, y, x), 0.0f, 1.0f);
                raster.push_back(static_cast<unsigned char>(std::lround(v * 255.0f)));
            }
        }
    }
    uLongf zlen = compressBound(static_cast<uLong>(raster.size()));
    std::vector<unsigned char> zdata(zlen);
    if (compress2(zdata.data(), &zlen, raster.data(), static_cast<uLong>(raster.size()), 6) !=
        Z_OK) {
        throw IoError("deflate failed while writing '" + path + "'");
    }
    zdata.resize(zlen);

    std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    put_u32be(ihdr, static_cast<std::uint32_t>(w));
    put_u32be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);                            // bit depth
    ihdr.push_back(ch == 3 ? 2 : 0);              // color type
    ihdr.push_back(0);                            // compression
    ihdr.push_back(0);                            // filter
    ihdr.push_back(0);                            // interlace
    put_chunk(png, "IHDR", ihdr);
    put_chunk(png, "IDAT", zdata);
    put_chunk(png, "IEND", {});

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write PNG file '" + path + "'");
    os.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!os) throw IoError("short write on PNG file '" + path + "'");
}

}  // namespace ng
