// File formats: raw little-endian float32 payloads behind one-line text
// headers for images and sinograms, plus a 16-bit grayscale PNG export for
// viewing (never re-imported for computation).
#pragma once

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "easel/types.hpp"

namespace easel {

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_f32_payload(std::ofstream& f, const std::vector<double>& values) {
    static_assert(std::endian::native == std::endian::little,
                  "raw writers assume a little-endian host");
    std::vector<float> payload(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) payload[i] = static_cast<float>(values[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

inline std::vector<double> read_f32_payload(std::ifstream& f, std::size_t count,
                                            const std::string& path) {
    std::vector<float> payload(count);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw std::runtime_error("truncated payload in " + path);
    char extra;
    if (f.read(&extra, 1) && f.gcount() == 1)
        throw std::runtime_error("payload longer than header dims in " + path);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = payload[i];
    return values;
}

inline std::map<std::string, std::string> parse_header_fields(std::stringstream& ss) {
    std::map<std::string, std::string> kv;
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad header token: " + tok);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

}  // namespace detail

// Optional provenance stamp appended to file headers.
struct ArtifactStamp {
    std::string config_hash;  // empty = unstamped
    std::uint64_t seed = 0;

    std::string header_suffix() const {
        if (config_hash.empty()) return {};
        return " config_hash=" + config_hash + " seed=" + std::to_string(seed);
    }
};

inline void save_image(const std::string& path, const Image& image,
                       const ArtifactStamp& stamp = {}) {
    image.grid.validate();
    if (image.values.size() != image.grid.pixel_count())
        throw std::invalid_argument("save_image: values length does not match grid");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_image: cannot open " + path);
    f << "easel-image-v1 nx=" << image.grid.nx << " ny=" << image.grid.ny
      << " pixel_size_mm=" << detail::format_double(image.grid.pixel_size)
      << stamp.header_suffix() << "\n";
    detail::write_f32_payload(f, image.values);
    if (!f) throw std::runtime_error("save_image: write failed for " + path);
}

inline Image load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_image: cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("load_image: missing header in " + path);
    std::stringstream ss(header);
    std::string magic;
    ss >> magic;
    if (magic != "easel-image-v1") throw std::runtime_error("load_image: bad magic in " + path);
    const auto kv = detail::parse_header_fields(ss);

    Image img;
    img.grid.nx = std::stoi(kv.at("nx"));
    img.grid.ny = std::stoi(kv.at("ny"));
    img.grid.pixel_size = std::stod(kv.at("pixel_size_mm"));
    img.grid.validate();
    img.values = detail::read_f32_payload(f, img.grid.pixel_count(), path);
    return img;
}

inline void save_sinogram(const std::string& path, const Sinogram& sino,
                          const ArtifactStamp& stamp = {}) {
    sino.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_sinogram: cannot open " + path);
    const auto& g = sino.geometry;
    f << "easel-sino-v1 n_angles=" << g.n_angles << " n_det=" << g.n_det
      << " det_spacing_mm=" << detail::format_double(g.det_spacing)
      << " sad_mm=" << detail::format_double(g.sad) << " sdd_mm=" << detail::format_double(g.sdd)
      << " domain=" << to_string(sino.domain) << stamp.header_suffix() << "\n";
    detail::write_f32_payload(f, sino.values);
    if (!f) throw std::runtime_error("save_sinogram: write failed for " + path);
}

inline Sinogram load_sinogram(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_sinogram: cannot open " + path);
    std::string header;
    if (!std::getline(f, header))
        throw std::runtime_error("load_sinogram: missing header in " + path);
    std::stringstream ss(header);
    std::string magic;
    ss >> magic;
    if (magic != "easel-sino-v1") throw std::runtime_error("load_sinogram: bad magic in " + path);
    const auto kv = detail::parse_header_fields(ss);

    Sinogram s;
    s.geometry.n_angles = std::stoi(kv.at("n_angles"));
    s.geometry.n_det = std::stoi(kv.at("n_det"));
    s.geometry.det_spacing = std::stod(kv.at("det_spacing_mm"));
    s.geometry.sad = std::stod(kv.at("sad_mm"));
    s.geometry.sdd = std::stod(kv.at("sdd_mm"));
    s.domain = sinogram_domain_from_string(kv.at("domain"));
    s.geometry.validate();
    s.values = detail::read_f32_payload(f, s.geometry.ray_count(), path);
    return s;
}

// --- PNG export ---------------------------------------------------------

namespace detail {

inline void png_write_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

inline void png_chunk(std::ofstream& f, const char type[4], const std::vector<unsigned char>& data) {
    std::vector<unsigned char> head;
    png_write_be32(head, static_cast<std::uint32_t>(data.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<unsigned char> tail;
    png_write_be32(tail, crc);
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace detail

// 16-bit grayscale PNG with min-max windowing. Viewing only.
inline void save_png16(const std::string& path, const Image& image) {
    image.grid.validate();
    const int w = image.grid.nx, h = image.grid.ny;
    const double lo = *std::min_element(image.values.begin(), image.values.end());
    const double hi = *std::max_element(image.values.begin(), image.values.end());
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;

    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + 2 * w));
    for (int iy = 0; iy < h; ++iy) {
        raw.push_back(0);  // filter: none
        for (int ix = 0; ix < w; ++ix) {
            const double v = (image.at(ix, iy) - lo) * scale;
            const auto q = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0) + 0.5);
            raw.push_back(static_cast<unsigned char>(q >> 8));
            raw.push_back(static_cast<unsigned char>(q & 0xFF));
        }
    }

    uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_size);
    if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("save_png16: deflate failed");
    comp.resize(comp_size);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_png16: cannot open " + path);
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<unsigned char> ihdr;
    detail::png_write_be32(ihdr, static_cast<std::uint32_t>(w));
    detail::png_write_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(16);  // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    detail::png_chunk(f, "IHDR", ihdr);
    detail::png_chunk(f, "IDAT", comp);
    detail::png_chunk(f, "IEND", {});
    if (!f) throw std::runtime_error("save_png16: write failed for " + path);
}

}  // namespace easel
