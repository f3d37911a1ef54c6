#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "sampling.hpp"

namespace superfill {

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f)
        throw IoError("cannot open '" + path.string() + "'");
    return f;
}

/// Raw decoded samples, row-major and interleaved.
struct RawImage {
    png_uint_32 width = 0, height = 0;
    int channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

// libpng reports errors by longjmp; only trivially destructible locals may be
// live across setjmp, so decoding fills a caller-owned buffer.
inline bool decode_png(std::FILE* fp, RawImage& out, std::vector<png_byte>& buffer, std::vector<png_bytep>& rows) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * out.height);
    rows.resize(out.height);
    for (png_uint_32 r = 0; r < out.height; ++r)
        rows[r] = buffer.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline RawImage read_png_raw(const std::filesystem::path& path) {
    auto fp = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("'" + path.string() + "' is not a PNG file");
    std::rewind(fp.get());
    RawImage raw;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    if (!decode_png(fp.get(), raw, buffer, rows))
        throw IoError("failed to decode PNG '" + path.string() + "'");
    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
    raw.samples.resize(count);
    if (raw.bit_depth == 16)
        for (std::size_t i = 0; i < count; ++i)
            raw.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] << 8 | buffer[2 * i + 1]);
    else
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(count), raw.samples.begin());
    return raw;
}

inline bool encode_png(std::FILE* fp, const RawImage& img, std::vector<png_bytep>& rows) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, img.bit_depth,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline void write_png_raw(const std::filesystem::path& path, const RawImage& img) {
    const std::size_t bytes = img.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels * bytes;
    std::vector<png_byte> buffer(stride * img.height);
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        if (bytes == 2) {
            buffer[2 * i] = static_cast<png_byte>(img.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(img.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(img.samples[i]);
        }
    }
    std::vector<png_bytep> rows(img.height);
    for (png_uint_32 r = 0; r < img.height; ++r)
        rows[r] = buffer.data() + r * stride;
    auto fp = open_file(path, "wb");
    if (!encode_png(fp.get(), img, rows))
        throw IoError("failed to encode PNG '" + path.string() + "'");
}

/// Next whitespace-delimited header token of a netpbm file, skipping comments.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    char ch;
    while (in.get(ch)) {
        if (ch == '#') {
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(ch);
    }
    return tok;
}

inline RawImage read_pnm_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P6")
        throw IoError("'" + path.string() + "' is not a binary PGM/PPM file");
    RawImage raw;
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(pnm_token(in));
        h = std::stol(pnm_token(in));
        maxval = std::stol(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError("malformed header in '" + path.string() + "'");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError("malformed header in '" + path.string() + "'");
    raw.width = static_cast<png_uint_32>(w);
    raw.height = static_cast<png_uint_32>(h);
    raw.channels = magic == "P6" ? 3 : 1;
    raw.bit_depth = maxval > 255 ? 16 : 8;
    const std::size_t count = static_cast<std::size_t>(w) * h * raw.channels;
    std::vector<unsigned char> bytes(count * (maxval > 255 ? 2 : 1));
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw IoError("truncated pixel data in '" + path.string() + "'");
    raw.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const long v = maxval > 255 ? (bytes[2 * i] << 8 | bytes[2 * i + 1]) : bytes[i];
        // Rescale to the full range of the chosen bit depth.
        const long full = maxval > 255 ? 65535 : 255;
        raw.samples[i] = static_cast<std::uint16_t>((v * full + maxval / 2) / maxval);
    }
    return raw;
}

inline Tensor3 raw_to_tensor(const RawImage& raw) {
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    Tensor3 t(raw.height, raw.width, raw.channels);
    for (Index r = 0; r < t.rows(); ++r)
        for (Index c = 0; c < t.cols(); ++c)
            for (Index ch = 0; ch < t.slices(); ++ch)
                t(r, c, ch) = raw.samples[static_cast<std::size_t>((r * t.cols() + c) * raw.channels + ch)] / scale;
    return t;
}

inline std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest '" + path.string() + "'");
    std::vector<std::filesystem::path> entries;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::filesystem::path p = line.substr(first, last - first + 1);
        entries.push_back(p.is_absolute() ? p : path.parent_path() / p);
    }
    if (entries.empty())
        throw IoError("manifest '" + path.string() + "' lists no images");
    return entries;
}

inline bool is_manifest(const std::filesystem::path& path) {
    const auto ext = lower_extension(path);
    return ext == ".txt" || ext == ".lst";
}

} // namespace detail

/// Quantizes a [0, 1] value to an integer level in [0, max_level].
inline std::uint16_t quantize(double v, int max_level) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * max_level));
}

/// Reads a single image (PNG, binary PGM/PPM) into [0, 1]. Alpha is dropped.
inline Tensor3 read_single_image(const std::filesystem::path& path) {
    const auto ext = detail::lower_extension(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")
        return detail::raw_to_tensor(detail::read_pnm_raw(path));
    return detail::raw_to_tensor(detail::read_png_raw(path));
}

/// Reads an image, or a manifest (.txt/.lst) listing single-channel images,
/// one per line, stacked as frontal slices.
inline Tensor3 read_image(const std::filesystem::path& path) {
    if (!detail::is_manifest(path))
        return read_single_image(path);
    const auto entries = detail::read_manifest(path);
    std::vector<Tensor3> bands;
    for (const auto& e : entries) {
        bands.push_back(read_single_image(e));
        if (bands.back().slices() != 1)
            throw IoError("manifest entry '" + e.string() + "' is not single-channel");
        if (bands.back().rows() != bands.front().rows() || bands.back().cols() != bands.front().cols())
            throw IoError("manifest entry '" + e.string() + "' differs in size from the first band");
    }
    Tensor3 out(bands.front().rows(), bands.front().cols(), static_cast<Index>(bands.size()));
    for (Index k = 0; k < out.slices(); ++k)
        out.slice(k) = bands[k].slice(0);
    return out;
}

/// Writes a 1- or 3-channel tensor as PNG (8 or 16 bits), clamping to [0, 1].
inline void write_png(const std::filesystem::path& path, const Tensor3& image, int bit_depth = 8) {
    if (image.slices() != 1 && image.slices() != 3)
        throw DimensionError("write_png: expected 1 or 3 channels, got " + std::to_string(image.slices()));
    if (bit_depth != 8 && bit_depth != 16)
        throw ParameterError("write_png: bit depth must be 8 or 16");
    detail::RawImage raw;
    raw.width = static_cast<png_uint_32>(image.cols());
    raw.height = static_cast<png_uint_32>(image.rows());
    raw.channels = static_cast<int>(image.slices());
    raw.bit_depth = bit_depth;
    const int levels = bit_depth == 16 ? 65535 : 255;
    raw.samples.resize(static_cast<std::size_t>(image.size()));
    std::size_t i = 0;
    for (Index r = 0; r < image.rows(); ++r)
        for (Index c = 0; c < image.cols(); ++c)
            for (Index ch = 0; ch < image.slices(); ++ch)
                raw.samples[i++] = quantize(image(r, c, ch), levels);
    detail::write_png_raw(path, raw);
}

/// Writes an image; a manifest path writes one PNG per slice next to it
/// (`<stem>_000.png`, ...) and lists them in the manifest.
inline void write_image(const std::filesystem::path& path, const Tensor3& image, int bit_depth = 8) {
    if (!detail::is_manifest(path)) {
        write_png(path, image, bit_depth);
        return;
    }
    std::ofstream manifest(path);
    if (!manifest)
        throw IoError("cannot write manifest '" + path.string() + "'");
    for (Index k = 0; k < image.slices(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "_%03d.png", static_cast<int>(k));
        const std::filesystem::path band = path.stem().string() + name;
        Tensor3 slice(image.rows(), image.cols(), 1);
        slice.slice(0) = image.slice(k);
        write_png(path.parent_path() / band, slice, bit_depth);
        manifest << band.string() << '\n';
    }
}

/// Round trip through the integer levels of the given bit depth.
inline Tensor3 quantized(const Tensor3& image, int bit_depth = 8) {
    const int levels = bit_depth == 16 ? 65535 : 255;
    Tensor3 out(image.dims());
    for (Index i = 0; i < image.size(); ++i)
        out.array()[i] = quantize(image.array()[i], levels) / static_cast<double>(levels);
    return out;
}

/// 8-bit grayscale mask image, 255 = observed.
inline void write_mask(const std::filesystem::path& path, const SampleMask& mask) {
    detail::RawImage raw;
    raw.width = static_cast<png_uint_32>(mask.width());
    raw.height = static_cast<png_uint_32>(mask.height());
    raw.channels = 1;
    raw.samples.resize(mask.flags().size());
    for (std::size_t i = 0; i < raw.samples.size(); ++i)
        raw.samples[i] = mask.flags()[i] ? 255 : 0;
    detail::write_png_raw(path, raw);
}

/// Reads a mask image; pixels at or above half intensity (first channel) are observed.
inline SampleMask read_mask(const std::filesystem::path& path) {
    const Tensor3 img = read_single_image(path);
    SampleMask mask(img.rows(), img.cols());
    for (Index r = 0; r < img.rows(); ++r)
        for (Index c = 0; c < img.cols(); ++c)
            if (img(r, c, 0) >= 0.5 - 1e-9)
                mask.set(r, c, true);
    return mask;
}

/// Sparse samples: `row,col,c0,...` per observed pixel in raster order.
inline void write_samples_csv(const std::filesystem::path& path, const Tensor3& image, const SampleMask& mask) {
    detail::require_mask_fits(image, mask, "write_samples_csv");
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << "row,col";
    for (Index k = 0; k < image.slices(); ++k)
        out << ",c" << k;
    out << '\n';
    char buf[32];
    for (Index r = 0; r < image.rows(); ++r)
        for (Index c = 0; c < image.cols(); ++c) {
            if (!mask.observed(r, c))
                continue;
            out << r << ',' << c;
            for (Index k = 0; k < image.slices(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", image(r, c, k));
                out << ',' << buf;
            }
            out << '\n';
        }
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

struct SparseSamples {
    Tensor3 values;  ///< observed entries set, zeros elsewhere
    SampleMask mask;
};

/// Reads a sparse sample CSV onto an H x W grid; the channel count comes from the header.
inline SparseSamples read_samples_csv(const std::filesystem::path& path, Index height, Index width) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("row,col,", 0) != 0)
        throw IoError("'" + path.string() + "': expected header row,col,c0,...");
    const auto channels = static_cast<Index>(std::count(line.begin(), line.end(), ',') - 1);
    SparseSamples out{Tensor3(height, width, channels), SampleMask(height, width)};
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        auto fail = [&](const std::string& why) {
            return IoError("'" + path.string() + "' line " + std::to_string(lineno) + ": " + why);
        };
        if (static_cast<Index>(fields.size()) != channels + 2)
            throw fail("expected " + std::to_string(channels + 2) + " fields");
        Index r, c;
        try {
            r = std::stoll(fields[0]);
            c = std::stoll(fields[1]);
        } catch (const std::exception&) {
            throw fail("bad coordinates");
        }
        if (r < 0 || r >= height || c < 0 || c >= width)
            throw fail("coordinates outside " + std::to_string(height) + "x" + std::to_string(width));
        for (Index k = 0; k < channels; ++k) {
            double v;
            try {
                v = std::stod(fields[static_cast<std::size_t>(k + 2)]);
            } catch (const std::exception&) {
                throw fail("bad value");
            }
            if (!std::isfinite(v))
                throw fail("non-finite value");
            out.values(r, c, k) = v;
        }
        out.mask.set(r, c, true);
    }
    return out;
}

/// Label map as a 16-bit grayscale PNG (label value = pixel value).
inline void write_label_map(const std::filesystem::path& path, const LabelMap& labels) {
    if (labels.cluster_count() > 65536)
        throw ParameterError("write_label_map: more than 65536 labels");
    detail::RawImage raw;
    raw.width = static_cast<png_uint_32>(labels.width);
    raw.height = static_cast<png_uint_32>(labels.height);
    raw.channels = 1;
    raw.bit_depth = 16;
    raw.samples.resize(labels.labels.size());
    for (std::size_t i = 0; i < raw.samples.size(); ++i)
        raw.samples[i] = static_cast<std::uint16_t>(std::max(labels.labels[i], 0));
    detail::write_png_raw(path, raw);
}

} // namespace superfill
