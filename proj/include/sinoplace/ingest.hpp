#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sinoplace/common.hpp"

namespace sinoplace {

namespace detail {

// Little-endian scalar IO. All on-disk formats in this toolkit are
// little-endian regardless of host order.
template <typename U>
void write_le(std::ostream& out, U value) {
    static_assert(std::is_unsigned_v<U>);
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
bool read_le(std::istream& in, U& value) {
    static_assert(std::is_unsigned_v<U>);
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
    value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return true;
}

inline void write_u16(std::ostream& o, std::uint16_t v) { write_le(o, v); }
inline void write_u32(std::ostream& o, std::uint32_t v) { write_le(o, v); }
inline void write_u64(std::ostream& o, std::uint64_t v) { write_le(o, v); }
inline void write_i64(std::ostream& o, std::int64_t v) { write_le(o, static_cast<std::uint64_t>(v)); }
inline void write_f32(std::ostream& o, float v) { write_le(o, std::bit_cast<std::uint32_t>(v)); }
inline void write_f64(std::ostream& o, double v) { write_le(o, std::bit_cast<std::uint64_t>(v)); }

inline bool read_u16(std::istream& i, std::uint16_t& v) { return read_le(i, v); }
inline bool read_u32(std::istream& i, std::uint32_t& v) { return read_le(i, v); }
inline bool read_u64(std::istream& i, std::uint64_t& v) { return read_le(i, v); }
inline bool read_i64(std::istream& i, std::int64_t& v) {
    std::uint64_t u;
    if (!read_le(i, u)) return false;
    v = static_cast<std::int64_t>(u);
    return true;
}
inline bool read_f32(std::istream& i, float& v) {
    std::uint32_t u;
    if (!read_le(i, u)) return false;
    v = std::bit_cast<float>(u);
    return true;
}
inline bool read_f64(std::istream& i, double& v) {
    std::uint64_t u;
    if (!read_le(i, u)) return false;
    v = std::bit_cast<double>(u);
    return true;
}

}  // namespace detail

/// One polar radar sweep. Row k holds the beam at azimuth 2*pi*k/azimuths;
/// columns are range bins. Intensities are normalized to [0, 1] at load time
/// so downstream thresholds are independent of the source bit depth.
struct PolarScan {
    std::uint32_t azimuths = 0;
    std::uint32_t range_bins = 0;
    double range_resolution = 1.0;  // meters per range bin
    std::int64_t timestamp = 0;     // nanoseconds
    Mat<float> intensities;         // azimuths x range_bins

    double azimuth_of(std::uint32_t row) const {
        return kTwoPi * static_cast<double>(row) / static_cast<double>(azimuths);
    }
    double max_range() const { return static_cast<double>(range_bins) * range_resolution; }

    void validate() const {
        if (azimuths < 4 || range_bins < 4)
            throw DimensionError("PolarScan: needs at least 4 azimuths and 4 range bins");
        if (!(range_resolution > 0.0)) throw FormatError("PolarScan: range_resolution must be > 0");
        if (intensities.rows() != azimuths || intensities.cols() != range_bins)
            throw DimensionError("PolarScan: intensity matrix does not match declared shape");
        for (std::size_t i = 0; i < intensities.size(); ++i) {
            const float v = intensities.data()[i];
            if (!std::isfinite(v) || v < 0.0f)
                throw FormatError("PolarScan: intensities must be finite and non-negative");
        }
    }
};

enum class ScanFormat { pgm8, rps1 };

/// Describes how scan files on disk map onto PolarScan. column_offset skips
/// leading metadata bytes on each row of image-based formats (some public
/// radar datasets embed per-row timestamps there); it is ignored for the
/// self-describing rps1 binary.
struct ScanLayout {
    ScanFormat format = ScanFormat::rps1;
    double range_resolution = 1.0;        // pgm8 carries no metadata of its own
    std::size_t column_offset = 0;        // bytes to skip per image row
    std::uint32_t expect_azimuths = 0;    // 0 = unchecked
    std::uint32_t expect_range_bins = 0;  // 0 = unchecked
};

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

/// Numeric filename stems double as timestamps (the usual convention for
/// radar dataset dumps); anything else yields 0.
inline std::int64_t timestamp_from_stem(const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    if (stem.empty()) return 0;
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), value);
    if (ec != std::errc{} || ptr != stem.data() + stem.size()) return 0;
    return value;
}

inline PolarScan load_scan_pgm8(const std::filesystem::path& path, const ScanLayout& layout) {
    const std::string bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto next_int = [&]() -> std::uint64_t {
        skip_space_and_comments();
        std::uint64_t value = 0;
        const char* begin = bytes.data() + pos;
        const char* end = bytes.data() + bytes.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr == begin) throw FormatError("pgm: malformed header in " + path.string());
        pos += static_cast<std::size_t>(ptr - begin);
        return value;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw FormatError("pgm: missing P5 magic in " + path.string());
    pos = 2;
    const std::uint64_t width = next_int();
    const std::uint64_t height = next_int();
    const std::uint64_t maxval = next_int();
    if (maxval == 0 || maxval > 255) throw FormatError("pgm: only 8-bit images are supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError("pgm: malformed header in " + path.string());
    ++pos;  // single whitespace before binary payload

    if (width <= layout.column_offset)
        throw DimensionError("pgm: column offset leaves no range bins");
    const std::uint64_t bins = width - layout.column_offset;
    if (bytes.size() - pos != width * height)
        throw DimensionError("pgm: payload size does not match declared dimensions");
    if (layout.expect_azimuths && height != layout.expect_azimuths)
        throw DimensionError("pgm: azimuth count does not match layout");
    if (layout.expect_range_bins && bins != layout.expect_range_bins)
        throw DimensionError("pgm: range bin count does not match layout");

    PolarScan scan;
    scan.azimuths = static_cast<std::uint32_t>(height);
    scan.range_bins = static_cast<std::uint32_t>(bins);
    scan.range_resolution = layout.range_resolution;
    scan.timestamp = timestamp_from_stem(path);
    scan.intensities = Mat<float>(height, bins);
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::uint64_t r = 0; r < height; ++r) {
        const unsigned char* src =
            reinterpret_cast<const unsigned char*>(bytes.data() + pos + r * width + layout.column_offset);
        float* dst = scan.intensities.row(r).data();
        for (std::uint64_t c = 0; c < bins; ++c) dst[c] = static_cast<float>(src[c]) * scale;
    }
    scan.validate();
    return scan;
}

inline PolarScan load_scan_rps1(const std::filesystem::path& path, const ScanLayout& layout) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "RPS1")
        throw FormatError("rps1: bad magic in " + path.string());
    PolarScan scan;
    if (!read_u32(in, scan.azimuths) || !read_u32(in, scan.range_bins) ||
        !read_f64(in, scan.range_resolution) || !read_i64(in, scan.timestamp))
        throw FormatError("rps1: truncated header in " + path.string());
    if (scan.azimuths < 4 || scan.range_bins < 4 || !(scan.range_resolution > 0.0))
        throw FormatError("rps1: malformed header fields in " + path.string());
    if (layout.expect_azimuths && scan.azimuths != layout.expect_azimuths)
        throw DimensionError("rps1: azimuth count does not match layout");
    if (layout.expect_range_bins && scan.range_bins != layout.expect_range_bins)
        throw DimensionError("rps1: range bin count does not match layout");
    scan.intensities = Mat<float>(scan.azimuths, scan.range_bins);
    for (std::size_t i = 0; i < scan.intensities.size(); ++i) {
        if (!read_f32(in, scan.intensities.data()[i]))
            throw DimensionError("rps1: payload shorter than declared dimensions");
    }
    char extra;
    if (in.read(&extra, 1)) throw DimensionError("rps1: payload longer than declared dimensions");
    scan.validate();
    return scan;
}

}  // namespace detail

inline PolarScan load_scan(const std::filesystem::path& path, const ScanLayout& layout) {
    switch (layout.format) {
        case ScanFormat::pgm8:
            return detail::load_scan_pgm8(path, layout);
        case ScanFormat::rps1:
            return detail::load_scan_rps1(path, layout);
    }
    throw ParameterError("load_scan: unknown format");
}

inline void write_scan(const PolarScan& scan, const std::filesystem::path& path) {
    scan.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write("RPS1", 4);
    detail::write_u32(out, scan.azimuths);
    detail::write_u32(out, scan.range_bins);
    detail::write_f64(out, scan.range_resolution);
    detail::write_i64(out, scan.timestamp);
    for (std::size_t i = 0; i < scan.intensities.size(); ++i)
        detail::write_f32(out, scan.intensities.data()[i]);
    if (!out) throw FormatError("write failed for " + path.string());
}

/// Ground-truth pose sample. yaw is kept in (-pi, pi].
struct PoseRecord {
    std::int64_t timestamp = 0;  // nanoseconds
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

inline std::vector<PoseRecord> load_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("pose csv: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,x,y,yaw")
        throw FormatError("pose csv: expected header 'timestamp,x,y,yaw'");

    std::vector<PoseRecord> poses;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        PoseRecord rec;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        auto fail = [&] {
            throw FormatError("pose csv: unparsable row " + std::to_string(row));
        };
        auto expect_comma = [&] {
            if (p >= end || *p != ',') fail();
            ++p;
        };
        auto parse_i64 = [&](std::int64_t& v) {
            const auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || ptr == p) fail();
            p = ptr;
        };
        auto parse_f64 = [&](double& v) {
            const auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || ptr == p) fail();
            p = ptr;
        };
        parse_i64(rec.timestamp);
        expect_comma();
        parse_f64(rec.x);
        expect_comma();
        parse_f64(rec.y);
        expect_comma();
        parse_f64(rec.yaw);
        if (p != end) fail();
        rec.yaw = wrap_pi(rec.yaw);
        if (!poses.empty() && rec.timestamp <= poses.back().timestamp)
            throw OrderError("pose csv: timestamps must be strictly increasing (row " +
                             std::to_string(row) + ")");
        poses.push_back(rec);
    }
    return poses;
}

inline void write_poses(std::span<const PoseRecord> poses, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << "timestamp,x,y,yaw\n";
    char buf[160];
    for (const auto& p : poses) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9f,%.9f,%.9f\n",
                      static_cast<long long>(p.timestamp), p.x, p.y, p.yaw);
        out << buf;
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

/// Pose with the timestamp stripped; the result of interpolation.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

/// Linear interpolation of the pose track at each scan timestamp. Positions
/// interpolate componentwise; yaw follows the shortest angular arc. Radar
/// runs at ~4 Hz against a much faster INS track, so nearest-neighbor would
/// alias; interpolation is exact at knots and continuous between them.
inline std::vector<Pose> associate(std::span<const std::int64_t> scan_timestamps,
                                   std::span<const PoseRecord> poses) {
    if (poses.empty()) throw ParameterError("associate: empty pose track");
    std::vector<Pose> out;
    out.reserve(scan_timestamps.size());
    for (const std::int64_t ts : scan_timestamps) {
        if (ts < poses.front().timestamp || ts > poses.back().timestamp)
            throw RangeError("associate: scan timestamp " + std::to_string(ts) +
                             " outside pose range");
        // first pose with timestamp >= ts
        auto hi = std::lower_bound(poses.begin(), poses.end(), ts,
                                   [](const PoseRecord& p, std::int64_t t) { return p.timestamp < t; });
        if (hi->timestamp == ts) {
            out.push_back({hi->x, hi->y, hi->yaw});
            continue;
        }
        const auto lo = hi - 1;
        const double t = static_cast<double>(ts - lo->timestamp) /
                         static_cast<double>(hi->timestamp - lo->timestamp);
        Pose p;
        p.x = lo->x + t * (hi->x - lo->x);
        p.y = lo->y + t * (hi->y - lo->y);
        p.yaw = wrap_pi(lo->yaw + t * wrap_pi(hi->yaw - lo->yaw));
        out.push_back(p);
    }
    return out;
}

}  // namespace sinoplace
