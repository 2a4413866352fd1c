#pragma once

#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "sinoplace/common.hpp"
#include "sinoplace/fft.hpp"
#include "sinoplace/radon.hpp"

namespace sinoplace {

enum class ResolutionTag : std::uint16_t { fine = 0, coarse = 1 };

/// Frequency-domain scan signature: row j is the length-n_l DFT of sinogram
/// column j. Complex values are kept because matching needs the phase; the
/// DC bin of each row equals that projection's mass.
struct RadarDescriptor {
    std::uint32_t n_theta = 0;
    std::uint32_t n_l = 0;
    ResolutionTag resolution_tag = ResolutionTag::fine;
    std::uint64_t source_id = 0;
    Mat<std::complex<double>> rows;  // n_theta x n_l

    void validate() const {
        if (n_theta == 0 || n_l == 0) throw DimensionError("RadarDescriptor: empty dimensions");
        if (rows.rows() != n_theta || rows.cols() != n_l)
            throw DimensionError("RadarDescriptor: row matrix does not match declared shape");
    }
};

inline RadarDescriptor make_descriptor(const Sinogram& sino, std::uint64_t source_id = 0,
                                       ResolutionTag tag = ResolutionTag::fine) {
    if (sino.offset_bins == 0 || sino.angles == 0)
        throw DimensionError("make_descriptor: empty sinogram");
    RadarDescriptor d;
    d.n_theta = sino.angles;
    d.n_l = sino.offset_bins;
    d.resolution_tag = tag;
    d.source_id = source_id;
    d.rows = Mat<std::complex<double>>(sino.angles, sino.offset_bins);
    const Fft& plan = fft_plan(sino.offset_bins);
    std::vector<std::complex<double>> col(sino.offset_bins);
    for (std::uint32_t j = 0; j < sino.angles; ++j) {
        for (std::uint32_t i = 0; i < sino.offset_bins; ++i) col[i] = sino.values(i, j);
        plan.forward(col.data());
        std::complex<double>* row = d.rows.row(j).data();
        for (std::uint32_t k = 0; k < sino.offset_bins; ++k) row[k] = col[k];
    }
    return d;
}

inline std::uint32_t downsampled_bins(std::uint32_t n_l, std::uint32_t factor) {
    return (n_l + factor - 1) / factor;
}

/// Block-averages the offset axis by `factor`; a short trailing block is
/// averaged over its actual length. The angle axis is untouched.
inline Sinogram downsample_sinogram(const Sinogram& sino, std::uint32_t factor) {
    if (factor < 2) throw ParameterError("downsample_sinogram: factor must be >= 2");
    if (sino.offset_bins == 0 || sino.angles == 0)
        throw DimensionError("downsample_sinogram: empty sinogram");
    Sinogram out;
    out.angles = sino.angles;
    out.offset_bins = downsampled_bins(sino.offset_bins, factor);
    out.values = Mat<double>(out.offset_bins, out.angles);
    for (std::uint32_t b = 0; b < out.offset_bins; ++b) {
        const std::uint32_t lo = b * factor;
        const std::uint32_t hi = std::min(lo + factor, sino.offset_bins);
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (std::uint32_t j = 0; j < sino.angles; ++j) {
            double sum = 0.0;
            for (std::uint32_t i = lo; i < hi; ++i) sum += sino.values(i, j);
            out.values(b, j) = sum * inv;
        }
    }
    return out;
}

/// Frame-aligned collection of descriptors sharing one shape.
struct DescriptorStore {
    std::uint32_t n_theta = 0;
    std::uint32_t n_l = 0;
    ResolutionTag resolution_tag = ResolutionTag::fine;
    std::vector<RadarDescriptor> frames;
};

namespace detail {

inline void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>(v >> 8);
}

inline void put_u32(unsigned char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

inline void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

inline void put_f32(unsigned char* p, float v) { put_u32(p, std::bit_cast<std::uint32_t>(v)); }

inline std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

constexpr std::size_t kStoreHeaderBytes = 24;
constexpr std::uint16_t kStoreVersion = 1;

}  // namespace detail

/// Streams descriptors into a store file. Data goes to `<path>.tmp` first
/// and is fsynced and renamed into place by finish(), so a reader never sees
/// a half-written store under the final name.
class StoreWriter {
  public:
    StoreWriter(const std::filesystem::path& path, std::uint32_t n_theta, std::uint32_t n_l,
                ResolutionTag tag)
        : final_(path), tmp_(path.string() + ".tmp"), n_theta_(n_theta), n_l_(n_l), tag_(tag) {
        if (n_theta == 0 || n_l == 0) throw DimensionError("StoreWriter: empty dimensions");
        fd_ = ::open(tmp_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd_ < 0) throw Error("StoreWriter: cannot open " + tmp_.string());
        unsigned char h[detail::kStoreHeaderBytes];
        std::memcpy(h, "RPDB", 4);
        detail::put_u16(h + 4, detail::kStoreVersion);
        detail::put_u16(h + 6, static_cast<std::uint16_t>(tag));
        detail::put_u32(h + 8, n_theta);
        detail::put_u32(h + 12, n_l);
        detail::put_u64(h + 16, 0);
        write_all(h, sizeof h);
        buf_.resize(static_cast<std::size_t>(n_theta) * n_l * 8);
    }

    StoreWriter(const StoreWriter&) = delete;
    StoreWriter& operator=(const StoreWriter&) = delete;

    ~StoreWriter() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void append(const RadarDescriptor& d) {
        if (fd_ < 0) throw OrderError("StoreWriter: already finished");
        d.validate();
        if (d.n_theta != n_theta_ || d.n_l != n_l_)
            throw DimensionError("StoreWriter: frame shape differs from store header");
        unsigned char* p = buf_.data();
        for (std::uint32_t j = 0; j < n_theta_; ++j) {
            const std::complex<double>* row = d.rows.row(j).data();
            for (std::uint32_t k = 0; k < n_l_; ++k) {
                detail::put_f32(p, static_cast<float>(row[k].real()));
                detail::put_f32(p + 4, static_cast<float>(row[k].imag()));
                p += 8;
            }
        }
        write_all(buf_.data(), buf_.size());
        ++count_;
    }

    void finish() {
        if (fd_ < 0) throw OrderError("StoreWriter: already finished");
        unsigned char c[8];
        detail::put_u64(c, count_);
        if (::pwrite(fd_, c, sizeof c, 16) != static_cast<ssize_t>(sizeof c))
            throw Error("StoreWriter: header patch failed for " + tmp_.string());
        if (::fsync(fd_) != 0) throw Error("StoreWriter: fsync failed for " + tmp_.string());
        ::close(fd_);
        fd_ = -1;
        std::filesystem::rename(tmp_, final_);
    }

    std::uint64_t frame_count() const { return count_; }

  private:
    void write_all(const unsigned char* p, std::size_t n) {
        while (n > 0) {
            const ssize_t w = ::write(fd_, p, n);
            if (w <= 0) throw Error("StoreWriter: write failed for " + tmp_.string());
            p += w;
            n -= static_cast<std::size_t>(w);
        }
    }

    std::filesystem::path final_, tmp_;
    std::uint32_t n_theta_, n_l_;
    ResolutionTag tag_;
    int fd_ = -1;
    std::uint64_t count_ = 0;
    std::vector<unsigned char> buf_;
};

/// Random-access reader over the fixed-stride store layout.
class StoreReader {
  public:
    explicit StoreReader(const std::filesystem::path& path) : path_(path) {
        in_.open(path, std::ios::binary);
        if (!in_) throw Error("StoreReader: cannot open " + path.string());
        unsigned char h[detail::kStoreHeaderBytes];
        in_.read(reinterpret_cast<char*>(h), sizeof h);
        if (in_.gcount() != static_cast<std::streamsize>(sizeof h))
            throw CorruptionError("StoreReader: header truncated in " + path.string());
        if (std::memcmp(h, "RPDB", 4) != 0)
            throw FormatError("StoreReader: bad magic in " + path.string());
        if (detail::get_u16(h + 4) != detail::kStoreVersion)
            throw FormatError("StoreReader: unsupported version in " + path.string());
        const std::uint16_t tag = detail::get_u16(h + 6);
        if (tag > 1) throw FormatError("StoreReader: unknown resolution tag in " + path.string());
        tag_ = static_cast<ResolutionTag>(tag);
        n_theta_ = detail::get_u32(h + 8);
        n_l_ = detail::get_u32(h + 12);
        count_ = detail::get_u64(h + 16);
        if (n_theta_ == 0 || n_l_ == 0)
            throw FormatError("StoreReader: zero dimensions in " + path.string());
        stride_ = static_cast<std::uint64_t>(n_theta_) * n_l_ * 8;
        in_.seekg(0, std::ios::end);
        const std::uint64_t size = static_cast<std::uint64_t>(in_.tellg());
        const std::uint64_t expected = detail::kStoreHeaderBytes + count_ * stride_;
        if (size != expected) {
            const std::uint64_t frame =
                size < detail::kStoreHeaderBytes ? 0 : (size - detail::kStoreHeaderBytes) / stride_;
            throw CorruptionError("StoreReader: " + path.string() + " truncated at frame " +
                                  std::to_string(frame));
        }
    }

    std::uint32_t n_theta() const { return n_theta_; }
    std::uint32_t n_l() const { return n_l_; }
    ResolutionTag resolution_tag() const { return tag_; }
    std::uint64_t frame_count() const { return count_; }

    RadarDescriptor read_frame(std::uint64_t index) {
        if (index >= count_) throw IndexError("StoreReader: frame index out of range");
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(detail::kStoreHeaderBytes + index * stride_));
        buf_.resize(stride_);
        in_.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(stride_));
        if (in_.gcount() != static_cast<std::streamsize>(stride_))
            throw CorruptionError("StoreReader: " + path_.string() + " truncated at frame " +
                                  std::to_string(index));
        RadarDescriptor d;
        d.n_theta = n_theta_;
        d.n_l = n_l_;
        d.resolution_tag = tag_;
        d.source_id = index;
        d.rows = Mat<std::complex<double>>(n_theta_, n_l_);
        const unsigned char* p = buf_.data();
        for (std::uint32_t j = 0; j < n_theta_; ++j) {
            std::complex<double>* row = d.rows.row(j).data();
            for (std::uint32_t k = 0; k < n_l_; ++k) {
                row[k] = {static_cast<double>(detail::get_f32(p)),
                          static_cast<double>(detail::get_f32(p + 4))};
                p += 8;
            }
        }
        return d;
    }

  private:
    std::filesystem::path path_;
    std::ifstream in_;
    ResolutionTag tag_ = ResolutionTag::fine;
    std::uint32_t n_theta_ = 0, n_l_ = 0;
    std::uint64_t count_ = 0, stride_ = 0;
    std::vector<unsigned char> buf_;
};

inline void write_store(const DescriptorStore& db, const std::filesystem::path& path) {
    if (db.n_theta == 0 || db.n_l == 0) throw DimensionError("write_store: empty dimensions");
    StoreWriter w(path, db.n_theta, db.n_l, db.resolution_tag);
    for (const RadarDescriptor& d : db.frames) w.append(d);
    w.finish();
}

inline DescriptorStore read_store(const std::filesystem::path& path) {
    StoreReader r(path);
    DescriptorStore db;
    db.n_theta = r.n_theta();
    db.n_l = r.n_l();
    db.resolution_tag = r.resolution_tag();
    db.frames.reserve(r.frame_count());
    for (std::uint64_t i = 0; i < r.frame_count(); ++i) db.frames.push_back(r.read_frame(i));
    return db;
}

}  // namespace sinoplace
