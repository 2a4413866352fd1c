#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "sinoplace/common.hpp"
#include "sinoplace/warp.hpp"

namespace sinoplace {

/// Projection stack S(l, theta). Row index i is the signed offset bin
/// l_i = i - (offset_bins - 1) / 2 in pixel units, column index j is the
/// angle theta_j = pi * j / angles over [0, pi).
struct Sinogram {
    std::uint32_t offset_bins = 0;
    std::uint32_t angles = 0;
    Mat<double> values;

    double theta_of(std::uint32_t j) const { return kPi * static_cast<double>(j) / angles; }
    double offset_of(std::uint32_t i) const {
        return static_cast<double>(i) - (static_cast<double>(offset_bins) - 1.0) / 2.0;
    }
};

namespace detail {

/// CDF of the unit-mass triangle of half-width a centered at 0.
inline double tri_cdf(double u, double a) {
    if (u <= -a) return 0.0;
    if (u >= a) return 1.0;
    if (u < 0.0) {
        const double s = a + u;
        return s * s / (2.0 * a * a);
    }
    const double s = a - u;
    return 1.0 - s * s / (2.0 * a * a);
}

inline double tri_pdf(double s, double a) {
    const double m = std::abs(s);
    if (m >= a) return 0.0;
    return (1.0 - m / a) / a;
}

/// CDF of the convolution of two unit-mass triangles with half-widths a and
/// b. Piecewise-exact: the integrand splits into polynomial pieces of degree
/// at most three, each handled by two-point Gauss quadrature.
inline double conv_tri_cdf(double u, double a, double b) {
    constexpr double kDegenerate = 1e-12;
    if (a < b) std::swap(a, b);
    if (a <= kDegenerate) return u < 0.0 ? 0.0 : (u > 0.0 ? 1.0 : 0.5);
    if (b <= kDegenerate) return tri_cdf(u, a);
    if (u <= -(a + b)) return 0.0;
    if (u >= a + b) return 1.0;

    double cuts[6] = {-a, 0.0, a, u - b, u, u + b};
    std::sort(cuts, cuts + 6);
    constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)
    double acc = 0.0;
    for (int k = 0; k + 1 < 6; ++k) {
        double lo = std::max(cuts[k], -a);
        double hi = std::min(cuts[k + 1], a);
        if (hi <= lo) continue;
        const double mid = 0.5 * (lo + hi);
        const double halfw = 0.5 * (hi - lo);
        const double s0 = mid - halfw * kGauss;
        const double s1 = mid + halfw * kGauss;
        acc += halfw * (tri_pdf(s0, a) * tri_cdf(u - s0, b) + tri_pdf(s1, a) * tri_cdf(u - s1, b));
    }
    return std::clamp(acc, 0.0, 1.0);
}

/// Per-angle splat weights. A pixel whose projection lands at t = m + f
/// (integer m, fractional f) deposits its value into offset bins
/// m-1 .. m+2 with row `int(f * quant)` of `w`. Each row holds the exact
/// integral of the pixel footprint over the four bin intervals: the
/// footprint is the image interpolation tent projected onto the offset
/// axis, and the bin integral convolves it with the unit bin box. Rows sum
/// to 1, so splatting conserves mass bitwise up to float rounding.
struct SplatTable {
    std::uint32_t quant = 0;
    std::vector<float> w;  // quant rows x 4

    const float* row(double f) const {
        std::uint32_t idx = static_cast<std::uint32_t>(f * quant);
        if (idx >= quant) idx = quant - 1;
        return w.data() + static_cast<std::size_t>(idx) * 4;
    }
};

inline SplatTable build_splat_table(double theta, std::uint32_t quant = 2048) {
    const double a = std::abs(std::cos(theta));
    const double b = std::abs(std::sin(theta));
    SplatTable t;
    t.quant = quant;
    t.w.resize(static_cast<std::size_t>(quant) * 4);
    for (std::uint32_t i = 0; i < quant; ++i) {
        const double f = (static_cast<double>(i) + 0.5) / quant;
        double edges[5];
        for (int k = 0; k < 5; ++k)
            edges[k] = conv_tri_cdf(static_cast<double>(k) - 1.5 - f, a, b);
        for (int k = 0; k < 4; ++k)
            t.w[static_cast<std::size_t>(i) * 4 + k] =
                static_cast<float>(std::max(0.0, edges[k + 1] - edges[k]));
    }
    return t;
}

/// Shared per-angle-count table registry; tables are immutable once built.
inline const std::vector<SplatTable>& splat_tables(std::uint32_t angles) {
    static std::mutex mutex;
    static std::unordered_map<std::uint32_t, std::unique_ptr<std::vector<SplatTable>>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(angles);
    if (it == cache.end()) {
        auto tables = std::make_unique<std::vector<SplatTable>>();
        tables->reserve(angles);
        for (std::uint32_t j = 0; j < angles; ++j)
            tables->push_back(build_splat_table(kPi * static_cast<double>(j) / angles));
        it = cache.emplace(angles, std::move(tables)).first;
    }
    return *it->second;
}

}  // namespace detail

/// Smallest odd bin count that keeps every splat of an image with the given
/// (odd) side inside the offset axis: the farthest pixel center projects to
/// c * sqrt(2) and its footprint reaches two bins past that.
inline std::uint32_t default_offset_bins(std::uint32_t side_pixels) {
    const double c = (static_cast<double>(side_pixels) - 1.0) / 2.0;
    const auto reach = static_cast<std::uint32_t>(std::floor(c * std::numbers::sqrt2_v<double>)) + 2;
    return 2 * reach + 1;
}

/// Discrete Radon transform of a square image: for each angle the pixel
/// values are deposited along the offset axis by table-driven splatting, so
/// every projection carries the full image mass.
inline Sinogram radon_transform(const CartesianImage& img, std::uint32_t angles = 180,
                                std::uint32_t offset_bins = 0) {
    if (img.side_pixels == 0 || img.side_pixels % 2 == 0)
        throw ParameterError("radon_transform: image side must be odd and positive");
    if (img.pixels.rows() != img.side_pixels || img.pixels.cols() != img.side_pixels)
        throw DimensionError("radon_transform: pixel matrix does not match side_pixels");
    if (angles == 0) throw ParameterError("radon_transform: angles must be positive");
    if (offset_bins == 0) offset_bins = default_offset_bins(img.side_pixels);
    if (offset_bins < default_offset_bins(img.side_pixels))
        throw ParameterError("radon_transform: offset_bins too small for this image side");

    const std::uint32_t side = img.side_pixels;
    const double c = img.center();
    const std::uint32_t half = (offset_bins - 1) / 2;
    const std::vector<detail::SplatTable>& tables = detail::splat_tables(angles);

    Sinogram sino;
    sino.offset_bins = offset_bins;
    sino.angles = angles;
    sino.values = Mat<double>(offset_bins, angles);

    std::vector<double> col(offset_bins);
    for (std::uint32_t j = 0; j < angles; ++j) {
        const double theta = sino.theta_of(j);
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        const detail::SplatTable& table = tables[j];
        std::fill(col.begin(), col.end(), 0.0);
        for (std::uint32_t iy = 0; iy < side; ++iy) {
            const double ty = (static_cast<double>(iy) - c) * st;
            const double* src = img.pixels.row(iy).data();
            for (std::uint32_t ix = 0; ix < side; ++ix) {
                const double v = src[ix];
                if (v == 0.0) continue;
                const double t = (static_cast<double>(ix) - c) * ct + ty;
                const double fm = std::floor(t);
                const float* w = table.row(t - fm);
                double* dst = col.data() + (static_cast<long>(fm) + half - 1);
                dst[0] += v * w[0];
                dst[1] += v * w[1];
                dst[2] += v * w[2];
                dst[3] += v * w[3];
            }
        }
        for (std::uint32_t i = 0; i < offset_bins; ++i) sino.values(i, j) = col[i];
    }
    return sino;
}

/// Sum of one projection column; equals the image mass for every angle.
inline double projection_mass(const Sinogram& sino, std::uint32_t angle_index) {
    if (angle_index >= sino.angles) throw IndexError("projection_mass: angle index out of range");
    double sum = 0.0;
    for (std::uint32_t i = 0; i < sino.offset_bins; ++i) sum += sino.values(i, angle_index);
    return sum;
}

}  // namespace sinoplace
