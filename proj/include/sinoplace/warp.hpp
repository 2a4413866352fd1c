#pragma once

#include <cmath>
#include <cstdint>

#include "sinoplace/common.hpp"
#include "sinoplace/ingest.hpp"

namespace sinoplace {

/// Square Cartesian target grid with the sensor at the exact center pixel
/// (hence the odd side). Pixels whose center lies beyond max_range stay 0.
struct GridSpec {
    std::uint32_t side_pixels = 401;
    double meters_per_pixel = 1.0;
    double max_range = 200.0;

    static GridSpec for_scan(const PolarScan& scan, std::uint32_t side = 401,
                             double meters_per_pixel = 1.0) {
        GridSpec g;
        g.side_pixels = side;
        g.meters_per_pixel = meters_per_pixel;
        g.max_range = scan.max_range();
        g.validate();
        return g;
    }

    void validate() const {
        if (side_pixels == 0 || side_pixels % 2 == 0)
            throw ParameterError("GridSpec: side_pixels must be odd and positive");
        if (!(meters_per_pixel > 0.0)) throw ParameterError("GridSpec: meters_per_pixel must be > 0");
        if (!(max_range > 0.0)) throw ParameterError("GridSpec: max_range must be > 0");
    }

    double center() const { return (static_cast<double>(side_pixels) - 1.0) / 2.0; }
};

/// Backward-warped radar image f(x, y). Row index is y, column index is x;
/// pixel (iy, ix) sits at ((ix - c) * mpp, (iy - c) * mpp) in the sensor
/// frame with c the center index.
struct CartesianImage {
    std::uint32_t side_pixels = 0;
    double meters_per_pixel = 1.0;
    double max_range = 0.0;
    Mat<double> pixels;

    double center() const { return (static_cast<double>(side_pixels) - 1.0) / 2.0; }
    double total_mass() const {
        double sum = 0.0;
        for (std::size_t i = 0; i < pixels.size(); ++i) sum += pixels.data()[i];
        return sum;
    }
};

/// Bilinear lookup in pixel coordinates; zero outside the sampled image.
inline double sample_bilinear(const Mat<double>& img, double col, double row) {
    if (col <= -1.0 || row <= -1.0 || col >= static_cast<double>(img.cols()) ||
        row >= static_cast<double>(img.rows()))
        return 0.0;
    const double fc = std::floor(col);
    const double fr = std::floor(row);
    const long c0 = static_cast<long>(fc);
    const long r0 = static_cast<long>(fr);
    const double wc = col - fc;
    const double wr = row - fr;
    auto at = [&](long r, long c) -> double {
        if (r < 0 || c < 0 || r >= static_cast<long>(img.rows()) || c >= static_cast<long>(img.cols()))
            return 0.0;
        return img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    return (1.0 - wr) * ((1.0 - wc) * at(r0, c0) + wc * at(r0, c0 + 1)) +
           wr * ((1.0 - wc) * at(r0 + 1, c0) + wc * at(r0 + 1, c0 + 1));
}

/// Fills `out` (already sized side x side) so that every pixel receives a
/// value: bilinear interpolation of the polar scan at the pixel's range and
/// bearing inside the max-range disc, exactly 0 outside it. Azimuth wraps,
/// range clamps at the outer bin.
inline void backward_warp_into(const PolarScan& scan, const GridSpec& grid, Mat<double>& out) {
    const std::uint32_t side = grid.side_pixels;
    const double c = grid.center();
    const double mpp = grid.meters_per_pixel;
    const double az_per_rad = static_cast<double>(scan.azimuths) / kTwoPi;
    const std::uint32_t az = scan.azimuths;
    const std::uint32_t rb = scan.range_bins;
    const Mat<float>& polar = scan.intensities;

    for (std::uint32_t iy = 0; iy < side; ++iy) {
        const double y = (static_cast<double>(iy) - c) * mpp;
        for (std::uint32_t ix = 0; ix < side; ++ix) {
            const double x = (static_cast<double>(ix) - c) * mpp;
            const double r = std::hypot(x, y);
            if (r > grid.max_range) {
                out(iy, ix) = 0.0;
                continue;
            }
            const double bearing = wrap_two_pi(std::atan2(y, x));
            const double a = bearing * az_per_rad;
            std::uint32_t a0 = static_cast<std::uint32_t>(a);
            if (a0 >= az) a0 = 0;  // bearing rounding at exactly 2*pi
            const std::uint32_t a1 = (a0 + 1) % az;
            const double wa = a - static_cast<double>(a0);

            const double g = r / scan.range_resolution;
            std::uint32_t g0 = static_cast<std::uint32_t>(g);
            double wg = g - static_cast<double>(g0);
            if (g0 >= rb - 1) {
                g0 = rb - 1;
                wg = 0.0;
            }
            const std::uint32_t g1 = (g0 + 1 < rb) ? g0 + 1 : rb - 1;

            const double v00 = polar(a0, g0);
            const double v01 = polar(a0, g1);
            const double v10 = polar(a1, g0);
            const double v11 = polar(a1, g1);
            out(iy, ix) = (1.0 - wa) * ((1.0 - wg) * v00 + wg * v01) +
                          wa * ((1.0 - wg) * v10 + wg * v11);
        }
    }
}

inline CartesianImage backward_warp(const PolarScan& scan, const GridSpec& grid) {
    scan.validate();
    grid.validate();
    CartesianImage img;
    img.side_pixels = grid.side_pixels;
    img.meters_per_pixel = grid.meters_per_pixel;
    img.max_range = grid.max_range;
    img.pixels = Mat<double>(grid.side_pixels, grid.side_pixels);
    backward_warp_into(scan, grid, img.pixels);
    return img;
}

/// Scatter-style conversion kept as a reference: each polar sample lands on
/// its nearest Cartesian pixel, collisions keep the maximum. Demonstrates
/// the hole pattern that backward warping avoids; not used by the pipeline.
inline CartesianImage forward_warp_reference(const PolarScan& scan, const GridSpec& grid) {
    scan.validate();
    grid.validate();
    CartesianImage img;
    img.side_pixels = grid.side_pixels;
    img.meters_per_pixel = grid.meters_per_pixel;
    img.max_range = grid.max_range;
    img.pixels = Mat<double>(grid.side_pixels, grid.side_pixels);
    const double c = grid.center();
    for (std::uint32_t k = 0; k < scan.azimuths; ++k) {
        const double bearing = scan.azimuth_of(k);
        const double cx = std::cos(bearing);
        const double sy = std::sin(bearing);
        for (std::uint32_t g = 0; g < scan.range_bins; ++g) {
            const double r = static_cast<double>(g) * scan.range_resolution;
            if (r > grid.max_range) break;
            const long ix = std::lround(r * cx / grid.meters_per_pixel + c);
            const long iy = std::lround(r * sy / grid.meters_per_pixel + c);
            if (ix < 0 || iy < 0 || ix >= static_cast<long>(grid.side_pixels) ||
                iy >= static_cast<long>(grid.side_pixels))
                continue;
            double& cell = img.pixels(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            cell = std::max(cell, static_cast<double>(scan.intensities(k, g)));
        }
    }
    return img;
}

/// Resamples the image rotated by `angle` radians counterclockwise about the
/// grid center (bilinear, zero fill).
inline CartesianImage rotate_about_center(const CartesianImage& img, double angle) {
    CartesianImage out;
    out.side_pixels = img.side_pixels;
    out.meters_per_pixel = img.meters_per_pixel;
    out.max_range = img.max_range;
    out.pixels = Mat<double>(img.side_pixels, img.side_pixels);
    const double c = img.center();
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (std::uint32_t iy = 0; iy < img.side_pixels; ++iy) {
        const double y = static_cast<double>(iy) - c;
        for (std::uint32_t ix = 0; ix < img.side_pixels; ++ix) {
            const double x = static_cast<double>(ix) - c;
            // inverse rotation back into the source frame
            const double sx = ca * x + sa * y;
            const double sy = -sa * x + ca * y;
            out.pixels(iy, ix) = sample_bilinear(img.pixels, sx + c, sy + c);
        }
    }
    return out;
}

/// Extracts an odd-sided crop whose center sits offset_x/offset_y pixels
/// from the source center. The requested window must lie inside the source.
inline CartesianImage crop_center(const CartesianImage& img, std::uint32_t side, long offset_x = 0,
                                  long offset_y = 0) {
    if (side == 0 || side % 2 == 0) throw ParameterError("crop_center: side must be odd");
    const long c_src = (static_cast<long>(img.side_pixels) - 1) / 2;
    const long half = (static_cast<long>(side) - 1) / 2;
    const long x0 = c_src + offset_x - half;
    const long y0 = c_src + offset_y - half;
    if (x0 < 0 || y0 < 0 || x0 + static_cast<long>(side) > static_cast<long>(img.side_pixels) ||
        y0 + static_cast<long>(side) > static_cast<long>(img.side_pixels))
        throw RangeError("crop_center: window leaves the source image");
    CartesianImage out;
    out.side_pixels = side;
    out.meters_per_pixel = img.meters_per_pixel;
    out.max_range = img.max_range;
    out.pixels = Mat<double>(side, side);
    for (std::uint32_t iy = 0; iy < side; ++iy)
        for (std::uint32_t ix = 0; ix < side; ++ix)
            out.pixels(iy, ix) = img.pixels(static_cast<std::size_t>(y0) + iy,
                                            static_cast<std::size_t>(x0) + ix);
    return out;
}

}  // namespace sinoplace
