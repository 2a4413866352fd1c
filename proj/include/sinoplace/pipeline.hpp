#pragma once

#include <cstdint>

#include "sinoplace/descriptor.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/radon.hpp"
#include "sinoplace/warp.hpp"

namespace sinoplace {

/// End-to-end settings for turning a polar scan into descriptors.
struct PipelineConfig {
    std::uint32_t side_pixels = 401;
    double meters_per_pixel = 1.0;
    double max_range = 0.0;      // 0 = use the scan's own sweep radius
    std::uint32_t n_theta = 180;
    std::uint32_t offset_bins = 0;  // 0 = derived from side_pixels
    std::uint32_t coarse_factor = 4;

    void validate() const {
        if (side_pixels == 0 || side_pixels % 2 == 0)
            throw ParameterError("PipelineConfig: side_pixels must be odd and positive");
        if (!(meters_per_pixel > 0.0))
            throw ParameterError("PipelineConfig: meters_per_pixel must be > 0");
        if (max_range < 0.0) throw ParameterError("PipelineConfig: max_range must be >= 0");
        if (n_theta == 0) throw ParameterError("PipelineConfig: n_theta must be positive");
        if (coarse_factor < 1) throw ParameterError("PipelineConfig: coarse_factor must be >= 1");
    }

    std::uint32_t fine_bins() const {
        return offset_bins ? offset_bins : default_offset_bins(side_pixels);
    }

    GridSpec grid_for(const PolarScan& scan) const {
        GridSpec g;
        g.side_pixels = side_pixels;
        g.meters_per_pixel = meters_per_pixel;
        g.max_range = max_range > 0.0 ? max_range : scan.max_range();
        g.validate();
        return g;
    }
};

struct DescriptorPair {
    RadarDescriptor fine;
    RadarDescriptor coarse;
};

/// scan -> Cartesian image -> sinogram -> fine descriptor, plus the
/// l-downsampled coarse descriptor for the preselection pass.
inline DescriptorPair describe_scan(const PolarScan& scan, const PipelineConfig& cfg,
                                    std::uint64_t source_id = 0) {
    cfg.validate();
    const CartesianImage img = backward_warp(scan, cfg.grid_for(scan));
    const Sinogram fine = radon_transform(img, cfg.n_theta, cfg.offset_bins);
    DescriptorPair out;
    out.fine = make_descriptor(fine, source_id, ResolutionTag::fine);
    if (cfg.coarse_factor > 1) {
        const Sinogram coarse = downsample_sinogram(fine, cfg.coarse_factor);
        out.coarse = make_descriptor(coarse, source_id, ResolutionTag::coarse);
    } else {
        out.coarse = out.fine;
    }
    return out;
}

}  // namespace sinoplace
