#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "sinoplace/common.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/rng.hpp"

namespace sinoplace {

struct Scatterer {
    double x = 0.0, y = 0.0;  // meters, scene frame
    double rcs = 1.0;         // amplitude in [0, 1]
    double radius = 2.0;      // Gaussian blob sigma, meters
};

struct Ring {
    std::uint32_t range_bin = 0;
    double amplitude = 0.0;
};

struct NoiseSpec {
    double speckle_sigma = 0.0;
    std::vector<Ring> rings;
    double saturation_prob = 0.0;

    void validate() const {
        if (speckle_sigma < 0.0) throw ParameterError("NoiseSpec: speckle_sigma must be >= 0");
        if (saturation_prob < 0.0 || saturation_prob > 1.0)
            throw ParameterError("NoiseSpec: saturation_prob must be in [0, 1]");
        for (const Ring& r : rings)
            if (r.amplitude < 0.0) throw ParameterError("NoiseSpec: ring amplitude must be >= 0");
    }
};

struct SceneSpec {
    std::uint64_t seed = 0;
    std::vector<Scatterer> scatterers;
    NoiseSpec noise;

    void validate() const {
        noise.validate();
        for (const Scatterer& s : scatterers) {
            if (s.rcs < 0.0 || s.rcs > 1.0) throw ParameterError("SceneSpec: rcs must be in [0, 1]");
            if (!(s.radius > 0.0)) throw ParameterError("SceneSpec: radius must be > 0");
        }
    }
};

struct ScanGeometry {
    std::uint32_t azimuths = 400;
    std::uint32_t range_bins = 200;
    double range_resolution = 1.0;
    std::int64_t timestamp = 0;

    double max_range() const { return range_bins * range_resolution; }
};

namespace detail {

inline std::uint64_t pose_stream_seed(std::uint64_t seed, const Pose& pose) {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    state ^= std::bit_cast<std::uint64_t>(pose.x);
    h ^= splitmix64(state);
    state ^= std::bit_cast<std::uint64_t>(pose.y);
    h ^= splitmix64(state);
    state ^= std::bit_cast<std::uint64_t>(pose.yaw);
    h ^= splitmix64(state);
    return h;
}

}  // namespace detail

/// Renders the scene as seen from `pose`. Deterministic in (scene, pose):
/// all noise draws come from a stream derived from the scene seed and the
/// pose bits. Scatterers deposit Gaussian blobs at their range/bearing,
/// rings add constant-amplitude circles, saturated beams rail to 1 after
/// speckle, and the result is clamped to [0, 1].
inline PolarScan render_polar(const SceneSpec& scene, const Pose& pose, const ScanGeometry& geom) {
    scene.validate();
    PolarScan scan;
    scan.azimuths = geom.azimuths;
    scan.range_bins = geom.range_bins;
    scan.range_resolution = geom.range_resolution;
    scan.timestamp = geom.timestamp;
    scan.intensities = Mat<float>(geom.azimuths, geom.range_bins);
    scan.validate();

    const double az_step = kTwoPi / geom.azimuths;
    const double res = geom.range_resolution;
    const double max_range = geom.max_range();
    std::size_t clipped = 0;

    Mat<double> field(geom.azimuths, geom.range_bins);
    for (const Scatterer& sc : scene.scatterers) {
        const double dx = sc.x - pose.x;
        const double dy = sc.y - pose.y;
        const double range = std::hypot(dx, dy);
        if (range > max_range) {
            ++clipped;
            continue;
        }
        const double bearing = wrap_two_pi(std::atan2(dy, dx) - pose.yaw);
        const double reach = 4.0 * sc.radius;
        const long g_lo = std::max(0L, static_cast<long>(std::floor((range - reach) / res)));
        const long g_hi = std::min(static_cast<long>(geom.range_bins) - 1,
                                   static_cast<long>(std::ceil((range + reach) / res)));
        long k_span;
        if (range <= reach) {
            k_span = geom.azimuths / 2;
        } else {
            const double half_angle = std::asin(std::min(1.0, reach / range));
            k_span = std::min<long>(geom.azimuths / 2,
                                    static_cast<long>(std::ceil(half_angle / az_step)) + 1);
        }
        const long k_center = std::lround(bearing / az_step);
        const double inv_two_sigma2 = 1.0 / (2.0 * sc.radius * sc.radius);
        for (long dk = -k_span; dk <= k_span; ++dk) {
            const long k = ((k_center + dk) % static_cast<long>(geom.azimuths) + geom.azimuths) %
                           geom.azimuths;
            const double beam = k * az_step;
            const double cos_d = std::cos(beam - bearing);
            for (long g = g_lo; g <= g_hi; ++g) {
                const double r = g * res;
                const double d2 = r * r + range * range - 2.0 * r * range * cos_d;
                if (d2 > reach * reach) continue;
                field(static_cast<std::size_t>(k), static_cast<std::size_t>(g)) +=
                    sc.rcs * std::exp(-d2 * inv_two_sigma2);
            }
        }
    }
    if (clipped > 0)
        std::cerr << "render_polar: clipped " << clipped << " scatterer(s) beyond max range\n";

    for (const Ring& ring : scene.noise.rings) {
        if (ring.range_bin >= geom.range_bins) continue;
        for (std::uint32_t k = 0; k < geom.azimuths; ++k) field(k, ring.range_bin) += ring.amplitude;
    }

    Rng base(detail::pose_stream_seed(scene.seed, pose));
    Rng speckle = base.fork(0x73706b6cULL);
    Rng saturation = base.fork(0x73617472ULL);
    if (scene.noise.speckle_sigma > 0.0) {
        for (std::uint32_t k = 0; k < geom.azimuths; ++k)
            for (std::uint32_t g = 0; g < geom.range_bins; ++g)
                field(k, g) *= std::max(0.0, 1.0 + speckle.normal(0.0, scene.noise.speckle_sigma));
    }
    if (scene.noise.saturation_prob > 0.0) {
        for (std::uint32_t k = 0; k < geom.azimuths; ++k)
            if (saturation.uniform() < scene.noise.saturation_prob)
                for (std::uint32_t g = 0; g < geom.range_bins; ++g) field(k, g) = 1.0;
    }

    for (std::uint32_t k = 0; k < geom.azimuths; ++k)
        for (std::uint32_t g = 0; g < geom.range_bins; ++g)
            scan.intensities(k, g) = static_cast<float>(std::clamp(field(k, g), 0.0, 1.0));
    return scan;
}

/// Uniformly scattered scene inside 80% of the sweep radius; blob sizes and
/// amplitudes drawn from fixed ranges so every seed gives a usable scene.
inline SceneSpec random_scene(std::uint64_t seed, double max_range, std::size_t scatterers = 30,
                              NoiseSpec noise = {}) {
    SceneSpec scene;
    scene.seed = seed;
    scene.noise = std::move(noise);
    Rng rng(splitmix64(seed) ^ 0x7363656eULL);
    scene.scatterers.reserve(scatterers);
    for (std::size_t i = 0; i < scatterers; ++i) {
        const double r = 0.8 * max_range * std::sqrt(rng.uniform());
        const double a = rng.uniform(0.0, kTwoPi);
        Scatterer s;
        s.x = r * std::cos(a);
        s.y = r * std::sin(a);
        s.rcs = rng.uniform(0.3, 1.0);
        s.radius = rng.uniform(1.5, 4.0);
        scene.scatterers.push_back(s);
    }
    return scene;
}

inline std::vector<Pose> circle_waypoints(std::size_t count, double radius) {
    std::vector<Pose> poses;
    poses.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(count);
        poses.push_back({radius * std::cos(t), radius * std::sin(t), wrap_pi(t + kPi / 2.0)});
    }
    return poses;
}

inline std::vector<Pose> figure_eight_waypoints(std::size_t count, double radius) {
    std::vector<Pose> poses;
    poses.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(count);
        const double x = radius * std::sin(t);
        const double y = radius * std::sin(t) * std::cos(t);
        const double dx = radius * std::cos(t);
        const double dy = radius * std::cos(2.0 * t);
        poses.push_back({x, y, wrap_pi(std::atan2(dy, dx))});
    }
    return poses;
}

struct TrajectoryDataset {
    std::filesystem::path scan_dir;
    std::vector<std::filesystem::path> scan_paths;
    std::filesystem::path pose_path;
    std::filesystem::path pairs_path;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> revisit_pairs;
};

/// Renders one scan per waypoint into `dir/scans`, writes the pose CSV, and
/// records revisit pairs (pose distance within boundary_m, frame gap beyond
/// exclusion_window) for evaluation ground truth. Fully deterministic, so a
/// rerun with the same inputs reproduces every byte.
inline TrajectoryDataset make_trajectory_dataset(const SceneSpec& scene,
                                                 const std::vector<Pose>& waypoints,
                                                 const ScanGeometry& geom,
                                                 const std::filesystem::path& dir,
                                                 double boundary_m = 20.0,
                                                 std::uint32_t exclusion_window = 0) {
    if (waypoints.empty()) throw ParameterError("make_trajectory_dataset: no waypoints");
    for (const Pose& p : waypoints)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.yaw))
            throw ParameterError("make_trajectory_dataset: waypoints must be finite");

    TrajectoryDataset ds;
    ds.scan_dir = dir / "scans";
    std::filesystem::create_directories(ds.scan_dir);

    std::vector<PoseRecord> records;
    records.reserve(waypoints.size());
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        ScanGeometry g = geom;
        g.timestamp = static_cast<std::int64_t>(i);
        const PolarScan scan = render_polar(scene, waypoints[i], g);
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.rps1", i);
        const std::filesystem::path path = ds.scan_dir / name;
        write_scan(scan, path);
        ds.scan_paths.push_back(path);
        records.push_back(
            {static_cast<std::int64_t>(i), waypoints[i].x, waypoints[i].y, waypoints[i].yaw});
    }
    ds.pose_path = dir / "poses.csv";
    write_poses(records, ds.pose_path);

    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        for (std::size_t j = 0; j < waypoints.size(); ++j) {
            if (i == j) continue;
            const std::size_t gap = i > j ? i - j : j - i;
            if (gap <= exclusion_window) continue;
            const double dist = std::hypot(waypoints[i].x - waypoints[j].x,
                                           waypoints[i].y - waypoints[j].y);
            if (dist <= boundary_m) ds.revisit_pairs.emplace_back(i, j);
        }
    }
    ds.pairs_path = dir / "pairs.csv";
    std::ofstream out(ds.pairs_path);
    if (!out) throw Error("make_trajectory_dataset: cannot write " + ds.pairs_path.string());
    out << "query,candidate\n";
    for (const auto& [q, c] : ds.revisit_pairs) out << q << "," << c << "\n";
    return ds;
}

}  // namespace sinoplace
