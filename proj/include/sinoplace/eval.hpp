#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <vector>

#include "sinoplace/common.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/matcher.hpp"
#include "sinoplace/pipeline.hpp"
#include "sinoplace/synth.hpp"

namespace sinoplace {

enum class GtMode { intra, multi };

/// Positive pairs under a pose-distance boundary. Intra-session mode also
/// requires the frame gap to exceed the exclusion window.
struct LoopGroundTruth {
    double boundary_m = 20.0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;  // sorted (query, candidate)
    std::vector<char> covered;                                   // per frame: has any pair

    bool contains(std::uint64_t query, std::uint64_t candidate) const {
        return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(query, candidate));
    }
    bool query_covered(std::uint64_t query) const {
        return query < covered.size() && covered[query] != 0;
    }
};

inline LoopGroundTruth build_ground_truth(const std::vector<Pose>& poses, double boundary_m,
                                          GtMode mode, std::uint32_t exclusion_window) {
    if (poses.empty()) throw ParameterError("build_ground_truth: empty poses");
    LoopGroundTruth gt;
    gt.boundary_m = boundary_m;
    gt.covered.assign(poses.size(), 0);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        for (std::size_t j = 0; j < poses.size(); ++j) {
            if (i == j) continue;
            if (mode == GtMode::intra) {
                const std::size_t gap = i > j ? i - j : j - i;
                if (gap <= exclusion_window) continue;
            }
            const double dist = std::hypot(poses[i].x - poses[j].x, poses[i].y - poses[j].y);
            if (dist <= boundary_m) {
                gt.pairs.emplace_back(i, j);
                gt.covered[i] = 1;
            }
        }
    }
    return gt;
}

/// Top-1 retrieval outcome for one query.
struct QueryResult {
    std::uint64_t query = 0;
    std::uint64_t predicted = 0;
    double d = 0.0;
};

struct ThresholdSweep {
    std::uint32_t count = 200;            // evenly spaced over [0, max observed d]
    std::vector<double> explicit_values;  // non-empty overrides count
};

enum class QueryLabel { tp, fp, fn, tn };

inline const char* label_name(QueryLabel l) {
    switch (l) {
        case QueryLabel::tp: return "TP";
        case QueryLabel::fp: return "FP";
        case QueryLabel::fn: return "FN";
        default: return "TN";
    }
}

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct QueryRecord {
    std::uint64_t query = 0;
    std::uint64_t predicted = 0;
    double d = 0.0;
    QueryLabel label = QueryLabel::tn;
};

struct EvalReport {
    std::vector<PrPoint> pr_points;  // sorted by recall; undefined sweep points omitted
    std::optional<double> auc;
    double max_f1 = 0.0;
    std::optional<double> max_f1_threshold;
    std::optional<double> recall_at_1;      // over queries with at least one positive pair
    std::optional<double> tp_detection_rate;  // recall at the max-F1 threshold
    std::size_t gt_covered_queries = 0;
    std::vector<QueryRecord> records;       // labeled at the max-F1 threshold
};

/// Sweeps a distance threshold over the per-query results: a prediction is
/// positive when d <= t and a true positive when ground truth lists the
/// (query, predicted) pair. Recall divides by the number of queries that
/// have any ground-truth pair; AUC integrates precision over recall with
/// the curve extended to recall 0 at the first point's precision.
inline EvalReport evaluate(const std::vector<QueryResult>& results, const LoopGroundTruth& gt,
                           const ThresholdSweep& sweep = {}) {
    if (sweep.explicit_values.empty() && sweep.count == 0)
        throw ParameterError("evaluate: empty threshold sweep");

    EvalReport report;
    std::size_t covered = 0;
    for (const QueryResult& r : results)
        if (gt.query_covered(r.query)) ++covered;
    report.gt_covered_queries = covered;

    std::vector<double> thresholds = sweep.explicit_values;
    if (thresholds.empty()) {
        double max_d = 0.0;
        for (const QueryResult& r : results) max_d = std::max(max_d, r.d);
        thresholds.reserve(sweep.count);
        if (sweep.count == 1) {
            thresholds.push_back(max_d);
        } else {
            for (std::uint32_t i = 0; i < sweep.count; ++i)
                thresholds.push_back(max_d * static_cast<double>(i) /
                                     static_cast<double>(sweep.count - 1));
        }
    }
    std::sort(thresholds.begin(), thresholds.end());

    for (const double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (const QueryResult& r : results) {
            if (r.d > t) continue;
            if (gt.contains(r.query, r.predicted))
                ++tp;
            else
                ++fp;
        }
        if (tp + fp == 0 || covered == 0) continue;  // precision or recall undefined
        PrPoint p;
        p.threshold = t;
        p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        p.recall = static_cast<double>(tp) / static_cast<double>(covered);
        p.f1 = (p.precision + p.recall > 0.0)
                   ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
                   : 0.0;
        report.pr_points.push_back(p);
    }
    std::stable_sort(report.pr_points.begin(), report.pr_points.end(),
                     [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });

    if (!report.pr_points.empty()) {
        double auc = 0.0;
        double prev_r = 0.0;
        double prev_p = report.pr_points.front().precision;  // extend curve to recall 0
        for (const PrPoint& p : report.pr_points) {
            auc += (p.recall - prev_r) * 0.5 * (p.precision + prev_p);
            prev_r = p.recall;
            prev_p = p.precision;
        }
        report.auc = auc;
        const auto best = std::max_element(
            report.pr_points.begin(), report.pr_points.end(),
            [](const PrPoint& a, const PrPoint& b) { return a.f1 < b.f1; });
        report.max_f1 = best->f1;
        report.max_f1_threshold = best->threshold;
        report.tp_detection_rate = best->recall;
    }

    if (covered > 0) {
        std::size_t hit = 0;
        for (const QueryResult& r : results)
            if (gt.query_covered(r.query) && gt.contains(r.query, r.predicted)) ++hit;
        report.recall_at_1 = static_cast<double>(hit) / static_cast<double>(covered);
    }

    report.records.reserve(results.size());
    for (const QueryResult& r : results) {
        QueryRecord rec{r.query, r.predicted, r.d, QueryLabel::tn};
        const bool hit = gt.contains(r.query, r.predicted);
        const bool positive = report.max_f1_threshold && r.d <= *report.max_f1_threshold;
        if (positive)
            rec.label = hit ? QueryLabel::tp : QueryLabel::fp;
        else
            rec.label = gt.query_covered(r.query) ? QueryLabel::fn : QueryLabel::tn;
        report.records.push_back(rec);
    }
    return report;
}

inline void write_pr_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_pr_csv: cannot write " + path.string());
    out << "threshold,precision,recall,f1\n";
    char line[160];
    for (const PrPoint& p : report.pr_points) {
        std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g\n", p.threshold, p.precision,
                      p.recall, p.f1);
        out << line;
    }
}

/// Writes (x, y, label) rows for every TP/FN/FP query of the report;
/// optionally renders the same points over the trajectory as an SVG.
inline void export_tp_trajectory(const EvalReport& report, const std::vector<Pose>& poses,
                                 const std::filesystem::path& csv_path,
                                 const std::filesystem::path& svg_path = {}) {
    std::ofstream out(csv_path);
    if (!out) throw Error("export_tp_trajectory: cannot write " + csv_path.string());
    out << "x,y,label\n";
    char line[128];
    for (const QueryRecord& r : report.records) {
        if (r.label == QueryLabel::tn) continue;
        if (r.query >= poses.size())
            throw IndexError("export_tp_trajectory: query index outside pose list");
        std::snprintf(line, sizeof line, "%.9f,%.9f,%s\n", poses[r.query].x, poses[r.query].y,
                      label_name(r.label));
        out << line;
    }
    out.close();

    if (svg_path.empty()) return;
    double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
    if (!poses.empty()) {
        min_x = max_x = poses.front().x;
        min_y = max_y = poses.front().y;
        for (const Pose& p : poses) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double scale = 500.0 / span;
    const double pad = 20.0;
    auto sx = [&](double x) { return pad + (x - min_x) * scale; };
    auto sy = [&](double y) { return pad + (max_y - y) * scale; };

    std::ofstream svg(svg_path);
    if (!svg) throw Error("export_tp_trajectory: cannot write " + svg_path.string());
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"540\" height=\"540\">\n";
    svg << "<polyline fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\" points=\"";
    for (const Pose& p : poses) {
        std::snprintf(line, sizeof line, "%.2f,%.2f ", sx(p.x), sy(p.y));
        svg << line;
    }
    svg << "\"/>\n";
    for (const QueryRecord& r : report.records) {
        if (r.label == QueryLabel::tn) continue;
        const char* color = r.label == QueryLabel::tp   ? "#2c7a2c"
                            : r.label == QueryLabel::fn ? "#c23030"
                                                        : "#d98419";
        std::snprintf(line, sizeof line,
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n",
                      sx(poses[r.query].x), sy(poses[r.query].y), color);
        svg << line;
    }
    svg << "</svg>\n";
}

/// One transformed-candidate measurement: kind is 'r' (rotation, degrees)
/// or 'x'/'y' (translation, pixels); normalized divides by the
/// unrelated-scene distance.
struct SensitivityPoint {
    char kind = 'r';
    double amount = 0.0;
    double d = 0.0;
    double normalized = 0.0;
};

struct SensitivityCurves {
    double unrelated_d = 0.0;
    std::vector<SensitivityPoint> points;
};

struct SweepConfig {
    std::uint32_t image_side = 287;  // full rendered image (odd)
    std::uint32_t query_side = 201;  // crop evaluated by the matcher (odd)
    double meters_per_pixel = 1.0;
    std::uint32_t n_theta = 180;
    std::uint64_t seed = 1;          // derives the unrelated reference scene

    void validate() const {
        if (image_side % 2 == 0 || query_side % 2 == 0 || query_side == 0)
            throw ParameterError("SweepConfig: sides must be odd");
        if (query_side >= image_side)
            throw ParameterError("SweepConfig: query_side must be smaller than image_side");
        if (!(meters_per_pixel > 0.0))
            throw ParameterError("SweepConfig: meters_per_pixel must be > 0");
        if (n_theta == 0) throw ParameterError("SweepConfig: n_theta must be positive");
    }
};

/// Rotates and translates the scan's Cartesian image, scoring each variant
/// against the untouched center crop. Distances are reported raw and
/// normalized by the distance to an independently generated scene; staying
/// under 1.0 means the transform is closer than a different place.
inline SensitivityCurves sensitivity_sweep(const PolarScan& scan,
                                           const std::vector<double>& rotations_deg,
                                           const std::vector<long>& translations_px,
                                           const SweepConfig& cfg = {}) {
    cfg.validate();
    scan.validate();
    const long margin = (static_cast<long>(cfg.image_side) - static_cast<long>(cfg.query_side)) / 2;
    for (const long t : translations_px)
        if (std::labs(t) > margin)
            throw ParameterError("sensitivity_sweep: translation exceeds the rendered margin");

    GridSpec grid;
    grid.side_pixels = cfg.image_side;
    grid.meters_per_pixel = cfg.meters_per_pixel;
    grid.max_range = scan.max_range();
    grid.validate();
    const CartesianImage full = backward_warp(scan, grid);
    const CartesianImage query_img = crop_center(full, cfg.query_side);
    const RadarDescriptor query = make_descriptor(radon_transform(query_img, cfg.n_theta));

    auto describe = [&](const CartesianImage& img) {
        return make_descriptor(radon_transform(img, cfg.n_theta));
    };

    SensitivityCurves curves;

    ScanGeometry geom;
    geom.azimuths = scan.azimuths;
    geom.range_bins = scan.range_bins;
    geom.range_resolution = scan.range_resolution;
    const SceneSpec unrelated_scene =
        random_scene(cfg.seed ^ 0x756e72656c617465ULL, geom.max_range());
    const PolarScan unrelated = render_polar(unrelated_scene, Pose{0.0, 0.0, 0.0}, geom);
    const CartesianImage unrelated_full = backward_warp(unrelated, grid);
    const RadarDescriptor unrelated_desc = describe(crop_center(unrelated_full, cfg.query_side));
    curves.unrelated_d = similarity_distance(query, unrelated_desc).d;

    auto normalized = [&](double d) {
        if (curves.unrelated_d > 0.0) return d / curves.unrelated_d;
        return d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    };

    for (const double deg : rotations_deg) {
        const CartesianImage rotated = rotate_about_center(full, deg * kPi / 180.0);
        const double d = similarity_distance(query, describe(crop_center(rotated, cfg.query_side))).d;
        curves.points.push_back({'r', deg, d, normalized(d)});
    }
    for (const long px : translations_px) {
        const double dx =
            similarity_distance(query, describe(crop_center(full, cfg.query_side, px, 0))).d;
        curves.points.push_back({'x', static_cast<double>(px), dx, normalized(dx)});
        const double dy =
            similarity_distance(query, describe(crop_center(full, cfg.query_side, 0, px))).d;
        curves.points.push_back({'y', static_cast<double>(px), dy, normalized(dy)});
    }
    return curves;
}

}  // namespace sinoplace
