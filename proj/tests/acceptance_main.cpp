// Acceptance gates for the toolkit. Each numbered criterion prints exactly
// one [PASS]/[FAIL]/[SKIP] line; the exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sinoplace/sinoplace.hpp"

using namespace sinoplace;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int n, const char* label, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s", ok ? "PASS" : "FAIL", n, label);
    if (!detail.empty()) std::printf(" (%s)", detail.c_str());
    std::printf("\n");
    std::fflush(stdout);
    if (!ok) ++failures;
}

void skip(int n, const char* label, const std::string& detail) {
    std::printf("[SKIP] criterion %d: %s (%s)\n", n, label, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// 1: the frequency-domain correlation agrees with the quadratic-time spatial
// sum on random sinograms across sizes, and the whole check stays under a
// minute.
void criterion_1() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const std::uint32_t n_l : {8u, 64u, 181u}) {
        for (const std::uint32_t n_theta : {4u, 180u}) {
            for (std::uint64_t seed = 0; seed < 50; ++seed) {
                Rng rng(seed * 6007 + n_l * 131 + n_theta);
                const Sinogram q = oracle::random_sinogram(rng, n_l, n_theta);
                const Sinogram c = oracle::random_sinogram(rng, n_l, n_theta);
                const CorrelationArray got =
                    cross_correlate(make_descriptor(q), make_descriptor(c));
                const std::vector<double> want = oracle::spatial_cross_correlation(q, c);
                double scale = 0.0;
                for (double w : want) scale = std::max(scale, std::abs(w));
                for (std::uint32_t m = 0; m < n_l; ++m)
                    worst = std::max(worst, std::abs(got.values[m] - want[m]) / scale);
            }
        }
    }
    const double elapsed = seconds_since(t0);
    report(1, "correlation matches the spatial reference", worst <= 1e-6 && elapsed < 60.0,
           fmt("max rel err %.2e, %.1fs", worst, elapsed));
}

// 2: a single bright pixel traces the sinusoid x*cos(theta) + y*sin(theta)
// through the sinogram.
void criterion_2() {
    const std::uint32_t side = 201;
    const std::uint32_t n_theta = 180;
    const long c = (side - 1) / 2;
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const long px = static_cast<long>(std::floor(rng.uniform(-70.0, 70.0)));
        const long py = static_cast<long>(std::floor(rng.uniform(-70.0, 70.0)));
        CartesianImage img;
        img.side_pixels = side;
        img.meters_per_pixel = 1.0;
        img.max_range = static_cast<double>(c);
        img.pixels = Mat<double>(side, side);
        img.pixels(static_cast<std::size_t>(c + py), static_cast<std::size_t>(c + px)) = 1.0;
        const Sinogram sino = radon_transform(img, n_theta);
        for (std::uint32_t j = 0; j < n_theta; ++j) {
            const double theta = sino.theta_of(j);
            const double expected = px * std::cos(theta) + py * std::sin(theta);
            std::uint32_t best = 0;
            for (std::uint32_t i = 1; i < sino.offset_bins; ++i)
                if (sino.values(i, j) > sino.values(best, j)) best = i;
            worst = std::max(worst, std::abs(sino.offset_of(best) - expected));
        }
    }
    report(2, "impulse peaks follow the projection sinusoid", worst <= 1.0,
           fmt("max |argmax offset| error %.3f samples", worst));
}

// 3: every projection angle conserves the image mass within 2%.
void criterion_3() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(300 + seed);
        const CartesianImage img = oracle::random_image(rng, 101);
        const double mass = img.total_mass();
        const Sinogram sino = radon_transform(img, 60);
        for (std::uint32_t j = 0; j < sino.angles; ++j)
            worst = std::max(worst, std::abs(projection_mass(sino, j) - mass) / mass);
    }
    report(3, "projection mass is conserved at every angle", worst <= 0.02,
           fmt("max rel mass error %.2e", worst));
}

PipelineConfig scene_pipeline() {
    PipelineConfig cfg;
    cfg.side_pixels = 201;
    cfg.meters_per_pixel = 2.0;
    cfg.n_theta = 180;
    cfg.coarse_factor = 4;
    return cfg;
}

ScanGeometry scene_geometry() {
    ScanGeometry geom;
    geom.azimuths = 200;
    geom.range_bins = 100;
    geom.range_resolution = 2.0;
    return geom;
}

// 4: after a store round trip, every frame matched against the store finds
// itself at distance exactly zero.
void criterion_4() {
    const SceneSpec scene = random_scene(44, 150.0, 25);
    const std::vector<Pose> waypoints = circle_waypoints(100, 30.0);
    const ScanGeometry geom = scene_geometry();
    const PipelineConfig cfg = scene_pipeline();

    const fs::path dir = fs::temp_directory_path() / "sinoplace_acceptance";
    fs::create_directories(dir);
    const fs::path fine_path = dir / "self.fine.rpdb";
    {
        StoreWriter w(fine_path, cfg.n_theta, cfg.fine_bins(), ResolutionTag::fine);
        for (std::size_t i = 0; i < waypoints.size(); ++i) {
            ScanGeometry g = geom;
            g.timestamp = static_cast<std::int64_t>(i);
            const PolarScan scan = render_polar(scene, waypoints[i], g);
            w.append(describe_scan(scan, cfg, i).fine);
        }
        w.finish();
    }
    const DescriptorStore store = read_store(fine_path);

    RetrievalConfig flat;
    flat.coarse_factor = 1;
    Retriever r(flat);
    for (const RadarDescriptor& d : store.frames) r.add_frame(d, d);

    std::size_t exact = 0;
    double worst_d = 0.0;
    for (std::size_t i = 0; i < store.frames.size(); ++i) {
        const MatchResult res = r.retrieve_exhaustive(store.frames[i]);
        if (res.best_index == i && res.best_distance.d == 0.0) ++exact;
        worst_d = std::max(worst_d, res.best_distance.d);
    }
    report(4, "every stored frame self-matches at distance zero",
           exact == store.frames.size(),
           fmt("%zu/100 exact, worst best-d %.3g", exact, worst_d));
}

// 5: rotated copies stay closer than an unrelated scene on at least 95% of
// the rotation sweep and translated copies up to 10 px on at least 90%.
void criterion_5() {
    std::vector<double> rotations;
    for (int deg = 0; deg < 360; deg += 10) rotations.push_back(deg);
    const std::vector<long> translations = {2, 4, 6, 8, 10};

    int rot_pass = 0, rot_total = 0, tr_pass = 0, tr_total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScanGeometry geom;
        geom.azimuths = 400;
        geom.range_bins = 144;
        geom.range_resolution = 1.0;
        // Dense scenes model real radar clutter; the summed-angle correlation
        // needs extended structure for its statistical rotation robustness.
        const PolarScan scan =
            render_polar(random_scene(seed * 7 + 1, 144.0, 90), {0.0, 0.0, 0.0}, geom);
        SweepConfig cfg;
        cfg.seed = 1000 + seed;
        const SensitivityCurves curves =
            sensitivity_sweep(scan, rotations, translations, cfg);
        for (const SensitivityPoint& p : curves.points) {
            if (p.kind == 'r') {
                ++rot_total;
                if (p.normalized < 1.0) ++rot_pass;
            } else {
                ++tr_total;
                if (p.normalized < 1.0) ++tr_pass;
            }
        }
    }
    const bool ok = rot_pass * 100 >= rot_total * 95 && tr_pass * 100 >= tr_total * 90;
    report(5, "transform sweeps stay below the unrelated-scene distance", ok,
           fmt("rotations %d/%d, translations %d/%d", rot_pass, rot_total, tr_pass, tr_total));
}

struct NoisyLoopData {
    std::vector<QueryResult> results;
    LoopGroundTruth gt;
    std::size_t agree = 0;
    double max_gap = 0.0;
    std::size_t queries = 0;
};

// Shared by criteria 6 and 7: a noisy 100-frame loop, 100 perturbed queries,
// scored hierarchically and exhaustively.
NoisyLoopData run_noisy_loop() {
    SceneSpec scene = random_scene(4242, 150.0, 30);
    scene.noise.rings.push_back({60, 0.5});
    scene.noise.speckle_sigma = 0.2;

    const std::vector<Pose> waypoints = circle_waypoints(100, 30.0);
    const ScanGeometry geom = scene_geometry();
    const PipelineConfig pcfg = scene_pipeline();

    RetrievalConfig rcfg;
    rcfg.coarse_factor = 4;
    rcfg.coarse_top_k = 10;
    rcfg.neighbor_window = 5;
    Retriever retriever(rcfg);

    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        ScanGeometry g = geom;
        g.timestamp = static_cast<std::int64_t>(i);
        const DescriptorPair pair = describe_scan(render_polar(scene, waypoints[i], g), pcfg, i);
        retriever.add_frame(pair.fine, pair.coarse);
    }

    NoisyLoopData data;
    data.queries = waypoints.size();
    data.gt.covered.assign(waypoints.size(), 0);

    std::vector<Pose> query_poses;
    for (const Pose& wp : waypoints)
        query_poses.push_back({wp.x + 0.5, wp.y - 0.3, wp.yaw + 0.05});
    for (std::size_t i = 0; i < query_poses.size(); ++i) {
        for (std::size_t j = 0; j < waypoints.size(); ++j) {
            const double dist = std::hypot(query_poses[i].x - waypoints[j].x,
                                           query_poses[i].y - waypoints[j].y);
            if (dist <= 5.0) {
                data.gt.pairs.emplace_back(i, j);
                data.gt.covered[i] = 1;
            }
        }
    }

    for (std::size_t i = 0; i < query_poses.size(); ++i) {
        ScanGeometry g = geom;
        g.timestamp = 1000 + static_cast<std::int64_t>(i);
        const DescriptorPair q = describe_scan(render_polar(scene, query_poses[i], g), pcfg, i);
        const MatchResult hier = retriever.retrieve(q.fine, q.coarse);
        const MatchResult exh = retriever.retrieve_exhaustive(q.fine);
        data.results.push_back({i, hier.best_index, hier.best_distance.d});
        if (hier.best_index == exh.best_index) ++data.agree;
        data.max_gap = std::max(data.max_gap, hier.best_distance.d - exh.best_distance.d);
    }
    return data;
}

void criteria_6_and_7() {
    const NoisyLoopData data = run_noisy_loop();

    const EvalReport rep = evaluate(data.results, data.gt);
    const double recall1 = rep.recall_at_1.value_or(0.0);
    report(6, "noisy-loop recall at 1 reaches 0.9", recall1 >= 0.9,
           fmt("recall@1 %.3f over %zu queries", recall1, data.queries));

    const bool ok7 = data.agree * 100 >= data.queries * 95 && data.max_gap <= 1e-9;
    report(7, "hierarchical retrieval tracks the exhaustive argmin", ok7,
           fmt("agreement %zu/%zu, max distance gap %.3g", data.agree, data.queries,
               data.max_gap));
}

// 8: one hierarchical query against 2000 frames at the default resolution
// finishes within 100 ms median.
void criterion_8() {
    Rng rng(88);
    const Sinogram fine_sino = oracle::random_sinogram(rng, 569, 180);
    const RadarDescriptor fine = make_descriptor(fine_sino);
    const RadarDescriptor coarse =
        make_descriptor(downsample_sinogram(fine_sino, 4), 0, ResolutionTag::coarse);

    RetrievalConfig cfg;
    cfg.coarse_factor = 4;
    cfg.coarse_top_k = 10;
    cfg.neighbor_window = 5;
    Retriever r(cfg);
    for (int i = 0; i < 2000; ++i) r.add_frame(fine, coarse);

    MatchResult warm = r.retrieve(fine, coarse);  // touch every page once
    std::vector<double> runs;
    for (int i = 0; i < 11; ++i) {
        const auto t0 = Clock::now();
        const MatchResult res = r.retrieve(fine, coarse);
        runs.push_back(seconds_since(t0) * 1e3);
        if (res.best_distance.d != 0.0) warm.best_index = 1;  // impossible, keeps res alive
    }
    std::sort(runs.begin(), runs.end());
    const double median = runs[runs.size() / 2];
    report(8, "a query against 2000 frames stays under 100 ms", median <= 100.0,
           fmt("median %.1f ms over 11 runs, coarse bins %u", median, coarse.n_l));
}

// 9: the evaluation harness reproduces a fully hand-computed sweep and gives
// a perfect classifier a perfect score.
void criterion_9() {
    std::vector<QueryResult> results;
    LoopGroundTruth gt;
    const double ds[10] = {0.1, 0.3, 0.5, 0.2, 0.8, 0.9, 0.4, 0.95, 1.0, 0.99};
    const bool correct[10] = {true, true, true, false, true, true, false, false, false, false};
    gt.covered.assign(10, 0);
    for (std::uint64_t q = 0; q < 10; ++q) {
        results.push_back({q, 100 + q, ds[q]});
        if (q <= 5) {
            gt.covered[q] = 1;
            gt.pairs.emplace_back(q, correct[q] ? 100 + q : 999);
        }
    }
    ThresholdSweep sweep;
    sweep.explicit_values = {0.05, 0.15, 0.25, 0.35, 0.45, 0.5, 0.65, 0.75, 0.85, 0.95, 1.0};
    const EvalReport rep = evaluate(results, gt, sweep);

    bool ok = rep.pr_points.size() == 10;
    for (const PrPoint& p : rep.pr_points)
        if (p.threshold == 0.5) ok = ok && p.precision == 3.0 / 5.0 && p.recall == 0.5;
    ok = ok && rep.auc.has_value() && std::abs(*rep.auc - 91.0 / 160.0) <= 1e-12;
    ok = ok && std::abs(rep.max_f1 - 5.0 / 7.0) <= 1e-12;
    ok = ok && rep.max_f1_threshold.has_value() && *rep.max_f1_threshold == 0.95;
    ok = ok && rep.recall_at_1.has_value() && *rep.recall_at_1 == 5.0 / 6.0;
    ok = ok && rep.tp_detection_rate.has_value() && *rep.tp_detection_rate == 5.0 / 6.0;

    LoopGroundTruth perfect_gt;
    std::vector<QueryResult> perfect;
    perfect_gt.covered.assign(5, 1);
    for (std::uint64_t q = 0; q < 5; ++q) {
        perfect.push_back({q, 10 + q, 0.1 * static_cast<double>(q)});
        perfect_gt.pairs.emplace_back(q, 10 + q);
    }
    const EvalReport prep = evaluate(perfect, perfect_gt);
    ok = ok && prep.auc.has_value() && *prep.auc == 1.0 && prep.max_f1 == 1.0;

    report(9, "the evaluation harness matches hand-computed numbers", ok,
           fmt("auc %.6f, max F1 %.6f", rep.auc.value_or(-1.0), rep.max_f1));
}

// 10: optional check against a real radar dataset; skipped when the data is
// not mounted.
void criterion_10() {
    const char* env = std::getenv("SINOPLACE_REAL_DATA_DIR");
    const fs::path dir = env ? fs::path(env) : fs::path("data/real");
    if (!fs::exists(dir / "poses.csv")) {
        skip(10, "real-dataset retrieval",
             "no dataset at " + dir.string() + ", set SINOPLACE_REAL_DATA_DIR to enable");
        return;
    }
    std::vector<fs::path> scans;
    for (const auto& e : fs::directory_iterator(dir / "scans"))
        if (e.path().extension() == ".pgm" || e.path().extension() == ".rps1")
            scans.push_back(e.path());
    std::sort(scans.begin(), scans.end());
    if (scans.size() < 2) {
        skip(10, "real-dataset retrieval", "fewer than two scans under " + dir.string());
        return;
    }
    if (scans.size() > 50) scans.resize(50);

    PipelineConfig cfg;  // default 401-pixel grid
    RetrievalConfig flat;
    flat.coarse_factor = 1;
    Retriever r(flat);
    std::vector<RadarDescriptor> frames;
    for (std::size_t i = 0; i < scans.size(); ++i) {
        ScanLayout layout;
        layout.format =
            scans[i].extension() == ".pgm" ? ScanFormat::pgm8 : ScanFormat::rps1;
        frames.push_back(describe_scan(load_scan(scans[i], layout), cfg, i).fine);
        r.add_frame(frames.back(), frames.back());
    }
    std::size_t exact = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const MatchResult res = r.retrieve_exhaustive(frames[i]);
        if (res.best_index == i && res.best_distance.d == 0.0) ++exact;
    }
    report(10, "real-dataset retrieval", exact == frames.size(),
           fmt("%zu/%zu self-matches", exact, frames.size()));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criteria_6_and_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria failed\n", failures);
    return failures;
}
