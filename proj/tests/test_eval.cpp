#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sinoplace/eval.hpp"

using namespace sinoplace;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "sinoplace_eval_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

/// Ten queries with known outcomes. Queries 0..5 have ground-truth pairs;
/// 0, 1, 2, 4, 5 are answered correctly, 3 points at the wrong frame, and
/// 6..9 have no ground truth at all.
struct HandFixture {
    std::vector<QueryResult> results;
    LoopGroundTruth gt;

    HandFixture() {
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
    }
};

const std::vector<double> kHandThresholds = {0.05, 0.15, 0.25, 0.35, 0.45, 0.5,
                                             0.65, 0.75, 0.85, 0.95, 1.0};

}  // namespace

TEST_CASE("ground truth pairs follow the distance boundary") {
    const std::vector<Pose> line = {{0, 0, 0}, {10, 0, 0}, {30, 0, 0}};

    const LoopGroundTruth multi = build_ground_truth(line, 12.0, GtMode::multi, 0);
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> want_pairs = {{0, 1}, {1, 0}};
    REQUIRE(multi.pairs == want_pairs);
    REQUIRE(multi.query_covered(0));
    REQUIRE(multi.query_covered(1));
    REQUIRE(!multi.query_covered(2));
    REQUIRE(multi.contains(0, 1));
    REQUIRE(!multi.contains(0, 2));

    // intra-session mode also demands a frame gap beyond the window
    REQUIRE(build_ground_truth(line, 12.0, GtMode::intra, 1).pairs.empty());
    REQUIRE(build_ground_truth(line, 12.0, GtMode::intra, 0).pairs == multi.pairs);

    REQUIRE_THROWS_AS(build_ground_truth({}, 12.0, GtMode::multi, 0), ParameterError);
}

TEST_CASE("ground truth matches the all-pairs reference on a loop") {
    const std::vector<Pose> poses = circle_waypoints(50, 30.0);
    for (const bool intra : {false, true}) {
        const std::uint32_t window = intra ? 5 : 0;
        const LoopGroundTruth gt =
            build_ground_truth(poses, 8.0, intra ? GtMode::intra : GtMode::multi, window);
        const auto want = oracle::gt_pairs(poses, 8.0, intra, window);
        const std::set<std::pair<std::uint64_t, std::uint64_t>> got(gt.pairs.begin(),
                                                                    gt.pairs.end());
        REQUIRE(got == want);
        REQUIRE(gt.pairs.size() == want.size());  // no duplicates lost in the set
        for (const auto& [q, c] : want) REQUIRE(gt.query_covered(q));
    }

    // widening the boundary only adds pairs
    const auto narrow = oracle::gt_pairs(poses, 5.0, false, 0);
    const auto wide = oracle::gt_pairs(poses, 15.0, false, 0);
    REQUIRE(std::includes(wide.begin(), wide.end(), narrow.begin(), narrow.end()));
}

TEST_CASE("a perfect classifier scores perfectly") {
    std::vector<QueryResult> results;
    LoopGroundTruth gt;
    gt.covered.assign(10, 1);
    for (std::uint64_t q = 0; q < 10; ++q) {
        results.push_back({q, 50 + q, 0.0});
        gt.pairs.emplace_back(q, 50 + q);
    }

    SECTION("explicit single threshold") {
        ThresholdSweep sweep;
        sweep.explicit_values = {0.5};
        const EvalReport r = evaluate(results, gt, sweep);
        REQUIRE(r.pr_points.size() == 1);
        REQUIRE(r.pr_points[0].precision == 1.0);
        REQUIRE(r.pr_points[0].recall == 1.0);
        REQUIRE(r.max_f1 == 1.0);
        REQUIRE(r.auc.has_value());
        REQUIRE(*r.auc == 1.0);
        REQUIRE(*r.recall_at_1 == 1.0);
        REQUIRE(*r.tp_detection_rate == 1.0);
        for (const QueryRecord& rec : r.records) REQUIRE(rec.label == QueryLabel::tp);
    }

    SECTION("default sweep degenerates gracefully when every d is zero") {
        const EvalReport r = evaluate(results, gt);
        REQUIRE(*r.auc == 1.0);
        REQUIRE(r.max_f1 == 1.0);
        REQUIRE(*r.recall_at_1 == 1.0);
    }
}

TEST_CASE("the hand-computed sweep comes out exactly") {
    const HandFixture fx;
    ThresholdSweep sweep;
    sweep.explicit_values = kHandThresholds;
    const EvalReport r = evaluate(fx.results, fx.gt, sweep);

    REQUIRE(r.gt_covered_queries == 6);

    // the 0.05 threshold admits no positives and is dropped
    REQUIRE(r.pr_points.size() == 10);

    auto at = [&](double threshold) {
        const auto it = std::find_if(r.pr_points.begin(), r.pr_points.end(), [&](const PrPoint& p) {
            return p.threshold == threshold;
        });
        REQUIRE(it != r.pr_points.end());
        return *it;
    };

    const PrPoint p15 = at(0.15);
    REQUIRE(p15.precision == 1.0);
    REQUIRE(p15.recall == 1.0 / 6.0);
    const PrPoint p25 = at(0.25);
    REQUIRE(p25.precision == 0.5);
    REQUIRE(p25.recall == 1.0 / 6.0);
    const PrPoint p35 = at(0.35);
    REQUIRE(p35.precision == 2.0 / 3.0);
    REQUIRE(p35.recall == 2.0 / 6.0);
    const PrPoint p45 = at(0.45);
    REQUIRE(p45.precision == 0.5);
    REQUIRE(p45.recall == 2.0 / 6.0);
    const PrPoint p50 = at(0.5);
    REQUIRE(p50.precision == 3.0 / 5.0);
    REQUIRE(p50.recall == 0.5);
    REQUIRE(at(0.65).precision == 3.0 / 5.0);
    REQUIRE(at(0.75).recall == 0.5);
    const PrPoint p85 = at(0.85);
    REQUIRE(p85.precision == 4.0 / 6.0);
    REQUIRE(p85.recall == 4.0 / 6.0);
    const PrPoint p95 = at(0.95);
    REQUIRE(p95.precision == 5.0 / 8.0);
    REQUIRE(p95.recall == 5.0 / 6.0);
    const PrPoint p100 = at(1.0);
    REQUIRE(p100.precision == 0.5);
    REQUIRE(p100.recall == 5.0 / 6.0);

    REQUIRE(r.auc.has_value());
    REQUIRE(std::abs(*r.auc - 91.0 / 160.0) <= 1e-12);
    REQUIRE(r.max_f1 == Catch::Approx(5.0 / 7.0).epsilon(1e-12));
    REQUIRE(*r.max_f1_threshold == 0.95);
    REQUIRE(*r.tp_detection_rate == 5.0 / 6.0);
    REQUIRE(*r.recall_at_1 == 5.0 / 6.0);

    // labels at the max-F1 threshold
    const QueryLabel want[10] = {QueryLabel::tp, QueryLabel::tp, QueryLabel::tp, QueryLabel::fp,
                                 QueryLabel::tp, QueryLabel::tp, QueryLabel::fp, QueryLabel::fp,
                                 QueryLabel::tn, QueryLabel::tn};
    REQUIRE(r.records.size() == 10);
    for (std::size_t q = 0; q < 10; ++q) REQUIRE(r.records[q].label == want[q]);
}

TEST_CASE("evaluate validates and degenerates sanely") {
    const HandFixture fx;

    SECTION("an empty sweep is refused") {
        ThresholdSweep sweep;
        sweep.count = 0;
        REQUIRE_THROWS_AS(evaluate(fx.results, fx.gt, sweep), ParameterError);
    }

    SECTION("no ground truth coverage yields an empty curve") {
        LoopGroundTruth empty;
        empty.covered.assign(10, 0);
        const EvalReport r = evaluate(fx.results, empty);
        REQUIRE(r.pr_points.empty());
        REQUIRE(!r.auc.has_value());
        REQUIRE(!r.recall_at_1.has_value());
        REQUIRE(r.gt_covered_queries == 0);
        for (const QueryRecord& rec : r.records) REQUIRE(rec.label == QueryLabel::tn);
    }

    SECTION("recall grows with the threshold") {
        for (std::size_t i = 1; i < kHandThresholds.size(); ++i) {
            ThresholdSweep lo_sweep, hi_sweep;
            lo_sweep.explicit_values = {kHandThresholds[i - 1]};
            hi_sweep.explicit_values = {kHandThresholds[i]};
            const EvalReport lo = evaluate(fx.results, fx.gt, lo_sweep);
            const EvalReport hi = evaluate(fx.results, fx.gt, hi_sweep);
            if (lo.pr_points.empty()) continue;
            REQUIRE(hi.pr_points.size() == 1);
            REQUIRE(hi.pr_points[0].recall >= lo.pr_points[0].recall);
        }
    }

    SECTION("the result order does not matter") {
        ThresholdSweep sweep;
        sweep.explicit_values = kHandThresholds;
        const EvalReport base = evaluate(fx.results, fx.gt, sweep);
        std::vector<QueryResult> shuffled = fx.results;
        std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(5));
        const EvalReport mixed = evaluate(shuffled, fx.gt, sweep);
        REQUIRE(mixed.auc == base.auc);
        REQUIRE(mixed.max_f1 == base.max_f1);
        REQUIRE(mixed.recall_at_1 == base.recall_at_1);
        REQUIRE(mixed.pr_points.size() == base.pr_points.size());
        for (std::size_t i = 0; i < base.pr_points.size(); ++i) {
            REQUIRE(mixed.pr_points[i].precision == base.pr_points[i].precision);
            REQUIRE(mixed.pr_points[i].recall == base.pr_points[i].recall);
        }
    }
}

TEST_CASE("PR curves and trajectories export cleanly") {
    const HandFixture fx;
    ThresholdSweep sweep;
    sweep.explicit_values = kHandThresholds;
    const EvalReport r = evaluate(fx.results, fx.gt, sweep);

    SECTION("pr csv has one line per point") {
        const fs::path p = temp_dir() / "pr.csv";
        write_pr_csv(r, p);
        REQUIRE(count_lines(p) == 1 + r.pr_points.size());
        std::ifstream in(p);
        std::string header;
        std::getline(in, header);
        REQUIRE(header == "threshold,precision,recall,f1");
    }

    SECTION("trajectory csv keeps TP, FP and FN rows only") {
        std::vector<Pose> poses;
        for (int i = 0; i < 10; ++i) poses.push_back({static_cast<double>(i), 0.0, 0.0});
        const fs::path csv = temp_dir() / "traj.csv";
        export_tp_trajectory(r, poses, csv);
        // 5 TP + 3 FP, the 2 TN rows are skipped
        REQUIRE(count_lines(csv) == 9);
        std::ifstream in(csv);
        std::string all((std::istreambuf_iterator<char>(in)), {});
        REQUIRE(all.find("TP") != std::string::npos);
        REQUIRE(all.find("FP") != std::string::npos);
        REQUIRE(all.find("TN") == std::string::npos);
    }

    SECTION("a missed loop shows up as FN") {
        LoopGroundTruth gt;
        gt.covered.assign(1, 1);
        gt.pairs.emplace_back(0, 7);
        ThresholdSweep tight;
        tight.explicit_values = {0.2};
        // the only query is correct but slow, so the sweep has no positives
        const EvalReport miss = evaluate({{0, 7, 0.5}}, gt, tight);
        REQUIRE(miss.pr_points.empty());
        REQUIRE(miss.records[0].label == QueryLabel::fn);
        const fs::path csv = temp_dir() / "fn.csv";
        export_tp_trajectory(miss, {{1.0, 2.0, 0.0}}, csv);
        REQUIRE(count_lines(csv) == 2);
    }

    SECTION("svg output renders the overlay") {
        std::vector<Pose> poses;
        for (int i = 0; i < 10; ++i) poses.push_back({static_cast<double>(i), 0.5 * i, 0.0});
        const fs::path csv = temp_dir() / "overlay.csv";
        const fs::path svg = temp_dir() / "overlay.svg";
        export_tp_trajectory(r, poses, csv, svg);
        std::ifstream in(svg);
        std::string all((std::istreambuf_iterator<char>(in)), {});
        REQUIRE(all.find("<svg") != std::string::npos);
        REQUIRE(all.find("circle") != std::string::npos);
    }

    SECTION("queries outside the pose list are an error") {
        REQUIRE_THROWS_AS(export_tp_trajectory(r, {{0, 0, 0}}, temp_dir() / "bad.csv"),
                          IndexError);
    }
}

TEST_CASE("sensitivity sweeps score transformed copies of a scan") {
    ScanGeometry geom;
    geom.azimuths = 180;
    geom.range_bins = 72;
    geom.range_resolution = 1.0;
    const PolarScan scan = render_polar(random_scene(9, 72.0), {0.0, 0.0, 0.0}, geom);

    SweepConfig cfg;
    cfg.image_side = 143;
    cfg.query_side = 101;
    cfg.n_theta = 60;
    cfg.seed = 3;

    SECTION("identity transforms have exactly zero distance") {
        const SensitivityCurves curves = sensitivity_sweep(scan, {0.0}, {0}, cfg);
        REQUIRE(curves.unrelated_d > 0.0);
        REQUIRE(curves.points.size() == 3);  // one rotation, one x, one y
        for (const SensitivityPoint& p : curves.points) {
            REQUIRE(p.amount == 0.0);
            REQUIRE(p.d == 0.0);
            REQUIRE(p.normalized == 0.0);
        }
    }

    SECTION("points carry their kind and amount") {
        const SensitivityCurves curves = sensitivity_sweep(scan, {0.0, 10.0}, {2}, cfg);
        REQUIRE(curves.points.size() == 4);
        REQUIRE(curves.points[0].kind == 'r');
        REQUIRE(curves.points[1].kind == 'r');
        REQUIRE(curves.points[1].amount == 10.0);
        REQUIRE(curves.points[2].kind == 'x');
        REQUIRE(curves.points[3].kind == 'y');
        REQUIRE(curves.points[2].amount == 2.0);
        for (const SensitivityPoint& p : curves.points) {
            REQUIRE(p.d >= 0.0);
            REQUIRE(p.normalized == p.d / curves.unrelated_d);
        }
    }

    SECTION("translations beyond the rendered margin are refused") {
        REQUIRE_THROWS_AS(sensitivity_sweep(scan, {}, {22}, cfg), ParameterError);
        REQUIRE_THROWS_AS(sensitivity_sweep(scan, {}, {-22}, cfg), ParameterError);
    }

    SECTION("configuration bounds") {
        SweepConfig bad = cfg;
        bad.image_side = 142;
        REQUIRE_THROWS_AS(sensitivity_sweep(scan, {0.0}, {}, bad), ParameterError);
        bad = cfg;
        bad.query_side = 143;
        REQUIRE_THROWS_AS(sensitivity_sweep(scan, {0.0}, {}, bad), ParameterError);
    }
}
