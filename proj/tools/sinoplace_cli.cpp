// Command-line front end for the place-recognition toolkit. Subcommands:
//   build  - fold a directory of radar scans into descriptor stores
//   query  - match one scan against existing stores
//   eval   - score a store against pose ground truth, emit PR artifacts
//   sens   - rotation/translation sensitivity sweep for a single scan
//   synth  - generate a synthetic trajectory dataset
// Every subcommand prints a single JSON document on stdout; failures print
// {"error": {...}} and exit 1. Progress and warnings go to stderr.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sinoplace/sinoplace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sinoplace;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const char* error_type_name(const std::exception& e) {
    if (dynamic_cast<const FormatError*>(&e)) return "FormatError";
    if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
    if (dynamic_cast<const OrderError*>(&e)) return "OrderError";
    if (dynamic_cast<const RangeError*>(&e)) return "RangeError";
    if (dynamic_cast<const IndexError*>(&e)) return "IndexError";
    if (dynamic_cast<const ParameterError*>(&e)) return "ParameterError";
    if (dynamic_cast<const CorruptionError*>(&e)) return "CorruptionError";
    if (dynamic_cast<const NoCandidateError*>(&e)) return "NoCandidateError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "InternalError";
}

void emit(const json& doc) { std::cout << doc.dump(2) << "\n"; }

// ---- option bundles shared between subcommands ----

struct ScanOpts {
    std::string format = "rps1";
    double range_resolution = 1.0;
    std::size_t column_offset = 0;
    std::uint32_t expect_azimuths = 0;
    std::uint32_t expect_range_bins = 0;

    void attach(CLI::App& cmd) {
        cmd.add_option("--format", format, "scan file format")
            ->check(CLI::IsMember({"rps1", "pgm8"}))
            ->capture_default_str();
        cmd.add_option("--range-resolution", range_resolution, "meters per range bin (pgm8)")
            ->capture_default_str();
        cmd.add_option("--column-offset", column_offset, "range bins to drop per beam")
            ->capture_default_str();
        cmd.add_option("--expect-azimuths", expect_azimuths, "reject scans with any other beam count");
        cmd.add_option("--expect-range-bins", expect_range_bins, "reject scans with any other bin count");
    }

    ScanLayout layout() const {
        ScanLayout l;
        l.format = format == "pgm8" ? ScanFormat::pgm8 : ScanFormat::rps1;
        l.range_resolution = range_resolution;
        l.column_offset = column_offset;
        l.expect_azimuths = expect_azimuths;
        l.expect_range_bins = expect_range_bins;
        return l;
    }

    json echo() const {
        return {{"format", format},
                {"range_resolution", range_resolution},
                {"column_offset", column_offset},
                {"expect_azimuths", expect_azimuths},
                {"expect_range_bins", expect_range_bins}};
    }
};

struct PipelineOpts {
    PipelineConfig cfg;

    void attach(CLI::App& cmd) {
        cmd.add_option("--side-pixels", cfg.side_pixels, "cartesian grid side, odd")
            ->capture_default_str();
        cmd.add_option("--meters-per-pixel", cfg.meters_per_pixel, "grid resolution")
            ->capture_default_str();
        cmd.add_option("--max-range", cfg.max_range, "grid radius in meters, 0 = scan sweep")
            ->capture_default_str();
        cmd.add_option("--n-theta", cfg.n_theta, "projection angles over a half turn")
            ->capture_default_str();
        cmd.add_option("--offset-bins", cfg.offset_bins, "sinogram offset bins, 0 = derived")
            ->capture_default_str();
        cmd.add_option("--coarse-factor", cfg.coarse_factor, "offset downsampling for the coarse pass")
            ->capture_default_str();
    }

    json echo() const {
        return {{"side_pixels", cfg.side_pixels},
                {"meters_per_pixel", cfg.meters_per_pixel},
                {"max_range", cfg.max_range},
                {"n_theta", cfg.n_theta},
                {"offset_bins", cfg.offset_bins},
                {"coarse_factor", cfg.coarse_factor}};
    }
};

struct RetrievalOpts {
    RetrievalConfig cfg;

    void attach(CLI::App& cmd) {
        cmd.add_option("--coarse-top-k", cfg.coarse_top_k, "coarse candidates kept")
            ->capture_default_str();
        cmd.add_option("--neighbor-window", cfg.neighbor_window, "frames around each coarse hit")
            ->capture_default_str();
        cmd.add_option("--exclusion-window", cfg.exclusion_window, "recent frames skipped")
            ->capture_default_str();
        cmd.add_option("--keyframe-stride", cfg.keyframe_stride, "coarse pass samples every n-th frame")
            ->capture_default_str();
        cmd.add_option("--workers", cfg.workers, "scoring threads, 0 = hardware")
            ->capture_default_str();
        cmd.add_flag("--normalized", cfg.normalized, "energy-normalized correlation scores");
    }

    RetrievalConfig config(std::uint32_t coarse_factor) const {
        RetrievalConfig c = cfg;
        c.coarse_factor = coarse_factor;
        return c;
    }

    json echo(std::uint32_t coarse_factor) const {
        return {{"coarse_factor", coarse_factor},
                {"coarse_top_k", cfg.coarse_top_k},
                {"neighbor_window", cfg.neighbor_window},
                {"exclusion_window", cfg.exclusion_window},
                {"keyframe_stride", cfg.keyframe_stride},
                {"workers", cfg.workers},
                {"normalized", cfg.normalized}};
    }
};

std::vector<fs::path> list_scan_files(const fs::path& dir, const std::string& format) {
    const std::string ext = format == "pgm8" ? ".pgm" : ".rps1";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// ---- build ----

struct BuildOpts {
    std::string scan_dir;
    std::string out_fine;
    std::string out_coarse;
    std::string manifest;
    std::string on_error = "abort";
    std::uint32_t workers = 0;
};

int run_build(const BuildOpts& b, const ScanOpts& s, const PipelineOpts& p) {
    const PipelineConfig& cfg = p.cfg;
    cfg.validate();
    if (cfg.coarse_factor > 1 && b.out_coarse.empty())
        throw ParameterError("build: --out-coarse is required when coarse-factor > 1");

    const ScanLayout layout = s.layout();
    const std::vector<fs::path> files = list_scan_files(b.scan_dir, s.format);
    const unsigned workers = b.workers ? b.workers : default_workers();

    StoreWriter fine(b.out_fine, cfg.n_theta, cfg.fine_bins(), ResolutionTag::fine);
    std::optional<StoreWriter> coarse;
    if (cfg.coarse_factor > 1)
        coarse.emplace(b.out_coarse, cfg.n_theta, downsampled_bins(cfg.fine_bins(), cfg.coarse_factor),
                       ResolutionTag::coarse);

    json errors = json::array();
    double load_ms = 0.0, describe_ms = 0.0, store_ms = 0.0;
    std::uint64_t appended = 0;

    const std::size_t chunk = std::max<std::size_t>(std::size_t{4} * workers, 8);
    for (std::size_t start = 0; start < files.size(); start += chunk) {
        const std::size_t end = std::min(files.size(), start + chunk);

        std::vector<PolarScan> scans;
        scans.reserve(end - start);
        auto t0 = Clock::now();
        for (std::size_t i = start; i < end; ++i) {
            try {
                scans.push_back(load_scan(files[i], layout));
            } catch (const Error& e) {
                if (b.on_error != "continue") throw;
                errors.push_back({{"file", files[i].string()},
                                  {"type", error_type_name(e)},
                                  {"message", e.what()}});
            }
        }
        load_ms += ms_since(t0);

        t0 = Clock::now();
        std::vector<DescriptorPair> described(scans.size());
        parallel_for(scans.size(), workers,
                     [&](std::size_t i) { described[i] = describe_scan(scans[i], cfg, appended + i); });
        describe_ms += ms_since(t0);

        t0 = Clock::now();
        for (const DescriptorPair& d : described) {
            fine.append(d.fine);
            if (coarse) coarse->append(d.coarse);
        }
        appended += described.size();
        store_ms += ms_since(t0);
    }

    fine.finish();
    if (coarse) coarse->finish();

    json summary = {{"command", "build"},
                    {"scan_dir", b.scan_dir},
                    {"inputs", files.size()},
                    {"frames", appended},
                    {"failed", errors.size()},
                    {"out_fine", b.out_fine},
                    {"out_coarse", coarse ? json(b.out_coarse) : json()},
                    {"n_theta", cfg.n_theta},
                    {"fine_bins", cfg.fine_bins()}};

    if (!b.manifest.empty()) {
        json manifest = summary;
        manifest["config"] = {{"pipeline", p.echo()},
                              {"scan", s.echo()},
                              {"on_error", b.on_error},
                              {"workers", workers}};
        manifest["errors"] = errors;
        manifest["timings_ms"] = {{"load", load_ms}, {"describe", describe_ms}, {"store", store_ms}};
        std::ofstream out(b.manifest);
        if (!out) throw Error("build: cannot write " + b.manifest);
        out << manifest.dump(2) << "\n";
    }

    emit(summary);
    return 0;
}

// ---- query ----

struct QueryOpts {
    std::string store_fine;
    std::string store_coarse;
    std::string scan;
    std::int64_t query_index = -1;
    std::size_t top = 5;
};

int run_query(const QueryOpts& q, const ScanOpts& s, const PipelineOpts& p, const RetrievalOpts& r) {
    const PipelineConfig& cfg = p.cfg;
    cfg.validate();
    const RetrievalConfig rcfg = r.config(cfg.coarse_factor);
    if (rcfg.coarse_factor > 1 && q.store_coarse.empty())
        throw ParameterError("query: --store-coarse is required when coarse-factor > 1");

    const DescriptorStore db_fine = read_store(q.store_fine);
    std::optional<DescriptorStore> db_coarse;
    if (rcfg.coarse_factor > 1) db_coarse = read_store(q.store_coarse);

    const PolarScan scan = load_scan(q.scan, s.layout());
    const DescriptorPair query = describe_scan(scan, cfg, 0);

    std::optional<std::uint64_t> query_index;
    if (q.query_index >= 0) query_index = static_cast<std::uint64_t>(q.query_index);

    const MatchResult res = retrieve(query.fine, query.coarse, db_fine,
                                     db_coarse ? *db_coarse : db_fine, rcfg, query_index);

    json ranked = json::array();
    for (std::size_t i = 0; i < res.ranked.size() && i < q.top; ++i)
        ranked.push_back({{"index", res.ranked[i].index}, {"d", res.ranked[i].distance.d}});

    emit({{"command", "query"},
          {"config", {{"pipeline", p.echo()}, {"retrieval", r.echo(rcfg.coarse_factor)}}},
          {"store", {{"frames", db_fine.frames.size()},
                     {"n_theta", db_fine.n_theta},
                     {"n_l", db_fine.n_l}}},
          {"scan", q.scan},
          {"best_index", res.best_index},
          {"distance", {{"d", res.best_distance.d},
                        {"c_auto", res.best_distance.c_auto},
                        {"c_qi", res.best_distance.c_qi}}},
          {"ranked", ranked}});
    return 0;
}

// ---- eval ----

struct EvalOpts {
    std::string store_fine;
    std::string store_coarse;
    std::string poses;
    std::string out_dir;
    std::string queries_csv;
    std::string gt_mode = "intra";
    double boundary_m = 20.0;
    std::uint32_t coarse_factor = 4;
    std::vector<double> thresholds;
    std::uint32_t threshold_count = 200;
    bool svg = false;
};

int run_eval(const EvalOpts& e, const RetrievalOpts& r) {
    const RetrievalConfig rcfg = r.config(e.coarse_factor);
    rcfg.validate();
    if (rcfg.coarse_factor > 1 && e.store_coarse.empty())
        throw ParameterError("eval: --store-coarse is required when coarse-factor > 1");

    const DescriptorStore db_fine = read_store(e.store_fine);
    std::optional<DescriptorStore> db_coarse;
    if (rcfg.coarse_factor > 1) db_coarse = read_store(e.store_coarse);
    if (db_coarse && db_coarse->frames.size() != db_fine.frames.size())
        throw DimensionError("eval: fine and coarse stores are not frame-aligned");

    const std::vector<PoseRecord> pose_records = load_poses(e.poses);
    if (pose_records.size() != db_fine.frames.size())
        throw DimensionError("eval: pose count does not match store frame count");
    std::vector<Pose> poses;
    poses.reserve(pose_records.size());
    for (const PoseRecord& rec : pose_records) poses.push_back({rec.x, rec.y, rec.yaw});

    const GtMode mode = e.gt_mode == "multi" ? GtMode::multi : GtMode::intra;
    const LoopGroundTruth gt =
        build_ground_truth(poses, e.boundary_m, mode, rcfg.exclusion_window);

    Retriever retriever(rcfg);
    for (std::size_t i = 0; i < db_fine.frames.size(); ++i)
        retriever.add_frame(db_fine.frames[i], db_coarse ? db_coarse->frames[i] : db_fine.frames[i]);

    std::vector<QueryResult> results;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < db_fine.frames.size(); ++i) {
        try {
            const MatchResult res = retriever.retrieve(
                db_fine.frames[i], db_coarse ? db_coarse->frames[i] : db_fine.frames[i], i);
            results.push_back({i, res.best_index, res.best_distance.d});
        } catch (const NoCandidateError&) {
            ++skipped;
        }
    }

    if (!e.queries_csv.empty()) {
        std::ofstream out(e.queries_csv);
        if (!out) throw Error("eval: cannot write " + e.queries_csv);
        out << "query,predicted,d\n";
        char line[96];
        for (const QueryResult& qr : results) {
            std::snprintf(line, sizeof line, "%llu,%llu,%.17g\n",
                          static_cast<unsigned long long>(qr.query),
                          static_cast<unsigned long long>(qr.predicted), qr.d);
            out << line;
        }
    }

    ThresholdSweep sweep;
    sweep.explicit_values = e.thresholds;
    sweep.count = e.threshold_count;
    const EvalReport report = evaluate(results, gt, sweep);

    fs::create_directories(e.out_dir);
    const fs::path out_dir(e.out_dir);
    write_pr_csv(report, out_dir / "pr_curve.csv");
    export_tp_trajectory(report, poses, out_dir / "trajectory.csv",
                         e.svg ? out_dir / "overlay.svg" : fs::path());

    json doc = {{"command", "eval"},
                {"config", {{"retrieval", r.echo(rcfg.coarse_factor)},
                            {"boundary_m", e.boundary_m},
                            {"gt_mode", e.gt_mode},
                            {"thresholds", e.thresholds},
                            {"threshold_count", e.threshold_count}}},
                {"frames", db_fine.frames.size()},
                {"queries", results.size()},
                {"skipped_queries", skipped},
                {"gt_pairs", gt.pairs.size()},
                {"gt_covered_queries", report.gt_covered_queries},
                {"auc", report.auc ? json(*report.auc) : json()},
                {"max_f1", report.max_f1},
                {"max_f1_threshold",
                 report.max_f1_threshold ? json(*report.max_f1_threshold) : json()},
                {"recall_at_1", report.recall_at_1 ? json(*report.recall_at_1) : json()},
                {"tp_detection_rate",
                 report.tp_detection_rate ? json(*report.tp_detection_rate) : json()},
                {"pr_points", report.pr_points.size()}};

    std::ofstream rep(out_dir / "report.json");
    if (!rep) throw Error("eval: cannot write " + (out_dir / "report.json").string());
    rep << doc.dump(2) << "\n";

    emit(doc);
    return 0;
}

// ---- sens ----

struct SensOpts {
    std::string scan;
    std::string out_csv;
    std::vector<double> rotations_deg = {0.0, 90.0, 180.0, 270.0};
    std::vector<long> translations_px = {2, 8};
    SweepConfig cfg;
};

int run_sens(const SensOpts& o, const ScanOpts& s) {
    const PolarScan scan = load_scan(o.scan, s.layout());
    const SensitivityCurves curves =
        sensitivity_sweep(scan, o.rotations_deg, o.translations_px, o.cfg);

    if (!o.out_csv.empty()) {
        std::ofstream out(o.out_csv);
        if (!out) throw Error("sens: cannot write " + o.out_csv);
        out << "kind,amount,d,normalized\n";
        char line[160];
        for (const SensitivityPoint& p : curves.points) {
            std::snprintf(line, sizeof line, "%c,%.9g,%.9g,%.9g\n", p.kind, p.amount, p.d,
                          p.normalized);
            out << line;
        }
    }

    json points = json::array();
    for (const SensitivityPoint& p : curves.points)
        points.push_back({{"kind", std::string(1, p.kind)},
                          {"amount", p.amount},
                          {"d", p.d},
                          {"normalized", p.normalized}});

    emit({{"command", "sens"},
          {"config", {{"image_side", o.cfg.image_side},
                      {"query_side", o.cfg.query_side},
                      {"meters_per_pixel", o.cfg.meters_per_pixel},
                      {"n_theta", o.cfg.n_theta},
                      {"seed", o.cfg.seed},
                      {"rotations_deg", o.rotations_deg},
                      {"translations_px", o.translations_px}}},
          {"unrelated_d", curves.unrelated_d},
          {"points", points}});
    return 0;
}

// ---- synth ----

struct SynthOpts {
    std::string out_dir;
    std::string trajectory = "circle";
    std::size_t waypoints = 100;
    double radius = 30.0;
    std::uint64_t scene_seed = 1;
    std::size_t scatterers = 30;
    double scene_extent = 150.0;
    std::uint32_t azimuths = 400;
    std::uint32_t range_bins = 200;
    double range_resolution = 1.0;
    double speckle_sigma = 0.0;
    double saturation_prob = 0.0;
    std::int64_t ring_bin = -1;
    double ring_amplitude = 0.25;
    double boundary_m = 20.0;
    std::uint32_t exclusion_window = 0;
};

int run_synth(const SynthOpts& o) {
    NoiseSpec noise;
    noise.speckle_sigma = o.speckle_sigma;
    noise.saturation_prob = o.saturation_prob;
    if (o.ring_bin >= 0)
        noise.rings.push_back({static_cast<std::uint32_t>(o.ring_bin), o.ring_amplitude});

    const SceneSpec scene = random_scene(o.scene_seed, o.scene_extent, o.scatterers, noise);
    const std::vector<Pose> waypoints = o.trajectory == "figure-eight"
                                            ? figure_eight_waypoints(o.waypoints, o.radius)
                                            : circle_waypoints(o.waypoints, o.radius);

    ScanGeometry geom;
    geom.azimuths = o.azimuths;
    geom.range_bins = o.range_bins;
    geom.range_resolution = o.range_resolution;

    const TrajectoryDataset ds = make_trajectory_dataset(scene, waypoints, geom, o.out_dir,
                                                         o.boundary_m, o.exclusion_window);

    json doc = {{"command", "synth"},
                {"config", {{"trajectory", o.trajectory},
                            {"waypoints", o.waypoints},
                            {"radius", o.radius},
                            {"scene_seed", o.scene_seed},
                            {"scatterers", o.scatterers},
                            {"scene_extent", o.scene_extent},
                            {"azimuths", o.azimuths},
                            {"range_bins", o.range_bins},
                            {"range_resolution", o.range_resolution},
                            {"speckle_sigma", o.speckle_sigma},
                            {"saturation_prob", o.saturation_prob},
                            {"ring_bin", o.ring_bin},
                            {"ring_amplitude", o.ring_amplitude},
                            {"boundary_m", o.boundary_m},
                            {"exclusion_window", o.exclusion_window}}},
                {"scans", ds.scan_paths.size()},
                {"scan_dir", ds.scan_dir.string()},
                {"pose_file", ds.pose_path.string()},
                {"pairs_file", ds.pairs_path.string()},
                {"revisit_pairs", ds.revisit_pairs.size()}};

    std::ofstream mf(fs::path(o.out_dir) / "manifest.json");
    if (!mf) throw Error("synth: cannot write manifest under " + o.out_dir);
    mf << doc.dump(2) << "\n";

    emit(doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radar place recognition over projection-domain scan descriptors"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI file; flags win");

    BuildOpts build_opts;
    ScanOpts build_scan;
    PipelineOpts build_pipe;
    CLI::App* build = app.add_subcommand("build", "fold a scan directory into descriptor stores");
    build->add_option("--scan-dir", build_opts.scan_dir, "directory of scan files")
        ->required()
        ->check(CLI::ExistingDirectory);
    build->add_option("--out-fine", build_opts.out_fine, "output store, full resolution")->required();
    build->add_option("--out-coarse", build_opts.out_coarse, "output store, downsampled");
    build->add_option("--manifest", build_opts.manifest, "write a build manifest JSON here");
    build->add_option("--on-error", build_opts.on_error, "per-file load failures: continue or abort")
        ->check(CLI::IsMember({"continue", "abort"}))
        ->capture_default_str();
    build->add_option("--workers", build_opts.workers, "describe threads, 0 = hardware")
        ->capture_default_str();
    build_scan.attach(*build);
    build_pipe.attach(*build);

    QueryOpts query_opts;
    ScanOpts query_scan;
    PipelineOpts query_pipe;
    RetrievalOpts query_retr;
    CLI::App* query = app.add_subcommand("query", "match one scan against descriptor stores");
    query->add_option("--store-fine", query_opts.store_fine)->required()->check(CLI::ExistingFile);
    query->add_option("--store-coarse", query_opts.store_coarse)->check(CLI::ExistingFile);
    query->add_option("--scan", query_opts.scan, "scan file to match")
        ->required()
        ->check(CLI::ExistingFile);
    query->add_option("--query-index", query_opts.query_index,
                      "frame index of the query inside the store, enables the exclusion window")
        ->capture_default_str();
    query->add_option("--top", query_opts.top, "ranked matches to print")->capture_default_str();
    query_scan.attach(*query);
    query_pipe.attach(*query);
    query_retr.attach(*query);

    EvalOpts eval_opts;
    RetrievalOpts eval_retr;
    CLI::App* eval_cmd = app.add_subcommand("eval", "loop-closure metrics for a store with poses");
    eval_cmd->add_option("--store-fine", eval_opts.store_fine)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--store-coarse", eval_opts.store_coarse)->check(CLI::ExistingFile);
    eval_cmd->add_option("--poses", eval_opts.poses, "pose CSV aligned with store frames")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--out-dir", eval_opts.out_dir, "directory for report artifacts")->required();
    eval_cmd->add_option("--queries-csv", eval_opts.queries_csv,
                         "also dump per-query predictions and distances");
    eval_cmd->add_option("--gt-mode", eval_opts.gt_mode, "ground-truth pairing: intra or multi")
        ->check(CLI::IsMember({"intra", "multi"}))
        ->capture_default_str();
    eval_cmd->add_option("--boundary-m", eval_opts.boundary_m, "revisit distance boundary")
        ->capture_default_str();
    eval_cmd->add_option("--coarse-factor", eval_opts.coarse_factor,
                         "offset downsampling between the two stores")
        ->capture_default_str();
    eval_cmd->add_option("--thresholds", eval_opts.thresholds, "explicit sweep thresholds")
        ->delimiter(',');
    eval_cmd->add_option("--threshold-count", eval_opts.threshold_count, "evenly spaced sweep size")
        ->capture_default_str();
    eval_cmd->add_flag("--svg", eval_opts.svg, "render the trajectory overlay SVG");
    eval_retr.attach(*eval_cmd);

    SensOpts sens_opts;
    ScanOpts sens_scan;
    CLI::App* sens = app.add_subcommand("sens", "rotation/translation sensitivity for one scan");
    sens->add_option("--scan", sens_opts.scan)->required()->check(CLI::ExistingFile);
    sens->add_option("--rotations-deg", sens_opts.rotations_deg, "rotations to probe")
        ->delimiter(',');
    sens->add_option("--translations-px", sens_opts.translations_px, "pixel shifts to probe")
        ->delimiter(',');
    sens->add_option("--image-side", sens_opts.cfg.image_side, "rendered image side, odd")
        ->capture_default_str();
    sens->add_option("--query-side", sens_opts.cfg.query_side, "matched crop side, odd")
        ->capture_default_str();
    sens->add_option("--meters-per-pixel", sens_opts.cfg.meters_per_pixel)->capture_default_str();
    sens->add_option("--n-theta", sens_opts.cfg.n_theta)->capture_default_str();
    sens->add_option("--seed", sens_opts.cfg.seed, "seed for the unrelated reference scene")
        ->capture_default_str();
    sens->add_option("--out-csv", sens_opts.out_csv, "also write the points as CSV");
    sens_scan.attach(*sens);

    SynthOpts synth_opts;
    CLI::App* synth = app.add_subcommand("synth", "render a synthetic trajectory dataset");
    synth->add_option("--out-dir", synth_opts.out_dir)->required();
    synth->add_option("--trajectory", synth_opts.trajectory, "circle or figure-eight")
        ->check(CLI::IsMember({"circle", "figure-eight"}))
        ->capture_default_str();
    synth->add_option("--waypoints", synth_opts.waypoints)->capture_default_str();
    synth->add_option("--radius", synth_opts.radius, "trajectory radius in meters")
        ->capture_default_str();
    synth->add_option("--scene-seed", synth_opts.scene_seed)->capture_default_str();
    synth->add_option("--scatterers", synth_opts.scatterers)->capture_default_str();
    synth->add_option("--scene-extent", synth_opts.scene_extent, "scene radius in meters")
        ->capture_default_str();
    synth->add_option("--azimuths", synth_opts.azimuths)->capture_default_str();
    synth->add_option("--range-bins", synth_opts.range_bins)->capture_default_str();
    synth->add_option("--range-resolution", synth_opts.range_resolution)->capture_default_str();
    synth->add_option("--speckle-sigma", synth_opts.speckle_sigma)->capture_default_str();
    synth->add_option("--saturation-prob", synth_opts.saturation_prob)->capture_default_str();
    synth->add_option("--ring-bin", synth_opts.ring_bin, "interference ring range bin, -1 = none")
        ->capture_default_str();
    synth->add_option("--ring-amplitude", synth_opts.ring_amplitude)->capture_default_str();
    synth->add_option("--boundary-m", synth_opts.boundary_m, "revisit pair distance boundary")
        ->capture_default_str();
    synth->add_option("--exclusion-window", synth_opts.exclusion_window, "revisit pair frame gap")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (build->parsed()) return run_build(build_opts, build_scan, build_pipe);
        if (query->parsed()) return run_query(query_opts, query_scan, query_pipe, query_retr);
        if (eval_cmd->parsed()) return run_eval(eval_opts, eval_retr);
        if (sens->parsed()) return run_sens(sens_opts, sens_scan);
        if (synth->parsed()) return run_synth(synth_opts);
    } catch (const std::exception& e) {
        emit({{"error", {{"type", error_type_name(e)}, {"message", e.what()}}}});
        return 1;
    }
    return 0;
}
