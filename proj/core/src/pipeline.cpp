#include "rectidic/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "rectidic/image_io.hpp"
#include "rectidic/rectify.hpp"
#include "rectidic/serialization.hpp"
#include "rectidic/synthesis.hpp"
#include "rectidic/version.hpp"

namespace rectidic::pipeline {

using nlohmann::json;

int resolve_threads(int requested) {
    int threads = requested > 0 ? requested
                                : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RECTIDIC_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) threads = std::min<long>(threads, cap);
    }
    return std::max(1, threads);
}

CalibrationResult calibrate(const PipelineConfig& cfg,
                            const std::optional<fs::path>& out,
                            const std::optional<fs::path>& matches_dump_dir,
                            const std::optional<fs::path>& keypoints_dump_dir) {
    if (cfg.calibration_images.empty())
        throw InvalidParameterError("calibrate: at least one calibration image is required");

    const GrayImage reference = load_image(cfg.reference_image);
    const auto ref_kps = sift::extract(reference, cfg.sift);
    if (keypoints_dump_dir) {
        fs::create_directories(*keypoints_dump_dir);
        save_keypoints(ref_kps, *keypoints_dump_dir / "reference_keypoints.json");
    }

    CalibrationResult result;
    result.reference_keypoints = ref_kps.size();

    std::vector<Homography> estimates;
    for (const fs::path& cal_path : cfg.calibration_images) {
        CalibrationImageStats stats;
        stats.image = cal_path.string();
        try {
            const GrayImage cal = load_image(cal_path);
            const auto cal_kps = sift::extract(cal, cfg.sift);
            stats.keypoints = cal_kps.size();
            if (keypoints_dump_dir)
                save_keypoints(cal_kps,
                               *keypoints_dump_dir / (cal_path.stem().string() + "_keypoints.json"));

            // The estimated matrix maps calibration-frame coordinates to
            // raw-image coordinates, which is exactly the backward sampling
            // map the rectification consumes. Hence the calibration key
            // points feed the src side of the solver.
            const auto matches = match_descriptors(cal_kps, ref_kps, cfg.ratio_delta);
            stats.matches = matches.size();
            if (matches_dump_dir) {
                fs::create_directories(*matches_dump_dir);
                save_matches_csv(matches,
                                 *matches_dump_dir / (cal_path.stem().string() + "_matches.csv"));
            }

            const RansacResult ransac = ransac_homography(matches, cfg.ransac, cfg.rng_seed);
            stats.inliers = ransac.inliers.size();
            stats.estimate = ransac.model;

            double ss = 0.0;
            for (std::size_t i : ransac.inliers) {
                const Vec2 p = ransac.model.map(matches[i].src);
                const Vec2 d = p - matches[i].dst;
                ss += d.x * d.x + d.y * d.y;
            }
            stats.rms_reprojection =
                ransac.inliers.empty() ? 0.0 : std::sqrt(ss / double(ransac.inliers.size()));

            estimates.push_back(ransac.model);
            result.per_image.push_back(stats);
        } catch (const IoError&) {
            throw;  // unreadable input, not an estimation problem
        } catch (const Error& e) {
            throw EstimationFailedError("calibration image " + cal_path.string() +
                                        " failed: " + e.what());
        }
    }

    result.mean = mean_homography(estimates);
    if (out) save_homography(result.mean, *out);
    return result;
}

namespace {

struct FrameJob {
    std::size_t index;
    fs::path input;
    fs::path output;
};

json frame_to_json(const FrameResult& f) {
    json j;
    j["input"] = f.input;
    j["output"] = f.output;
    j["status"] = f.ok ? "ok" : "failed";
    if (!f.message.empty()) j["message"] = f.message;
    j["points_total"] = f.points_total;
    j["points_valid"] = f.points_valid;
    j["mean_zncc"] = f.mean_zncc;
    return j;
}

} // namespace

RunResult run(const PipelineConfig& cfg, const fs::path& out_dir) {
    if (cfg.deformed_images.empty())
        throw InvalidParameterError("run: no deformed images given");
    if (cfg.rectify && !cfg.homography_file)
        throw InvalidParameterError("run: a homography file is required unless rectification is disabled");

    fs::create_directories(out_dir);

    std::optional<Homography> h;
    if (cfg.rectify) h = load_homography(*cfg.homography_file);

    const GrayImage raw_reference = load_image(cfg.reference_image);
    const GrayImage reference =
        cfg.rectify ? rectify_image(raw_reference, *h, cfg.fill) : raw_reference;

    dic::RoiMask roi;
    if (cfg.roi_image) {
        const dic::RoiMask base = dic::full_roi(reference, cfg.subset, cfg.dic_seed_px);
        roi = dic::roi_from_mask(load_image(*cfg.roi_image), base.grid, cfg.dic_seed_px);
    } else {
        roi = dic::full_roi(reference, cfg.subset, cfg.dic_seed_px);
    }
    const Vec2 seed_node = roi.grid.node(static_cast<int>(roi.seed_index % roi.grid.nx),
                                         static_cast<int>(roi.seed_index / roi.grid.nx));

    std::vector<FrameJob> jobs;
    std::set<std::string> used_names;
    for (std::size_t i = 0; i < cfg.deformed_images.size(); ++i) {
        FrameJob job;
        job.index = i;
        job.input = cfg.deformed_images[i];
        // Stems can collide across directories; disambiguate by frame index.
        std::string name = job.input.stem().string() + "_field.csv";
        if (!used_names.insert(name).second) {
            name = "frame" + std::to_string(i) + "_" + name;
            used_names.insert(name);
        }
        job.output = out_dir / name;
        jobs.push_back(std::move(job));
    }

    std::vector<FrameResult> frames(jobs.size());
    const int threads = resolve_threads(cfg.threads);

    auto process = [&](const FrameJob& job) {
        FrameResult fr;
        fr.input = job.input.string();
        fr.output = job.output.string();
        try {
            const GrayImage raw = load_image(job.input);
            const GrayImage deformed = cfg.rectify ? rectify_image(raw, *h, cfg.fill) : raw;

            const dic::WarpParams p0 =
                dic::seed_initial_guess(reference, deformed, seed_node, cfg.search_radius, cfg.subset);
            const dic::DisplacementField field = dic::rg_dic(reference, deformed, roi, cfg.subset, p0);

            FieldMetadata meta;
            meta.params = cfg.subset;
            meta.reference = cfg.reference_image.string();
            meta.deformed = job.input.string();
            meta.software = kSoftwareId;
            save_field_csv(field, job.output, meta);

            fr.points_total = field.grid.count();
            double zsum = 0.0;
            for (std::size_t i = 0; i < field.grid.count(); ++i) {
                if (!field.valid[i]) continue;
                ++fr.points_valid;
                zsum += field.zncc[i];
            }
            fr.mean_zncc = fr.points_valid ? zsum / double(fr.points_valid) : 0.0;
            fr.ok = true;
        } catch (const Error& e) {
            fr.ok = false;
            fr.message = e.what();
        }
        return fr;
    };

    if (threads <= 1 || jobs.size() <= 1) {
        for (const auto& job : jobs) frames[job.index] = process(job);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) break;
                frames[jobs[i].index] = process(jobs[i]);
            }
        };
        std::vector<std::thread> pool;
        const int count = std::min<int>(threads, static_cast<int>(jobs.size()));
        pool.reserve(count);
        for (int t = 0; t < count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunResult result;
    result.frames = std::move(frames);
    result.all_ok = std::all_of(result.frames.begin(), result.frames.end(),
                                [](const FrameResult& f) { return f.ok; });

    json manifest;
    manifest["software"] = kSoftwareId;
    manifest["reference"] = cfg.reference_image.string();
    manifest["rectified"] = cfg.rectify;
    if (cfg.homography_file) manifest["homography"] = cfg.homography_file->string();
    manifest["seed"] = cfg.rng_seed;
    manifest["dic_seed_px"] = {cfg.dic_seed_px.x, cfg.dic_seed_px.y};
    manifest["search_radius"] = cfg.search_radius;
    manifest["subset"] = {{"half_width", cfg.subset.half_width},
                          {"spacing", cfg.subset.spacing}};
    manifest["frames"] = json::array();
    for (const auto& f : result.frames) manifest["frames"].push_back(frame_to_json(f));

    result.manifest = out_dir / "manifest.json";
    std::ofstream out(result.manifest);
    if (!out) throw IoError("cannot write " + result.manifest.string());
    out << manifest.dump(2) << "\n";
    return result;
}

namespace {

std::vector<ReportRow> write_report(std::vector<ReportRow> rows,
                                    const std::optional<fs::path>& out) {
    if (out) {
        std::ostringstream os;
        os << "frame,mae_u,mae_v,sdae_u,sdae_v,count\n";
        for (const auto& r : rows) {
            os << r.frame << ',' << format_double(r.stats.mae.u) << ','
               << format_double(r.stats.mae.v) << ',' << format_double(r.stats.sdae.u) << ','
               << format_double(r.stats.sdae.v) << ',' << r.stats.count << '\n';
        }
        std::ofstream f(*out, std::ios::binary);
        if (!f) throw IoError("cannot write " + out->string());
        f << os.str();
    }
    return rows;
}

} // namespace

std::vector<ReportRow> report(const std::vector<fs::path>& measured_csvs,
                              const std::vector<fs::path>& truth_csvs,
                              const std::optional<fs::path>& out) {
    if (measured_csvs.size() != truth_csvs.size())
        throw InvalidParameterError("report: measured and truth lists differ in length");
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < measured_csvs.size(); ++i) {
        const auto measured = load_field_csv(measured_csvs[i]);
        const auto truth = load_field_csv(truth_csvs[i]);
        ReportRow row;
        row.frame = measured_csvs[i].filename().string();
        try {
            row.stats = field_error(measured, truth);
        } catch (const InvalidParameterError& e) {
            throw InvalidParameterError("report: " + measured_csvs[i].string() + " vs " +
                                        truth_csvs[i].string() + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return write_report(std::move(rows), out);
}

std::vector<ReportRow> report_rotation_truth(const std::vector<fs::path>& measured_csvs,
                                             double x0,
                                             const std::vector<double>& theta_rad,
                                             const std::optional<fs::path>& out) {
    if (measured_csvs.size() != theta_rad.size())
        throw InvalidParameterError("report: one theta per measured frame is required");
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < measured_csvs.size(); ++i) {
        const auto measured = load_field_csv(measured_csvs[i]);
        const RotationField field{x0, theta_rad[i]};
        ReportRow row;
        row.frame = measured_csvs[i].filename().string();
        row.stats = field_error(measured, [&](double x, double y) {
            return rotation_displacement(x, y, field);
        });
        rows.push_back(std::move(row));
    }
    return write_report(std::move(rows), out);
}

} // namespace rectidic::pipeline
