#ifndef RECTIDIC_PIPELINE_HPP
#define RECTIDIC_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rectidic/dic.hpp"
#include "rectidic/homography.hpp"
#include "rectidic/metrics.hpp"
#include "rectidic/sift.hpp"

namespace rectidic::pipeline {

namespace fs = std::filesystem;

/// Everything the calibrate/run commands need; flags and config files both
/// populate this.
struct PipelineConfig {
    double ratio_delta = 0.55;
    RansacConfig ransac;
    dic::SubsetParams subset;
    sift::PyramidConfig sift;

    std::vector<fs::path> calibration_images;
    fs::path reference_image;
    std::vector<fs::path> deformed_images;

    std::uint64_t rng_seed = 0;
    int threads = 1;  // frame-level parallelism cap

    Vec2 dic_seed_px{0.0, 0.0};
    int search_radius = 10;
    std::optional<fs::path> roi_image;
    bool rectify = true;
    std::optional<fs::path> homography_file;
    double fill = 0.0;
};

/// Frame-level parallelism: RECTIDIC_THREADS caps the worker count when set.
int resolve_threads(int requested);

struct CalibrationImageStats {
    std::string image;
    std::size_t keypoints = 0;
    std::size_t matches = 0;
    std::size_t inliers = 0;
    double rms_reprojection = 0.0;  // inlier RMS residual against this image's H
    Homography estimate;
};

struct CalibrationResult {
    Homography mean;
    std::size_t reference_keypoints = 0;
    std::vector<CalibrationImageStats> per_image;
};

/// Per calibration image: SIFT on both images, ratio-test matching, RANSAC;
/// the per-image estimates are averaged entry-wise. The resulting matrix
/// maps rectified-output coordinates to raw-image coordinates, i.e. it is
/// exactly the sampling map rectify_image consumes. A failing image aborts
/// the command with EstimationFailedError naming it. Writes `out` when set;
/// the dump directories optionally receive match CSVs and key point JSONs.
CalibrationResult calibrate(const PipelineConfig& cfg,
                            const std::optional<fs::path>& out,
                            const std::optional<fs::path>& matches_dump_dir = std::nullopt,
                            const std::optional<fs::path>& keypoints_dump_dir = std::nullopt);

struct FrameResult {
    std::string input;
    std::string output;
    bool ok = false;
    std::string message;
    std::size_t points_total = 0;
    std::size_t points_valid = 0;
    double mean_zncc = 0.0;
};

struct RunResult {
    bool all_ok = false;
    std::vector<FrameResult> frames;
    fs::path manifest;
};

/// Rectifies the reference and every deformed image (unless cfg.rectify is
/// off), runs the reliability-guided analysis per frame, and writes one CSV
/// per deformed image plus a manifest JSON. Per-frame failures are recorded
/// in the manifest instead of aborting the batch.
RunResult run(const PipelineConfig& cfg, const fs::path& out_dir);

struct ReportRow {
    std::string frame;
    ErrorStats stats;
};

/// Per-frame MAE/SDAE of u and v against truth fields loaded from
/// truth_csvs (grids must match). Written as CSV when `out` is set.
std::vector<ReportRow> report(const std::vector<fs::path>& measured_csvs,
                              const std::vector<fs::path>& truth_csvs,
                              const std::optional<fs::path>& out);

/// Same, against the analytic rotation field with per-frame angles.
std::vector<ReportRow> report_rotation_truth(const std::vector<fs::path>& measured_csvs,
                                             double x0,
                                             const std::vector<double>& theta_rad,
                                             const std::optional<fs::path>& out);

} // namespace rectidic::pipeline

#endif
