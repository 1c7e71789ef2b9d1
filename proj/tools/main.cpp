// Command-line front end: calibrate, rectify, dic, run, synth, error-model,
// eval, report. Data goes to files or stdout; logs go to stderr. Exit codes:
// 0 success, 2 invalid arguments or unreadable inputs, 3 estimation or
// correlation failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rectidic/camera_error.hpp"
#include "rectidic/dic.hpp"
#include "rectidic/image_io.hpp"
#include "rectidic/metrics.hpp"
#include "rectidic/pipeline.hpp"
#include "rectidic/rectify.hpp"
#include "rectidic/serialization.hpp"
#include "rectidic/synthesis.hpp"
#include "rectidic/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rectidic;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

struct CliError {
    int code;
    std::string message;
};

double parse_double_str(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CliError{2, "invalid " + what + ": '" + s + "'"};
    }
}

Vec2 parse_point(const std::string& s, const std::string& what) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw CliError{2, what + " expects 'x,y'"};
    return {parse_double_str(s.substr(0, comma), what),
            parse_double_str(s.substr(comma + 1), what)};
}

// Shared flags that feed pipeline::PipelineConfig.
struct CommonDicOptions {
    int subset_size = 23;
    int spacing = 5;
    std::string seed_point;
    int search_radius = 10;
    std::string roi;
    std::string interpolation = "bicubic";
    int max_iterations = 50;
    double convergence_tol = 1e-4;

    void attach(CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("--subset", subset_size, "Subset size in pixels (odd, e.g. 23)");
        cmd->add_option("--spacing", spacing, "Grid spacing between correlation points");
        if (with_seed)
            cmd->add_option("--seed", seed_point, "Seed point 'x,y' in pixels")->required();
        cmd->add_option("--search-radius", search_radius,
                        "Integer search radius for the seed displacement");
        cmd->add_option("--roi", roi, "Mask image; nonzero pixels mark the region of interest");
        cmd->add_option("--interp", interpolation, "Sub-pixel interpolation: bicubic|bilinear");
        cmd->add_option("--max-iterations", max_iterations, "Optimizer iteration cap");
        cmd->add_option("--tol", convergence_tol, "Convergence tolerance on the update norm");
    }

    dic::SubsetParams subset_params() const {
        if (subset_size < 11 || subset_size % 2 == 0)
            throw CliError{2, "--subset must be an odd size of at least 11"};
        dic::SubsetParams p;
        p.half_width = subset_size / 2;
        p.spacing = spacing;
        p.max_iterations = max_iterations;
        p.convergence_tol = convergence_tol;
        if (interpolation == "bicubic") {
            p.interpolation = Interpolation::Bicubic;
        } else if (interpolation == "bilinear") {
            p.interpolation = Interpolation::Bilinear;
        } else {
            throw CliError{2, "--interp must be bicubic or bilinear"};
        }
        return p;
    }
};

// Applies a JSON config file underneath explicitly passed flags.
void merge_config_file(const std::string& path, pipeline::PipelineConfig& cfg,
                       const CLI::App* cmd) {
    std::ifstream in(path);
    if (!in) throw CliError{2, "cannot open config file " + path};
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CliError{2, std::string("config file: ") + e.what()};
    }
    auto unset = [&](const std::string& flag) { return cmd->count(flag) == 0; };
    if (j.contains("delta") && unset("--delta")) cfg.ratio_delta = j["delta"].get<double>();
    if (j.contains("epsilon") && unset("--epsilon")) cfg.ransac.epsilon = j["epsilon"].get<double>();
    if (j.contains("iterations") && unset("--iterations"))
        cfg.ransac.iterations = j["iterations"].get<int>();
    if (j.contains("min_inliers") && unset("--min-inliers"))
        cfg.ransac.min_inliers = j["min_inliers"].get<int>();
    if (j.contains("seed") && unset("--seed")) cfg.rng_seed = j["seed"].get<std::uint64_t>();
}

std::vector<double> parse_theta_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string tok = text.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
        if (!tok.empty()) out.push_back(parse_double_str(tok, "--thetas-deg") * kDegToRad);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw CliError{2, "--thetas-deg is empty"};
    return out;
}

SweepAxis parse_axis(const std::string& text) {
    // name=start:stop:step
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw CliError{2, "--axis expects name=start:stop:step"};
    SweepAxis axis;
    axis.name = text.substr(0, eq);
    const std::string rest = text.substr(eq + 1);
    const auto c1 = rest.find(':');
    const auto c2 = rest.find(':', c1 == std::string::npos ? std::string::npos : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw CliError{2, "--axis expects name=start:stop:step"};
    axis.start = parse_double_str(rest.substr(0, c1), "axis start");
    axis.stop = parse_double_str(rest.substr(c1 + 1, c2 - c1 - 1), "axis stop");
    axis.step = parse_double_str(rest.substr(c2 + 1), "axis step");
    if (axis.name == "theta") {  // CLI talks degrees, the model radians
        axis.start *= kDegToRad;
        axis.stop *= kDegToRad;
        axis.step *= kDegToRad;
    }
    return axis;
}

void apply_fixed_params(const std::string& text, CameraGeometry& g, ObjectMotion& m) {
    // Comma-separated name=value pairs, e.g. f=50,S=1000,xA=30.
    std::size_t start = 0;
    while (start < text.size()) {
        const auto comma = text.find(',', start);
        const std::string tok =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw CliError{2, "--fix expects name=value pairs"};
        const std::string name = tok.substr(0, eq);
        const double value = parse_double_str(tok.substr(eq + 1), "--fix " + name);
        if (name == "f") g.focal_length = value;
        else if (name == "S") g.object_distance = value;
        else if (name == "theta") g.tilt_rad = value * kDegToRad;
        else if (name == "xA") m.xa = value;
        else if (name == "yA") m.ya = value;
        else if (name == "dx") m.dx = value;
        else if (name == "dy") m.dy = value;
        else throw CliError{2, "unknown parameter in --fix: " + name};
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
}

json error_stats_json(const ErrorStats& stats) {
    return json{{"mae_u", stats.mae.u},
                {"mae_v", stats.mae.v},
                {"sdae_u", stats.sdae.u},
                {"sdae_v", stats.sdae.v},
                {"count", stats.count}};
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"SIFT-aided rectified 2D digital image correlation toolkit"};
    app.set_version_flag("--version", kSoftwareId);
    app.require_subcommand(1);

    // calibrate ------------------------------------------------------------
    auto* cal = app.add_subcommand(
        "calibrate", "Estimate the mean rectification homography from calibration images");
    std::vector<std::string> cal_images;
    std::string cal_reference, cal_out, cal_dump, cal_kps_dump, cal_config;
    pipeline::PipelineConfig cal_cfg;
    cal->add_option("--calibration", cal_images, "Calibration image(s), perpendicular view")
        ->required()
        ->expected(-1);
    cal->add_option("--reference", cal_reference, "Reference image, non-perpendicular view")
        ->required();
    cal->add_option("--out", cal_out, "Output homography JSON")->required();
    cal->add_option("--delta", cal_cfg.ratio_delta, "Descriptor ratio-test threshold");
    cal->add_option("--epsilon", cal_cfg.ransac.epsilon, "RANSAC inlier radius in pixels");
    cal->add_option("--iterations", cal_cfg.ransac.iterations, "RANSAC iterations");
    cal->add_option("--min-inliers", cal_cfg.ransac.min_inliers, "Minimum consensus size");
    cal->add_option("--seed", cal_cfg.rng_seed, "Random seed for the sampler");
    cal->add_option("--dump-matches", cal_dump, "Directory for per-image match CSVs");
    cal->add_option("--dump-keypoints", cal_kps_dump, "Directory for key point JSON files");
    cal->add_option("--config", cal_config, "JSON config file (flags win on conflict)");

    // rectify ----------------------------------------------------------------
    auto* rec = app.add_subcommand("rectify", "Warp an image through a homography");
    std::string rec_h, rec_in, rec_out;
    double rec_fill = 0.0;
    rec->add_option("--homography", rec_h, "Homography JSON file")->required();
    rec->add_option("--in", rec_in, "Input image")->required();
    rec->add_option("--out", rec_out, "Output image")->required();
    rec->add_option("--fill", rec_fill, "Fill value for unmapped pixels");

    // dic --------------------------------------------------------------------
    auto* dic_cmd = app.add_subcommand("dic", "Full-field correlation between two images");
    std::string dic_ref, dic_def, dic_out;
    CommonDicOptions dic_opts;
    dic_cmd->add_option("--ref", dic_ref, "Reference image")->required();
    dic_cmd->add_option("--def", dic_def, "Deformed image")->required();
    dic_cmd->add_option("--out", dic_out, "Output field CSV")->required();
    dic_opts.attach(dic_cmd);

    // run ----------------------------------------------------------------------
    auto* run_cmd = app.add_subcommand(
        "run", "Rectify reference and deformed images, then correlate every frame");
    std::string run_h, run_ref, run_outdir, run_config;
    std::vector<std::string> run_defs;
    bool run_no_rectify = false;
    double run_fill = 0.0;
    std::uint64_t run_rng_seed = 0;
    int run_threads = 0;
    CommonDicOptions run_opts;
    run_cmd->add_option("--homography", run_h, "Homography JSON from calibrate");
    run_cmd->add_flag("--no-rectify", run_no_rectify, "Correlate the raw images directly");
    run_cmd->add_option("--reference", run_ref, "Reference image")->required();
    run_cmd->add_option("--deformed", run_defs, "Deformed image(s), in frame order")
        ->required()
        ->expected(-1);
    run_cmd->add_option("--out-dir", run_outdir, "Output directory")->required();
    run_cmd->add_option("--fill", run_fill, "Fill value for unmapped pixels");
    run_cmd->add_option("--rng-seed", run_rng_seed, "Seed recorded in the manifest");
    run_cmd->add_option("--threads", run_threads,
                        "Frame-level worker cap (RECTIDIC_THREADS also applies)");
    run_cmd->add_option("--config", run_config, "JSON config file (flags win on conflict)");
    run_opts.attach(run_cmd);

    // synth ---------------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Synthetic image generation");
    synth->require_subcommand(1);

    auto* rotfield = synth->add_subcommand("rotate-field",
                                           "Deform an image by the in-plane rotation field");
    std::string rf_in, rf_out, rf_interp = "bicubic";
    double rf_theta_deg = 0.0, rf_x0 = 0.0;
    rotfield->add_option("--in", rf_in, "Reference image")->required();
    rotfield->add_option("--out", rf_out, "Deformed output image")->required();
    rotfield->add_option("--theta-deg", rf_theta_deg, "Rotation angle in degrees")->required();
    rotfield->add_option("--x0", rf_x0, "Rotation-center abscissa in pixels")->required();
    rotfield->add_option("--interp", rf_interp, "bicubic|bilinear");

    auto* camera = synth->add_subcommand("camera",
                                         "Simulate a camera rotation about its optical center");
    std::string cam_in, cam_out, cam_hout;
    double cam_alpha = 0.0, cam_beta = 0.0, cam_gamma = 0.0;
    double cam_focal = 0.0, cam_cx = -1.0, cam_cy = -1.0;
    camera->add_option("--in", cam_in, "Input image")->required();
    camera->add_option("--out", cam_out, "Warped output image")->required();
    camera->add_option("--h-out", cam_hout, "Ground-truth homography JSON");
    camera->add_option("--alpha-deg", cam_alpha, "Rotation about z in degrees");
    camera->add_option("--beta-deg", cam_beta, "Rotation about y in degrees");
    camera->add_option("--gamma-deg", cam_gamma, "Rotation about x in degrees");
    camera->add_option("--focal-px", cam_focal, "Focal length in pixels (default: image width)");
    camera->add_option("--cx", cam_cx, "Principal point x (default: image center)");
    camera->add_option("--cy", cam_cy, "Principal point y (default: image center)");

    auto* speckle = synth->add_subcommand("speckle", "Generate a random speckle texture");
    std::string sp_out;
    int sp_w = 512, sp_h = 512;
    std::uint64_t sp_seed = 0;
    SpeckleParams sp_params;
    speckle->add_option("--out", sp_out, "Output image")->required();
    speckle->add_option("--width", sp_w, "Width in pixels");
    speckle->add_option("--height", sp_h, "Height in pixels");
    speckle->add_option("--seed", sp_seed, "Random seed");
    speckle->add_option("--density", sp_params.density, "Blobs per pixel");
    speckle->add_option("--rmin", sp_params.min_radius, "Minimum blob radius in pixels");
    speckle->add_option("--rmax", sp_params.max_radius, "Maximum blob radius in pixels");
    speckle->add_option("--noise", sp_params.noise_sigma, "Additive Gaussian noise sigma");

    // error-model -----------------------------------------------------------------
    auto* em = app.add_subcommand("error-model",
                                  "Pinhole displacement-error predictions for a tilted camera");
    double em_f = 50.0, em_s = 1000.0, em_theta_deg = 0.0;
    double em_xa = 0.0, em_ya = 0.0, em_dx = 0.0, em_dy = 0.0;
    em->add_option("--f", em_f, "Focal length");
    em->add_option("--S", em_s, "Pinhole-to-object distance");
    em->add_option("--theta-deg", em_theta_deg, "Principal-axis tilt in degrees");
    em->add_option("--xA", em_xa, "Object point x");
    em->add_option("--yA", em_ya, "Object point y");
    em->add_option("--dx", em_dx, "Displacement x");
    em->add_option("--dy", em_dy, "Displacement y");

    auto* sweep_cmd = em->add_subcommand("sweep", "Dense parameter sweep, CSV output");
    std::vector<std::string> sweep_axes;
    std::string sweep_fix, sweep_target = "error_dx", sweep_out;
    sweep_cmd->add_option("--axis", sweep_axes, "Swept axis name=start:stop:step (theta in deg)")
        ->required()
        ->expected(-1);
    sweep_cmd->add_option("--fix", sweep_fix, "Fixed parameters name=value,...");
    sweep_cmd->add_option("--target", sweep_target, "error_dx|error_dy");
    sweep_cmd->add_option("--out", sweep_out, "Output CSV (default: stdout)");

    // eval ---------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "MAE/SDAE of a measured field against truth");
    std::string ev_measured, ev_truth, ev_rotation;
    eval_cmd->add_option("--measured", ev_measured, "Measured field CSV")->required();
    eval_cmd->add_option("--truth", ev_truth, "Truth field CSV");
    eval_cmd->add_option("--truth-rotation", ev_rotation,
                         "Analytic truth 'theta_deg,x0' instead of a CSV");

    // report -----------------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "Per-frame MAE/SDAE table for a run directory");
    std::vector<std::string> rep_measured;
    std::vector<std::string> rep_truth;
    std::string rep_thetas, rep_out;
    double rep_x0 = 0.0;
    rep->add_option("--measured", rep_measured, "Measured field CSVs, frame order")
        ->required()
        ->expected(-1);
    rep->add_option("--truth", rep_truth, "Truth field CSVs, same order")->expected(-1);
    rep->add_option("--thetas-deg", rep_thetas, "Comma-separated rotation angles per frame");
    rep->add_option("--x0", rep_x0, "Rotation-center abscissa for analytic truth");
    rep->add_option("--out", rep_out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (cal->parsed()) {
        for (const auto& p : cal_images) cal_cfg.calibration_images.push_back(p);
        cal_cfg.reference_image = cal_reference;
        if (!cal_config.empty()) merge_config_file(cal_config, cal_cfg, cal);
        const auto result = pipeline::calibrate(
            cal_cfg, fs::path(cal_out),
            cal_dump.empty() ? std::nullopt : std::optional<fs::path>(cal_dump),
            cal_kps_dump.empty() ? std::nullopt : std::optional<fs::path>(cal_kps_dump));
        std::cerr << "reference key points: " << result.reference_keypoints << "\n";
        for (const auto& s : result.per_image)
            std::cerr << s.image << ": keypoints=" << s.keypoints << " matches=" << s.matches
                      << " inliers=" << s.inliers << " rms=" << s.rms_reprojection << "\n";
        std::cerr << "mean homography written to " << cal_out << "\n";
        return 0;
    }

    if (rec->parsed()) {
        const Homography h = load_homography(rec_h);
        const GrayImage img = load_image(rec_in);
        save_image(rectify_image(img, h, rec_fill), rec_out);
        return 0;
    }

    if (dic_cmd->parsed()) {
        const dic::SubsetParams params = dic_opts.subset_params();
        const GrayImage ref = load_image(dic_ref);
        const GrayImage def = load_image(dic_def);
        const Vec2 seed_px = parse_point(dic_opts.seed_point, "--seed");

        dic::RoiMask roi;
        if (!dic_opts.roi.empty()) {
            const dic::RoiMask base = dic::full_roi(ref, params, seed_px);
            roi = dic::roi_from_mask(load_image(dic_opts.roi), base.grid, seed_px);
        } else {
            roi = dic::full_roi(ref, params, seed_px);
        }
        const Vec2 seed_node = roi.grid.node(static_cast<int>(roi.seed_index % roi.grid.nx),
                                             static_cast<int>(roi.seed_index / roi.grid.nx));
        const auto p0 = dic::seed_initial_guess(ref, def, seed_node, dic_opts.search_radius, params);
        const auto field = dic::rg_dic(ref, def, roi, params, p0);

        FieldMetadata meta;
        meta.params = params;
        meta.reference = dic_ref;
        meta.deformed = dic_def;
        save_field_csv(field, dic_out, meta);
        std::size_t valid = 0;
        for (auto v : field.valid) valid += v;
        std::cerr << "field: " << valid << "/" << field.grid.count() << " valid points\n";
        return 0;
    }

    if (run_cmd->parsed()) {
        pipeline::PipelineConfig cfg;
        cfg.subset = run_opts.subset_params();
        cfg.reference_image = run_ref;
        for (const auto& p : run_defs) cfg.deformed_images.push_back(p);
        cfg.rectify = !run_no_rectify;
        if (!run_h.empty()) cfg.homography_file = run_h;
        cfg.fill = run_fill;
        cfg.rng_seed = run_rng_seed;
        cfg.threads = run_threads;
        cfg.dic_seed_px = parse_point(run_opts.seed_point, "--seed");
        cfg.search_radius = run_opts.search_radius;
        if (!run_opts.roi.empty()) cfg.roi_image = run_opts.roi;
        if (!run_config.empty()) merge_config_file(run_config, cfg, run_cmd);

        const auto result = pipeline::run(cfg, run_outdir);
        for (const auto& f : result.frames)
            std::cerr << f.input << ": " << (f.ok ? "ok" : "FAILED") << " valid="
                      << f.points_valid << "/" << f.points_total
                      << (f.message.empty() ? "" : " (" + f.message + ")") << "\n";
        std::cerr << "manifest: " << result.manifest.string() << "\n";
        return result.all_ok ? 0 : 3;
    }

    if (rotfield->parsed()) {
        const GrayImage ref = load_image(rf_in);
        const Interpolation kind =
            rf_interp == "bilinear" ? Interpolation::Bilinear : Interpolation::Bicubic;
        save_image(generate_deformed(ref, {rf_x0, rf_theta_deg * kDegToRad}, kind), rf_out);
        return 0;
    }

    if (camera->parsed()) {
        const GrayImage img = load_image(cam_in);
        VirtualCamera cam = VirtualCamera::defaults_for(img);
        if (cam_focal > 0.0) cam.focal_px = cam_focal;
        if (cam_cx >= 0.0) cam.cx = cam_cx;
        if (cam_cy >= 0.0) cam.cy = cam_cy;
        const EulerAngles angles{cam_alpha * kDegToRad, cam_beta * kDegToRad,
                                 cam_gamma * kDegToRad};
        const auto view = simulate_camera_rotation(img, angles, cam);
        save_image(view.image, cam_out);
        if (!cam_hout.empty()) save_homography(view.map, cam_hout);
        return 0;
    }

    if (speckle->parsed()) {
        save_image(synthesize_speckle(sp_w, sp_h, sp_seed, sp_params), sp_out);
        return 0;
    }

    if (sweep_cmd->parsed()) {
        CameraGeometry g{em_f, em_s, em_theta_deg * kDegToRad};
        ObjectMotion m{em_xa, em_ya, em_dx, em_dy};
        if (!sweep_fix.empty()) apply_fixed_params(sweep_fix, g, m);
        std::vector<SweepAxis> axes;
        for (const auto& a : sweep_axes) axes.push_back(parse_axis(a));
        ErrorTarget target;
        if (sweep_target == "error_dx") target = ErrorTarget::Dx;
        else if (sweep_target == "error_dy") target = ErrorTarget::Dy;
        else throw CliError{2, "--target must be error_dx or error_dy"};

        const auto rows = sweep(g, m, axes, target);
        std::ostringstream os;
        os << "f,S,theta_deg,xA,yA,dx,dy,error,ok\n";
        for (const auto& r : rows) {
            os << format_double(r.geometry.focal_length) << ','
               << format_double(r.geometry.object_distance) << ','
               << format_double(r.geometry.tilt_rad / kDegToRad) << ','
               << format_double(r.motion.xa) << ',' << format_double(r.motion.ya) << ','
               << format_double(r.motion.dx) << ',' << format_double(r.motion.dy) << ','
               << (r.ok ? format_double(r.error) : std::string("nan")) << ','
               << (r.ok ? 1 : 0) << '\n';
        }
        if (sweep_out.empty()) {
            std::cout << os.str();
        } else {
            std::ofstream out(sweep_out, std::ios::binary);
            if (!out) throw IoError("cannot write " + sweep_out);
            out << os.str();
        }
        return 0;
    }

    if (em->parsed()) {
        const CameraGeometry g{em_f, em_s, em_theta_deg * kDegToRad};
        const ObjectMotion m{em_xa, em_ya, em_dx, em_dy};
        json j;
        j["dx_perp"] = projected_dx_perp(g, m);
        j["dx_nonperp"] = projected_dx_nonperp(g, m);
        j["error_dx"] = error_dx(g, m);
        j["dy_perp"] = projected_dy_perp(g, m);
        j["dy_nonperp"] = projected_dy_nonperp(g, m);
        j["error_dy"] = error_dy(g, m);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        const auto measured = load_field_csv(ev_measured);
        ErrorStats stats;
        if (!ev_rotation.empty()) {
            const Vec2 tr = parse_point(ev_rotation, "--truth-rotation");
            const RotationField field{tr.y, tr.x * kDegToRad};
            stats = field_error(measured, [&](double x, double y) {
                return rotation_displacement(x, y, field);
            });
        } else if (!ev_truth.empty()) {
            stats = field_error(measured, load_field_csv(ev_truth));
        } else {
            throw CliError{2, "eval needs --truth or --truth-rotation"};
        }
        std::cout << error_stats_json(stats).dump(2) << "\n";
        return 0;
    }

    if (rep->parsed()) {
        std::vector<fs::path> measured(rep_measured.begin(), rep_measured.end());
        const std::optional<fs::path> out =
            rep_out.empty() ? std::nullopt : std::optional<fs::path>(rep_out);
        std::vector<pipeline::ReportRow> rows;
        if (!rep_truth.empty()) {
            rows = pipeline::report(measured, {rep_truth.begin(), rep_truth.end()}, out);
        } else if (!rep_thetas.empty()) {
            rows = pipeline::report_rotation_truth(measured, rep_x0,
                                                   parse_theta_list(rep_thetas), out);
        } else {
            throw CliError{2, "report needs --truth or --thetas-deg with --x0"};
        }
        if (rep_out.empty()) {
            std::cout << "frame,mae_u,mae_v,sdae_u,sdae_v,count\n";
            for (const auto& r : rows)
                std::cout << r.frame << ',' << format_double(r.stats.mae.u) << ','
                          << format_double(r.stats.mae.v) << ',' << format_double(r.stats.sdae.u)
                          << ',' << format_double(r.stats.sdae.v) << ',' << r.stats.count << "\n";
        }
        return 0;
    }

    return 0;
}

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const InvalidParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationFailedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const SeedFailedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
