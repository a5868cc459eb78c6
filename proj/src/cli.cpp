#include "warpfield/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "warpfield/decimate.hpp"
#include "warpfield/fit.hpp"
#include "warpfield/fixtures.hpp"
#include "warpfield/metrics.hpp"
#include "warpfield/obj_io.hpp"
#include "warpfield/threading.hpp"

namespace warpfield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flat-JSON config files; command-line flags take precedence.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}";
    }
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j = json::parse(input);
        std::vector<CLI::ConfigItem> items;
        for (auto it = j.begin(); it != j.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            if (it.value().is_array())
                for (const auto& v : it.value()) item.inputs.push_back(v.dump());
            else if (it.value().is_string())
                item.inputs.push_back(it.value().get<std::string>());
            else
                item.inputs.push_back(it.value().dump());
            items.push_back(item);
        }
        return items;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

// Every run leaves its fully resolved configuration next to its outputs.
void echo_config(const fs::path& out_dir, const std::string& subcommand, const json& resolved) {
    json j = resolved;
    j["subcommand"] = subcommand;
    write_text(out_dir / "run_config.json", j.dump(2) + "\n");
}

std::vector<Vec3> load_points_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open points file " + path);
    json j = json::parse(in);
    std::vector<Vec3> pts;
    for (const auto& p : j) pts.push_back({p.at(0), p.at(1), p.at(2)});
    return pts;
}

void save_points_json(const std::vector<Vec3>& pts, const std::string& path) {
    json j = json::array();
    for (const Vec3& p : pts) j.push_back({p.x, p.y, p.z});
    write_text(path, j.dump() + "\n");
}

struct CommonFlags {
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware default
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--threads", flags.threads, "max worker threads (0 = auto)");
    cmd->add_option("--out", flags.out, "output directory")->required();
    cmd->set_config("--config")->configurable(false);
    cmd->config_formatter(std::make_shared<JsonConfig>());
}

fs::path prepare_out(const CommonFlags& flags) {
    fs::create_directories(flags.out);
    if (flags.threads > 0) set_thread_cap(flags.threads);
    return flags.out;
}

std::vector<TrainSample> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path);
    json j = json::parse(in);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    std::vector<TrainSample> samples;
    for (const auto& entry : j) {
        TrainSample s;
        s.camera = load_camera(resolve(entry.at("camera")));
        s.image = to_float(load_png(resolve(entry.at("image"))));
        PoseFile pose = load_pose_file(resolve(entry.at("pose")));
        s.pair = std::move(pose.pair);
        s.skeleton = std::move(pose.skeleton);
        if (entry.contains("mask"))
            s.mask = mask_from_image(load_png(resolve(entry.at("mask"))));
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"warpfield: surface-driven deformation of tri-plane radiance fields"};
    app.require_subcommand(1);

    // --- fixtures ---
    CommonFlags fixtures_flags;
    auto* cmd_fixtures = app.add_subcommand("fixtures", "emit the deterministic test scenes");
    add_common(cmd_fixtures, fixtures_flags);

    // --- decimate ---
    CommonFlags decimate_flags;
    std::string decimate_pose;
    int decimate_target = 1376;
    auto* cmd_decimate = app.add_subcommand("decimate", "QEM-decimate a posed pair");
    cmd_decimate->add_option("--pose", decimate_pose, "pose file")->required();
    cmd_decimate->add_option("--target", decimate_target, "target face count");
    add_common(cmd_decimate, decimate_flags);

    // --- expand ---
    CommonFlags expand_flags;
    std::string expand_mesh;
    double expand_growth = 0.05;
    auto* cmd_expand = app.add_subcommand("expand", "offset a mesh along vertex normals");
    cmd_expand->add_option("--mesh", expand_mesh, "input OBJ")->required();
    cmd_expand->add_option("--growth", expand_growth, "offset distance");
    add_common(cmd_expand, expand_flags);

    // --- deform ---
    CommonFlags deform_flags;
    std::string deform_pose, deform_points, deform_method = "sf";
    int deform_grid_res = 16;
    auto* cmd_deform = app.add_subcommand("deform", "map points to canonical space");
    cmd_deform->add_option("--pose", deform_pose, "pose file")->required();
    cmd_deform->add_option("--points", deform_points, "JSON array of [x,y,z]")->required();
    cmd_deform->add_option("--method", deform_method, "sf|skin|mvc|mvc-grid|identity");
    cmd_deform->add_option("--grid-res", deform_grid_res, "MVC grid resolution");
    add_common(cmd_deform, deform_flags);

    // --- render ---
    CommonFlags render_flags;
    std::string render_field, render_pose, render_camera, render_method = "sf";
    int render_coarse = 64, render_fine = 64, render_grid_res = 16;
    double render_growth = 0.05;
    bool render_jitter = false;
    std::vector<double> render_bg{0, 0, 0};
    auto* cmd_render = app.add_subcommand("render", "render the deformed field");
    cmd_render->add_option("--field", render_field, "TPLF field file")->required();
    cmd_render->add_option("--pose", render_pose, "pose file")->required();
    cmd_render->add_option("--camera", render_camera, "camera file")->required();
    cmd_render->add_option("--method", render_method, "sf|skin|mvc|mvc-grid|identity");
    cmd_render->add_option("--coarse", render_coarse, "coarse samples per ray");
    cmd_render->add_option("--fine", render_fine, "importance samples per ray");
    cmd_render->add_option("--growth", render_growth, "sampling hull offset");
    cmd_render->add_flag("--jitter", render_jitter, "jitter stratified samples");
    cmd_render->add_option("--background", render_bg, "background RGB in [0,1]")->expected(3);
    cmd_render->add_option("--grid-res", render_grid_res, "MVC grid resolution");
    add_common(cmd_render, render_flags);

    // --- fit ---
    CommonFlags fit_flags;
    std::string fit_manifest, fit_method = "sf";
    FitConfig fit_cfg;
    auto* cmd_fit = app.add_subcommand("fit", "overfit the field to posed views");
    cmd_fit->add_option("--manifest", fit_manifest, "scene manifest JSON")->required();
    cmd_fit->add_option("--steps", fit_cfg.steps, "optimization steps");
    cmd_fit->add_option("--batch-rays", fit_cfg.batch_rays, "rays per step");
    cmd_fit->add_option("--step-size", fit_cfg.step_size, "Adam step size");
    cmd_fit->add_option("--plane-res", fit_cfg.plane_resolution, "plane resolution N");
    cmd_fit->add_option("--channels", fit_cfg.plane_channels, "plane channels C");
    cmd_fit->add_option("--hidden", fit_cfg.hidden, "decoder hidden width");
    cmd_fit->add_option("--out-channels", fit_cfg.out_channels, "decoder feature channels");
    cmd_fit->add_option("--coarse", fit_cfg.sampling.n_coarse, "samples per ray");
    cmd_fit->add_option("--growth", fit_cfg.sampling.growth, "sampling hull offset");
    cmd_fit->add_option("--method", fit_method, "sf|skin|mvc|mvc-grid|identity");
    cmd_fit->add_option("--grid-res", fit_cfg.grid_resolution, "MVC grid resolution");
    add_common(cmd_fit, fit_flags);

    // --- bench ---
    CommonFlags bench_flags;
    std::string bench_pose;
    std::vector<std::string> bench_methods{"mvc-grid", "sf", "skin", "mvc"};
    size_t bench_points = size_t(1) << 20;
    int bench_repeats = 5, bench_grid_res = 16;
    auto* cmd_bench = app.add_subcommand("bench", "time the deformation backends");
    cmd_bench->add_option("--pose", bench_pose, "pose file")->required();
    cmd_bench->add_option("--methods", bench_methods, "subset of sf skin mvc mvc-grid");
    cmd_bench->add_option("--points", bench_points, "query points per run");
    cmd_bench->add_option("--repeats", bench_repeats, "timed repeats per method");
    cmd_bench->add_option("--grid-res", bench_grid_res, "MVC grid resolution");
    add_common(cmd_bench, bench_flags);

    // --- metrics ---
    CommonFlags metrics_flags;
    std::string metrics_pred, metrics_gt, metrics_mask;
    auto* cmd_metrics = app.add_subcommand("metrics", "masked PSNR and SSIM");
    cmd_metrics->add_option("--pred", metrics_pred, "predicted PNG")->required();
    cmd_metrics->add_option("--gt", metrics_gt, "ground-truth PNG")->required();
    cmd_metrics->add_option("--mask", metrics_mask, "foreground mask PNG");
    add_common(cmd_metrics, metrics_flags);

    std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 wants reversed
    try {
        app.parse(argv);

        if (*cmd_fixtures) {
            fs::path out = prepare_out(fixtures_flags);
            write_fixtures(out.string(), fixtures_flags.seed);
            echo_config(out, "fixtures", {{"seed", fixtures_flags.seed}, {"out", fixtures_flags.out}});
        } else if (*cmd_decimate) {
            fs::path out = prepare_out(decimate_flags);
            PoseFile pose = load_pose_file(decimate_pose);
            DecimateResult result = decimate_pair(pose.pair, decimate_target);
            save_obj(result.pair.canonical, (out / "canonical.obj").string());
            save_obj(result.pair.deformed, (out / "deformed.obj").string());
            json corr = json::array();
            for (const auto& set : result.correspondence.coarse_to_fine) corr.push_back(set);
            write_text(out / "correspondence.json", corr.dump() + "\n");
            echo_config(out, "decimate",
                        {{"pose", decimate_pose}, {"target", decimate_target},
                         {"out", decimate_flags.out}});
        } else if (*cmd_expand) {
            fs::path out = prepare_out(expand_flags);
            TriMesh mesh = load_obj(expand_mesh);
            save_obj(expand(mesh, expand_growth), (out / "expanded.obj").string());
            echo_config(out, "expand",
                        {{"mesh", expand_mesh}, {"growth", expand_growth},
                         {"out", expand_flags.out}});
        } else if (*cmd_deform) {
            fs::path out = prepare_out(deform_flags);
            PoseFile pose = load_pose_file(deform_pose);
            Deformer deformer = make_deformer(pose, deform_method_from_string(deform_method),
                                              deform_grid_res);
            std::vector<Vec3> pts = load_points_json(deform_points);
            save_points_json(deform_batch(pts, deformer), (out / "deformed_points.json").string());
            echo_config(out, "deform",
                        {{"pose", deform_pose}, {"points", deform_points},
                         {"method", deform_method}, {"grid_res", deform_grid_res},
                         {"out", deform_flags.out}});
        } else if (*cmd_render) {
            fs::path out = prepare_out(render_flags);
            TriPlane tri;
            Decoder dec;
            load_field(render_field, tri, dec);
            PoseFile pose = load_pose_file(render_pose);
            Camera cam = load_camera(render_camera);

            SamplingConfig cfg;
            cfg.n_coarse = render_coarse;
            cfg.n_fine = render_fine;
            cfg.jitter = render_jitter;
            cfg.growth = render_growth;
            cfg.background = {render_bg[0], render_bg[1], render_bg[2]};

            SceneNormalization norm = scene_normalization({&pose.pair}, cfg.growth);
            PoseFile norm_pose;
            norm_pose.pair = normalized(pose.pair, norm);
            if (pose.skeleton) norm_pose.skeleton = normalized(*pose.skeleton, norm);
            Deformer deformer = make_deformer(norm_pose, deform_method_from_string(render_method),
                                              render_grid_res);
            RenderedImage img = render_image(tri, dec, deformer, norm_pose.pair,
                                             normalized(cam, norm), cfg, render_flags.seed);
            save_png(img.rgb, (out / "rgb.png").string());
            save_png(to_u8(img.alpha), (out / "alpha.png").string());
            save_fimg(img.features, (out / "features.fimg").string());
            echo_config(out, "render",
                        {{"field", render_field}, {"pose", render_pose},
                         {"camera", render_camera}, {"method", render_method},
                         {"coarse", render_coarse}, {"fine", render_fine},
                         {"growth", render_growth}, {"jitter", render_jitter},
                         {"background", render_bg}, {"grid_res", render_grid_res},
                         {"seed", render_flags.seed}, {"out", render_flags.out}});
        } else if (*cmd_fit) {
            fs::path out = prepare_out(fit_flags);
            fit_cfg.seed = fit_flags.seed;
            fit_cfg.method = deform_method_from_string(fit_method);
            std::vector<TrainSample> samples = load_manifest(fit_manifest);
            FitResult result = fit_scene(samples, fit_cfg);

            save_checkpoint((out / "checkpoint.tplf").string(), result.planes, result.decoder,
                            result.adam);
            std::ostringstream csv;
            csv.precision(17);
            csv << "step,loss\n";
            for (size_t i = 0; i < result.loss_curve.size(); ++i)
                csv << i << "," << result.loss_curve[i] << "\n";
            write_text(out / "loss.csv", csv.str());
            echo_config(out, "fit",
                        {{"manifest", fit_manifest}, {"steps", fit_cfg.steps},
                         {"batch_rays", fit_cfg.batch_rays}, {"step_size", fit_cfg.step_size},
                         {"plane_res", fit_cfg.plane_resolution},
                         {"channels", fit_cfg.plane_channels}, {"hidden", fit_cfg.hidden},
                         {"out_channels", fit_cfg.out_channels},
                         {"coarse", fit_cfg.sampling.n_coarse},
                         {"growth", fit_cfg.sampling.growth}, {"method", fit_method},
                         {"grid_res", fit_cfg.grid_resolution}, {"seed", fit_cfg.seed},
                         {"out", fit_flags.out}});
        } else if (*cmd_bench) {
            fs::path out = prepare_out(bench_flags);
            PoseFile pose = load_pose_file(bench_pose);
            std::vector<DeformMethod> methods;
            for (const std::string& m : bench_methods)
                methods.push_back(deform_method_from_string(m));
            Skeleton skeleton = pose.skeleton.value_or(Skeleton{});
            std::vector<BenchResult> results =
                bench_deformers(pose.pair, skeleton, methods, bench_points, bench_repeats,
                                bench_flags.seed, bench_grid_res);
            write_text(out / "bench.csv", bench_csv(results));
            write_text(out / "bench.json", bench_json(results) + "\n");
            echo_config(out, "bench",
                        {{"pose", bench_pose}, {"methods", bench_methods},
                         {"points", bench_points}, {"repeats", bench_repeats},
                         {"grid_res", bench_grid_res}, {"seed", bench_flags.seed},
                         {"out", bench_flags.out}});
        } else if (*cmd_metrics) {
            fs::path out = prepare_out(metrics_flags);
            ImageF pred = to_float(load_png(metrics_pred));
            ImageF gt = to_float(load_png(metrics_gt));
            std::vector<uint8_t> mask(pred.pixel_count(), 1);
            if (!metrics_mask.empty()) mask = mask_from_image(load_png(metrics_mask));
            MetricReport report = metric_report(pred, gt, mask);
            write_text(out / "metrics.json", metric_report_json(report) + "\n");
            echo_config(out, "metrics",
                        {{"pred", metrics_pred}, {"gt", metrics_gt}, {"mask", metrics_mask},
                         {"out", metrics_flags.out}});
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace warpfield
