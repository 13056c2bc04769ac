#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempdepth/diffmask.hpp"
#include "tempdepth/geometry.hpp"
#include "tempdepth/io.hpp"
#include "tempdepth/losses.hpp"
#include "tempdepth/metrics.hpp"
#include "tempdepth/numeric.hpp"
#include "tempdepth/synthetic.hpp"
#include "tempdepth/temporal.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tempdepth;

// Exit codes: 0 success, 2 usage/spec, 3 I/O or format, 4 invariant or check
// failure, 5 empty data.
namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheck = 4;
constexpr int kExitEmpty = 5;

struct GenOptions {
    std::string spec_path;
    std::string out_dir;
    int frames = 2;
    int frame_stride = 1;
};

struct DiffmaskOptions {
    std::string depth0, depth1;
    std::string out_dir = ".";
    MaskConfig mask;
};

struct PipelineOptions {
    std::string frame_dir;
    std::string out_dir = ".";
    std::string weights_dir;
    int stride = 8;
    int cd = 8;
    int cn = 4;
    std::uint64_t seed = 42;
    bool normalize_features = false;
    MaskConfig mask;
};

struct EvalOptions {
    std::string pred, gt;
    double cap = 80.0;
};

struct TcOptions {
    std::string depth_t, depth_prev, flow;
    std::string validity;
    double thr = 1.25;
};

struct GradcheckOptions {
    std::uint64_t seed = 42;
    int trials = 20;
    bool inject_bug = false;
    LossConfig loss;
};

std::string fixed_index(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return buf;
}

SceneSpec parse_scene_spec(const json& j) {
    SceneSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    if (spec.width < 3 || spec.height < 3)
        throw PreconditionError("scene must be at least 3x3");
    const auto& bg = j.at("background");
    spec.plane_a = bg.at("a").get<double>();
    spec.plane_b = bg.at("b").get<double>();
    spec.plane_c = bg.at("c").get<double>();
    if (j.contains("camera_shift")) {
        spec.camera_shift_x = j["camera_shift"].at(0).get<double>();
        spec.camera_shift_y = j["camera_shift"].at(1).get<double>();
    }
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("objects")) {
        for (const auto& jo : j["objects"]) {
            SceneObject o;
            std::string shape = jo.at("shape").get<std::string>();
            if (shape == "box")
                o.shape = SceneObject::Shape::Box;
            else if (shape == "sphere-cap" || shape == "sphere_cap")
                o.shape = SceneObject::Shape::SphereCap;
            else
                throw PreconditionError("unknown object shape '" + shape + "'");
            o.x = jo.at("position").at(0).get<double>();
            o.y = jo.at("position").at(1).get<double>();
            o.size = jo.at("size").get<double>();
            o.depth_offset = jo.at("depth_offset").get<double>();
            if (jo.contains("velocity")) {
                o.vx = jo["velocity"].at(0).get<double>();
                o.vy = jo["velocity"].at(1).get<double>();
            }
            if (!(o.size > 0.0))
                throw PreconditionError("object size must be positive");
            spec.objects.push_back(o);
        }
    }
    return spec;
}

json scene_spec_to_json(const SceneSpec& spec) {
    json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["background"] = {{"a", spec.plane_a}, {"b", spec.plane_b}, {"c", spec.plane_c}};
    j["camera_shift"] = {spec.camera_shift_x, spec.camera_shift_y};
    j["seed"] = spec.seed;
    j["objects"] = json::array();
    for (const auto& o : spec.objects) {
        json jo;
        jo["shape"] = o.shape == SceneObject::Shape::Box ? "box" : "sphere-cap";
        jo["position"] = {o.x, o.y};
        jo["size"] = o.size;
        jo["depth_offset"] = o.depth_offset;
        jo["velocity"] = {o.vx, o.vy};
        j["objects"].push_back(jo);
    }
    return j;
}

int cmd_gen(const GenOptions& opt) {
    SceneSpec spec;
    std::vector<FramePacket> frames;
    try {
        std::ifstream in(opt.spec_path);
        if (!in)
            throw IoError("cannot open scene spec " + opt.spec_path);
        json j = json::parse(in);
        spec = parse_scene_spec(j);
        if (opt.frames < 1)
            throw PreconditionError("--frames must be >= 1");
        if (opt.frame_stride < 1)
            throw PreconditionError("--frame-stride must be >= 1");
        frames = render_sequence(spec, opt.frames, opt.frame_stride);
    } catch (const json::exception& e) {
        std::cerr << "bad scene spec: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "bad scene spec: " << e.what() << "\n";
        return kExitUsage;
    }

    fs::create_directories(opt.out_dir);

    json manifest;
    manifest["spec"] = scene_spec_to_json(spec);
    manifest["frames"] = opt.frames;
    manifest["frame_stride"] = opt.frame_stride;
    manifest["files"] = json::array();
    for (int f = 0; f < opt.frames; ++f) {
        std::string idx = fixed_index(f);
        std::string depth_name = "depth_" + idx + ".pfm";
        std::string normals_name = "normals_" + idx + ".pfm";
        std::string flow_name = "flow_" + idx + ".pfm";
        std::string changed_name = "changed_" + idx + ".pgm";
        write_pfm(to_raster(frames[f].depth), opt.out_dir + "/" + depth_name);
        write_pfm(to_raster(frames[f].normals_gt), opt.out_dir + "/" + normals_name);
        write_pfm(to_raster(frames[f].flow_to_prev), opt.out_dir + "/" + flow_name);
        write_mask_pgm(frames[f].changed_gt, opt.out_dir + "/" + changed_name);
        json entry;
        entry["depth"] = depth_name;
        entry["normals"] = normals_name;
        entry["flow"] = flow_name;
        entry["changed"] = changed_name;
        entry["offscreen_warning"] = frames[f].offscreen_warning;
        manifest["files"].push_back(entry);
    }
    std::ofstream mout(opt.out_dir + "/manifest.json");
    mout << manifest.dump(2) << "\n";
    std::cout << manifest.dump(2) << std::endl;
    return 0;
}

json mask_config_json(const MaskConfig& cfg) {
    return json{{"alpha", cfg.alpha},
                {"bins", cfg.histogram_bins},
                {"open_radius", cfg.refine_open_radius},
                {"close_radius", cfg.refine_close_radius}};
}

int cmd_diffmask(const DiffmaskOptions& opt) {
    DepthMap d0 = depth_from_raster(read_pfm(opt.depth0));
    DepthMap d1 = depth_from_raster(read_pfm(opt.depth1));
    if (!d0.values.same_shape(d1.values))
        throw SizeError("depth frames differ in size");

    NormalMap n0 = normals_from_depth(d0);
    NormalMap n1 = normals_from_depth(d1);
    VarianceMap var = directional_variance(n0, n1);
    double baseline = motion_baseline(var, opt.mask);
    BinaryMask md = raw_mask(var, baseline, opt.mask);
    BinaryMask ml = refine_mask(md, n0, opt.mask);

    fs::create_directories(opt.out_dir);
    write_pfm(to_raster(n0), opt.out_dir + "/normals0.pfm");
    write_pfm(to_raster(n1), opt.out_dir + "/normals1.pfm");
    write_pfm(to_raster(var.values), opt.out_dir + "/variance.pfm");
    write_mask_pgm(md, opt.out_dir + "/md.pgm");
    write_mask_pgm(ml, opt.out_dir + "/ml.pgm");

    json rep;
    rep["baseline"] = baseline;
    rep.update(mask_config_json(opt.mask));
    rep["raw_pixels"] = md.count();
    rep["refined_pixels"] = ml.count();
    rep["total_pixels"] = md.size();
    rep["dynamic_fraction"] =
        static_cast<double>(ml.count()) / static_cast<double>(ml.size());
    rep["threads"] = thread_cap();
    std::cout << rep.dump(2) << std::endl;
    return 0;
}

std::vector<std::string> list_depth_frames(const std::string& dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir))
        throw IoError("frame directory not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string name = e.path().filename().string();
        if (name.rfind("depth_", 0) == 0 && e.path().extension() == ".pfm")
            out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_pipeline(const PipelineOptions& opt) {
    auto depth_files = list_depth_frames(opt.frame_dir);
    if (depth_files.size() < 2)
        throw IoError("need at least two depth frames in " + opt.frame_dir);

    DepthMap d0 = depth_from_raster(read_pfm(depth_files[0]));
    DepthMap d1 = depth_from_raster(read_pfm(depth_files[1]));
    if (!d0.values.same_shape(d1.values))
        throw SizeError("depth frames differ in size");

    NormalMap n0 = normals_from_depth(d0);
    NormalMap n1 = normals_from_depth(d1);
    VarianceMap var = directional_variance(n0, n1);
    double baseline = motion_baseline(var, opt.mask);
    BinaryMask ml = refine_mask(raw_mask(var, baseline, opt.mask), n0, opt.mask);
    BinaryMask mlf = downsample_mask_max(ml, opt.stride);

    auto [zd0, zn0] = toy_feature_extractor(d0, n0, opt.stride, opt.cd, opt.cn, opt.seed);
    auto [zd1, zn1] = toy_feature_extractor(d1, n1, opt.stride, opt.cd, opt.cn, opt.seed);

    AttentionWeights w = opt.weights_dir.empty()
                             ? AttentionWeights::seeded(opt.cd, opt.seed)
                             : load_attention_weights(opt.weights_dir);
    w.normalize_features = opt.normalize_features;

    SnsTrace sns_trace;
    auto [zdyna0, zdyna1] = sns_forward(zd0, zd1, zn0, zn1, mlf, w, &sns_trace);
    MsTrace ms_trace;
    auto [zstatic0, zstatic1] = ms_forward(zd0, zd1, mlf, w, &ms_trace);
    FeatureGrid zv0 = fuse_video_feature(zstatic0, zdyna0, w);
    FeatureGrid zv1 = fuse_video_feature(zstatic1, zdyna1, w);

    constexpr double kRowTol = 1e-6;
    constexpr double kHullTol = 1e-6;
    double sns_row_err = std::max(max_row_sum_error(sns_trace.s01),
                                  max_row_sum_error(sns_trace.s10));
    double ms_row_err = std::max(max_row_sum_error(ms_trace.attn0),
                                 max_row_sum_error(ms_trace.attn1));
    double sns_hull_err = std::max(hull_violation(sns_trace.align0, zd1),
                                   hull_violation(sns_trace.align1, zd0));
    double ms_hull_err = std::max(hull_violation(ms_trace.align0, ms_trace.value0),
                                  hull_violation(ms_trace.align1, ms_trace.value1));
    bool weights_ok =
        weights_in_unit_interval(sns_trace.s01) && weights_in_unit_interval(sns_trace.s10) &&
        weights_in_unit_interval(ms_trace.attn0) && weights_in_unit_interval(ms_trace.attn1);
    bool finite_ok = true;
    for (const FeatureGrid* g : {&zdyna0, &zdyna1, &zstatic0, &zstatic1, &zv0, &zv1})
        for (double v : g->data)
            if (!std::isfinite(v)) finite_ok = false;

    bool passed = sns_row_err <= kRowTol && ms_row_err <= kRowTol &&
                  sns_hull_err <= kHullTol && ms_hull_err <= kHullTol && weights_ok &&
                  finite_ok;

    fs::create_directories(opt.out_dir);
    write_fgrid(zd0, opt.out_dir + "/zd0.fgrid");
    write_fgrid(zd1, opt.out_dir + "/zd1.fgrid");
    write_fgrid(zn0, opt.out_dir + "/zn0.fgrid");
    write_fgrid(zn1, opt.out_dir + "/zn1.fgrid");
    write_fgrid(zdyna0, opt.out_dir + "/zdyna0.fgrid");
    write_fgrid(zdyna1, opt.out_dir + "/zdyna1.fgrid");
    write_fgrid(zstatic0, opt.out_dir + "/zstatic0.fgrid");
    write_fgrid(zstatic1, opt.out_dir + "/zstatic1.fgrid");
    write_fgrid(zv0, opt.out_dir + "/zv0.fgrid");
    write_fgrid(zv1, opt.out_dir + "/zv1.fgrid");
    write_mask_pgm(mlf, opt.out_dir + "/mask_feature.pgm");
    fs::create_directories(opt.out_dir + "/weights");
    save_attention_weights(w, opt.out_dir + "/weights");

    json rep;
    rep["sns_row_sum_err"] = sns_row_err;
    rep["ms_row_sum_err"] = ms_row_err;
    rep["sns_hull_err"] = sns_hull_err;
    rep["ms_hull_err"] = ms_hull_err;
    rep["row_sum_tol"] = kRowTol;
    rep["hull_tol"] = kHullTol;
    rep["weights_in_range"] = weights_ok ? 1.0 : 0.0;
    rep["outputs_finite"] = finite_ok ? 1.0 : 0.0;
    rep["checks_passed"] = passed ? 1.0 : 0.0;
    rep["baseline"] = baseline;
    rep["dynamic_fraction_feature"] =
        static_cast<double>(mlf.count()) / static_cast<double>(mlf.size());
    rep.update(mask_config_json(opt.mask));
    rep["stride"] = opt.stride;
    rep["cd"] = opt.cd;
    rep["cn"] = opt.cn;
    rep["seed"] = opt.seed;
    rep["normalize_features"] = opt.normalize_features ? 1.0 : 0.0;
    rep["threads"] = thread_cap();
    std::cout << rep.dump(2) << std::endl;
    return passed ? 0 : kExitCheck;
}

int cmd_eval(const EvalOptions& opt) {
    DepthMap pred = depth_from_raster(read_pfm(opt.pred));
    DepthMap gt = depth_from_raster(read_pfm(opt.gt));
    MetricsReport r = depth_metrics(pred, gt, opt.cap);

    json rep;
    rep["abs_rel"] = r.abs_rel;
    rep["sq_rel"] = r.sq_rel;
    rep["rmse"] = r.rmse;
    rep["delta1"] = r.delta1;
    rep["delta2"] = r.delta2;
    rep["delta3"] = r.delta3;
    rep["cap"] = opt.cap;
    std::cout << rep.dump(2) << std::endl;
    return 0;
}

int cmd_tc(const TcOptions& opt) {
    DepthMap dt = depth_from_raster(read_pfm(opt.depth_t));
    DepthMap dprev = depth_from_raster(read_pfm(opt.depth_prev));
    FlowField flow = flow_from_raster(read_pfm(opt.flow));
    if (!dt.values.same_shape(dprev.values))
        throw SizeError("depth frames differ in size");

    auto [warped, validity] = backward_warp(dprev, flow);
    BinaryMask k(validity.height, validity.width);
    for (std::size_t i = 0; i < k.size(); ++i)
        k.values[i] = (validity.values[i] && dt.valid[i]) ? 1 : 0;
    if (!opt.validity.empty()) {
        BinaryMask user = read_mask_pgm(opt.validity);
        if (!user.same_shape(k))
            throw SizeError("validity mask differs in size");
        for (std::size_t i = 0; i < k.size(); ++i)
            k.values[i] = (k.values[i] && user.values[i]) ? 1 : 0;
    }

    double q = qtc(dt, warped, k);
    double r = rtc(dt, warped, k, opt.thr);

    json rep;
    rep["qtc"] = q;
    rep["rtc"] = r;
    rep["thr"] = opt.thr;
    rep["valid_fraction"] =
        static_cast<double>(k.count()) / static_cast<double>(k.size());
    std::cout << rep.dump(2) << std::endl;
    return 0;
}

int cmd_gradcheck(const GradcheckOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    auto rand_grid = [&](int h, int w, double lo, double hi) {
        Grid g(h, w);
        for (auto& v : g.data)
            v = lo + (uniform_pm1(rng) * 0.5 + 0.5) * (hi - lo);
        return g;
    };
    auto rel_err = [](const Grid& a, const Grid& n) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double denom = std::max(std::abs(a.data[i]), std::abs(n.data[i]));
            double diff = std::abs(a.data[i] - n.data[i]);
            worst = std::max(worst, denom > 0.0 ? diff / denom : diff);
        }
        return worst;
    };

    constexpr double kTol = 1e-4;
    const double h = 1e-4;
    double worst_silog = 0.0, worst_mse = 0.0;

    for (int t = 0; t < opt.trials; ++t) {
        DepthMap gt = DepthMap::from_grid(rand_grid(4, 4, 1.0, 10.0));
        DepthMap pred = DepthMap::from_grid(rand_grid(4, 4, 1.0, 10.0));

        Grid analytic = silog_grad(pred, gt, opt.loss);
        if (opt.inject_bug && t == 0)
            analytic.data[0] += 1e-2;
        // Central differences with the step taken in the log domain.
        Grid numeric(4, 4);
        Grid probe = pred.values;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            double orig = probe.data[i];
            probe.data[i] = std::exp(std::log(orig) + h);
            double fp = silog(DepthMap::from_grid(probe), gt, opt.loss);
            probe.data[i] = std::exp(std::log(orig) - h);
            double fm = silog(DepthMap::from_grid(probe), gt, opt.loss);
            probe.data[i] = orig;
            numeric.data[i] = (fp - fm) / (2.0 * h) / orig; // d/dlog p -> d/dp
        }
        worst_silog = std::max(worst_silog, rel_err(analytic, numeric));

        Grid a = rand_grid(4, 4, -2.0, 2.0);
        Grid b = rand_grid(4, 4, -2.0, 2.0);
        Grid mg = mse_grad(a, b);
        Grid mn = finite_diff([&](const Grid& x) { return mse(x, b); }, a, h);
        worst_mse = std::max(worst_mse, rel_err(mg, mn));
    }

    bool passed = worst_silog < kTol && worst_mse < kTol;
    json rep;
    rep["silog_max_rel_err"] = worst_silog;
    rep["mse_max_rel_err"] = worst_mse;
    rep["tolerance"] = kTol;
    rep["trials"] = opt.trials;
    rep["seed"] = opt.seed;
    rep["lambda"] = opt.loss.lambda;
    rep["silog_scale"] = opt.loss.silog_scale;
    rep["loss_alpha"] = opt.loss.loss_alpha;
    rep["passed"] = passed ? 1.0 : 0.0;
    std::cout << rep.dump(2) << std::endl;
    return passed ? 0 : kExitCheck;
}

void add_mask_flags(CLI::App* cmd, MaskConfig& cfg) {
    cmd->add_option("--alpha", cfg.alpha, "Threshold margin over the motion baseline");
    cmd->add_option("--bins", cfg.histogram_bins, "Histogram bins for the baseline mode");
    cmd->add_option("--open-radius", cfg.refine_open_radius, "Opening radius (pixels)");
    cmd->add_option("--close-radius", cfg.refine_close_radius, "Closing radius (pixels)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal depth-consistency toolkit"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* cgen = app.add_subcommand("gen", "Render a synthetic frame sequence");
    cgen->add_option("spec", gen.spec_path, "Scene spec JSON")->required();
    cgen->add_option("out_dir", gen.out_dir, "Output directory")->required();
    cgen->add_option("--frames", gen.frames, "Number of frames");
    cgen->add_option("--frame-stride", gen.frame_stride, "Frame sampling stride");

    DiffmaskOptions dm;
    auto* cdm = app.add_subcommand("diffmask", "Difference mask from two depth frames");
    cdm->add_option("depth0", dm.depth0, "First depth PFM")->required();
    cdm->add_option("depth1", dm.depth1, "Second depth PFM")->required();
    cdm->add_option("--out-dir", dm.out_dir, "Artifact directory");
    add_mask_flags(cdm, dm.mask);

    PipelineOptions pl;
    auto* cpl = app.add_subcommand("pipeline", "Full feature pipeline over a frame pair");
    cpl->add_option("frame_dir", pl.frame_dir, "Directory of depth_*.pfm frames")->required();
    cpl->add_option("--out-dir", pl.out_dir, "Artifact directory");
    cpl->add_option("--weights-dir", pl.weights_dir, "Load attention weights from FGRID files");
    cpl->add_option("--stride", pl.stride, "Patch stride of the feature extractor");
    cpl->add_option("--cd", pl.cd, "Depth feature channels");
    cpl->add_option("--cn", pl.cn, "Normal feature channels");
    cpl->add_option("--seed", pl.seed, "Seed for projections and weights");
    cpl->add_flag("--normalize-features", pl.normalize_features,
                  "L2-normalize fused features before the similarity product");
    add_mask_flags(cpl, pl.mask);

    EvalOptions ev;
    auto* cev = app.add_subcommand("eval", "Depth accuracy metrics");
    cev->add_option("pred", ev.pred, "Predicted depth PFM")->required();
    cev->add_option("gt", ev.gt, "Ground-truth depth PFM")->required();
    cev->add_option("--cap", ev.cap, "Ground-truth depth cap (meters)");

    TcOptions tc;
    auto* ctc = app.add_subcommand("tc", "Temporal consistency via backward warping");
    ctc->add_option("depth_t", tc.depth_t, "Current depth PFM")->required();
    ctc->add_option("depth_prev", tc.depth_prev, "Previous depth PFM")->required();
    ctc->add_option("flow", tc.flow, "Flow PFM (to previous frame)")->required();
    ctc->add_option("--thr", tc.thr, "Ratio threshold");
    ctc->add_option("--validity", tc.validity, "Extra validity mask PGM");

    GradcheckOptions gc;
    auto* cgc = app.add_subcommand("gradcheck", "Verify analytic loss gradients");
    cgc->add_option("--seed", gc.seed, "Seed for random instances");
    cgc->add_option("--trials", gc.trials, "Number of random instances");
    cgc->add_flag("--inject-bug", gc.inject_bug, "Perturb one gradient to test the checker");
    cgc->add_option("--lambda", gc.loss.lambda, "Variance-focus parameter");
    cgc->add_option("--silog-scale", gc.loss.silog_scale, "Scale on the depth loss");
    cgc->add_option("--loss-alpha", gc.loss.loss_alpha, "Weight on normal/mask losses");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (cgen->parsed()) return cmd_gen(gen);
        if (cdm->parsed()) return cmd_diffmask(dm);
        if (cpl->parsed()) return cmd_pipeline(pl);
        if (cev->parsed()) return cmd_eval(ev);
        if (ctc->parsed()) return cmd_tc(tc);
        if (cgc->parsed()) return cmd_gradcheck(gc);
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitIo;
    } catch (const TruncationError& e) {
        std::cerr << "truncated input: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SizeError& e) {
        std::cerr << "size error: " << e.what() << "\n";
        return kExitIo;
    } catch (const EmptyInputError& e) {
        std::cerr << "empty input: " << e.what() << "\n";
        return kExitEmpty;
    } catch (const Error& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitCheck;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
