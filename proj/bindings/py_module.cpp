#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tempdepth/diffmask.hpp"
#include "tempdepth/geometry.hpp"
#include "tempdepth/io.hpp"
#include "tempdepth/losses.hpp"
#include "tempdepth/metrics.hpp"
#include "tempdepth/synthetic.hpp"
#include "tempdepth/temporal.hpp"

namespace py = pybind11;
using namespace tempdepth;

namespace {

using ArrF = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ArrU8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Grid grid_from_array(const ArrF& a) {
    if (a.ndim() != 2)
        throw SizeError("expected a 2-D array");
    Grid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + g.size(), g.data.begin());
    return g;
}

py::array_t<double> grid_to_array(const Grid& g) {
    py::array_t<double> a({g.height, g.width});
    std::copy(g.data.begin(), g.data.end(), a.mutable_data());
    return a;
}

DepthMap depth_from_array(const ArrF& a) {
    return DepthMap::from_grid(grid_from_array(a));
}

BinaryMask mask_from_array(const ArrU8& a) {
    if (a.ndim() != 2)
        throw SizeError("expected a 2-D mask array");
    BinaryMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    for (std::size_t i = 0; i < m.size(); ++i)
        m.values[i] = a.data()[i] ? 1 : 0;
    return m;
}

py::array_t<std::uint8_t> mask_to_array(const BinaryMask& m) {
    py::array_t<std::uint8_t> a({m.height, m.width});
    std::copy(m.values.begin(), m.values.end(), a.mutable_data());
    return a;
}

NormalMap normals_from_array(const ArrF& a) {
    if (a.ndim() != 3 || a.shape(0) != 3)
        throw SizeError("expected a (3, H, W) normal array");
    NormalMap n(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::size_t plane = n.nx.size();
    const double* p = a.data();
    std::copy(p, p + plane, n.nx.data.begin());
    std::copy(p + plane, p + 2 * plane, n.ny.data.begin());
    std::copy(p + 2 * plane, p + 3 * plane, n.nz.data.begin());
    return n;
}

py::array_t<double> normals_to_array(const NormalMap& n) {
    py::array_t<double> a({3, n.height, n.width});
    double* p = a.mutable_data();
    std::size_t plane = n.nx.size();
    std::copy(n.nx.data.begin(), n.nx.data.end(), p);
    std::copy(n.ny.data.begin(), n.ny.data.end(), p + plane);
    std::copy(n.nz.data.begin(), n.nz.data.end(), p + 2 * plane);
    return a;
}

py::array_t<std::uint8_t> valid_to_array(const std::vector<std::uint8_t>& v, int h, int w) {
    py::array_t<std::uint8_t> a({h, w});
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

FeatureGrid fgrid_from_array(const ArrF& a) {
    if (a.ndim() != 3)
        throw SizeError("expected a (C, H, W) feature array");
    FeatureGrid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                  static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + g.data.size(), g.data.begin());
    return g;
}

py::array_t<double> fgrid_to_array(const FeatureGrid& g) {
    py::array_t<double> a({g.channels, g.height, g.width});
    std::copy(g.data.begin(), g.data.end(), a.mutable_data());
    return a;
}

Mat mat_from_array(const ArrF& a) {
    if (a.ndim() != 2)
        throw SizeError("expected a 2-D matrix");
    Mat m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> mat_to_array(const Mat& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

py::array_t<double> simmap_to_array(const SimilarityMap& s) {
    py::array_t<double> a({s.rows, s.cols});
    std::copy(s.weights.begin(), s.weights.end(), a.mutable_data());
    return a;
}

FlowField flow_from_array(const ArrF& a) {
    if (a.ndim() != 3 || a.shape(0) != 2)
        throw SizeError("expected a (2, H, W) flow array");
    FlowField f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::size_t plane = f.u.size();
    std::copy(a.data(), a.data() + plane, f.u.data.begin());
    std::copy(a.data() + plane, a.data() + 2 * plane, f.v.data.begin());
    return f;
}

py::array_t<double> flow_to_array(const FlowField& f) {
    py::array_t<double> a({2, f.height(), f.width()});
    double* p = a.mutable_data();
    std::copy(f.u.data.begin(), f.u.data.end(), p);
    std::copy(f.v.data.begin(), f.v.data.end(), p + f.u.size());
    return a;
}

VarianceMap variance_from_arrays(const ArrF& values, const py::object& valid) {
    VarianceMap v;
    v.values = grid_from_array(values);
    if (valid.is_none()) {
        v.valid.assign(v.values.size(), 1);
    } else {
        BinaryMask m = mask_from_array(valid.cast<ArrU8>());
        if (m.height != v.values.height || m.width != v.values.width)
            throw SizeError("validity mask does not match variance size");
        v.valid = m.values;
    }
    return v;
}

LossConfig loss_config(double lam, double scale, double alpha, double eps) {
    LossConfig cfg;
    cfg.lambda = lam;
    cfg.silog_scale = scale;
    cfg.loss_alpha = alpha;
    cfg.eps = eps;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Video depth temporal-consistency toolkit: normal-difference masks, "
              "temporal feature alignment, losses, and consistency metrics.";

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<TruncationError>(m, "TruncationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<SizeError>(m, "SizeError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<EmptyInputError>(m, "EmptyInputError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    // geometry
    m.def(
        "sobel_gradients",
        [](const ArrF& depth) {
            auto [gx, gy] = sobel_gradients(depth_from_array(depth));
            return py::make_tuple(grid_to_array(gx), grid_to_array(gy));
        },
        py::arg("depth"), "3x3 Sobel responses divided by 8, replicate borders.");
    m.def(
        "normals_from_depth",
        [](const ArrF& depth) {
            NormalMap n = normals_from_depth(depth_from_array(depth));
            return py::make_tuple(normals_to_array(n), valid_to_array(n.valid, n.height, n.width));
        },
        py::arg("depth"),
        "Unit normals normalize((-gx, -gy, 1)) as (3,H,W) plus a validity mask.");

    // diffmask
    m.def(
        "directional_variance",
        [](const ArrF& n0, const ArrF& n1) {
            VarianceMap v = directional_variance(normals_from_array(n0), normals_from_array(n1));
            return py::make_tuple(grid_to_array(v.values),
                                  valid_to_array(v.valid, v.height(), v.width()));
        },
        py::arg("normals0"), py::arg("normals1"),
        "Per-pixel sum over axes of the two-frame variance of normal components.");
    m.def(
        "motion_baseline",
        [](const ArrF& var, const py::object& valid, int bins) {
            MaskConfig cfg;
            cfg.histogram_bins = bins;
            return motion_baseline(variance_from_arrays(var, valid), cfg);
        },
        py::arg("variance"), py::arg("valid") = py::none(), py::arg("bins") = 64,
        "Center of the most populated variance histogram bin (ties go low).");
    m.def(
        "raw_mask",
        [](const ArrF& var, double baseline, double alpha, const py::object& valid) {
            MaskConfig cfg;
            cfg.alpha = alpha;
            return mask_to_array(raw_mask(variance_from_arrays(var, valid), baseline, cfg));
        },
        py::arg("variance"), py::arg("baseline"), py::arg("alpha") = 0.05,
        py::arg("valid") = py::none(), "1 where variance > baseline + alpha (strict).");
    m.def(
        "refine_mask",
        [](const ArrU8& raw, const ArrF& normals, int open_radius, int close_radius) {
            MaskConfig cfg;
            cfg.refine_open_radius = open_radius;
            cfg.refine_close_radius = close_radius;
            return mask_to_array(
                refine_mask(mask_from_array(raw), normals_from_array(normals), cfg));
        },
        py::arg("raw"), py::arg("normals"), py::arg("open_radius") = 1,
        py::arg("close_radius") = 1, "Morphological opening then closing with disk elements.");
    m.def(
        "mask_loss",
        [](const ArrU8& md, const ArrF& ml) {
            return mask_loss(mask_from_array(md), grid_from_array(ml));
        },
        py::arg("md"), py::arg("ml"),
        "Mean squared difference between a binary pseudo-label and a soft mask.");

    // temporal
    py::class_<AttentionWeights>(m, "AttentionWeights")
        .def(py::init<>())
        .def_static("passthrough", &AttentionWeights::passthrough, py::arg("channels"))
        .def_static("seeded", &AttentionWeights::seeded, py::arg("channels"), py::arg("seed"))
        .def_property(
            "wq", [](const AttentionWeights& w) { return mat_to_array(w.wq); },
            [](AttentionWeights& w, const ArrF& a) { w.wq = mat_from_array(a); })
        .def_property(
            "wk", [](const AttentionWeights& w) { return mat_to_array(w.wk); },
            [](AttentionWeights& w, const ArrF& a) { w.wk = mat_from_array(a); })
        .def_property(
            "wv", [](const AttentionWeights& w) { return mat_to_array(w.wv); },
            [](AttentionWeights& w, const ArrF& a) { w.wv = mat_from_array(a); })
        .def_property(
            "kernel", [](const AttentionWeights& w) { return mat_to_array(w.kernel); },
            [](AttentionWeights& w, const ArrF& a) { w.kernel = mat_from_array(a); })
        .def_readwrite("bias", &AttentionWeights::bias)
        .def_readwrite("sns_scale", &AttentionWeights::sns_scale)
        .def_readwrite("ms_scale", &AttentionWeights::ms_scale)
        .def_readwrite("normalize_features", &AttentionWeights::normalize_features);

    m.def(
        "toy_feature_extractor",
        [](const ArrF& depth, const ArrF& normals, int stride, int cd, int cn,
           std::uint64_t seed) {
            auto [zd, zn] = toy_feature_extractor(depth_from_array(depth),
                                                  normals_from_array(normals), stride, cd, cn,
                                                  seed);
            return py::make_tuple(fgrid_to_array(zd), fgrid_to_array(zn));
        },
        py::arg("depth"), py::arg("normals"), py::arg("stride") = 8, py::arg("cd") = 8,
        py::arg("cn") = 4, py::arg("seed") = 0,
        "Seeded random linear projection of flattened patches.");
    m.def(
        "fuse_features",
        [](const ArrF& zd, const ArrF& zn) {
            return fgrid_to_array(fuse_features(fgrid_from_array(zd), fgrid_from_array(zn)));
        },
        py::arg("zd"), py::arg("zn"), "Channel concatenation, first argument first.");
    m.def(
        "sns_similarity",
        [](const ArrF& q, const ArrF& k, const ArrU8& mask, double scale, bool normalize) {
            return simmap_to_array(sns_similarity(fgrid_from_array(q), fgrid_from_array(k),
                                                  mask_from_array(mask), scale, normalize));
        },
        py::arg("zs_query"), py::arg("zs_key"), py::arg("mask"), py::arg("scale") = 1.0,
        py::arg("normalize") = false,
        "Row-softmax of the masked-query dot products; rows sum to one.");
    m.def(
        "sns_align",
        [](const ArrF& s, const ArrF& value) {
            SimilarityMap sim;
            Mat sm = mat_from_array(s);
            sim.rows = sm.rows;
            sim.cols = sm.cols;
            sim.weights = std::move(sm.data);
            return mat_to_array(sns_align(sim, fgrid_from_array(value)));
        },
        py::arg("similarity"), py::arg("value"),
        "Convex combination of value locations per similarity row.");
    m.def(
        "sns_forward",
        [](const ArrF& zd0, const ArrF& zd1, const ArrF& zn0, const ArrF& zn1,
           const ArrU8& mask, const AttentionWeights& w) {
            auto [a, b] = sns_forward(fgrid_from_array(zd0), fgrid_from_array(zd1),
                                      fgrid_from_array(zn0), fgrid_from_array(zn1),
                                      mask_from_array(mask), w);
            return py::make_tuple(fgrid_to_array(a), fgrid_to_array(b));
        },
        py::arg("zd0"), py::arg("zd1"), py::arg("zn0"), py::arg("zn1"), py::arg("mask"),
        py::arg("weights"), "Bidirectional dynamic-area alignment.");
    m.def(
        "ms_forward",
        [](const ArrF& zd0, const ArrF& zd1, const ArrU8& mask, const AttentionWeights& w) {
            auto [a, b] = ms_forward(fgrid_from_array(zd0), fgrid_from_array(zd1),
                                     mask_from_array(mask), w);
            return py::make_tuple(fgrid_to_array(a), fgrid_to_array(b));
        },
        py::arg("zd0"), py::arg("zd1"), py::arg("mask"), py::arg("weights"),
        "Bidirectional static-area cross attention on (1 - mask).");
    m.def(
        "fuse_video_feature",
        [](const ArrF& zstatic, const ArrF& zdyna, const AttentionWeights& w) {
            return fgrid_to_array(
                fuse_video_feature(fgrid_from_array(zstatic), fgrid_from_array(zdyna), w));
        },
        py::arg("zstatic"), py::arg("zdyna"), py::arg("weights"),
        "Pointwise refinement of the concatenated static and dynamic features.");
    m.def(
        "downsample_mask_max",
        [](const ArrU8& mask, int stride) {
            return mask_to_array(downsample_mask_max(mask_from_array(mask), stride));
        },
        py::arg("mask"), py::arg("stride"),
        "Max-pool a full-resolution mask to feature resolution.");

    // losses
    m.def(
        "silog",
        [](const ArrF& pred, const ArrF& gt, double lam, double scale, double eps) {
            return silog(depth_from_array(pred), depth_from_array(gt),
                         loss_config(lam, scale, 10.0, eps));
        },
        py::arg("pred"), py::arg("gt"), py::arg("lam") = 0.85, py::arg("scale") = 10.0,
        py::arg("eps") = 1e-6, "Scale-invariant log depth loss (sqrt form).");
    m.def(
        "silog_grad",
        [](const ArrF& pred, const ArrF& gt, double lam, double scale, double eps) {
            return grid_to_array(silog_grad(depth_from_array(pred), depth_from_array(gt),
                                            loss_config(lam, scale, 10.0, eps)));
        },
        py::arg("pred"), py::arg("gt"), py::arg("lam") = 0.85, py::arg("scale") = 10.0,
        py::arg("eps") = 1e-6);
    m.def(
        "mse",
        [](const ArrF& a, const ArrF& b) { return mse(grid_from_array(a), grid_from_array(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "mse_grad",
        [](const ArrF& a, const ArrF& b) {
            return grid_to_array(mse_grad(grid_from_array(a), grid_from_array(b)));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "total_loss",
        [](double depth, double normal, double mask, double alpha) {
            LossConfig cfg;
            cfg.loss_alpha = alpha;
            LossReport r = total_loss(depth, normal, mask, cfg);
            py::dict d;
            d["depth_loss"] = r.depth_loss;
            d["normal_loss"] = r.normal_loss;
            d["mask_loss"] = r.mask_loss;
            d["total"] = r.total;
            return d;
        },
        py::arg("depth_loss"), py::arg("normal_loss"), py::arg("mask_loss"),
        py::arg("alpha") = 10.0, "depth + alpha*normal + alpha*mask.");
    m.def(
        "finite_diff",
        [](const std::function<double(py::array_t<double>)>& f, const ArrF& x, double step) {
            Grid gx = grid_from_array(x);
            Grid g = finite_diff(
                [&](const Grid& probe) { return f(grid_to_array(probe)); }, gx, step);
            return grid_to_array(g);
        },
        py::arg("f"), py::arg("x"), py::arg("step") = 1e-5,
        "Central differences of a scalar function of a 2-D array.");

    // metrics
    m.def(
        "depth_metrics",
        [](const ArrF& pred, const ArrF& gt, double cap) {
            MetricsReport r = depth_metrics(depth_from_array(pred), depth_from_array(gt), cap);
            py::dict d;
            d["abs_rel"] = r.abs_rel;
            d["sq_rel"] = r.sq_rel;
            d["rmse"] = r.rmse;
            d["delta1"] = r.delta1;
            d["delta2"] = r.delta2;
            d["delta3"] = r.delta3;
            return d;
        },
        py::arg("pred"), py::arg("gt"), py::arg("cap") = 80.0,
        "Accuracy metrics over the valid overlap with gt in (0, cap].");
    m.def(
        "backward_warp",
        [](const ArrF& prev, const ArrF& flow) {
            auto [warped, validity] = backward_warp(depth_from_array(prev), flow_from_array(flow));
            return py::make_tuple(grid_to_array(warped.values), mask_to_array(validity));
        },
        py::arg("prev"), py::arg("flow"),
        "Bilinear sample of prev at p + flow(p) with a conservative validity mask.");
    m.def(
        "qtc",
        [](const ArrF& d, const ArrF& dw, const ArrU8& k) {
            return qtc(depth_from_array(d), DepthMap::from_grid(grid_from_array(dw)),
                       mask_from_array(k));
        },
        py::arg("depth"), py::arg("warped"), py::arg("validity"),
        "Mean relative difference |d - dw| / d over valid pixels.");
    m.def(
        "rtc",
        [](const ArrF& d, const ArrF& dw, const ArrU8& k, double thr) {
            return rtc(depth_from_array(d), DepthMap::from_grid(grid_from_array(dw)),
                       mask_from_array(k), thr);
        },
        py::arg("depth"), py::arg("warped"), py::arg("validity"), py::arg("thr") = 1.25,
        "Fraction of valid pixels with symmetric ratio strictly below thr.");

    // synthetic
    py::enum_<SceneObject::Shape>(m, "Shape")
        .value("BOX", SceneObject::Shape::Box)
        .value("SPHERE_CAP", SceneObject::Shape::SphereCap);

    py::class_<SceneObject>(m, "SceneObject")
        .def(py::init<>())
        .def_readwrite("shape", &SceneObject::shape)
        .def_readwrite("x", &SceneObject::x)
        .def_readwrite("y", &SceneObject::y)
        .def_readwrite("size", &SceneObject::size)
        .def_readwrite("depth_offset", &SceneObject::depth_offset)
        .def_readwrite("vx", &SceneObject::vx)
        .def_readwrite("vy", &SceneObject::vy);

    py::class_<SceneSpec>(m, "SceneSpec")
        .def(py::init<>())
        .def_readwrite("width", &SceneSpec::width)
        .def_readwrite("height", &SceneSpec::height)
        .def_readwrite("plane_a", &SceneSpec::plane_a)
        .def_readwrite("plane_b", &SceneSpec::plane_b)
        .def_readwrite("plane_c", &SceneSpec::plane_c)
        .def_readwrite("camera_shift_x", &SceneSpec::camera_shift_x)
        .def_readwrite("camera_shift_y", &SceneSpec::camera_shift_y)
        .def_readwrite("seed", &SceneSpec::seed)
        .def_readwrite("objects", &SceneSpec::objects);

    m.def(
        "render_sequence",
        [](const SceneSpec& spec, int n_frames, int frame_stride) {
            py::list out;
            for (const auto& f : render_sequence(spec, n_frames, frame_stride)) {
                py::dict d;
                d["depth"] = grid_to_array(f.depth.values);
                d["valid"] = valid_to_array(f.depth.valid, f.depth.height(), f.depth.width());
                d["normals"] = normals_to_array(f.normals_gt);
                d["flow"] = flow_to_array(f.flow_to_prev);
                d["changed"] = mask_to_array(f.changed_gt);
                d["offscreen_warning"] = f.offscreen_warning;
                out.append(d);
            }
            return out;
        },
        py::arg("spec"), py::arg("n_frames"), py::arg("frame_stride") = 1,
        "Analytic frame packets: depth, normals, flow-to-previous, changed mask.");
    m.def(
        "iou",
        [](const ArrU8& a, const ArrU8& b) { return iou(mask_from_array(a), mask_from_array(b)); },
        py::arg("a"), py::arg("b"), "Intersection over union; 1.0 when both empty.");

    // io
    m.def(
        "read_pfm",
        [](const std::string& path) {
            Raster r = read_pfm(path);
            if (r.channels == 1) {
                py::array_t<double> a({r.height, r.width});
                std::copy(r.data.begin(), r.data.end(), a.mutable_data());
                return py::object(std::move(a));
            }
            py::array_t<double> a({r.channels, r.height, r.width});
            std::copy(r.data.begin(), r.data.end(), a.mutable_data());
            return py::object(std::move(a));
        },
        py::arg("path"), "Returns (H,W) for 1-channel files, (3,H,W) for 3-channel files.");
    m.def(
        "write_pfm",
        [](const py::array& arr, const std::string& path) {
            ArrF a = arr.cast<ArrF>();
            if (a.ndim() == 2) {
                Raster r(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
                std::copy(a.data(), a.data() + r.data.size(), r.data.begin());
                write_pfm(r, path);
            } else if (a.ndim() == 3 && a.shape(0) == 3) {
                Raster r(3, static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
                std::copy(a.data(), a.data() + r.data.size(), r.data.begin());
                write_pfm(r, path);
            } else {
                throw SizeError("expected (H,W) or (3,H,W)");
            }
        },
        py::arg("array"), py::arg("path"));
    m.def(
        "read_mask_pgm",
        [](const std::string& path) { return mask_to_array(read_mask_pgm(path)); },
        py::arg("path"));
    m.def(
        "write_mask_pgm",
        [](const ArrU8& mask, const std::string& path) {
            write_mask_pgm(mask_from_array(mask), path);
        },
        py::arg("mask"), py::arg("path"));
    m.def(
        "read_fgrid",
        [](const std::string& path) { return fgrid_to_array(read_fgrid(path)); },
        py::arg("path"));
    m.def(
        "write_fgrid",
        [](const ArrF& grid, const std::string& path) {
            write_fgrid(fgrid_from_array(grid), path);
        },
        py::arg("grid"), py::arg("path"));
}
