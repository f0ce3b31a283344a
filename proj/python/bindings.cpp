#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rawhdr/colorspace.hpp"
#include "rawhdr/pipeline.hpp"
#include "rawhdr/render.hpp"
#include "rawhdr/sim.hpp"

namespace py = pybind11;
using namespace rawhdr;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

Plane plane_from(const Arr& arr, py::ssize_t offset_items, int w, int h) {
  Plane plane(w, h);
  const double* src = arr.data() + offset_items;
  std::copy(src, src + static_cast<size_t>(w) * h, plane.data());
  return plane;
}

std::array<Plane, 4> quad_from(const Arr& arr) {
  if (arr.ndim() != 3 || arr.shape(0) != 4)
    throw py::value_error("expected an array of shape (4, H, W)");
  const int h = static_cast<int>(arr.shape(1));
  const int w = static_cast<int>(arr.shape(2));
  std::array<Plane, 4> channels;
  for (int c = 0; c < 4; ++c)
    channels[c] = plane_from(arr, static_cast<py::ssize_t>(c) * h * w, w, h);
  return channels;
}

py::array_t<double> to_numpy(const std::vector<const Plane*>& planes) {
  const int h = planes[0]->height(), w = planes[0]->width();
  py::array_t<double> out({static_cast<py::ssize_t>(planes.size()),
                           static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
  double* dst = out.mutable_data();
  for (const Plane* p : planes) {
    std::copy(p->data(), p->data() + p->size(), dst);
    dst += p->size();
  }
  return out;
}

py::array_t<double> quad_to_numpy(const std::array<Plane, 4>& channels) {
  return to_numpy({&channels[0], &channels[1], &channels[2], &channels[3]});
}

NoiseCurve curve_from(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != 4 || b.size() != 4)
    throw py::value_error("noise model needs 4 entries for a and b");
  NoiseCurve curve;
  for (int c = 0; c < 4; ++c) {
    curve.channels[c].a = a[c];
    curve.channels[c].b = b[c];
  }
  return curve;
}

RawStack stack_from(const py::list& frames, const std::vector<double>& exposures,
                    double black_offset, double white_level, const std::string& cfa,
                    int reference_index) {
  if (frames.size() != exposures.size() || frames.empty())
    throw py::value_error("frames and exposures must have equal nonzero length");
  RawStack stack;
  stack.black_offset = black_offset;
  stack.white_level = white_level;
  stack.cfa = parse_cfa_pattern(cfa);
  for (size_t i = 0; i < frames.size(); ++i) {
    QuadFrame quad;
    quad.channels = quad_from(frames[i].cast<Arr>());
    quad.exposure_time = exposures[i];
    stack.frames.push_back(std::move(quad));
  }
  stack.reference_index =
      reference_index >= 0 ? reference_index : median_reference_index(exposures);
  return stack;
}

FusionParams fusion_params(int k, double h, double tau, int K, int radius, int stride,
                           int max_coeffs, int exponent, double sigma0, bool wsim, bool wsnr,
                           int threads) {
  FusionParams params;
  params.patch_size = k;
  params.h = h;
  params.tau = tau;
  params.match_count = K;
  params.search_radius = radius;
  params.stride = stride;
  params.max_coeffs = max_coeffs;
  params.hdr_exponent = exponent;
  params.sigma0 = sigma0;
  params.sim_weight = wsim;
  params.snr_weight = wsnr;
  params.threads = threads;
  return params;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "joint denoising and HDR fusion of RAW exposure brackets";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<Error>(m, "RawHdrError", PyExc_RuntimeError);

  m.def(
      "disassemble_cfa",
      [](const Arr& cfa, const std::string& pattern) {
        if (cfa.ndim() != 2) throw py::value_error("expected a 2D CFA array");
        Plane plane = plane_from(cfa, 0, static_cast<int>(cfa.shape(1)),
                                 static_cast<int>(cfa.shape(0)));
        return quad_to_numpy(plane_to_quad(plane, parse_cfa_pattern(pattern)));
      },
      py::arg("cfa"), py::arg("pattern") = "RGGB",
      "Split a full-resolution CFA image into 4 half-resolution planes.");

  m.def(
      "reassemble_cfa",
      [](const Arr& quad, const std::string& pattern) {
        const Plane cfa = mosaic_to_plane(quad_from(quad), parse_cfa_pattern(pattern));
        return to_numpy({&cfa});
      },
      py::arg("quad"), py::arg("pattern") = "RGGB",
      "Interleave 4 planes back onto the CFA grid (shape (1, H, W)).");

  m.def(
      "yuvw_forward",
      [](const Arr& quad) { return quad_to_numpy(yuvw_forward(quad_from(quad))); },
      py::arg("quad"));

  m.def(
      "yuvw_inverse",
      [](const Arr& quad) { return quad_to_numpy(yuvw_inverse(quad_from(quad))); },
      py::arg("quad"));

  m.def(
      "vst_forward",
      [](const Arr& quad, const std::vector<double>& a, const std::vector<double>& b,
         double sigma0) {
        const NoiseCurve curve = curve_from(a, b);
        std::array<Plane, 4> channels = quad_from(quad);
        for (int c = 0; c < 4; ++c)
          for (double& v : channels[c].pixels())
            v = vst_value(curve.channels[c], sigma0, curve.sigma_floor, v);
        return quad_to_numpy(channels);
      },
      py::arg("quad"), py::arg("a"), py::arg("b"), py::arg("sigma0") = 1.0);

  m.def(
      "vst_inverse",
      [](const Arr& quad, const std::vector<double>& a, const std::vector<double>& b,
         double sigma0) {
        const NoiseCurve curve = curve_from(a, b);
        std::array<Plane, 4> channels = quad_from(quad);
        for (int c = 0; c < 4; ++c)
          for (double& v : channels[c].pixels())
            v = vst_value_inverse(curve.channels[c], sigma0, curve.sigma_floor, v);
        return quad_to_numpy(channels);
      },
      py::arg("quad"), py::arg("a"), py::arg("b"), py::arg("sigma0") = 1.0);

  m.def(
      "estimate_noise",
      [](const py::list& frames, const std::vector<double>& exposures, double black_offset,
         double white_level, int bins, int patch_size) {
        const RawStack stack =
            stack_from(frames, exposures, black_offset, white_level, "RGGB", -1);
        NoiseEstimationParams params;
        params.bins = bins;
        params.patch_size = patch_size;
        const NoiseCurve curve = estimate_noise_curve(stack, params);
        py::dict out;
        std::vector<double> a(4), b(4);
        py::list points;
        for (int c = 0; c < 4; ++c) {
          a[c] = curve.channels[c].a;
          b[c] = curve.channels[c].b;
          py::list channel_points;
          for (const auto& p : curve.channels[c].control_points)
            channel_points.append(py::make_tuple(p[0], p[1]));
          points.append(channel_points);
        }
        out["a"] = a;
        out["b"] = b;
        out["control_points"] = points;
        return out;
      },
      py::arg("frames"), py::arg("exposures"), py::arg("black_offset"),
      py::arg("white_level"), py::arg("bins") = 8, py::arg("patch_size") = 8);

  m.def(
      "estimate_flow",
      [](const Arr& source, const Arr& target, int levels, int iterations) {
        if (source.ndim() != 2 || target.ndim() != 2)
          throw py::value_error("expected 2D planes");
        const int h = static_cast<int>(source.shape(0));
        const int w = static_cast<int>(source.shape(1));
        FlowParams params;
        params.levels = levels;
        params.iterations = iterations;
        const FlowField flow = estimate_flow(plane_from(source, 0, w, h),
                                             plane_from(target, 0, w, h), params);
        return to_numpy({&flow.u, &flow.v});
      },
      py::arg("source"), py::arg("target"), py::arg("levels") = 5,
      py::arg("iterations") = 100,
      "Dense displacement with target(x) ~ source(x + flow(x)); returns (2, H, W).");

  m.def(
      "warp",
      [](const Arr& planes, const Arr& flow) {
        if (planes.ndim() != 3 || flow.ndim() != 3 || flow.shape(0) != 2)
          throw py::value_error("expected planes (C, H, W) and flow (2, H, W)");
        const int h = static_cast<int>(planes.shape(1));
        const int w = static_cast<int>(planes.shape(2));
        std::vector<Plane> storage;
        for (py::ssize_t c = 0; c < planes.shape(0); ++c)
          storage.push_back(plane_from(planes, c * h * w, w, h));
        std::vector<const Plane*> ptrs;
        for (const Plane& p : storage) ptrs.push_back(&p);
        FlowField field;
        field.u = plane_from(flow, 0, w, h);
        field.v = plane_from(flow, static_cast<py::ssize_t>(h) * w, w, h);
        const WarpResult result = warp_frame(ptrs, field);
        std::vector<const Plane*> out_ptrs;
        for (const Plane& p : result.planes) out_ptrs.push_back(&p);
        py::array_t<bool> valid({static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            valid.mutable_at(y, x) = result.valid.at(x, y) != 0;
        return py::make_tuple(to_numpy(out_ptrs), valid);
      },
      py::arg("planes"), py::arg("flow"));

  m.def(
      "weighted_pca_filter",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& weights, int reference_row,
         double tau, double sigma0, int max_coeffs) {
        FusionParams params;
        params.tau = tau;
        params.sigma0 = sigma0;
        params.max_coeffs = max_coeffs;
        const Eigen::VectorXd y = weighted_pca_filter(X, weights, reference_row, params);
        return std::vector<double>(y.data(), y.data() + y.size());
      },
      py::arg("X"), py::arg("weights"), py::arg("reference_row"), py::arg("tau") = 2.8,
      py::arg("sigma0") = 1.0, py::arg("max_coeffs") = -1);

  m.def("hdr_weight",
        [](const std::vector<double>& means, double O, double M, int exponent) {
          if (means.size() != 4) throw py::value_error("needs 4 patch means");
          return hdr_weight({means[0], means[1], means[2], means[3]}, O, M, exponent);
        },
        py::arg("patch_means"), py::arg("black_offset"), py::arg("white_level"),
        py::arg("exponent") = 12);

  m.def(
      "fuse",
      [](const py::list& frames, const std::vector<double>& exposures, double black_offset,
         double white_level, int reference_index, std::optional<std::vector<double>> noise_a,
         std::optional<std::vector<double>> noise_b, bool align, int k, double h, double tau,
         int K, int radius, int stride, int max_coeffs, int exponent, double sigma0,
         bool wsim, bool wsnr, int threads) {
        const RawStack stack =
            stack_from(frames, exposures, black_offset, white_level, "RGGB", reference_index);
        PipelineOptions options;
        options.fusion = fusion_params(k, h, tau, K, radius, stride, max_coeffs, exponent,
                                       sigma0, wsim, wsnr, threads);
        options.flow.identity = !align;
        if (noise_a && noise_b) options.curve = curve_from(*noise_a, *noise_b);
        const PipelineResult result = run_fuse_pipeline(stack, options);
        return quad_to_numpy(result.hdr.channels);
      },
      py::arg("frames"), py::arg("exposures"), py::arg("black_offset"),
      py::arg("white_level"), py::arg("reference_index") = -1,
      py::arg("noise_a") = py::none(), py::arg("noise_b") = py::none(),
      py::arg("align") = true, py::arg("k") = 7, py::arg("h") = 2.0, py::arg("tau") = 2.8,
      py::arg("K") = 16, py::arg("radius") = 10, py::arg("stride") = 3,
      py::arg("max_coeffs") = 3, py::arg("exponent") = 12, py::arg("sigma0") = 1.0,
      py::arg("wsim") = true, py::arg("wsnr") = true, py::arg("threads") = 0,
      "Full pipeline: noise model, normalization, stabilization, alignment, fusion.");

  m.def(
      "classic_hdr",
      [](const py::list& frames, const std::vector<double>& exposures, double black_offset,
         double white_level, int exponent, int reference_index) {
        const RawStack stack =
            stack_from(frames, exposures, black_offset, white_level, "RGGB", reference_index);
        return quad_to_numpy(classic_hdr(stack, exponent).channels);
      },
      py::arg("frames"), py::arg("exposures"), py::arg("black_offset"),
      py::arg("white_level"), py::arg("exponent") = 12, py::arg("reference_index") = -1);

  m.def(
      "demosaick",
      [](const Arr& hdr, const std::string& pattern) {
        HdrImage image;
        image.channels = quad_from(hdr);
        const std::array<Plane, 3> rgb = demosaick(image, parse_cfa_pattern(pattern));
        return to_numpy({&rgb[0], &rgb[1], &rgb[2]});
      },
      py::arg("hdr"), py::arg("pattern") = "RGGB");

  m.def(
      "tone_map",
      [](const Arr& rgb, const std::string& mode, double gamma, double key, double white) {
        if (rgb.ndim() != 3 || rgb.shape(0) != 3)
          throw py::value_error("expected an array of shape (3, H, W)");
        const int h = static_cast<int>(rgb.shape(1));
        const int w = static_cast<int>(rgb.shape(2));
        std::array<Plane, 3> planes;
        for (int c = 0; c < 3; ++c)
          planes[c] = plane_from(rgb, static_cast<py::ssize_t>(c) * h * w, w, h);
        RenderParams params;
        params.tonemap = parse_tonemap(mode);
        params.gamma = gamma;
        params.reinhard_key = key;
        params.output_white = white;
        const Rgb8 mapped = tone_map(planes, params);
        py::array_t<uint8_t> out({static_cast<py::ssize_t>(3), static_cast<py::ssize_t>(h),
                                  static_cast<py::ssize_t>(w)});
        const Image<uint8_t>* chans[3] = {&mapped.r, &mapped.g, &mapped.b};
        uint8_t* dst = out.mutable_data();
        for (int c = 0; c < 3; ++c) {
          std::copy(chans[c]->data(), chans[c]->data() + chans[c]->size(), dst);
          dst += chans[c]->size();
        }
        return out;
      },
      py::arg("rgb"), py::arg("mode") = "gamma", py::arg("gamma") = 1.0 / 2.2,
      py::arg("key") = 0.18, py::arg("white") = 99.5);

  m.def(
      "simulate",
      [](const std::string& scene_name, int width, int height,
         const std::vector<double>& exposures, uint64_t seed, double noise_a, double noise_b,
         double gain, double black_offset, double white_level) {
        SceneSpec scene;
        if (scene_name == "ramps") scene.texture = SceneSpec::Texture::Ramps;
        else if (scene_name == "checkers") scene.texture = SceneSpec::Texture::Checkers;
        else if (scene_name == "noise-texture")
          scene.texture = SceneSpec::Texture::NoiseTexture;
        else throw py::value_error("unknown scene '" + scene_name + "'");
        scene.width = width;
        scene.height = height;
        scene.texture_seed = seed;
        CaptureSpec cap;
        cap.exposure_times = exposures;
        cap.seed = seed;
        cap.noise_a = noise_a;
        cap.noise_b = noise_b;
        cap.gain = gain;
        cap.black_offset = black_offset;
        cap.white_level = white_level;
        const SimulatedCapture sim = simulate_capture(scene, cap);
        py::dict out;
        py::list frames;
        for (const QuadFrame& frame : sim.stack.frames)
          frames.append(quad_to_numpy(frame.channels));
        out["frames"] = frames;
        out["exposures"] = exposures;
        out["ground_truth"] = quad_to_numpy(sim.ground_truth.channels);
        out["reference_index"] = sim.stack.reference_index;
        out["black_offset"] = black_offset;
        out["white_level"] = white_level;
        return out;
      },
      py::arg("scene") = "ramps", py::arg("width") = 128, py::arg("height") = 128,
      py::arg("exposures") = std::vector<double>{0.25, 1.0, 4.0}, py::arg("seed") = 0,
      py::arg("noise_a") = 0.5, py::arg("noise_b") = 10.0, py::arg("gain") = 900.0,
      py::arg("black_offset") = 200.0, py::arg("white_level") = 4095.0);

  m.def(
      "psnr",
      [](const Arr& a, const Arr& b, double peak) {
        if (a.ndim() != b.ndim()) throw py::value_error("shape mismatch");
        HdrImage ia, ib;
        if (a.ndim() == 3 && a.shape(0) == 4) {
          ia.channels = quad_from(a);
          ib.channels = quad_from(b);
          return psnr(ia, ib, peak);
        }
        if (a.ndim() != 2) throw py::value_error("expected (H, W) or (4, H, W)");
        const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
        return psnr_plane(plane_from(a, 0, w, h), plane_from(b, 0, w, h), peak);
      },
      py::arg("a"), py::arg("b"), py::arg("peak"));

  m.def("run_experiment",
        [](const std::string& name, uint64_t seed) {
          const ExperimentReport report = run_experiment(name, seed);
          py::dict out;
          out["name"] = report.name;
          out["pass"] = report.pass;
          py::list checks;
          for (const auto& c : report.checks) {
            py::dict check;
            check["metric"] = c.metric;
            check["value"] = c.value;
            check["threshold"] = c.threshold;
            check["pass"] = c.pass;
            checks.append(check);
          }
          out["checks"] = checks;
          out["text"] = report_to_text(report);
          return out;
        },
        py::arg("name"), py::arg("seed") = 0);

  m.attr("experiments") = experiment_names();
}
