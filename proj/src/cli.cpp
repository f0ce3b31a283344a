#include "rawhdr/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rawhdr/pipeline.hpp"
#include "rawhdr/sim.hpp"

namespace fs = std::filesystem;

namespace rawhdr::cli {

namespace {

int env_threads() {
  if (const char* env = std::getenv("RAWHDR_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return 0;
}

int parse_max_coeffs(const std::string& text) {
  if (text == "none" || text == "unlimited") return -1;
  try {
    const int value = std::stoi(text);
    if (value < 0) throw UsageError("--max-coeffs must be >= 0 or 'none'");
    return value;
  } catch (const std::invalid_argument&) {
    throw UsageError("--max-coeffs expects a count or 'none', got '" + text + "'");
  }
}

RenderParams render_params_for(const RawStack& stack, const std::string& tonemap) {
  RenderParams params;
  params.wb_gains = stack.wb_gains;
  params.srgb_matrix = stack.srgb_matrix;
  params.tonemap = parse_tonemap(tonemap);
  return params;
}

}  // namespace

Parser::Parser() : app_(std::make_unique<CLI::App>("joint denoising and HDR fusion of RAW exposure brackets", "rawhdr")) {
  app_->require_subcommand(1);
  app_->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* fuse_cmd = app_->add_subcommand("fuse", "fuse a bracket into a denoised HDR raw image");
  fuse_cmd->set_help_flag("--help", "print help");  // frees --h for the similarity parameter
  fuse_cmd->add_option("--stack", fuse.stack_path, "stack metadata file")->required();
  fuse_cmd->add_option("--out", fuse.out_path, "output PFM path")->required();
  fuse_cmd->add_option("--k", fuse.fusion.patch_size, "patch side (odd)");
  fuse_cmd->add_option("--h", fuse.fusion.h, "similarity parameter");
  fuse_cmd->add_option("--tau", fuse.fusion.tau, "principal value threshold");
  fuse_cmd->add_option("--K", fuse.fusion.match_count, "matched extended patches");
  fuse_cmd->add_option("--radius", fuse.fusion.search_radius, "search radius in px");
  fuse_cmd->add_option("--stride", fuse.fusion.stride, "patch grid step");
  fuse_cmd->add_option("--max-coeffs", fuse.max_coeffs, "kept PCA coefficients or 'none'");
  fuse_cmd->add_option("--exponent", fuse.fusion.hdr_exponent, "HDR weight exponent (even)");
  fuse_cmd->add_option("--noise-file", fuse.noise_file, "load noise curve instead of estimating");
  fuse_cmd->add_option("--bins", fuse.noise.bins, "noise estimation intensity bins");
  fuse_cmd->add_option("--patch-size", fuse.noise.patch_size, "noise estimation DCT patch size");
  fuse_cmd->add_option("--preview", fuse.preview_path, "write an 8-bit preview PPM");
  fuse_cmd->add_option("--tonemap", fuse.tonemap, "preview operator: gamma|reinhard");
  fuse_cmd->add_option("--dump-flow", fuse.dump_flow_dir, "dump flow fields as PFM files");
  fuse_cmd->add_option("--flow-levels", fuse.flow.levels, "flow pyramid levels");
  fuse_cmd->add_option("--flow-iters", fuse.flow.iterations, "flow iterations per level");
  fuse_cmd->add_option("--eps", fuse.flow.consistency_eps, "flow reciprocity bound (px)");
  fuse_cmd->add_flag("--no-align", fuse.no_align, "skip flow estimation (static stacks)");
  fuse_cmd->add_flag("!--no-wsim", fuse.fusion.sim_weight, "disable the similarity weight");
  fuse_cmd->add_flag("!--no-wsnr", fuse.fusion.snr_weight, "disable the SNR weight");

  auto* classic_cmd = app_->add_subcommand("classic-hdr", "classical weighted irradiance average");
  classic_cmd->add_option("--stack", classic.stack_path, "stack metadata file")->required();
  classic_cmd->add_option("--out", classic.out_path, "output PFM path")->required();
  classic_cmd->add_option("--exponent", classic.exponent, "HDR weight exponent (even)");
  classic_cmd->add_option("--preview", classic.preview_path, "write an 8-bit preview PPM");
  classic_cmd->add_option("--tonemap", classic.tonemap, "preview operator: gamma|reinhard");

  auto* noise_cmd = app_->add_subcommand("estimate-noise", "estimate the noise curve of a stack");
  noise_cmd->add_option("--stack", estimate.stack_path, "stack metadata file")->required();
  noise_cmd->add_option("--out", estimate.out_path, "output noise curve file")->required();
  noise_cmd->add_option("--bins", estimate.params.bins, "intensity bins");
  noise_cmd->add_option("--patch-size", estimate.params.patch_size, "DCT patch size");

  auto* sim_cmd = app_->add_subcommand("simulate", "write a synthetic bracket plus ground truth");
  sim_cmd->add_option("--scene", simulate.scene,
                      "ramps|checkers|noise-texture|image:PATH");
  sim_cmd->add_option("--out", simulate.out_dir, "output directory")->required();
  sim_cmd->add_option("--seed", simulate.seed, "noise seed");
  sim_cmd->add_option("--width", simulate.width, "CFA width (even)");
  sim_cmd->add_option("--height", simulate.height, "CFA height (even)");
  sim_cmd->add_option("--exposures", simulate.exposures, "exposure times in seconds");
  sim_cmd->add_option("--noise-a", simulate.noise_a, "variance slope a");
  sim_cmd->add_option("--noise-b", simulate.noise_b, "variance offset b");
  sim_cmd->add_option("--gain", simulate.gain, "counts per unit irradiance per second");
  sim_cmd->add_option("--black-offset", simulate.black_offset, "black offset O");
  sim_cmd->add_option("--white-level", simulate.white_level, "white level M");
  sim_cmd->add_option("--cfa", simulate.cfa, "CFA pattern");
  sim_cmd->add_option("--motion", simulate.motion, "global drift per frame (quad px)")
      ->expected(2);
  sim_cmd->add_flag("--moving-rect", simulate.moving_rect, "paint a moving square");
  sim_cmd->add_option("--rect-velocity", simulate.rect_velocity,
                      "square velocity (quad px/frame)")
      ->expected(2);

  auto* exp_cmd = app_->add_subcommand("experiment", "run a verification scenario");
  exp_cmd->add_option("--name", experiment.name, "scenario name")
      ->required()
      ->check(CLI::IsMember(experiment_names()));
  exp_cmd->add_option("--seed", experiment.seed, "scenario seed");
  exp_cmd->add_option("--out", experiment.report_path, "also write the report to a file");

  auto* render_cmd = app_->add_subcommand("render", "tone map a fused PFM to an 8-bit PPM");
  render_cmd->add_option("--in", render.in_path, "input HDR PFM")->required();
  render_cmd->add_option("--out", render.out_path, "output PPM path")->required();
  render_cmd->add_option("--stack", render.stack_path,
                         "stack metadata supplying white balance and color matrix");
  render_cmd->add_option("--tonemap", render.tonemap, "gamma|reinhard");
  render_cmd->add_option("--gamma", render.gamma, "gamma exponent");
  render_cmd->add_option("--key", render.key, "Reinhard key");
  render_cmd->add_option("--white", render.output_white, "percentile mapped to white");
}

Parser::~Parser() = default;

std::optional<int> Parser::parse(const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app_->parse(reversed);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app_->exit(e) == 0 ? 0 : 1;
  }
  const auto subs = app_->get_subcommands();
  subcommand_ = subs.empty() ? "" : subs.front()->get_name();
  return std::nullopt;
}

namespace {

int run_fuse(FuseOptions& opts, int threads) {
  opts.fusion.max_coeffs = parse_max_coeffs(opts.max_coeffs);
  opts.fusion.threads = threads;
  opts.fusion.validate();
  opts.flow.identity = opts.no_align;

  const RawStack stack = load_stack(opts.stack_path);
  PipelineOptions pipeline;
  pipeline.fusion = opts.fusion;
  pipeline.flow = opts.flow;
  pipeline.noise = opts.noise;
  pipeline.dump_flow_dir = opts.dump_flow_dir;
  if (!opts.noise_file.empty()) pipeline.curve = load_noise_curve(opts.noise_file);

  const PipelineResult result = run_fuse_pipeline(stack, pipeline);
  save_hdr_pfm(result.hdr, opts.out_path);
  if (!opts.preview_path.empty()) {
    const RenderParams params = render_params_for(stack, opts.tonemap);
    save_ppm8(render_hdr(result.hdr, stack.cfa, params), opts.preview_path);
  }
  return 0;
}

int run_classic(const ClassicOptions& opts) {
  if (opts.exponent < 2 || opts.exponent % 2 != 0)
    throw UsageError("HDR weight exponent must be even and >= 2");
  const RawStack stack = load_stack(opts.stack_path);
  const HdrImage hdr = classic_hdr(stack, opts.exponent);
  save_hdr_pfm(hdr, opts.out_path);
  if (!opts.preview_path.empty()) {
    const RenderParams params = render_params_for(stack, opts.tonemap);
    save_ppm8(render_hdr(hdr, stack.cfa, params), opts.preview_path);
  }
  return 0;
}

int run_estimate(const EstimateNoiseOptions& opts) {
  const RawStack stack = load_stack(opts.stack_path);
  save_noise_curve(estimate_noise_curve(stack, opts.params), opts.out_path);
  return 0;
}

int run_simulate(const SimulateOptions& opts) {
  SceneSpec scene;
  if (opts.scene == "ramps") {
    scene.texture = SceneSpec::Texture::Ramps;
  } else if (opts.scene == "checkers") {
    scene.texture = SceneSpec::Texture::Checkers;
  } else if (opts.scene == "noise-texture") {
    scene.texture = SceneSpec::Texture::NoiseTexture;
  } else if (opts.scene.rfind("image:", 0) == 0) {
    scene.texture = SceneSpec::Texture::LoadedImage;
    scene.image_path = opts.scene.substr(6);
  } else {
    throw UsageError("unknown scene '" + opts.scene + "'");
  }
  scene.width = opts.width;
  scene.height = opts.height;
  scene.texture_seed = opts.seed;
  const int n = static_cast<int>(opts.exposures.size());
  if (opts.motion[0] != 0.0 || opts.motion[1] != 0.0) {
    scene.frame_translation.resize(n);
    const int ref = median_reference_index(opts.exposures);
    for (int i = 0; i < n; ++i)
      scene.frame_translation[i] = {opts.motion[0] * (i - ref), opts.motion[1] * (i - ref)};
  }
  if (opts.moving_rect) {
    scene.moving_rect = true;
    scene.rect_center = {opts.width / 4.0, opts.height / 4.0};
    scene.rect_velocity = opts.rect_velocity;
  }

  CaptureSpec cap;
  cap.exposure_times = opts.exposures;
  cap.black_offset = opts.black_offset;
  cap.white_level = opts.white_level;
  cap.noise_a = opts.noise_a;
  cap.noise_b = opts.noise_b;
  cap.gain = opts.gain;
  cap.cfa = parse_cfa_pattern(opts.cfa);
  cap.seed = opts.seed;

  const SimulatedCapture sim = simulate_capture(scene, cap);
  RawStack quantized = sim.stack;
  // Disk representation is 16-bit; rebuild the quads from rounded CFA planes.
  for (size_t i = 0; i < quantized.frames.size(); ++i) {
    Plane rounded = sim.cfa[i];
    for (double& v : rounded.pixels()) v = std::round(v);
    quantized.frames[i].channels = plane_to_quad(rounded, cap.cfa);
  }
  save_stack(quantized, opts.out_dir);
  save_hdr_pfm(sim.ground_truth, (fs::path(opts.out_dir) / "ground_truth.pfm").string());
  std::cout << "wrote " << quantized.frames.size() << " frames + ground truth to "
            << opts.out_dir << "\n";
  return 0;
}

int run_experiment_cmd(const ExperimentOptions& opts) {
  const ExperimentReport report = run_experiment(opts.name, opts.seed);
  const std::string text = report_to_text(report);
  std::cout << text;
  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path);
    if (!out) throw Error("cannot write report to '" + opts.report_path + "'");
    out << text;
  }
  return report.pass ? 0 : 3;
}

int run_render(const RenderOptions& opts) {
  const HdrImage hdr = load_hdr_pfm(opts.in_path);
  RenderParams params;
  CfaPattern pattern = CfaPattern::RGGB;
  if (!opts.stack_path.empty()) {
    const RawStack stack = load_stack(opts.stack_path);
    params.wb_gains = stack.wb_gains;
    params.srgb_matrix = stack.srgb_matrix;
    pattern = stack.cfa;
  }
  params.tonemap = parse_tonemap(opts.tonemap);
  params.gamma = opts.gamma;
  params.reinhard_key = opts.key;
  params.output_white = opts.output_white;
  save_ppm8(render_hdr(hdr, pattern, params), opts.out_path);
  return 0;
}

}  // namespace

int Parser::run() {
  const int effective_threads = threads > 0 ? threads : env_threads();
  try {
    if (subcommand_ == "fuse") return run_fuse(fuse, effective_threads);
    if (subcommand_ == "classic-hdr") return run_classic(classic);
    if (subcommand_ == "estimate-noise") return run_estimate(estimate);
    if (subcommand_ == "simulate") return run_simulate(simulate);
    if (subcommand_ == "experiment") return run_experiment_cmd(experiment);
    if (subcommand_ == "render") return run_render(render);
    std::cerr << "rawhdr: no subcommand selected\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_main(const std::vector<std::string>& args) {
  Parser parser;
  if (const std::optional<int> code = parser.parse(args)) return *code;
  return parser.run();
}

}  // namespace rawhdr::cli
