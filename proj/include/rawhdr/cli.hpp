#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rawhdr/flow.hpp"
#include "rawhdr/fusion.hpp"
#include "rawhdr/noise_model.hpp"
#include "rawhdr/render.hpp"

namespace CLI {
class App;
}

namespace rawhdr::cli {

struct FuseOptions {
  std::string stack_path;
  std::string out_path;
  std::string noise_file;
  std::string preview_path;
  std::string dump_flow_dir;
  std::string max_coeffs = "3";  // number or "none"
  std::string tonemap = "gamma";
  FusionParams fusion;
  FlowParams flow;
  NoiseEstimationParams noise;
  bool no_align = false;
};

struct ClassicOptions {
  std::string stack_path;
  std::string out_path;
  std::string preview_path;
  std::string tonemap = "gamma";
  int exponent = 12;
};

struct EstimateNoiseOptions {
  std::string stack_path;
  std::string out_path;
  NoiseEstimationParams params;
};

struct SimulateOptions {
  std::string scene = "ramps";
  std::string out_dir;
  uint64_t seed = 0;
  int width = 256, height = 256;
  std::vector<double> exposures = {0.25, 1.0, 4.0};
  double noise_a = 0.5, noise_b = 10.0;
  double gain = 3500.0;
  double black_offset = 200.0, white_level = 4095.0;
  std::string cfa = "RGGB";
  std::array<double, 2> motion = {0.0, 0.0};  // global drift per frame, quad px
  bool moving_rect = false;
  std::array<double, 2> rect_velocity = {6.0, 0.0};
};

struct ExperimentOptions {
  std::string name;
  uint64_t seed = 0;
  std::string report_path;
};

struct RenderOptions {
  std::string in_path;
  std::string out_path;
  std::string stack_path;  // optional, source of wb gains / matrix / pattern
  std::string tonemap = "gamma";
  double gamma = 1.0 / 2.2;
  double key = 0.18;
  double output_white = 99.5;
};

/// Parsed command line. Subcommand option structs stay inspectable after
/// parse() so tests can assert on defaults without executing anything.
class Parser {
public:
  Parser();
  ~Parser();

  /// Returns nullopt when parsing succeeded and a subcommand should run;
  /// otherwise the process exit code (0 after --help, 1 on usage errors,
  /// which print to stderr).
  std::optional<int> parse(const std::vector<std::string>& args);

  /// Runs the selected subcommand. 0 success, 1 usage, 2 pipeline error,
  /// 3 experiment threshold failure.
  int run();

  const std::string& subcommand() const { return subcommand_; }

  FuseOptions fuse;
  ClassicOptions classic;
  EstimateNoiseOptions estimate;
  SimulateOptions simulate;
  ExperimentOptions experiment;
  RenderOptions render;
  int threads = 0;  // 0 = hardware; RAWHDR_THREADS overrides, --threads wins

private:
  std::unique_ptr<CLI::App> app_;
  std::string subcommand_;
};

/// Full entry point used by the binary: parse then run.
int run_main(const std::vector<std::string>& args);

}  // namespace rawhdr::cli
