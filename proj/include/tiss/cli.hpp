#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tiss/iss.hpp"
#include "tiss/simulate.hpp"
#include "tiss/stft.hpp"
#include "tiss/wpe.hpp"

namespace tiss {

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string report;
  // Evaluate inputs and an optional cost trace to embed in the report.
  std::vector<std::string> estimates;
  std::vector<std::string> references;
  std::string cost_trace;

  int sources = 2;
  int taps = 5;
  int delay = 3;
  int iterations = 15;
  int warmstart_iterations = 0;
  std::string model = "laplace";
  std::string warmstart_model;
  double floor = 1e-10;
  double epsilon = 1e-3;
  int ref_channel = 0;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = library default
  // "auto" keeps the input format (float32 for simulate).
  std::string format = "auto";

  int window_length = 400;
  int hop = 160;
  int fft_length = 512;
  std::string window = "hann";

  int wpe_iterations = 1;
  double wpe_epsilon = 1e-6;

  int channels = 2;
  std::string scene = "anechoic";
  double rt_ms = 300.0;
  double drr_db = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::string noise = "diffuse";
  double duration = 5.0;
  double sample_rate = 16000.0;
  int max_delay = 8;

  int filter_length = 512;
};

// Ordered key/value pairs; later entries win.
using Settings = std::vector<std::pair<std::string, std::string>>;

// Flat "key = value" lines. '#' starts a comment; blank lines are ignored.
Settings parse_config_text(const std::string& text);
Settings read_config_file(const std::string& path);

// Keys use underscores; hyphens are accepted. List keys take comma-separated
// values. Throws std::invalid_argument for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// defaults < config file < flags
RunConfig layered_config(const Settings& file, const Settings& flags);

StftConfig stft_config(const RunConfig& cfg);
IssConfig iss_config(const RunConfig& cfg);
WpeConfig wpe_config(const RunConfig& cfg);
SceneParams scene_params(const RunConfig& cfg);

void cmd_simulate(const RunConfig& cfg);
void cmd_separate(const RunConfig& cfg);
void cmd_dereverb(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);

// {"error": message, "command": command} on one line.
std::string error_json(const std::string& command, const std::string& message);

// Entry point of the `tiss` executable. Returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace tiss
