#include "tiss/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <tbb/global_control.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tiss/metrics.hpp"
#include "tiss/wav.hpp"

namespace tiss {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("bad integer for " + key + ": " + v);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("bad number for " + key + ": " + v);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v.front() != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("bad seed for " + key + ": " + v);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter int_field(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_int(k, v); };
}

Setter double_field(double RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.*field = to_double(k, v);
  };
}

Setter string_field(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

Setter list_field(std::vector<std::string> RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) {
    c.*field = split_list(v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"input", string_field(&RunConfig::input)},
      {"output", string_field(&RunConfig::output)},
      {"report", string_field(&RunConfig::report)},
      {"estimates", list_field(&RunConfig::estimates)},
      {"references", list_field(&RunConfig::references)},
      {"cost_trace", string_field(&RunConfig::cost_trace)},
      {"sources", int_field(&RunConfig::sources)},
      {"taps", int_field(&RunConfig::taps)},
      {"delay", int_field(&RunConfig::delay)},
      {"iterations", int_field(&RunConfig::iterations)},
      {"warmstart_iterations", int_field(&RunConfig::warmstart_iterations)},
      {"model", string_field(&RunConfig::model)},
      {"warmstart_model", string_field(&RunConfig::warmstart_model)},
      {"floor", double_field(&RunConfig::floor)},
      {"epsilon", double_field(&RunConfig::epsilon)},
      {"ref_channel", int_field(&RunConfig::ref_channel)},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
      {"threads", int_field(&RunConfig::threads)},
      {"format", string_field(&RunConfig::format)},
      {"window_length", int_field(&RunConfig::window_length)},
      {"hop", int_field(&RunConfig::hop)},
      {"fft_length", int_field(&RunConfig::fft_length)},
      {"window", string_field(&RunConfig::window)},
      {"wpe_iterations", int_field(&RunConfig::wpe_iterations)},
      {"wpe_epsilon", double_field(&RunConfig::wpe_epsilon)},
      {"channels", int_field(&RunConfig::channels)},
      {"scene", string_field(&RunConfig::scene)},
      {"rt_ms", double_field(&RunConfig::rt_ms)},
      {"drr_db", double_field(&RunConfig::drr_db)},
      {"snr_db", double_field(&RunConfig::snr_db)},
      {"noise", string_field(&RunConfig::noise)},
      {"duration", double_field(&RunConfig::duration)},
      {"sample_rate", double_field(&RunConfig::sample_rate)},
      {"max_delay", int_field(&RunConfig::max_delay)},
      {"filter_length", int_field(&RunConfig::filter_length)},
  };
  return table;
}

bool is_list_key(const std::string& key) { return key == "estimates" || key == "references"; }

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

SampleFormat output_format(const RunConfig& cfg, SampleFormat fallback) {
  if (cfg.format == "auto") return fallback;
  if (cfg.format == "pcm16") return SampleFormat::kPcm16;
  if (cfg.format == "float32") return SampleFormat::kFloat32;
  throw std::invalid_argument("unknown format: " + cfg.format);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Waveform mono(std::vector<double> samples, double fs) {
  Waveform w;
  w.sample_rate = fs;
  w.channels.push_back(std::move(samples));
  return w;
}

void ensure_dir(const std::string& dir) {
  require(!dir.empty(), "--output directory is required");
  fs::create_directories(dir);
}

// First channel of each file, or the reference channel for multichannel
// image files.
Signals read_signal_set(const std::vector<std::string>& paths, int channel, double* fs) {
  Signals out;
  for (const auto& p : paths) {
    const WavFile wav = read_wav(p);
    const auto& w = wav.wave;
    const std::size_t ch = w.num_channels() == 1 ? 0 : static_cast<std::size_t>(channel);
    require(ch < w.num_channels(), "reference channel out of range in " + p);
    if (fs != nullptr) {
      require(*fs == 0.0 || *fs == w.sample_rate, "sample rate mismatch in " + p);
      *fs = w.sample_rate;
    }
    out.push_back(w.channels[ch]);
  }
  return out;
}

}  // namespace

Settings parse_config_text(const std::string& text) {
  Settings out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(normalize_key(key), trim(line.substr(eq + 1)));
  }
  return out;
}

Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = normalize_key(key);
  const auto it = setters().find(k);
  if (it == setters().end()) throw std::invalid_argument("unknown setting: " + key);
  it->second(cfg, k, value);
}

RunConfig layered_config(const Settings& file, const Settings& flags) {
  RunConfig cfg;
  for (const auto& [k, v] : file) apply_setting(cfg, k, v);
  for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
  return cfg;
}

StftConfig stft_config(const RunConfig& cfg) {
  StftConfig s;
  s.window_length = cfg.window_length;
  s.hop = cfg.hop;
  s.fft_length = cfg.fft_length;
  s.window = parse_window(cfg.window);
  s.validate();
  return s;
}

IssConfig iss_config(const RunConfig& cfg) {
  IssConfig c;
  c.sources = cfg.sources;
  c.iterations = cfg.iterations;
  c.taps = cfg.taps;
  c.delay = cfg.delay;
  c.warmstart_iterations = cfg.warmstart_iterations;
  c.model = parse_source_model(cfg.model, cfg.floor);
  if (!cfg.warmstart_model.empty()) {
    c.warmstart_model = parse_source_model(cfg.warmstart_model, cfg.floor);
  }
  c.epsilon = cfg.epsilon;
  c.ref_channel = cfg.ref_channel;
  return c;
}

WpeConfig wpe_config(const RunConfig& cfg) {
  WpeConfig c;
  c.taps = cfg.taps;
  c.delay = cfg.delay;
  c.iterations = cfg.wpe_iterations;
  c.epsilon = cfg.wpe_epsilon;
  c.floor = cfg.floor;
  c.validate();
  return c;
}

SceneParams scene_params(const RunConfig& cfg) {
  SceneParams p;
  p.sources = cfg.sources;
  p.channels = cfg.channels;
  p.kind = parse_scene_kind(cfg.scene);
  p.rt_ms = cfg.rt_ms;
  p.direct_to_reverb_db = cfg.drr_db;
  p.snr_db = cfg.snr_db;
  p.noise = parse_noise_kind(cfg.noise);
  p.duration_s = cfg.duration;
  p.sample_rate = cfg.sample_rate;
  p.max_delay = cfg.max_delay;
  p.seed = cfg.seed;
  return p;
}

void cmd_simulate(const RunConfig& cfg) {
  ensure_dir(cfg.output);
  const MixtureScene scene = make_scene(scene_params(cfg));
  const SampleFormat fmt = output_format(cfg, SampleFormat::kFloat32);
  const fs::path dir(cfg.output);
  write_wav((dir / "mix.wav").string(), scene.mixture, fmt);
  const auto images = oracle_images(scene);
  for (std::size_t k = 0; k < images.size(); ++k) {
    write_wav((dir / ("src_" + std::to_string(k) + ".wav")).string(), images[k], fmt);
  }
  write_text(dir / "scene.json", scene_to_json(scene));
  for (const auto& w : scene.warnings) std::cerr << json({{"warning", w}}).dump() << "\n";
}

void cmd_separate(const RunConfig& cfg) {
  require(!cfg.input.empty(), "--input is required");
  ensure_dir(cfg.output);
  const WavFile wav = read_wav(cfg.input);
  const Waveform& x = wav.wave;
  const SampleFormat fmt = output_format(cfg, wav.format);
  const int m = static_cast<int>(x.num_channels());
  require(cfg.sources >= 1 && cfg.sources <= m, "need 1 <= sources <= channels");
  const IssConfig icfg = iss_config(cfg);
  icfg.validate(m);
  const fs::path dir(cfg.output);

  json report;
  if (cfg.iterations == 0) {
    for (int k = 0; k < cfg.sources; ++k) {
      write_wav((dir / ("est_" + std::to_string(k) + ".wav")).string(),
                mono(x.channels[static_cast<std::size_t>(k)], x.sample_rate), fmt);
    }
    report["cost_trace"] = json::array();
    report["warnings"] = json::array();
  } else {
    const MultichannelSpectrogram spec = stft(x, stft_config(cfg));
    SeparationResult res = separate(spec.data, icfg);
    MultichannelSpectrogram ys = spec;
    ys.data = std::move(res.estimates.data);
    const Waveform y = istft(ys);
    for (std::size_t k = 0; k < y.num_channels(); ++k) {
      write_wav((dir / ("est_" + std::to_string(k) + ".wav")).string(),
                mono(y.channels[k], y.sample_rate), fmt);
    }
    report["cost_trace"] = res.cost_trace;
    report["skipped_updates"] = res.stats.skipped_updates;
    report["warnings"] = res.warnings;
    for (const auto& w : res.warnings) std::cerr << json({{"warning", w}}).dump() << "\n";
  }
  if (!cfg.report.empty()) write_text(cfg.report, report.dump(2) + "\n");
}

void cmd_dereverb(const RunConfig& cfg) {
  require(!cfg.input.empty(), "--input is required");
  require(!cfg.output.empty(), "--output file is required");
  const WavFile wav = read_wav(cfg.input);
  const WpeConfig wcfg = wpe_config(cfg);
  const MultichannelSpectrogram spec = stft(wav.wave, stft_config(cfg));
  WpeResult res = wpe_dereverb(spec.data, wcfg);
  MultichannelSpectrogram out = spec;
  out.data = std::move(res.output);
  write_wav(cfg.output, istft(out), output_format(cfg, wav.format));
  if (!cfg.report.empty()) {
    json report;
    report["objective_trace"] = res.objective_trace;
    write_text(cfg.report, report.dump(2) + "\n");
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  require(!cfg.estimates.empty(), "--estimates is required");
  require(cfg.estimates.size() == cfg.references.size(),
          "estimate and reference counts differ");
  double fs = 0.0;
  const Signals est = read_signal_set(cfg.estimates, 0, &fs);
  const Signals ref = read_signal_set(cfg.references, cfg.ref_channel, &fs);
  EvalOptions opts;
  opts.filter_length = cfg.filter_length;
  EvalReport report = evaluate(est, ref, opts);
  if (!cfg.cost_trace.empty()) {
    std::ifstream in(cfg.cost_trace);
    if (!in) throw std::runtime_error("cannot read " + cfg.cost_trace);
    const json trace = json::parse(in);
    report.cost_trace = trace.at("cost_trace").get<std::vector<double>>();
  }
  const std::string text = report_to_json(report);
  if (cfg.report.empty()) {
    std::cout << text;
  } else {
    write_text(cfg.report, text);
  }
}

std::string error_json(const std::string& command, const std::string& message) {
  return json({{"error", message}, {"command", command}}).dump();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Joint dereverberation and blind source separation"};
  app.require_subcommand(1);
  std::string config_path;

  // Every setting is a string-valued flag on every subcommand; only the ones
  // actually given on the command line are layered over the config file.
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;
  struct Registered {
    CLI::Option* opt;
    std::string key;
    std::string command;
  };
  std::vector<Registered> registered;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Render a seeded synthetic mixture"},
      {"separate", "Joint dereverberation and separation of a multichannel WAV"},
      {"dereverb", "Multichannel linear-prediction dereverberation"},
      {"evaluate", "SDR/SIR of estimates against reference images"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Flat key = value settings file");
    for (const auto& [key, setter] : setters()) {
      std::string flags = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) flags += ",--" + dashed;
      CLI::Option* opt = is_list_key(key) ? sub->add_option(flags, lists[key])->expected(1, -1)
                                          : sub->add_option(flags, scalars[key]);
      registered.push_back({opt, key, name});
    }
  }

  std::string command = "tiss";
  for (const auto& [name, help] : commands) {
    if (argc > 1 && name == argv[1]) command = name;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json(command, e.what()) << "\n";
    return 2;
  }

  try {
    Settings flags;
    for (const auto& [opt, key, owner] : registered) {
      if (opt->count() == 0 || owner != command) continue;
      if (is_list_key(key)) {
        std::string joined;
        for (const auto& v : lists[key]) joined += (joined.empty() ? "" : ",") + v;
        flags.emplace_back(key, joined);
      } else {
        flags.emplace_back(key, scalars[key]);
      }
    }
    const Settings file = config_path.empty() ? Settings{} : read_config_file(config_path);
    RunConfig cfg = layered_config(file, flags);
    cfg.command = command;

    std::unique_ptr<tbb::global_control> limit;
    if (cfg.threads > 0) {
      limit = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                    static_cast<std::size_t>(cfg.threads));
    }
    if (command == "simulate") {
      cmd_simulate(cfg);
    } else if (command == "separate") {
      cmd_separate(cfg);
    } else if (command == "dereverb") {
      cmd_dereverb(cfg);
    } else {
      cmd_evaluate(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << error_json(command, e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tiss
