// cpm-spectra: closed-form and simulated power spectra of single-h and
// multi-h CPM formats.  Configuration is a flat key=value file; a few named
// presets are built in.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cpmspec/chain_analysis.hpp"
#include "cpmspec/cpm_format.hpp"
#include "cpmspec/spectrum.hpp"
#include "cpmspec/welch.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace cpmspec;

namespace {

const std::map<std::string, std::string> kPresets = {
    {"msk",
     "M = 2\nL = 1\nphase = cpfsk\nh = 1/2\n"},
    {"multih-4-16",
     "M = 4\nL = 1\nphase = cpfsk\nh = 1/4 5/16 1/2 5/8\n"},
    {"multih-2-8",
     "M = 2\nL = 1\nphase = cpfsk\nh = 4/8 5/8\n"},
    {"rc-l2",
     "M = 2\nL = 2\nphase = rc\nh = 1/2\n"},
    {"gmsk-l4",
     "M = 2\nL = 4\nphase = gmsk\nh = 1/2\n"},
    {"cpfsk-h1",
     "M = 2\nL = 1\nphase = cpfsk\nh = 1\n"},
};

struct RunConfig {
  int m = 2;
  int memory = 1;
  std::string phase = "cpfsk";
  std::vector<Rational> h;
  std::vector<double> q;
  double fmin = -2.0, fmax = 2.0;
  int points = 2001;
  std::string mode = "closed-form";
  std::string backend = "direct";
  int quadrature_order = 32;
  int series_n = 400;
  double line_scan_ft = 16.0;
  long long welch_symbols = 1000000;
  int welch_samples_per_t = 16;
  int welch_segment_blocks = 256;
  double welch_overlap = 0.5;
  std::uint64_t seed = 1;
  int threads = 0;
  std::size_t word_budget = 1u << 20;
};

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r\n");
      const auto e = v.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "M") cfg.m = std::stoi(val);
      else if (key == "L") cfg.memory = std::stoi(val);
      else if (key == "phase") cfg.phase = val;
      else if (key == "h") {
        cfg.h.clear();
        for (const auto& tok : split_ws(val)) cfg.h.push_back(parse_rational(tok));
      } else if (key == "q") {
        cfg.q.clear();
        for (const auto& tok : split_ws(val)) cfg.q.push_back(std::stod(tok));
      }
      else if (key == "fmin") cfg.fmin = std::stod(val);
      else if (key == "fmax") cfg.fmax = std::stod(val);
      else if (key == "points") cfg.points = std::stoi(val);
      else if (key == "mode") cfg.mode = val;
      else if (key == "backend") cfg.backend = val;
      else if (key == "quadrature_order") cfg.quadrature_order = std::stoi(val);
      else if (key == "series_n") cfg.series_n = std::stoi(val);
      else if (key == "line_scan_ft") cfg.line_scan_ft = std::stod(val);
      else if (key == "welch_symbols") cfg.welch_symbols = std::stoll(val);
      else if (key == "welch_samples_per_t") cfg.welch_samples_per_t = std::stoi(val);
      else if (key == "welch_segment_blocks") cfg.welch_segment_blocks = std::stoi(val);
      else if (key == "welch_overlap") cfg.welch_overlap = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "threads") cfg.threads = std::stoi(val);
      else if (key == "word_budget") cfg.word_budget = std::stoull(val);
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  if (cfg.h.empty())
    throw std::invalid_argument("config: missing modulation index list 'h'");
  if (!(cfg.fmin < cfg.fmax) || cfg.points < 2)
    throw std::invalid_argument("config: bad frequency grid");
  return cfg;
}

RunConfig load_config(const std::string& path, const std::string& preset) {
  if (!preset.empty()) {
    const auto it = kPresets.find(preset);
    if (it == kPresets.end())
      throw std::invalid_argument("unknown preset '" + preset + "'");
    return parse_config_text(it->second);
  }
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

CpmFormat make_format(const RunConfig& cfg) {
  return CpmFormat::make(cfg.m, phase_kind_from_name(cfg.phase), cfg.memory,
                         cfg.h, cfg.q);
}

struct Findings {
  long long p = 0;
  int nh = 0, nc = 0;
  std::size_t states = 0, half = 0, words = 0, out_rows = 0;
  double mem_mb = 0.0;
  bool over_budget = false;
};

Findings analyze(const RunConfig& cfg, const CpmFormat& fmt) {
  Findings f;
  f.p = fmt.indices.p;
  f.nh = fmt.indices.period();
  f.nc = cyclo_period(fmt.indices);
  std::size_t tails = 1;
  for (int i = 1; i < fmt.memory(); ++i)
    tails *= static_cast<std::size_t>(fmt.alphabet_size());
  f.states = static_cast<std::size_t>(2 * f.p) * tails;
  f.half = f.states / 2;
  f.words = 1;
  for (int i = 0; i < f.nc; ++i)
    f.words *= static_cast<std::size_t>(fmt.alphabet_size());
  f.out_rows = f.words * tails;
  f.mem_mb = static_cast<double>(f.out_rows * f.half) * 16.0 / 1048576.0 +
             static_cast<double>(f.words * f.half) * 8.0 / 1048576.0;
  f.over_budget = f.out_rows > cfg.word_budget;
  return f;
}

void print_findings(const Findings& f, std::ostream& os) {
  os << "p = " << f.p << ", N_h = " << f.nh << ", N_c = " << f.nc
     << ", T_c = " << f.nc << " T\n"
     << "states I = " << f.states << ", per class I_0 = " << f.half
     << ", input words per block = " << f.words
     << ", output rows N_0 = " << f.out_rows << "\n"
     << "estimated working set ~ " << f.mem_mb << " MiB\n";
  if (f.p == 1)
    os << "integer modulation indexes: spectral lines at multiples of 1/T_c\n";
  if (f.over_budget)
    os << "WARNING: input-word enumeration exceeds the configured budget; "
          "expect long runtimes\n";
}

double wide_band_power(const SpectrumAnalyzer& an, const RunConfig& cfg) {
  const double lim = std::max({4.0, std::abs(cfg.fmin), std::abs(cfg.fmax)});
  SpectrumResult wide = an.closed_form(make_grid(-lim, lim, 1601));
  return total_power(wide);
}

int run_command(const std::string& config_path, const std::string& preset,
                const std::string& mode_override,
                const std::string& backend_override, long long seed_override,
                const std::string& out_dir, bool absolute_db) {
  RunConfig cfg = load_config(config_path, preset);
  if (!mode_override.empty()) cfg.mode = mode_override;
  if (!backend_override.empty()) cfg.backend = backend_override;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  const CpmFormat fmt = make_format(cfg);
  const Findings info = analyze(cfg, fmt);
  print_findings(info, std::cout);

  fs::create_directories(out_dir);
  json meta;
  meta["preset"] = preset;
  meta["mode"] = cfg.mode;
  meta["format"] = {{"M", cfg.m},
                    {"L", cfg.memory},
                    {"phase", cfg.phase},
                    {"p", info.p},
                    {"N_h", info.nh},
                    {"N_c", info.nc},
                    {"I_0", info.half}};
  meta["grid"] = {{"fmin", cfg.fmin}, {"fmax", cfg.fmax}, {"points", cfg.points}};
  meta["rng"] = {{"name", "splitmix64"}, {"seed", cfg.seed}};
  meta["quadrature_order"] = cfg.quadrature_order;

  const auto t0 = std::chrono::steady_clock::now();
  bool checks_ok = true;

  const bool need_closed = cfg.mode == "closed-form" || cfg.mode == "compare";
  const bool need_series = cfg.mode == "series-oracle" || cfg.mode == "compare";
  const bool need_sim = cfg.mode == "simulate" || cfg.mode == "compare";
  if (!need_closed && !need_series && !need_sim)
    throw std::invalid_argument("unknown mode '" + cfg.mode + "'");

  SpectrumResult closed, series;
  EstimatedSpectrum sim;
  const std::vector<double> grid = make_grid(cfg.fmin, cfg.fmax, cfg.points);

  if (need_closed || need_series) {
    PolyphaseMachine mach = build_polyphase(fmt);
    SpectrumOptions opts;
    opts.backend = (cfg.backend == "poly") ? ResolventBackend::Poly
                                           : ResolventBackend::Direct;
    if (cfg.backend != "poly" && cfg.backend != "direct")
      throw std::invalid_argument("unknown backend '" + cfg.backend + "'");
    opts.quadrature.order = cfg.quadrature_order;
    opts.threads = cfg.threads;
    opts.line_scan_ft = cfg.line_scan_ft;
    SpectrumAnalyzer an(mach, opts);

    if (need_closed) {
      closed = an.closed_form(grid);
      std::ofstream os(fs::path(out_dir) / "spectrum.csv");
      closed.write_csv(os, absolute_db);
      if (!closed.lines.empty()) {
        std::ofstream ol(fs::path(out_dir) / "lines.csv");
        closed.write_lines_csv(ol);
      }
      const double check = wide_band_power(an, cfg);
      std::cout << "total power (continuous + lines) = " << check << "\n";
      meta["total_power"] = check;
      meta["max_imag_residual"] = closed.max_imag_residual;
      if (std::abs(check - 1.0) > 1e-2 ||
          closed.max_imag_residual > 1e-9) checks_ok = false;
    }
    if (need_series) {
      series = an.series(grid, cfg.series_n);
      std::ofstream os(fs::path(out_dir) / "spectrum_series.csv");
      series.write_csv(os, absolute_db);
    }
  }
  if (need_sim) {
    WelchConfig wc;
    wc.symbol_count = cfg.welch_symbols;
    wc.samples_per_symbol = cfg.welch_samples_per_t;
    wc.segment_blocks = cfg.welch_segment_blocks;
    wc.overlap = cfg.welch_overlap;
    wc.seed = cfg.seed;
    sim = simulate_psd(fmt, wc);
    std::ofstream os(fs::path(out_dir) / "sim.csv");
    os << "fT, psd_linear, psd_db\n";
    char buf[96];
    const double ref = absolute_db
                           ? 1.0
                           : *std::max_element(sim.psd.begin(), sim.psd.end());
    for (std::size_t i = 0; i < sim.grid_ft.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g, %.12g, %.6f\n", sim.grid_ft[i],
                    sim.psd[i],
                    10.0 * std::log10(std::max(sim.psd[i] / ref, 1e-40)));
      os << buf;
    }
    meta["welch"] = {{"segments", sim.segments},
                     {"mean_power", sim.mean_power},
                     {"band_integral", sim.integral()}};
    if (std::abs(sim.mean_power - 1.0) > 1e-9) checks_ok = false;
  }

  if (cfg.mode == "compare") {
    std::ofstream rep(fs::path(out_dir) / "report.txt");
    const double peak = closed.peak();
    double dev_series = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      dev_series = std::max(dev_series,
                            std::abs(closed.psd[i] - series.psd[i]) / peak);
    rep << "max |closed - series| / peak = " << dev_series << "\n";
    double dev_db = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (closed.psd[i] < 1e-4 * peak) continue;  // compare within 40 dB of peak
      const double w = sim.value_at(grid[i]);
      if (w <= 0.0) continue;
      dev_db = std::max(dev_db,
                        std::abs(10.0 * std::log10(closed.psd[i] / w)));
    }
    rep << "max |closed - welch| within 40 dB of peak = " << dev_db << " dB\n";
    rep << "welch segments = " << sim.segments << "\n";
    meta["compare"] = {{"series_rel_dev", dev_series}, {"welch_db_dev", dev_db}};
    std::cout << "compare: series rel dev = " << dev_series
              << ", welch dB dev = " << dev_db << "\n";
    if (dev_series > 1e-5 || dev_db > 1.0) checks_ok = false;
  }

  const auto t1 = std::chrono::steady_clock::now();
  meta["elapsed_s"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() /
      1000.0;
  std::ofstream om(fs::path(out_dir) / "meta.json");
  om << meta.dump(2) << "\n";

  if (!checks_ok) {
    std::cerr << "internal conservation checks FAILED\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-form power spectra of single-h and multi-h CPM"};
  app.require_subcommand(1);

  std::string config_path, preset, mode, backend, out_dir = ".";
  long long seed = -1;
  bool absolute_db = false;

  auto* run = app.add_subcommand("run", "compute spectra and write artifacts");
  run->add_option("config", config_path, "config file (key = value)");
  run->add_option("--preset", preset, "built-in preset name");
  run->add_option("--mode", mode,
                  "closed-form | series-oracle | simulate | compare");
  run->add_option("--backend", backend, "direct | poly");
  run->add_option("--seed", seed, "simulation seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--absolute", absolute_db, "absolute dB instead of peak-normalized");

  auto* val = app.add_subcommand("validate", "dry-run configuration checks");
  val->add_option("config", config_path, "config file (key = value)");
  val->add_option("--preset", preset, "built-in preset name");

  auto* pre = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      for (const auto& [name, text] : kPresets)
        std::cout << name << ":\n" << text << "\n";
      return 0;
    }
    if (val->parsed()) {
      if (config_path.empty() && preset.empty())
        throw std::invalid_argument("validate: need a config file or --preset");
      RunConfig cfg = load_config(config_path, preset);
      const CpmFormat fmt = make_format(cfg);
      print_findings(analyze(cfg, fmt), std::cout);
      return 0;
    }
    if (config_path.empty() && preset.empty())
      throw std::invalid_argument("run: need a config file or --preset");
    return run_command(config_path, preset, mode, backend, seed, out_dir,
                       absolute_db);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
