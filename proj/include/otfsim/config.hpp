#pragma once

/**
 * @file config.hpp
 * @brief Plain-text experiment configuration (INI-style sections).
 *
 * Sections mirror the library modules. Unknown sections or keys are hard
 * errors (silent typos corrupt sweeps); parse errors carry line numbers.
 * Every key has a default matching the standard simulation scenario
 * (f_c = 5 GHz, delta_f = 15 kHz, M = 64, N = 16, 4-tap profile, v_max =
 * 500 km/h, N_l = N_k = 7, alpha0 = 1, beta = 0.05).
 */

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "otfsim/channel.hpp"
#include "otfsim/common.hpp"
#include "otfsim/equalizer.hpp"
#include "otfsim/estimation.hpp"
#include "otfsim/fnn.hpp"
#include "otfsim/frame.hpp"

namespace otfsim {

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace detail

/// section -> key -> (value, line number)
using IniData = std::map<std::string, std::map<std::string, std::pair<std::string, int>>>;

inline IniData parse_ini(std::istream& is) {
  IniData data;
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      require(t.back() == ']', "config line " + std::to_string(line_no) +
                                   ": unterminated section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      require(!section.empty(),
              "config line " + std::to_string(line_no) + ": empty section name");
      data[section];
      continue;
    }
    auto eq = t.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    require(!key.empty(), "config line " + std::to_string(line_no) + ": empty key");
    require(!section.empty(), "config line " + std::to_string(line_no) +
                                  ": key '" + key + "' outside any section");
    require(!data[section].count(key), "config line " + std::to_string(line_no) +
                                           ": duplicate key '" + key + "'");
    data[section][key] = {val, line_no};
  }
  return data;
}

inline IniData parse_ini_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "config: cannot open " + path);
  return parse_ini(is);
}

enum class SweepAxis { kSnrP, kEbN0, kSnrRad, kNSlots, kEpsilon };

struct SimConfig {
  // frame
  int M = 64;
  int N = 16;
  double delta_f = 15e3;
  double f_c = 5e9;
  // channel
  ChannelProfile profile = default_profile();
  double N0 = 1.0;
  // pilot (negative = centered default)
  int m_p = -1;
  int n_p = -1;
  // estimator
  EstimatorConfig estimator;
  int tm_L_max = -1;  ///< threshold-method window (-1: auto from geometry)
  int tm_K_max = -1;
  // equalizer
  EqualizerConfig equalizer;
  double epsilon_scale = 0.5;  ///< epsilon = scale * sqrt(MN * sigma^2)
  // fnn
  TrainConfig train;
  std::string model_path;
  // sensing scenario (single target)
  double target_range_m = 300.0;
  double target_velocity_kmh = 70.0;
  // sim
  SweepAxis axis = SweepAxis::kSnrP;
  double fixed_snr_db = 15.0;  ///< fixed SNR when the sweep axis is not an SNR
  std::vector<double> points = {0, 5, 10, 15, 20};
  int trials = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  int constellation_order = 4;
  int frames_per_trial = 1;

  FrameGeometry geometry() const { return FrameGeometry(M, N, delta_f, f_c); }

  PilotSpec pilot(double E_p) const {
    FrameGeometry g = geometry();
    if (m_p < 0 || n_p < 0) return centered_pilot(g, E_p);
    return PilotSpec(m_p, n_p, E_p);
  }

  /// Threshold-method window: the full physically-plausible span by default
  /// (delay slightly past the CP bound, Doppler up to the grid Nyquist).
  EstimatorConfig tm_config() const {
    EstimatorConfig c = estimator;
    c.L_max = tm_L_max >= 0 ? tm_L_max : std::min(M - 1, estimator.L_max + 2);
    c.K_max = tm_K_max >= 0 ? tm_K_max : N / 2;
    return c;
  }

  void validate() const {
    FrameGeometry g = geometry();
    estimator.validate(g);
    equalizer.validate();
    require(trials >= 1, "SimConfig: trials must be >= 1");
    require(frames_per_trial >= 1, "SimConfig: frames_per_trial must be >= 1");
    require(threads >= 1, "SimConfig: threads must be >= 1");
    require(!points.empty(), "SimConfig: sweep points must be non-empty");
    for (std::size_t i = 1; i < points.size(); ++i)
      require(points[i] > points[i - 1], "SimConfig: sweep points must be strictly increasing");
    require(N0 > 0, "SimConfig: N0 must be positive");
  }
};

namespace detail {

inline double to_double(const std::string& v, const std::string& ctx) {
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number '" + v + "' for " + ctx);
  }
  require(pos == v.size(), "config: trailing characters in number '" + v + "' for " + ctx);
  return d;
}

inline long to_long(const std::string& v, const std::string& ctx) {
  double d = to_double(v, ctx);
  long l = static_cast<long>(d);
  require(static_cast<double>(l) == d, "config: expected integer for " + ctx);
  return l;
}

inline bool to_bool(const std::string& v, const std::string& ctx) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: expected boolean for " + ctx + ", got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& v, const std::string& ctx) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, ctx));
  }
  require(!out.empty(), "config: empty list for " + ctx);
  return out;
}

}  // namespace detail

/// Build a SimConfig from parsed INI data; every key is checked against the
/// known schema and consumed exactly once.
inline SimConfig config_from_ini(const IniData& data) {
  SimConfig cfg;
  std::vector<double> delays = cfg.profile.delays_us;
  std::vector<double> powers = cfg.profile.powers_db;
  double v_max = cfg.profile.v_max_kmh;
  bool jitter = false;
  bool have_L_max = false, have_K_max = false;

  auto unknown = [](const std::string& section, const std::string& key, int line) {
    throw std::invalid_argument("config line " + std::to_string(line) +
                                ": unknown key '" + key + "' in section [" + section + "]");
  };

  for (const auto& [section, kv] : data) {
    for (const auto& [key, vp] : kv) {
      const std::string& v = vp.first;
      const std::string ctx = "[" + section + "] " + key;
      int line = vp.second;
      if (section == "frame") {
        if (key == "M") cfg.M = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "N") cfg.N = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "delta_f") cfg.delta_f = detail::to_double(v, ctx);
        else if (key == "f_c") cfg.f_c = detail::to_double(v, ctx);
        else unknown(section, key, line);
      } else if (section == "channel") {
        if (key == "delays_us") delays = detail::to_list(v, ctx);
        else if (key == "powers_db") powers = detail::to_list(v, ctx);
        else if (key == "v_max_kmh") v_max = detail::to_double(v, ctx);
        else if (key == "jitter_delays") jitter = detail::to_bool(v, ctx);
        else if (key == "N0") cfg.N0 = detail::to_double(v, ctx);
        else unknown(section, key, line);
      } else if (section == "pilot") {
        if (key == "m_p") cfg.m_p = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "n_p") cfg.n_p = static_cast<int>(detail::to_long(v, ctx));
        else unknown(section, key, line);
      } else if (section == "estimator") {
        if (key == "L_max") { cfg.estimator.L_max = static_cast<int>(detail::to_long(v, ctx)); have_L_max = true; }
        else if (key == "K_max") { cfg.estimator.K_max = static_cast<int>(detail::to_long(v, ctx)); have_K_max = true; }
        else if (key == "L_h") cfg.estimator.L_h = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "N_l") cfg.estimator.N_l = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "N_k") cfg.estimator.N_k = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "sc_gamma") cfg.estimator.sc_gamma = detail::to_double(v, ctx);
        else if (key == "max_paths") cfg.estimator.max_paths = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "tm_L_max") cfg.tm_L_max = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "tm_K_max") cfg.tm_K_max = static_cast<int>(detail::to_long(v, ctx));
        else unknown(section, key, line);
      } else if (section == "equalizer") {
        if (key == "alpha0") cfg.equalizer.alpha0 = detail::to_double(v, ctx);
        else if (key == "beta") cfg.equalizer.beta = detail::to_double(v, ctx);
        else if (key == "epsilon_scale") cfg.epsilon_scale = detail::to_double(v, ctx);
        else if (key == "n_max") cfg.equalizer.n_max = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "safe_mode") cfg.equalizer.safe_mode = detail::to_bool(v, ctx);
        else unknown(section, key, line);
      } else if (section == "fnn") {
        if (key == "model_path") cfg.model_path = v;
        else if (key == "epochs") cfg.train.epochs = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "learning_rate") cfg.train.learning_rate = detail::to_double(v, ctx);
        else if (key == "samples_per_level") cfg.train.samples_per_level = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "snr_levels_db") cfg.train.snr_levels_db = detail::to_list(v, ctx);
        else if (key == "classes") {
          cfg.train.classes.clear();
          for (double d : detail::to_list(v, ctx)) cfg.train.classes.push_back(static_cast<int>(d));
        } else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(detail::to_long(v, ctx));
        else unknown(section, key, line);
      } else if (section == "sensing") {
        if (key == "range_m") cfg.target_range_m = detail::to_double(v, ctx);
        else if (key == "velocity_kmh") cfg.target_velocity_kmh = detail::to_double(v, ctx);
        else unknown(section, key, line);
      } else if (section == "sim") {
        if (key == "sweep_axis") {
          if (v == "snr_p") cfg.axis = SweepAxis::kSnrP;
          else if (v == "ebn0") cfg.axis = SweepAxis::kEbN0;
          else if (v == "snr_rad") cfg.axis = SweepAxis::kSnrRad;
          else if (v == "n_slots") cfg.axis = SweepAxis::kNSlots;
          else if (v == "epsilon") cfg.axis = SweepAxis::kEpsilon;
          else throw std::invalid_argument("config line " + std::to_string(line) +
                                           ": unknown sweep_axis '" + v + "'");
        } else if (key == "fixed_snr_db") cfg.fixed_snr_db = detail::to_double(v, ctx);
        else if (key == "points") cfg.points = detail::to_list(v, ctx);
        else if (key == "trials") cfg.trials = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::to_long(v, ctx));
        else if (key == "threads") cfg.threads = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "constellation_order") cfg.constellation_order = static_cast<int>(detail::to_long(v, ctx));
        else if (key == "frames_per_trial") cfg.frames_per_trial = static_cast<int>(detail::to_long(v, ctx));
        else unknown(section, key, line);
      } else {
        throw std::invalid_argument("config: unknown section [" + section + "]");
      }
    }
  }

  cfg.profile = ChannelProfile(delays, powers, v_max);
  cfg.profile.jitter_delays = jitter;
  FrameGeometry g = cfg.geometry();
  if (!have_L_max || !have_K_max) {
    EstimatorConfig phys = EstimatorConfig::from_profile(
        g, cfg.profile.delay_spread_us() * 1e-6, cfg.profile.nu_max_hz(g));
    if (!have_L_max) cfg.estimator.L_max = phys.L_max;
    if (!have_K_max) cfg.estimator.K_max = phys.K_max;
  }
  cfg.validate();
  return cfg;
}

inline SimConfig load_config(const std::string& path) {
  return config_from_ini(parse_ini_file(path));
}

}  // namespace otfsim
