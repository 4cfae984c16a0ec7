#include "goalseq/config.hpp"

#include "goalseq/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace goalseq {

double TemperatureSchedule::at(long step) const {
  if (anneal_steps <= 0) return end;
  const double frac = std::min(1.0, static_cast<double>(std::max(0L, step)) /
                                        static_cast<double>(anneal_steps));
  return start * std::pow(end / start, frac);
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (!(lambda_gan >= 0.0) || !std::isfinite(lambda_gan)) fail("lambda_gan must be >= 0");
  if (!(alpha_rl >= 0.0) || !std::isfinite(alpha_rl)) fail("alpha_rl must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (rollouts_k < 1) fail("rollouts_k must be >= 1");
  if (baseline_mode.kind == BaselineMode::Kind::fixed && !std::isfinite(baseline_mode.value)) {
    fail("fixed baseline must be finite");
  }
  if (!(grad_clip > 0.0)) fail("grad_clip must be > 0");
  const auto& t = gumbel_temperature_schedule;
  if (!(t.end > 0.0) || !(t.start >= t.end)) fail("temperature schedule needs start >= end > 0");
  if (t.anneal_steps < 0) fail("anneal_steps must be >= 0");
  if (!(sigma_sample >= 0.0)) fail("sigma_sample must be >= 0");
  if (!(sigma_train > 0.0)) fail("sigma_train must be > 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config: cannot parse " + key + " = '" + v + "'");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config: cannot parse integer " + key + " = '" + v + "'");
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ValidationError("config: duplicate key " + key);

    if (key == "lambda_gan") {
      cfg.lambda_gan = to_double(key, val);
    } else if (key == "alpha_rl") {
      cfg.alpha_rl = to_double(key, val);
    } else if (key == "gamma") {
      cfg.gamma = to_double(key, val);
    } else if (key == "rollouts_k") {
      cfg.rollouts_k = static_cast<int>(to_long(key, val));
    } else if (key == "baseline_mode") {
      if (val == "running_mean") {
        cfg.baseline_mode = BaselineMode::running_mean();
      } else if (val.rfind("fixed:", 0) == 0) {
        cfg.baseline_mode = BaselineMode::fixed(to_double(key, val.substr(6)));
      } else {
        throw ValidationError("config: baseline_mode must be running_mean or fixed:<b>");
      }
    } else if (key == "grad_clip") {
      cfg.grad_clip = to_double(key, val);
    } else if (key == "gumbel_temperature_schedule") {
      std::vector<std::string> parts;
      std::istringstream ps(val);
      std::string part;
      while (std::getline(ps, part, ',')) parts.push_back(trim(part));
      if (parts.size() != 3) {
        throw ValidationError("config: gumbel_temperature_schedule needs start,end,steps");
      }
      cfg.gumbel_temperature_schedule = {to_double(key, parts[0]), to_double(key, parts[1]),
                                         to_long(key, parts[2])};
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_long(key, val));
    } else if (key == "sigma_sample") {
      cfg.sigma_sample = to_double(key, val);
    } else if (key == "sigma_train") {
      cfg.sigma_train = to_double(key, val);
    } else {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_string(const TrainConfig& c) {
  std::ostringstream out;
  out << "lambda_gan = " << fmt(c.lambda_gan) << '\n'
      << "alpha_rl = " << fmt(c.alpha_rl) << '\n'
      << "gamma = " << fmt(c.gamma) << '\n'
      << "rollouts_k = " << c.rollouts_k << '\n'
      << "baseline_mode = "
      << (c.baseline_mode.kind == BaselineMode::Kind::fixed
              ? "fixed:" + fmt(c.baseline_mode.value)
              : std::string("running_mean"))
      << '\n'
      << "grad_clip = " << fmt(c.grad_clip) << '\n'
      << "gumbel_temperature_schedule = " << fmt(c.gumbel_temperature_schedule.start) << ','
      << fmt(c.gumbel_temperature_schedule.end) << ','
      << c.gumbel_temperature_schedule.anneal_steps << '\n'
      << "seed = " << c.seed << '\n'
      << "sigma_sample = " << fmt(c.sigma_sample) << '\n'
      << "sigma_train = " << fmt(c.sigma_train) << '\n';
  return out.str();
}

}  // namespace goalseq
