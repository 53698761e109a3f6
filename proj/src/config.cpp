#include <algorithm>
#include <fstream>
#include <sstream>

#include "vtspf/errors.hpp"
#include "vtspf/scenario.hpp"

namespace vtspf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string canonical(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  return key;
}

template <typename T, typename Parse>
T parse_or_throw(const std::string& key, const std::string& value, Parse&& parse) {
  try {
    std::size_t used = 0;
    T out = parse(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  return parse_or_throw<double>(key, v, [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
}

long long to_int(const std::string& key, const std::string& v) {
  return parse_or_throw<long long>(key, v, [](const std::string& s, std::size_t* n) { return std::stoll(s, n); });
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x <= 0) throw ConfigError(key + " must be positive");
  return static_cast<std::size_t>(x);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Algorithm> to_algorithms(const std::string& key, const std::string& v) {
  std::vector<Algorithm> out;
  for (const auto& s : split_list(v)) {
    if (s == "spf") out.push_back(Algorithm::spf);
    else if (s == "pf") out.push_back(Algorithm::pf);
    else throw ConfigError("bad value for " + key + ": '" + s + "'");
  }
  if (out.empty()) throw ConfigError(key + " is empty");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("bad value for " + key + ": '" + v + "'");
}

}  // namespace

void ScenarioConfig::validate() const {
  if (T < 1) throw ConfigError("T must be positive");
  if (N == 0) throw ConfigError("N must be positive");
  if (dims.empty()) throw ConfigError("dims is empty");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("dims must be positive");
  if (cluster_size == 0) throw ConfigError("cluster-size must be positive");
  if (replicates == 0) throw ConfigError("replicates must be positive");
  if (!(p_enter >= 0.0 && p_enter <= 1.0) || !(p_stay >= 0.0 && p_stay <= 1.0))
    throw ConfigError("p-enter and p-stay must lie in [0,1]");
  if (!(nu2 > 0.0)) throw ConfigError("nu2 must be positive");
  if (!(r > 0.0)) throw ConfigError("r must be positive");
  if (algorithms.empty() || loglik_methods.empty()) throw ConfigError("no algorithm selected");
  if (scenario.empty() || scenario.find_first_of(",\n\r") != std::string::npos)
    throw ConfigError("scenario name must be non-empty and free of commas");
  if (budget_ms && *budget_ms <= 0) throw ConfigError("budget-ms must be positive");
}

void apply_setting(ScenarioConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = canonical(trim(raw_key));
  const std::string v = trim(raw_value);
  if (key == "T") {
    c.T = static_cast<int>(to_count(key, v));
  } else if (key == "N") {
    c.N = to_count(key, v);
  } else if (key == "dims") {
    c.dims.clear();
    for (const auto& d : split_list(v)) c.dims.push_back(to_count(key, d));
    if (c.dims.empty()) throw ConfigError("dims is empty");
  } else if (key == "cluster-size") {
    c.cluster_size = to_count(key, v);
  } else if (key == "obs-model") {
    try {
      c.obs_model = car::parse_observation_model(v);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "p-enter") {
    c.p_enter = to_double(key, v);
  } else if (key == "p-stay") {
    c.p_stay = to_double(key, v);
  } else if (key == "nu2") {
    c.nu2 = to_double(key, v);
  } else if (key == "adjacency") {
    c.adjacency = v;
  } else if (key == "coordinates") {
    c.coordinates = v;
  } else if (key == "r") {
    c.r = to_double(key, v);
  } else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw ConfigError("seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") {
    c.out = v;
  } else if (key == "scenario") {
    c.scenario = v;
  } else if (key == "replicates") {
    c.replicates = to_count(key, v);
  } else if (key == "algorithms") {
    c.algorithms = to_algorithms(key, v);
  } else if (key == "loglik-methods") {
    c.loglik_methods = to_algorithms(key, v);
  } else if (key == "budget-ms") {
    c.budget_ms = static_cast<long long>(to_count(key, v));
  } else if (key == "record-runtime") {
    c.record_runtime = to_bool(key, v);
  } else {
    throw ConfigError("unknown setting '" + raw_key + "'");
  }
}

ScenarioConfig parse_config_text(const std::string& text, ScenarioConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ScenarioConfig load_config_file(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

}  // namespace vtspf
