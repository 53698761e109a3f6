#include "vtspf/car.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "vtspf/errors.hpp"

namespace vtspf::car {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_bernoulli(bool event, double p) { return std::log(event ? p : 1.0 - p); }

std::string format_double(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string f;
  std::istringstream ss(s);
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ObservationModel parse_observation_model(const std::string& s) {
  if (s == "normal") return ObservationModel::normal;
  if (s == "poisson") return ObservationModel::poisson;
  throw ConfigError("unknown observation model '" + s + "'");
}

std::string to_string(ObservationModel m) {
  return m == ObservationModel::normal ? "normal" : "poisson";
}

void CarParams::validate(int T) const {
  if (!(rho_spatial >= 0.0 && rho_spatial <= 1.0)) throw DomainError("rho_spatial outside [0,1]");
  if (!(rho_temporal > -1.0 && rho_temporal < 1.0)) throw DomainError("rho_temporal outside (-1,1)");
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  if (!(nu2 > 0.0)) throw DomainError("nu2 must be positive");
  if (!(p_enter >= 0.0 && p_enter <= 1.0)) throw DomainError("p_enter outside [0,1]");
  if (!(p_stay >= 0.0 && p_stay <= 1.0)) throw DomainError("p_stay outside [0,1]");
  if (static_cast<int>(sigma2_tilde.size()) < T) throw DomainError("too few spatial variances");
  for (double s : sigma2_tilde)
    if (!(s > 0.0)) throw DomainError("spatial variances must be positive");
}

double CarParams::sigma2_tilde_at(int t) const {
  if (t < 1 || t > static_cast<int>(sigma2_tilde.size()))
    throw DomainError("no spatial variance for t=" + std::to_string(t));
  return sigma2_tilde[static_cast<std::size_t>(t - 1)];
}

CarParams CarParams::draw(Rng& rng, int T, ObservationModel obs, double p_enter, double p_stay,
                          double nu2) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> one_two(1.0, 2.0);
  CarParams p;
  p.rho_spatial = unit(rng);
  p.rho_temporal = unit(rng);
  p.sigma2 = 0.1;
  p.sigma2_tilde.resize(static_cast<std::size_t>(std::max(T, 0)));
  for (auto& s : p.sigma2_tilde) s = one_two(rng);
  p.nu2 = nu2;
  p.obs_model = obs;
  p.p_enter = p_enter;
  p.p_stay = p_stay;
  return p;
}

double NormalLaw::log_density(double x) const {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

std::vector<std::uint8_t> temporal_matrix(std::size_t T) {
  std::vector<std::uint8_t> d(T * T, 0);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    d[t * T + t + 1] = 1;
    d[(t + 1) * T + t] = 1;
  }
  return d;
}

std::vector<std::uint8_t> effective_adjacency(const SpatialLayout& base, const Identifier& k) {
  const auto members = k.members();
  const std::size_t n = members.size();
  std::vector<std::uint8_t> w(n * n, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && base.adjacent(members[a], members[b])) w[a * n + b] = 1;
  return w;
}

NormalLaw phi_full_conditional(double neighbor_sum, std::size_t degree, const CarParams& params,
                               int t) {
  const double rho = params.rho_spatial;
  const double denom = rho * static_cast<double>(degree) + 1.0 - rho;
  return {rho * neighbor_sum / denom, params.sigma2_tilde_at(t) / denom};
}

NormalLaw phi_full_conditional(VertexId i, const Identifier& k, std::span<const double> phi,
                               const SpatialLayout& layout, const CarParams& params, int t) {
  if (!k.contains(i)) throw DomainError("phi_full_conditional: vertex not active");
  double sum = 0.0;
  std::size_t degree = 0;
  for (VertexId w : layout.adjacency_list(i)) {
    if (k.contains(w)) {
      sum += phi[w];
      ++degree;
    }
  }
  return phi_full_conditional(sum, degree, params, t);
}

Eigen::MatrixXd leroux_precision(const SpatialLayout& layout, const Identifier& k,
                                 const CarParams& params, int t) {
  const auto members = k.members();
  const auto n = static_cast<Eigen::Index>(members.size());
  const double rho = params.rho_spatial;
  const double inv_var = 1.0 / params.sigma2_tilde_at(t);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    double degree = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a != b && layout.adjacent(members[a], members[b])) {
        q(a, b) = -rho * inv_var;
        degree += 1.0;
      }
    }
    q(a, a) = (rho * degree + 1.0 - rho) * inv_var;
  }
  if (n > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(q);
    if (llt.info() != Eigen::Success)
      throw SingularPrecisionError("Leroux precision is not positive definite at t=" +
                                   std::to_string(t));
    // LLT only checks the pivots it sees; an intrinsic CAR on a component
    // has an exactly zero eigenvalue that can slip through as round-off.
    if (rho >= 1.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() <= 1e-10 * inv_var)
        throw SingularPrecisionError("Leroux precision is singular at t=" + std::to_string(t));
    }
  }
  return q;
}

NormalLaw varphi_step(const std::optional<double>& prev, const CarParams& params) {
  const double a = params.rho_temporal;
  if (prev) return {a * *prev, params.sigma2};
  if (std::abs(a) >= 1.0) throw DomainError("AR(1) has no stationary law for |rho_temporal| >= 1");
  return {0.0, params.sigma2 / (1.0 - a * a)};
}

double log_observation_density(double y, double psi, const CarParams& params) {
  if (params.obs_model == ObservationModel::normal) return NormalLaw{psi, params.nu2}.log_density(y);
  if (y < 0.0 || std::floor(y) != y) throw DomainError("Poisson observation must be a non-negative integer");
  return y * psi - std::exp(psi) - std::lgamma(y + 1.0);
}

double observation_density(double y, double psi, const CarParams& params) {
  return std::exp(log_observation_density(y, psi, params));
}

double identifier_step_density(std::span<const VertexId> region, const Identifier& k_t,
                               const Identifier& k_prev, const CarParams& params) {
  double p = 1.0;
  for (VertexId v : region) {
    const bool now = k_t.contains(v);
    if (k_prev.contains(v)) p *= now ? params.p_stay : 1.0 - params.p_stay;
    else p *= now ? params.p_enter : 1.0 - params.p_enter;
  }
  return p;
}

namespace {

Identifier step_identifier(const Identifier& prev, std::size_t m, const CarParams& params,
                           Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VertexId> next;
  for (std::size_t v = 0; v < m; ++v) {
    const double p = prev.contains(static_cast<VertexId>(v)) ? params.p_stay : params.p_enter;
    if (u(rng) < p) next.push_back(static_cast<VertexId>(v));
  }
  return Identifier(std::move(next));
}

}  // namespace

CarTrajectory simulate_dataset(const CarParams& params, const SpatialLayout& layout, int T,
                               std::uint64_t seed) {
  if (T < 1) throw DomainError("simulate_dataset requires T >= 1");
  params.validate(T);
  const std::size_t m = layout.size();
  const RngPolicy policy(seed);

  CarTrajectory traj;
  traj.universe = m;
  traj.identifiers.reserve(static_cast<std::size_t>(T) + 1);
  traj.states.reserve(static_cast<std::size_t>(T) + 1);

  {
    Rng rng = policy.stream(0, 0, 0, StreamPurpose::simulate);
    std::uniform_real_distribution<double> init(1.0, 2.0);
    std::vector<CarLatentState> s0(m);
    for (auto& s : s0) s.varphi = init(rng);
    traj.identifiers.push_back(Identifier::universe(m));
    traj.states.push_back(std::move(s0));
  }

  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (int t = 1; t <= T; ++t) {
    Rng rng = policy.stream(t, 0, 0, StreamPurpose::simulate);
    const Identifier& prev_k = traj.identifiers.back();
    const auto& prev_s = traj.states.back();
    Identifier k = step_identifier(prev_k, m, params, rng);

    std::vector<CarLatentState> s(m);
    for (VertexId v : k) {
      std::optional<double> anc;
      if (prev_k.contains(v)) anc = prev_s[v].varphi;
      const NormalLaw law = varphi_step(anc, params);
      s[v].varphi = law.mean + std::sqrt(law.variance) * std_normal(rng);
    }

    const Eigen::MatrixXd q = leroux_precision(layout, k, params, t);
    const auto n = q.rows();
    if (n > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(q);
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
      const Eigen::VectorXd phi = llt.matrixU().solve(z);
      Eigen::Index i = 0;
      for (VertexId v : k) s[v].phi = phi(i++);
    }

    ObservationFrame y(m);
    for (VertexId v : k) {
      const double psi = s[v].psi();
      if (params.obs_model == ObservationModel::normal) {
        y.set(v, psi + std::sqrt(params.nu2) * std_normal(rng));
      } else {
        std::poisson_distribution<long long> pois(std::exp(psi));
        y.set(v, static_cast<double>(pois(rng)));
      }
    }
    traj.identifiers.push_back(std::move(k));
    traj.states.push_back(std::move(s));
    traj.observations.push_back(std::move(y));
  }
  return traj;
}

void write_trajectory_csv(const CarTrajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,vertex,active,phi,varphi,psi,y\n";
  for (std::size_t t = 0; t < traj.identifiers.size(); ++t) {
    for (std::size_t v = 0; v < traj.universe; ++v) {
      const auto id = static_cast<VertexId>(v);
      const bool active = traj.identifiers[t].contains(id);
      out << t << ',' << v << ',' << (active ? 1 : 0) << ',';
      if (active) {
        const auto& s = traj.states[t][v];
        out << format_double(s.phi) << ',' << format_double(s.varphi) << ','
            << format_double(s.psi()) << ',';
        if (t > 0) out << format_double(traj.observations[t - 1].at(id));
      } else {
        out << ",,,";
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

CarTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,vertex,active,phi,varphi,psi,y")
    throw LoadError("dataset header must be t,vertex,active,phi,varphi,psi,y", 0);

  struct Row {
    std::size_t t, v;
    bool active;
    double phi, varphi, y;
  };
  std::vector<Row> rows;
  std::size_t max_t = 0, max_v = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 7) throw LoadError("dataset row needs 7 fields", row);
    Row r{};
    try {
      r.t = std::stoul(f[0]);
      r.v = std::stoul(f[1]);
      r.active = f[2] == "1";
      if (f[2] != "0" && f[2] != "1") throw LoadError("active must be 0 or 1", row, 2);
      r.phi = f[3].empty() ? 0.0 : std::stod(f[3]);
      r.varphi = f[4].empty() ? 0.0 : std::stod(f[4]);
      r.y = f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[6]);
    } catch (const LoadError&) {
      throw;
    } catch (const std::exception&) {
      throw LoadError("unparseable dataset row " + std::to_string(row), row);
    }
    if (r.active && r.t > 0 && std::isnan(r.y))
      throw LoadError("active vertex without observation", row, 6);
    max_t = std::max(max_t, r.t);
    max_v = std::max(max_v, r.v);
    rows.push_back(r);
    ++row;
  }
  if (rows.empty()) throw LoadError("empty dataset");

  CarTrajectory traj;
  traj.universe = max_v + 1;
  std::vector<std::vector<VertexId>> members(max_t + 1);
  traj.states.assign(max_t + 1, std::vector<CarLatentState>(traj.universe));
  traj.observations.assign(max_t, ObservationFrame(traj.universe));
  for (const auto& r : rows) {
    if (!r.active) continue;
    members[r.t].push_back(static_cast<VertexId>(r.v));
    traj.states[r.t][r.v] = {r.phi, r.varphi};
    if (r.t > 0) traj.observations[r.t - 1].set(static_cast<VertexId>(r.v), r.y);
  }
  for (auto& m : members) traj.identifiers.emplace_back(std::move(m));
  return traj;
}

void write_params(const CarParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "rho_spatial=" << format_double(p.rho_spatial) << '\n'
      << "rho_temporal=" << format_double(p.rho_temporal) << '\n'
      << "sigma2=" << format_double(p.sigma2) << '\n'
      << "nu2=" << format_double(p.nu2) << '\n'
      << "obs_model=" << to_string(p.obs_model) << '\n'
      << "p_enter=" << format_double(p.p_enter) << '\n'
      << "p_stay=" << format_double(p.p_stay) << '\n'
      << "sigma2_tilde=";
  for (std::size_t i = 0; i < p.sigma2_tilde.size(); ++i)
    out << (i ? "," : "") << format_double(p.sigma2_tilde[i]);
  out << '\n';
}

CarParams read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') { ++row; continue; }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError("expected key=value", row);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
    ++row;
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw LoadError(std::string("params file lacks ") + key);
    return it->second;
  };
  CarParams p;
  try {
    p.rho_spatial = std::stod(need("rho_spatial"));
    p.rho_temporal = std::stod(need("rho_temporal"));
    p.sigma2 = std::stod(need("sigma2"));
    p.nu2 = std::stod(need("nu2"));
    p.p_enter = std::stod(need("p_enter"));
    p.p_stay = std::stod(need("p_stay"));
    for (const auto& s : split_commas(need("sigma2_tilde"))) p.sigma2_tilde.push_back(std::stod(s));
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception&) {
    throw LoadError("unparseable value in " + path);
  }
  p.obs_model = parse_observation_model(need("obs_model"));
  return p;
}

CarModel::CarModel(CarParams params, SpatialLayout layout)
    : params_(std::move(params)), layout_(std::move(layout)) {}

std::size_t CarModel::active_degree(VertexId v, const Identifier& k) const {
  std::size_t d = 0;
  for (VertexId w : layout_.adjacency_list(v))
    if (k.contains(w)) ++d;
  return d;
}

NormalLaw CarModel::phi_marginal_factor(int t, VertexId v, const Identifier& next) const {
  const double rho = params_.rho_spatial;
  const double denom = rho * static_cast<double>(active_degree(v, next)) + 1.0 - rho;
  return {0.0, params_.sigma2_tilde_at(t) / denom};
}

double CarModel::log_region_transition(int, std::span<const VertexId> region,
                                       const Identifier& next,
                                       const LatentConfiguration& prev) const {
  double acc = 0.0;
  for (VertexId v : region) {
    const bool now = next.contains(v);
    acc += prev.contains(v) ? log_bernoulli(now, params_.p_stay) : log_bernoulli(now, params_.p_enter);
  }
  return acc;
}

Identifier CarModel::sample_identifier(int, const LatentConfiguration& prev,
                                       const RegionalPartition&, Rng& rng) const {
  return step_identifier(prev.identifier(), layout_.size(), params_, rng);
}

double CarModel::log_transition(int t, VertexId v, const Identifier& next, const VertexState& x,
                                const std::optional<VertexState>& ancestor) const {
  std::optional<double> anc;
  if (ancestor) anc = ancestor->second;
  return phi_marginal_factor(t, v, next).log_density(x.first) +
         varphi_step(anc, params_).log_density(x.second);
}

VertexState CarModel::sample_transition(int t, VertexId v, const Identifier& next,
                                        const std::optional<VertexState>& ancestor,
                                        Rng& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  std::optional<double> anc;
  if (ancestor) anc = ancestor->second;
  const NormalLaw phi = phi_marginal_factor(t, v, next);
  const NormalLaw varphi = varphi_step(anc, params_);
  VertexState s;
  s.first = phi.mean + std::sqrt(phi.variance) * z(rng);
  s.second = varphi.mean + std::sqrt(varphi.variance) * z(rng);
  return s;
}

double CarModel::log_interaction(int t, VertexId v, const LatentConfiguration& x,
                                 std::span<const VertexId> neighbors) const {
  if (params_.rho_spatial == 0.0) return 0.0;
  double sum = 0.0;
  for (VertexId w : neighbors)
    if (layout_.adjacent(v, w)) sum += x.raw(w).first;
  // -1/2 Q_vw phi_v phi_w per neighbour, with Q_vw = -rho / sigma~_t^2
  return 0.5 * params_.rho_spatial / params_.sigma2_tilde_at(t) * x.raw(v).first * sum;
}

double CarModel::log_observation(int, VertexId, double y, const VertexState& x) const {
  return log_observation_density(y, x.first + x.second, params_);
}

LatentConfiguration CarModel::sample_initial(Rng& rng) const {
  const std::size_t m = layout_.size();
  LatentConfiguration x(Identifier::universe(m), m);
  std::uniform_real_distribution<double> init(1.0, 2.0);
  for (std::size_t v = 0; v < m; ++v) x.raw(static_cast<VertexId>(v)) = {0.0, init(rng)};
  return x;
}

CarModel as_model_spec(const CarParams& params, const SpatialLayout& layout) {
  return CarModel(params, layout);
}

}  // namespace vtspf::car
