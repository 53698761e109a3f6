#include "vtspf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vtspf/errors.hpp"

namespace vtspf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Range {
  double lo = kInf;
  double hi = -kInf;
  void add(double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
};

/// |x| range over an interval.
Range abs_range(double a, double b) {
  Range r;
  r.lo = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
  r.hi = std::max(std::abs(a), std::abs(b));
  return r;
}

double normal_pdf(double d, double var) {
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Range of a centred normal density at |x - mean| in [dist.lo, dist.hi].
void add_normal(Range& out, Range dist, double var) {
  out.add(normal_pdf(dist.lo, var));
  out.add(normal_pdf(dist.hi, var));
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(10);
  ss << x;
  return ss.str();
}

}  // namespace

void DensityBounds::validate() const {
  const double pairs[4][2] = {{eps_d, eps_u}, {epsp_d, epsp_u}, {gamma_d, gamma_u}, {kappa_d, kappa_u}};
  for (const auto& p : pairs) {
    if (!(p[0] > 0.0) || !(p[1] > 0.0) || !std::isfinite(p[0]) || !std::isfinite(p[1]))
      throw DomainError("density bounds must be positive and finite");
    if (p[0] > p[1]) throw DomainError("density lower bound exceeds upper bound");
  }
}

AssumptionReport check_assumption(const DensityBounds& b, const GraphQuantities& q) {
  b.validate();
  if (q.max_degree < 1 || q.max_region_size < 1 || q.max_cluster_size < 1)
    throw DomainError("graph quantities must be at least one");
  AssumptionReport r;
  r.lhs = (b.eps_d / b.eps_u) * (b.epsp_d / b.epsp_u) * (b.kappa_d / b.kappa_u);
  r.rhs = 1.0 - 1.0 / (6.0 * static_cast<double>(q.max_degree + q.max_region_size) *
                       static_cast<double>(q.max_cluster_size));
  r.margin = r.lhs - r.rhs;
  r.holds = r.margin > 0.0;
  return r;
}

double beta(const DensityBounds& b, const GraphQuantities& q) {
  const auto rep = check_assumption(b, q);
  if (!rep.holds) throw DomainError("assumption fails: decay rate undefined");
  const double gap = 1.0 - rep.lhs;
  if (gap <= 0.0) return kBetaCap;
  const double value = -std::log(6.0 * gap * static_cast<double>(q.max_degree + q.max_region_size)) /
                       (q.r + q.max_region_diameter);
  return std::min(value, kBetaCap);
}

double bias_bound(const BoundInputs& in, double b) {
  if (!(b > 0.0)) throw DomainError("bias bound needs a positive decay rate");
  in.densities.validate();
  const double ratio = 1.0 - in.densities.eps_d / in.densities.eps_u;
  if (ratio == 0.0 || std::isinf(in.min_boundary_distance)) return 0.0;
  const double e = std::exp(-b);
  return 8.0 * e / (1.0 - e) * ratio * static_cast<double>(in.card_j) *
         std::exp(-b * in.min_boundary_distance);
}

double variance_bound(const BoundInputs& in, double b) {
  const auto& d = in.densities;
  d.validate();
  const double size = static_cast<double>(in.graph.max_cluster_size);
  const double denom = 1.0 - std::exp(-b + std::log(size));
  if (!(denom > 0.0) || in.particles == 0) return kVacuous;
  const double a = (d.eps_u * d.eps_u * d.kappa_u) / (d.eps_d * d.eps_d * d.epsp_d * d.kappa_d);
  const double c = (d.gamma_u / d.gamma_d) * (d.epsp_u / d.epsp_d);
  const double value = 64.0 / std::sqrt(static_cast<double>(in.particles)) * std::pow(a, size) *
                       std::pow(c, size + size * size) * size *
                       static_cast<double>(in.card_j) / denom;
  return std::isfinite(value) ? value : kVacuous;
}

double total_error_bound(const BoundInputs& in, double b) {
  return bias_bound(in, b) + variance_bound(in, b);
}

double min_boundary_distance(const SpatialLayout& layout, std::span<const Identifier> identifiers,
                             std::span<const ClusterPartition> clusters,
                             std::span<const VertexId> j, double r) {
  if (identifiers.size() != clusters.size())
    throw DomainError("identifier and cluster histories must align");
  if (j.empty()) throw DomainError("query set is empty");
  double best = kInf;
  for (std::size_t s = 0; s < identifiers.size(); ++s) {
    for (const auto& b : clusters[s].clusters) {
      const auto boundary = inner_boundary(layout, identifiers[s], b, r);
      if (boundary.empty()) continue;
      best = std::min(best, set_distance(layout, j, boundary));
    }
  }
  return best;
}

DensityBounds empirical_bounds_for_instance(const exact::FiniteInstance& inst) {
  inst.validate();
  DensityBounds b;
  Range f, g, pair;
  for (double x : inst.enter) f.add(x);
  for (double x : inst.stay) f.add(x);
  for (double x : inst.emission) g.add(x);
  for (double x : inst.interaction) pair.add(x);

  const Neighborhoods nb(inst.layout, inst.radius);
  std::size_t max_nb = 0;
  for (std::size_t v = 0; v < inst.num_vertices(); ++v)
    max_nb = std::max(max_nb, nb.ball(static_cast<VertexId>(v)).size());
  Range ft;
  for (std::size_t c = 0; c <= max_nb; ++c) {
    ft.add(std::pow(pair.lo, static_cast<double>(c)));
    ft.add(std::pow(pair.hi, static_cast<double>(c)));
  }

  Range p;
  for (double x : {inst.p_enter, 1.0 - inst.p_enter, inst.p_stay, 1.0 - inst.p_stay}) p.add(x);
  Range kappa;
  for (const auto& region : inst.regions.regions) {
    const double n = static_cast<double>(region.size());
    kappa.add(std::pow(p.lo, n));
    kappa.add(std::pow(p.hi, n));
  }

  b.eps_d = f.lo, b.eps_u = f.hi;
  b.epsp_d = ft.lo, b.epsp_u = ft.hi;
  b.gamma_d = g.lo, b.gamma_u = g.hi;
  b.kappa_d = kappa.lo, b.kappa_u = kappa.hi;
  return b;
}

DensityBounds car_truncated_bounds(const CarParamsView& p, const CarBox& box) {
  if (box.phi_lo > box.phi_hi || box.varphi_lo > box.varphi_hi || box.y_lo > box.y_hi)
    throw DomainError("truncation box has lo > hi");
  if (!(p.sigma2 > 0.0) || !(p.sigma2_tilde > 0.0) || !(p.nu2 > 0.0))
    throw DomainError("variances must be positive");
  if (std::abs(p.rho_temporal) >= 1.0) throw DomainError("temporal correlation must lie in (-1,1)");

  // phi proposal: N(0, s~^2 / (rho deg + 1 - rho)) for every reachable degree
  Range fphi;
  const Range phi_abs = abs_range(box.phi_lo, box.phi_hi);
  for (std::size_t deg = 0; deg <= p.max_neighbors; ++deg) {
    const double prec = p.rho_spatial * static_cast<double>(deg) + 1.0 - p.rho_spatial;
    add_normal(fphi, phi_abs, p.sigma2_tilde / prec);
  }
  // varphi: AR(1) from a boxed ancestor, or the stationary law on entry
  Range fvar;
  const double a = p.rho_temporal * box.varphi_lo;
  const double c = p.rho_temporal * box.varphi_hi;
  add_normal(fvar, abs_range(box.varphi_lo - std::max(a, c), box.varphi_hi - std::min(a, c)), p.sigma2);
  add_normal(fvar, abs_range(box.varphi_lo, box.varphi_hi),
             p.sigma2 / (1.0 - p.rho_temporal * p.rho_temporal));

  // f~ = exp(0.5 rho / s~^2 phi_v sum phi_w), |phi| <= M
  const double m = phi_abs.hi;
  const double span = 0.5 * p.rho_spatial / p.sigma2_tilde * m * m * static_cast<double>(p.max_neighbors);

  // g over psi = phi + varphi
  const double psi_lo = box.phi_lo + box.varphi_lo;
  const double psi_hi = box.phi_hi + box.varphi_hi;
  Range g;
  if (!p.poisson) {
    add_normal(g, abs_range(box.y_lo - psi_hi, box.y_hi - psi_lo), p.nu2);
  } else {
    const double y0 = std::max(0.0, std::ceil(box.y_lo));
    const double y1 = std::floor(box.y_hi);
    if (y1 < y0) throw DomainError("truncation box holds no count");
    constexpr int kGrid = 400;
    for (double y = y0; y <= y1; y += 1.0) {
      auto add_psi = [&](double psi) { g.add(std::exp(y * psi - std::exp(psi) - std::lgamma(y + 1.0))); };
      for (int i = 0; i <= kGrid; ++i) add_psi(psi_lo + (psi_hi - psi_lo) * i / kGrid);
      if (y > 0.0 && std::log(y) > psi_lo && std::log(y) < psi_hi) add_psi(std::log(y));
    }
  }

  Range pr;
  for (double x : {p.p_enter, 1.0 - p.p_enter, p.p_stay, 1.0 - p.p_stay}) pr.add(x);
  const double n = static_cast<double>(std::max<std::size_t>(1, p.max_region_size));

  DensityBounds b;
  b.eps_d = fphi.lo * fvar.lo, b.eps_u = fphi.hi * fvar.hi;
  b.epsp_d = std::exp(-span), b.epsp_u = std::exp(span);
  b.gamma_d = g.lo, b.gamma_u = g.hi;
  b.kappa_d = std::pow(pr.lo, n), b.kappa_u = std::pow(pr.hi, n);
  return b;
}

BoundReport make_report(const BoundInputs& in) {
  BoundReport r;
  r.densities = in.densities;
  r.graph = in.graph;
  r.particles = in.particles;
  r.card_j = in.card_j;
  r.min_boundary_distance = in.min_boundary_distance;
  r.assumption = check_assumption(in.densities, in.graph);
  if (!r.assumption.holds) {
    r.beta = r.bias = r.variance = r.total = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.beta = beta(in.densities, in.graph);
  r.bias = bias_bound(in, r.beta);
  r.variance = variance_bound(in, r.beta);
  r.total = r.bias + r.variance;
  return r;
}

std::string format_report(const BoundReport& r) {
  std::ostringstream out;
  auto vac = [](double x) { return std::isinf(x) ? std::string("inf (bound vacuous)") : fmt(x); };
  const auto& d = r.densities;
  out << "eps_d: " << fmt(d.eps_d) << "\neps_u: " << fmt(d.eps_u) << "\nepsp_d: " << fmt(d.epsp_d)
      << "\nepsp_u: " << fmt(d.epsp_u) << "\ngamma_d: " << fmt(d.gamma_d)
      << "\ngamma_u: " << fmt(d.gamma_u) << "\nkappa_d: " << fmt(d.kappa_d)
      << "\nkappa_u: " << fmt(d.kappa_u) << '\n';
  out << "r: " << fmt(r.graph.r) << "\nmax_degree: " << r.graph.max_degree
      << "\nmax_region_size: " << r.graph.max_region_size
      << "\nmax_region_diameter: " << fmt(r.graph.max_region_diameter)
      << "\nmax_cluster_size: " << r.graph.max_cluster_size << '\n';
  out << "assumption_holds: " << (r.assumption.holds ? "true" : "false")
      << "\nassumption_lhs: " << fmt(r.assumption.lhs) << "\nassumption_rhs: " << fmt(r.assumption.rhs)
      << "\nassumption_margin: " << fmt(r.assumption.margin) << '\n';
  out << "particles: " << r.particles << "\ncard_j: " << r.card_j
      << "\nmin_boundary_distance: " << fmt(r.min_boundary_distance) << '\n';
  if (r.assumption.holds) {
    out << "beta: " << fmt(r.beta) << "\nbias_bound: " << fmt(r.bias)
        << "\nvariance_bound: " << vac(r.variance) << "\ntotal_error_bound: " << vac(r.total) << '\n';
  } else {
    out << "beta: undefined (assumption fails)\n";
  }
  if (!r.caveat.empty()) out << "caveat: " << r.caveat << '\n';
  return out.str();
}

std::string report_csv_header() {
  return "eps_d,eps_u,epsp_d,epsp_u,gamma_d,gamma_u,kappa_d,kappa_u,r,max_degree,"
         "max_region_size,max_region_diameter,max_cluster_size,holds,lhs,rhs,particles,card_j,"
         "min_boundary_distance,beta,bias_bound,variance_bound,total_error_bound";
}

std::string report_csv_row(const BoundReport& r) {
  const auto& d = r.densities;
  std::ostringstream out;
  out << fmt(d.eps_d) << ',' << fmt(d.eps_u) << ',' << fmt(d.epsp_d) << ',' << fmt(d.epsp_u) << ','
      << fmt(d.gamma_d) << ',' << fmt(d.gamma_u) << ',' << fmt(d.kappa_d) << ',' << fmt(d.kappa_u)
      << ',' << fmt(r.graph.r) << ',' << r.graph.max_degree << ',' << r.graph.max_region_size << ','
      << fmt(r.graph.max_region_diameter) << ',' << r.graph.max_cluster_size << ','
      << (r.assumption.holds ? 1 : 0) << ',' << fmt(r.assumption.lhs) << ','
      << fmt(r.assumption.rhs) << ',' << r.particles << ',' << r.card_j << ','
      << fmt(r.min_boundary_distance) << ',' << fmt(r.beta) << ',' << fmt(r.bias) << ','
      << fmt(r.variance) << ',' << fmt(r.total);
  return out.str();
}

}  // namespace vtspf
