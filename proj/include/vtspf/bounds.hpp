#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vtspf/exact.hpp"
#include "vtspf/graph.hpp"

namespace vtspf {

struct DensityBounds {
  double eps_d = 1.0, eps_u = 1.0;      // f
  double epsp_d = 1.0, epsp_u = 1.0;    // f~
  double gamma_d = 1.0, gamma_u = 1.0;  // g
  double kappa_d = 1.0, kappa_u = 1.0;  // p^R

  /// Throws DomainError unless every value is positive and lower <= upper.
  void validate() const;
};

struct AssumptionReport {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};

struct BoundInputs {
  DensityBounds densities;
  GraphQuantities graph;
  std::size_t particles = 1;
  std::size_t card_j = 1;
  /// min over s and clusters B' of d(J, dB'); +inf when no cluster has a boundary
  double min_boundary_distance = 1.0;
};

/// Returned by variance_bound when the bound is vacuous.
inline constexpr double kVacuous = std::numeric_limits<double>::infinity();
/// Returned by beta when the density-ratio product is exactly one.
inline constexpr double kBetaCap = 1e6;

AssumptionReport check_assumption(const DensityBounds& b, const GraphQuantities& q);

/// Decay rate. Throws DomainError when the assumption fails.
double beta(const DensityBounds& b, const GraphQuantities& q);

/// Throws DomainError for beta <= 0.
double bias_bound(const BoundInputs& in, double beta);

/// kVacuous when beta <= log |B|.
double variance_bound(const BoundInputs& in, double beta);

double total_error_bound(const BoundInputs& in, double beta);

/// min over the histories of d(J, dB'), with dB' the r-inner boundary of a
/// cluster under the identifier of the same time. Empty boundaries are skipped.
double min_boundary_distance(const SpatialLayout& layout, std::span<const Identifier> identifiers,
                             std::span<const ClusterPartition> clusters,
                             std::span<const VertexId> j, double r);

/// Table scan of a finite instance. f~ and p^R are scanned over every
/// neighbour count and region size that can occur.
DensityBounds empirical_bounds_for_instance(const exact::FiniteInstance& instance);

/// Truncation box for the CAR bounds. Poisson counts use the integers in [y_lo, y_hi].
struct CarBox {
  double phi_lo = -3.0, phi_hi = 3.0;
  double varphi_lo = -3.0, varphi_hi = 3.0;
  double y_lo = -5.0, y_hi = 5.0;
};

inline constexpr const char* kCarCaveat =
    "CAR densities are unbounded below on unbounded supports; "
    "these constants hold only on the supplied truncation box";

struct CarParamsView {
  double rho_spatial;
  double rho_temporal;
  double sigma2;
  double sigma2_tilde;  // the time being bounded
  double nu2;
  bool poisson;
  double p_enter;
  double p_stay;
  std::size_t max_neighbors;
  std::size_t max_region_size;
};

DensityBounds car_truncated_bounds(const CarParamsView& params, const CarBox& box);

struct BoundReport {
  DensityBounds densities;
  GraphQuantities graph;
  AssumptionReport assumption;
  double beta = 0.0;  // NaN when the assumption fails
  double bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
  std::size_t particles = 1;
  std::size_t card_j = 1;
  double min_boundary_distance = 1.0;
  std::string caveat;
};

BoundReport make_report(const BoundInputs& in);
/// key: value lines; infinities print as "inf (bound vacuous)".
std::string format_report(const BoundReport& r);
std::string report_csv_header();
std::string report_csv_row(const BoundReport& r);

}  // namespace vtspf
