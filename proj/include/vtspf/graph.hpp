#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vtspf {

using VertexId = std::uint32_t;

/// Set of active vertices at one time step. Members are kept sorted and
/// unique; membership queries are O(1) through a dense mask.
class Identifier {
 public:
  Identifier() = default;
  explicit Identifier(std::vector<VertexId> members);
  Identifier(std::initializer_list<VertexId> members)
      : Identifier(std::vector<VertexId>(members)) {}

  /// {0, 1, ..., m-1}
  static Identifier universe(std::size_t m);

  std::span<const VertexId> members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(VertexId v) const { return v < mask_.size() && mask_[v] != 0; }

  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  friend bool operator==(const Identifier& a, const Identifier& b) {
    return a.members_ == b.members_;
  }

 private:
  std::vector<VertexId> members_;
  std::vector<std::uint8_t> mask_;
};

enum class DistanceBackend { euclidean, hop };

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Fixed vertex universe {0..m-1} with a symmetric 0/1 adjacency and a
/// pairwise distance. Immutable after construction.
class SpatialLayout {
 public:
  SpatialLayout() = default;

  /// Row-major m*m adjacency. Throws DomainError on asymmetry, non-zero
  /// diagonal or entries other than 0/1.
  static SpatialLayout from_adjacency(std::size_t m, std::span<const std::uint8_t> adjacency);
  static SpatialLayout complete(std::size_t m);
  static SpatialLayout path(std::size_t m);

  /// Switch to the euclidean backend. Requires one coordinate per vertex.
  SpatialLayout with_coordinates(std::vector<Point2> coordinates) const;

  std::size_t size() const { return size_; }
  DistanceBackend backend() const { return backend_; }
  bool adjacent(VertexId a, VertexId b) const { return adjacency_[index(a, b)] != 0; }
  std::span<const VertexId> adjacency_list(VertexId v) const { return adjacency_lists_[v]; }
  std::size_t edge_count() const;
  const std::optional<std::vector<Point2>>& coordinates() const { return coordinates_; }

  /// d(a, b); +inf for disconnected pairs under the hop backend.
  double distance(VertexId a, VertexId b) const { return distance_[index(a, b)]; }

  /// Leading principal block on vertices {0..dim-1}.
  SpatialLayout leading_block(std::size_t dim) const;

 private:
  std::size_t index(VertexId a, VertexId b) const { return static_cast<std::size_t>(a) * size_ + b; }
  void rebuild_distances();

  std::size_t size_ = 0;
  DistanceBackend backend_ = DistanceBackend::hop;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<VertexId>> adjacency_lists_;
  std::optional<std::vector<Point2>> coordinates_;
  std::vector<double> distance_;
};

/// Per-vertex r-balls over the whole universe, so that N_t(v) is the ball
/// of v intersected with the identifier.
class Neighborhoods {
 public:
  Neighborhoods() = default;
  Neighborhoods(const SpatialLayout& layout, double r);

  double radius() const { return radius_; }
  std::span<const VertexId> ball(VertexId v) const { return balls_[v]; }

  /// Appends {v' in k : d(v,v') <= r, v' != v} to out (cleared first).
  void active_neighbors(const Identifier& k, VertexId v, std::vector<VertexId>& out) const;

 private:
  double radius_ = 1.0;
  std::vector<std::vector<VertexId>> balls_;
};

struct RegionalPartition {
  std::vector<std::vector<VertexId>> regions;

  static RegionalPartition singletons(std::size_t m);
  static RegionalPartition whole(std::size_t m);

  /// Throws DomainError unless the regions are disjoint and cover {0..m-1}.
  void validate(std::size_t m) const;
  /// Region index of every vertex.
  std::vector<std::size_t> region_index(std::size_t m) const;
};

struct ClusterPartition {
  std::vector<std::vector<VertexId>> clusters;
  std::size_t cluster_size = 1;

  std::size_t size() const { return clusters.size(); }
  /// cluster ordinal of each vertex in {0..m-1}; npos for vertices in no cluster
  std::vector<std::size_t> cluster_index(std::size_t m) const;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

using Partitioner = std::function<ClusterPartition(const Identifier&, std::size_t)>;

struct GraphQuantities {
  double r = 1.0;
  std::size_t max_cluster_size = 1;
  std::size_t max_degree = 1;
  std::size_t max_region_size = 1;
  double max_region_diameter = 1.0;
};

std::vector<VertexId> neighborhood(const SpatialLayout& layout, const Identifier& k, VertexId v,
                                   double r);

/// min over the two sets of d(v, v'). Throws DomainError on an empty set.
double set_distance(const SpatialLayout& layout, std::span<const VertexId> a,
                    std::span<const VertexId> b);

std::vector<VertexId> inner_boundary(const SpatialLayout& layout, const Identifier& k,
                                     std::span<const VertexId> w, double r);

/// Consecutive chunks of size c over the sorted identifier.
ClusterPartition build_cluster_partition(const Identifier& k, std::size_t c);

/// Maxima over the whole history, each clamped to at least one. max_degree
/// counts v itself together with its r-neighbours.
GraphQuantities graph_quantities(const SpatialLayout& layout, const RegionalPartition& regions,
                                 std::span<const Identifier> identifiers,
                                 std::span<const ClusterPartition> clusters, double r);

/// m*m 0/1 CSV without header; symmetry, zero diagonal and binary entries
/// are checked. The resulting layout uses hop distances.
SpatialLayout load_adjacency_csv(const std::string& path);
SpatialLayout parse_adjacency_csv(const std::string& text);

/// Rows "id,x,y". Every vertex of the layout must appear exactly once.
std::vector<Point2> load_coordinates_csv(const std::string& path, std::size_t m);

}  // namespace vtspf
