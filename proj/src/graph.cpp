#include "vtspf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vtspf/errors.hpp"

namespace vtspf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_subset(std::span<const VertexId> w, const Identifier& k) {
  return std::all_of(w.begin(), w.end(), [&](VertexId v) { return k.contains(v); });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Identifier::Identifier(std::vector<VertexId> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (!members_.empty()) {
    mask_.assign(static_cast<std::size_t>(members_.back()) + 1, 0);
    for (VertexId v : members_) mask_[v] = 1;
  }
}

Identifier Identifier::universe(std::size_t m) {
  std::vector<VertexId> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = static_cast<VertexId>(i);
  return Identifier(std::move(all));
}

SpatialLayout SpatialLayout::from_adjacency(std::size_t m, std::span<const std::uint8_t> adjacency) {
  if (adjacency.size() != m * m) throw DomainError("adjacency must have m*m entries");
  SpatialLayout layout;
  layout.size_ = m;
  layout.adjacency_.assign(adjacency.begin(), adjacency.end());
  layout.adjacency_lists_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto a = adjacency[i * m + j];
      if (a > 1) {
        throw DomainError("adjacency entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") is not 0/1");
      }
      if (i == j && a != 0) {
        throw DomainError("adjacency diagonal (" + std::to_string(i) + "," + std::to_string(i) +
                          ") is non-zero");
      }
      if (a != adjacency[j * m + i]) {
        throw DomainError("adjacency is asymmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
      if (a) layout.adjacency_lists_[i].push_back(static_cast<VertexId>(j));
    }
  }
  layout.rebuild_distances();
  return layout;
}

SpatialLayout SpatialLayout::complete(std::size_t m) {
  std::vector<std::uint8_t> adj(m * m, 1);
  for (std::size_t i = 0; i < m; ++i) adj[i * m + i] = 0;
  return from_adjacency(m, adj);
}

SpatialLayout SpatialLayout::path(std::size_t m) {
  std::vector<std::uint8_t> adj(m * m, 0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    adj[i * m + i + 1] = 1;
    adj[(i + 1) * m + i] = 1;
  }
  return from_adjacency(m, adj);
}

SpatialLayout SpatialLayout::with_coordinates(std::vector<Point2> coordinates) const {
  if (coordinates.size() != size_) {
    throw DomainError("euclidean backend requires coordinates for every vertex");
  }
  SpatialLayout out = *this;
  out.coordinates_ = std::move(coordinates);
  out.backend_ = DistanceBackend::euclidean;
  out.rebuild_distances();
  return out;
}

std::size_t SpatialLayout::edge_count() const {
  std::size_t twice = 0;
  for (const auto& l : adjacency_lists_) twice += l.size();
  return twice / 2;
}

void SpatialLayout::rebuild_distances() {
  const std::size_t m = size_;
  distance_.assign(m * m, kInf);
  if (backend_ == DistanceBackend::euclidean) {
    const auto& c = *coordinates_;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        distance_[i * m + j] = std::hypot(c[i].x - c[j].x, c[i].y - c[j].y);
    return;
  }
  // BFS from every source
  std::vector<VertexId> queue;
  queue.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    double* row = &distance_[s * m];
    row[s] = 0.0;
    queue.clear();
    queue.push_back(static_cast<VertexId>(s));
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const VertexId u = queue[head];
      for (VertexId w : adjacency_lists_[u]) {
        if (row[w] == kInf) {
          row[w] = row[u] + 1.0;
          queue.push_back(w);
        }
      }
    }
  }
}

SpatialLayout SpatialLayout::leading_block(std::size_t dim) const {
  if (dim > size_) throw DomainError("leading block larger than layout");
  std::vector<std::uint8_t> adj(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) adj[i * dim + j] = adjacency_[i * size_ + j];
  auto out = from_adjacency(dim, adj);
  if (coordinates_) {
    std::vector<Point2> c(coordinates_->begin(), coordinates_->begin() + static_cast<std::ptrdiff_t>(dim));
    out = out.with_coordinates(std::move(c));
  }
  return out;
}

Neighborhoods::Neighborhoods(const SpatialLayout& layout, double r) : radius_(r) {
  const std::size_t m = layout.size();
  balls_.resize(m);
  for (std::size_t v = 0; v < m; ++v) {
    for (std::size_t w = 0; w < m; ++w) {
      if (w != v && layout.distance(static_cast<VertexId>(v), static_cast<VertexId>(w)) <= r) {
        balls_[v].push_back(static_cast<VertexId>(w));
      }
    }
  }
}

void Neighborhoods::active_neighbors(const Identifier& k, VertexId v,
                                     std::vector<VertexId>& out) const {
  out.clear();
  for (VertexId w : balls_[v])
    if (k.contains(w)) out.push_back(w);
}

RegionalPartition RegionalPartition::singletons(std::size_t m) {
  RegionalPartition p;
  p.regions.resize(m);
  for (std::size_t i = 0; i < m; ++i) p.regions[i] = {static_cast<VertexId>(i)};
  return p;
}

RegionalPartition RegionalPartition::whole(std::size_t m) {
  RegionalPartition p;
  p.regions.emplace_back();
  for (std::size_t i = 0; i < m; ++i) p.regions[0].push_back(static_cast<VertexId>(i));
  return p;
}

void RegionalPartition::validate(std::size_t m) const {
  std::vector<int> seen(m, 0);
  for (const auto& r : regions) {
    for (VertexId v : r) {
      if (v >= m) throw DomainError("region member outside universe");
      if (seen[v]++) throw DomainError("regions overlap at vertex " + std::to_string(v));
    }
  }
  for (std::size_t v = 0; v < m; ++v)
    if (!seen[v]) throw DomainError("vertex " + std::to_string(v) + " is in no region");
}

std::vector<std::size_t> RegionalPartition::region_index(std::size_t m) const {
  std::vector<std::size_t> idx(m, ClusterPartition::npos);
  for (std::size_t r = 0; r < regions.size(); ++r)
    for (VertexId v : regions[r])
      if (v < m) idx[v] = r;
  return idx;
}

std::vector<std::size_t> ClusterPartition::cluster_index(std::size_t m) const {
  std::vector<std::size_t> idx(m, npos);
  for (std::size_t j = 0; j < clusters.size(); ++j)
    for (VertexId v : clusters[j])
      if (v < m) idx[v] = j;
  return idx;
}

std::vector<VertexId> neighborhood(const SpatialLayout& layout, const Identifier& k, VertexId v,
                                   double r) {
  if (!k.contains(v)) throw DomainError("neighborhood: vertex not in identifier");
  std::vector<VertexId> out;
  for (VertexId w : k)
    if (w != v && layout.distance(v, w) <= r) out.push_back(w);
  return out;
}

double set_distance(const SpatialLayout& layout, std::span<const VertexId> a,
                    std::span<const VertexId> b) {
  if (a.empty() || b.empty()) throw DomainError("set_distance: empty vertex set");
  double best = kInf;
  for (VertexId v : a)
    for (VertexId w : b) best = std::min(best, layout.distance(v, w));
  return best;
}

std::vector<VertexId> inner_boundary(const SpatialLayout& layout, const Identifier& k,
                                     std::span<const VertexId> w, double r) {
  if (!is_subset(w, k)) throw DomainError("inner_boundary: set is not inside the identifier");
  const Identifier inside(std::vector<VertexId>(w.begin(), w.end()));
  std::vector<VertexId> out;
  for (VertexId v : inside) {
    const auto nb = neighborhood(layout, k, v, r);
    if (std::any_of(nb.begin(), nb.end(), [&](VertexId u) { return !inside.contains(u); }))
      out.push_back(v);
  }
  return out;
}

ClusterPartition build_cluster_partition(const Identifier& k, std::size_t c) {
  if (c == 0) throw DomainError("cluster size must be positive");
  ClusterPartition p;
  p.cluster_size = c;
  const auto members = k.members();
  for (std::size_t i = 0; i < members.size(); i += c) {
    const std::size_t end = std::min(members.size(), i + c);
    p.clusters.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(i),
                            members.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return p;
}

GraphQuantities graph_quantities(const SpatialLayout& layout, const RegionalPartition& regions,
                                 std::span<const Identifier> identifiers,
                                 std::span<const ClusterPartition> clusters, double r) {
  if (identifiers.empty() || clusters.empty())
    throw DomainError("graph_quantities: empty history");
  if (identifiers.size() != clusters.size())
    throw DomainError("graph_quantities: histories are not aligned");
  const std::size_t m = layout.size();
  const auto region_of = regions.region_index(m);

  GraphQuantities q;
  q.r = r;
  std::size_t max_cluster = 0;
  std::size_t max_deg = 0;
  std::size_t max_region = 0;
  double max_diam = 0.0;
  for (const auto& p : clusters)
    for (const auto& b : p.clusters) max_cluster = std::max(max_cluster, b.size());
  for (const Identifier& k : identifiers) {
    for (VertexId v : k) {
      std::size_t ball = 0;
      for (VertexId w : k)
        if (layout.distance(v, w) <= r) ++ball;
      max_deg = std::max(max_deg, ball);
      const std::size_t reg = region_of.at(v);
      if (reg == ClusterPartition::npos) throw DomainError("vertex in no region");
      max_region = std::max(max_region, regions.regions[reg].size());
      for (VertexId w : regions.regions[reg])
        if (k.contains(w)) max_diam = std::max(max_diam, layout.distance(v, w));
    }
  }
  q.max_cluster_size = std::max<std::size_t>(1, max_cluster);
  q.max_degree = std::max<std::size_t>(1, max_deg);
  q.max_region_size = std::max<std::size_t>(1, max_region);
  q.max_region_diameter = std::max(1.0, max_diam);
  return q;
}

SpatialLayout parse_adjacency_csv(const std::string& text) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::uint8_t> values;
    const auto fields = split(line, ',');
    for (std::size_t col = 0; col < fields.size(); ++col) {
      const auto f = trim(fields[col]);
      if (f == "0") values.push_back(0);
      else if (f == "1") values.push_back(1);
      else throw LoadError("non-binary adjacency entry '" + f + "' at row " + std::to_string(row) +
                           ", column " + std::to_string(col), row, col);
    }
    rows.push_back(std::move(values));
    ++row;
  }
  const std::size_t m = rows.size();
  if (m == 0) throw LoadError("empty adjacency file");
  std::vector<std::uint8_t> flat;
  flat.reserve(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != m)
      throw LoadError("adjacency row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " columns, expected " + std::to_string(m), i);
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (flat[i * m + i] != 0)
      throw LoadError("non-zero diagonal at (" + std::to_string(i) + "," + std::to_string(i) + ")", i, i);
    for (std::size_t j = i + 1; j < m; ++j)
      if (flat[i * m + j] != flat[j * m + i])
        throw LoadError("asymmetric adjacency at (" + std::to_string(i) + "," + std::to_string(j) + ")", i, j);
  }
  return SpatialLayout::from_adjacency(m, flat);
}

SpatialLayout load_adjacency_csv(const std::string& path) { return parse_adjacency_csv(read_file(path)); }

std::vector<Point2> load_coordinates_csv(const std::string& path, std::size_t m) {
  std::istringstream in(read_file(path));
  std::vector<std::optional<Point2>> pts(m);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw LoadError("coordinate row needs id,x,y", row);
    std::size_t id = 0;
    Point2 p;
    try {
      id = std::stoul(f[0]);
      p.x = std::stod(f[1]);
      p.y = std::stod(f[2]);
    } catch (const std::exception&) {
      throw LoadError("unparseable coordinate row " + std::to_string(row), row);
    }
    if (id >= m) throw LoadError("coordinate id outside layout", row, 0);
    if (pts[id]) throw LoadError("duplicate coordinate id " + std::to_string(id), row, 0);
    pts[id] = p;
    ++row;
  }
  std::vector<Point2> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!pts[i]) throw LoadError("missing coordinates for vertex " + std::to_string(i));
    out.push_back(*pts[i]);
  }
  return out;
}

}  // namespace vtspf
