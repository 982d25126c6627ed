#pragma once

// Labeled directed call graphs, their star-structure decomposition, and two
// graph edit distances: a polynomial star-assignment approximation used for
// ranking, and an exact best-first search usable only on tiny graphs.

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace faasprov {

struct Vertex {
  std::string id;
  std::string label;
};

class CallGraph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;  // vertex indices, from -> to

  CallGraph() = default;
  // Throws InvalidArgument on unknown endpoints, self-loops, duplicate edges,
  // duplicate vertex ids, or empty labels (the empty label is reserved).
  CallGraph(std::vector<Vertex> vertices, const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t add_vertex(std::string id, std::string label);
  void add_edge(std::size_t from, std::size_t to);
  void remove_edge(std::size_t from, std::size_t to);
  // Drops the vertex and its incident edges; later indices shift down by one.
  void remove_vertex(std::size_t index);
  void relabel(std::size_t index, std::string label);

  std::size_t size() const { return vertices_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool has_edge(std::size_t from, std::size_t to) const { return edges_.contains({from, to}); }
  // Index of the vertex with this id, or size() if absent.
  std::size_t index_of(const std::string& id) const;
  // Neighbor indices ignoring direction, deduplicated, ascending.
  std::vector<std::size_t> undirected_neighbors(std::size_t index) const;

 private:
  std::vector<Vertex> vertices_;
  std::set<Edge> edges_;
};

struct StarStructure {
  std::string center_label;
  std::vector<std::string> neighbor_labels;  // sorted multiset

  bool operator==(const StarStructure&) const = default;
  auto operator<=>(const StarStructure&) const = default;
};

struct GedResult {
  double distance = 0.0;
  bool is_exact = false;
};

// Label of the padding stars used to square the assignment; never a real label.
inline const std::string kDummyLabel;

// One star per vertex, in vertex order, over the undirected version of g.
std::vector<StarStructure> build_stars(const CallGraph& g);

// center-label mismatch + degree gap + (max degree - multiset intersection).
double star_distance(const StarStructure& a, const StarStructure& b);

// Square cost matrix between two star multisets after dummy padding.
std::vector<double> star_cost_matrix(const std::vector<StarStructure>& a, const std::vector<StarStructure>& b,
                                     std::size_t& n);

GedResult approx_ged(const CallGraph& a, const CallGraph& b);

inline constexpr std::size_t kDefaultExactGedLimit = 6;

// Unit-cost vertex insert/delete/relabel and directed edge insert/delete.
// Throws TooLarge when either graph exceeds max_vertices.
GedResult exact_ged(const CallGraph& a, const CallGraph& b, std::size_t max_vertices = kDefaultExactGedLimit);

}  // namespace faasprov
