#include "faasprov/callgraph.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>

#include "faasprov/assignment.hpp"
#include "faasprov/error.hpp"

namespace faasprov {

CallGraph::CallGraph(std::vector<Vertex> vertices,
                     const std::vector<std::pair<std::string, std::string>>& edges) {
  for (auto& v : vertices) add_vertex(std::move(v.id), std::move(v.label));
  for (const auto& [from, to] : edges) {
    const auto f = index_of(from);
    const auto t = index_of(to);
    if (f == size() || t == size()) {
      throw Error(ErrorCode::kInvalidArgument, "edge " + from + "->" + to + " references an unknown vertex");
    }
    add_edge(f, t);
  }
}

std::size_t CallGraph::add_vertex(std::string id, std::string label) {
  if (label.empty()) throw Error(ErrorCode::kInvalidArgument, "vertex '" + id + "' has an empty label");
  if (index_of(id) != size()) throw Error(ErrorCode::kInvalidArgument, "duplicate vertex id '" + id + "'");
  vertices_.push_back({std::move(id), std::move(label)});
  return vertices_.size() - 1;
}

void CallGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw Error(ErrorCode::kInvalidArgument, "edge endpoint out of range");
  if (from == to) throw Error(ErrorCode::kInvalidArgument, "self-loop on '" + vertices_[from].id + "'");
  if (!edges_.insert({from, to}).second) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate edge " + vertices_[from].id + "->" + vertices_[to].id);
  }
}

void CallGraph::remove_edge(std::size_t from, std::size_t to) {
  if (edges_.erase({from, to}) == 0) throw Error(ErrorCode::kInvalidArgument, "no such edge");
}

void CallGraph::remove_vertex(std::size_t index) {
  if (index >= size()) throw Error(ErrorCode::kInvalidArgument, "vertex index out of range");
  std::set<Edge> kept;
  for (auto [f, t] : edges_) {
    if (f == index || t == index) continue;
    kept.insert({f > index ? f - 1 : f, t > index ? t - 1 : t});
  }
  edges_ = std::move(kept);
  vertices_.erase(vertices_.begin() + static_cast<std::ptrdiff_t>(index));
}

void CallGraph::relabel(std::size_t index, std::string label) {
  if (index >= size()) throw Error(ErrorCode::kInvalidArgument, "vertex index out of range");
  if (label.empty()) throw Error(ErrorCode::kInvalidArgument, "empty label");
  vertices_[index].label = std::move(label);
}

std::size_t CallGraph::index_of(const std::string& id) const {
  auto it = std::find_if(vertices_.begin(), vertices_.end(), [&](const Vertex& v) { return v.id == id; });
  return static_cast<std::size_t>(it - vertices_.begin());
}

std::vector<std::size_t> CallGraph::undirected_neighbors(std::size_t index) const {
  std::vector<std::size_t> out;
  for (auto [f, t] : edges_) {
    if (f == index) out.push_back(t);
    if (t == index) out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<StarStructure> build_stars(const CallGraph& g) {
  std::vector<StarStructure> stars;
  stars.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    StarStructure s{g.vertices()[i].label, {}};
    for (auto n : g.undirected_neighbors(i)) s.neighbor_labels.push_back(g.vertices()[n].label);
    std::sort(s.neighbor_labels.begin(), s.neighbor_labels.end());
    stars.push_back(std::move(s));
  }
  return stars;
}

double star_distance(const StarStructure& a, const StarStructure& b) {
  const double label_term = a.center_label == b.center_label ? 0.0 : 1.0;
  const auto la = a.neighbor_labels.size();
  const auto lb = b.neighbor_labels.size();
  const double degree_term = la > lb ? double(la - lb) : double(lb - la);

  // Both neighbor lists are sorted, so a merge walk counts the multiset
  // intersection.
  std::size_t common = 0;
  for (std::size_t i = 0, j = 0; i < la && j < lb;) {
    if (a.neighbor_labels[i] == b.neighbor_labels[j]) {
      ++common, ++i, ++j;
    } else if (a.neighbor_labels[i] < b.neighbor_labels[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const double multiset_term = double(std::max(la, lb) - common);
  return label_term + degree_term + multiset_term;
}

std::vector<double> star_cost_matrix(const std::vector<StarStructure>& a, const std::vector<StarStructure>& b,
                                     std::size_t& n) {
  n = std::max(a.size(), b.size());
  const StarStructure dummy{kDummyLabel, {}};
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& si = i < a.size() ? a[i] : dummy;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& sj = j < b.size() ? b[j] : dummy;
      cost[i * n + j] = star_distance(si, sj);
    }
  }
  return cost;
}

GedResult approx_ged(const CallGraph& a, const CallGraph& b) {
  std::size_t n = 0;
  const auto cost = star_cost_matrix(build_stars(a), build_stars(b), n);
  return {solve_assignment(cost, n).cost, false};
}

namespace {

struct SearchNode {
  double g = 0.0;
  double f = 0.0;
  std::vector<int> mapping;  // mapping[i] = target vertex in b, or -1 (deleted)
  std::uint32_t used = 0;    // bitmask of b vertices already taken
  bool complete = false;
  std::uint64_t seq = 0;
};

struct WorseFirst {
  bool operator()(const SearchNode& x, const SearchNode& y) const {
    if (x.f != y.f) return x.f > y.f;
    if (x.mapping.size() != y.mapping.size()) return x.mapping.size() < y.mapping.size();
    return x.seq > y.seq;
  }
};

// Minimum vertex operations still needed: every leftover vertex on the larger
// side costs at least one unless it can be matched to an equal label.
double vertex_lower_bound(const CallGraph& a, const CallGraph& b, std::size_t next, std::uint32_t used) {
  std::vector<std::string> ra, rb;
  for (std::size_t i = next; i < a.size(); ++i) ra.push_back(a.vertices()[i].label);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!(used & (1u << j))) rb.push_back(b.vertices()[j].label);
  }
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  std::vector<std::string> common;
  std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(common));
  return double(std::max(ra.size(), rb.size()) - common.size());
}

}  // namespace

GedResult exact_ged(const CallGraph& a, const CallGraph& b, std::size_t max_vertices) {
  if (a.size() > max_vertices || b.size() > max_vertices) {
    throw Error(ErrorCode::kTooLarge, "exact GED limited to " + std::to_string(max_vertices) +
                                          " vertices, got " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
  }
  if (b.size() > 31) throw Error(ErrorCode::kTooLarge, "exact GED supports at most 31 target vertices");

  std::priority_queue<SearchNode, std::vector<SearchNode>, WorseFirst> open;
  std::uint64_t seq = 0;
  SearchNode root;
  root.f = vertex_lower_bound(a, b, 0, 0);
  root.seq = seq++;
  open.push(root);

  while (!open.empty()) {
    SearchNode node = open.top();
    open.pop();
    if (node.complete) return {node.g, true};

    const std::size_t i = node.mapping.size();
    if (i == a.size()) {
      // Insert every untouched vertex of b together with its incident edges.
      SearchNode done = node;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (!(node.used & (1u << j))) done.g += 1.0;
      }
      for (auto [f, t] : b.edges()) {
        if (!(node.used & (1u << f)) || !(node.used & (1u << t))) done.g += 1.0;
      }
      done.f = done.g;
      done.complete = true;
      done.seq = seq++;
      open.push(std::move(done));
      continue;
    }

    auto expand = [&](int target) {
      SearchNode child = node;
      child.mapping.push_back(target);
      if (target < 0) {
        child.g += 1.0;
      } else {
        child.used |= 1u << target;
        if (a.vertices()[i].label != b.vertices()[static_cast<std::size_t>(target)].label) child.g += 1.0;
      }
      for (std::size_t j = 0; j < i; ++j) {
        const int mj = node.mapping[j];
        const bool both = target >= 0 && mj >= 0;
        const auto t = static_cast<std::size_t>(target);
        const auto m = static_cast<std::size_t>(mj);
        const bool out_b = both && b.has_edge(t, m);
        const bool in_b = both && b.has_edge(m, t);
        if (a.has_edge(i, j) != out_b) child.g += 1.0;
        if (a.has_edge(j, i) != in_b) child.g += 1.0;
      }
      child.f = child.g + vertex_lower_bound(a, b, i + 1, child.used);
      child.seq = seq++;
      open.push(std::move(child));
    };

    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!(node.used & (1u << j))) expand(static_cast<int>(j));
    }
    expand(-1);
  }
  return {0.0, true};  // unreachable: the deletion branch always reaches a goal
}

}  // namespace faasprov
