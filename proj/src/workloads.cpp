#include "faasprov/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "faasprov/error.hpp"

namespace faasprov {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

SyntheticPipeline random_pipeline(const std::string& id, std::uint64_t seed, const ContainerConfig& largest,
                                  int max_replicas, const SyntheticRanges& ranges) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto n = std::uniform_int_distribution<std::size_t>(ranges.functions_min, ranges.functions_max)(rng);

  SyntheticPipeline out;
  out.pipeline.id = id;
  double base_sum = 0.0;
  double capacity = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    FunctionSpec f;
    f.id = id + ".f" + std::to_string(k);
    f.name = f.id;
    f.base_exec_time = uniform(ranges.base_exec_min, ranges.base_exec_max);
    f.cpu_scaling_exponent = uniform(ranges.exponent_min, ranges.exponent_max);
    f.init_time = uniform(ranges.init_min, ranges.init_max);
    f.ref_cpu = 1.0;
    f.ref_mem = 128.0;
    base_sum += f.base_exec_time;
    capacity = std::min(capacity, double(max_replicas) / exec_time(f, largest));
    out.pipeline.functions.push_back(f.id);
    out.functions.emplace(f.id, f);
  }
  out.pipeline.deadline_s = uniform(ranges.slack_min, ranges.slack_max) * base_sum;
  out.pipeline.target_rate = uniform(ranges.load_min, ranges.load_max) * capacity;
  return out;
}

CallGraph random_callgraph(const std::string& id_prefix, std::size_t vertices, std::size_t extra_edges,
                           std::span<const std::string> labels, std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "label pool is empty");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  CallGraph g;
  for (std::size_t i = 0; i < vertices; ++i) {
    g.add_vertex(id_prefix + std::to_string(i), labels[pick(labels.size())]);
    if (i > 0) g.add_edge(pick(i), i);
  }
  for (std::size_t e = 0, attempts = 0; e < extra_edges && attempts < 50 * (extra_edges + 1); ++attempts) {
    if (vertices < 2) break;
    const auto a = pick(vertices), b = pick(vertices);
    if (a == b || g.has_edge(a, b) || g.has_edge(b, a)) continue;
    g.add_edge(a, b);
    ++e;
  }
  return g;
}

CallGraph perturb_callgraph(const CallGraph& graph, std::size_t edits, std::span<const std::string> labels,
                            std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "label pool is empty");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  CallGraph g = graph;
  std::size_t fresh = 0;
  auto fresh_id = [&] {
    std::string id;
    do {
      id = "edit" + std::to_string(fresh++);
    } while (g.index_of(id) != g.size());
    return id;
  };

  for (std::size_t applied = 0; applied < edits;) {
    auto kind = static_cast<EditKind>(pick(5));
    if (g.size() < 2 && kind != EditKind::kInsertVertex) kind = EditKind::kInsertVertex;
    switch (kind) {
      case EditKind::kRelabel: {
        const auto v = pick(g.size());
        std::vector<std::string> others;
        for (const auto& l : labels) {
          if (l != g.vertices()[v].label) others.push_back(l);
        }
        if (others.empty()) continue;
        g.relabel(v, others[pick(others.size())]);
        break;
      }
      case EditKind::kInsertVertex: {
        const std::size_t caller = g.size() ? pick(g.size()) : 0;
        const bool had_vertices = g.size() > 0;
        const auto v = g.add_vertex(fresh_id(), labels[pick(labels.size())]);
        if (had_vertices) g.add_edge(caller, v);
        break;
      }
      case EditKind::kDeleteVertex:
        g.remove_vertex(pick(g.size()));
        break;
      case EditKind::kInsertEdge: {
        bool done = false;
        for (int attempt = 0; attempt < 32 && !done; ++attempt) {
          const auto a = pick(g.size()), b = pick(g.size());
          if (a == b || g.has_edge(a, b)) continue;
          g.add_edge(a, b);
          done = true;
        }
        if (!done) continue;
        break;
      }
      case EditKind::kDeleteEdge: {
        if (g.edges().empty()) continue;
        auto it = g.edges().begin();
        std::advance(it, static_cast<std::ptrdiff_t>(pick(g.edges().size())));
        const auto edge = *it;
        g.remove_edge(edge.first, edge.second);
        break;
      }
    }
    ++applied;
  }
  return g;
}

double label_work(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return 0.5 + double(h % 10007) / 10006.0;
}

double callgraph_work(const CallGraph& graph) {
  double work = kCallWork * double(graph.edges().size());
  for (const auto& v : graph.vertices()) work += label_work(v.label);
  return work;
}

SyntheticPipeline derive_variant(const SyntheticPipeline& source, const CallGraph& source_graph,
                                 const CallGraph& variant_graph, const std::string& id) {
  const double base = callgraph_work(source_graph);
  if (!(base > 0.0)) throw Error(ErrorCode::kInvalidArgument, "source call graph has no work");
  const double scale = std::max(callgraph_work(variant_graph), 1e-3 * base) / base;
  SyntheticPipeline out = source;
  out.pipeline.id = id;
  for (auto& [fid, f] : out.functions) f.base_exec_time *= scale;
  return out;
}

std::vector<double> linear_rates(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {lo};
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * double(i) / double(count - 1));
  return out;
}

std::vector<double> training_rates(const FunctionSpec& function, const ContainerConfig& container,
                                   const ReplicaClassMap& class_map, std::size_t count) {
  validate(class_map);
  const double top = 1.1 * double(class_map.classes.back()) / exec_time(function, container);
  return linear_rates(top / double(count), top, count);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "rank correlation needs two equal-length samples of size >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace faasprov
