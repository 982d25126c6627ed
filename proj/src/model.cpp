#include "faasprov/model.hpp"

#include <algorithm>
#include <cmath>

#include "faasprov/error.hpp"

namespace faasprov {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const ContainerConfig& c) {
  require(positive(c.mem_mb), "container mem_mb must be > 0");
  require(positive(c.cpus), "container cpus must be > 0");
}

void validate(const FunctionSpec& f) {
  require(!f.id.empty(), "function id must be non-empty");
  require(positive(f.base_exec_time), "function " + f.id + ": base_exec_time must be > 0");
  require(positive(f.ref_cpu), "function " + f.id + ": ref_cpu must be > 0");
  require(positive(f.ref_mem), "function " + f.id + ": ref_mem must be > 0");
  require(std::isfinite(f.cpu_scaling_exponent) && f.cpu_scaling_exponent >= 0.0,
          "function " + f.id + ": cpu_scaling_exponent must be >= 0");
  require(std::isfinite(f.init_time) && f.init_time >= 0.0,
          "function " + f.id + ": init_time must be >= 0");
}

void validate(const Configuration& c) {
  require(c.replicas >= 1, "configuration needs at least one replica");
  validate(c.container);
}

void validate(const PipelineSpec& p) {
  require(!p.functions.empty(), "pipeline " + p.id + " has no functions");
  require(positive(p.deadline_s), "pipeline " + p.id + ": deadline_s must be > 0");
  require(positive(p.target_rate), "pipeline " + p.id + ": target_rate must be > 0");
}

void validate(const ClusterSpec& c) {
  require(!c.nodes.empty(), "cluster has no nodes");
  for (const auto& n : c.nodes) {
    require(positive(n.cpus) && positive(n.mem_mb), "cluster node capacities must be > 0");
  }
}

void validate(const PricingScheme& p) {
  require(positive(p.rate_per_gb_second), "rate_per_gb_second must be > 0");
}

const FunctionSpec& lookup(const FunctionTable& functions, const std::string& id) {
  auto it = functions.find(id);
  if (it == functions.end()) throw Error(ErrorCode::kInvalidArgument, "unknown function id '" + id + "'");
  return it->second;
}

double exec_time(const FunctionSpec& f, const ContainerConfig& w) {
  validate(f);
  validate(w);
  if (w.mem_mb < f.ref_mem) {
    throw Error(ErrorCode::kInsufficientMemory,
                "function " + f.id + " needs " + std::to_string(f.ref_mem) + " MB, container has " +
                    std::to_string(w.mem_mb));
  }
  return f.base_exec_time * std::pow(f.ref_cpu / w.cpus, f.cpu_scaling_exponent);
}

bool fits_cluster(const Configuration& cfg, const ClusterSpec& cluster) {
  validate(cfg);
  validate(cluster);
  return std::any_of(cluster.nodes.begin(), cluster.nodes.end(), [&](const NodeSpec& n) {
    return n.cpus >= cfg.container.cpus && n.mem_mb >= cfg.container.mem_mb;
  });
}

double monthly_cost(const Configuration& cfg, const PricingScheme& pricing) {
  validate(cfg);
  validate(pricing);
  return static_cast<double>(cfg.replicas) * (cfg.container.mem_mb / 1024.0) *
         PricingScheme::kSecondsPerMonth * pricing.rate_per_gb_second;
}

std::vector<std::vector<std::size_t>> pack_replicas(std::span<const Configuration> configs,
                                                    const ClusterSpec& cluster) {
  validate(cluster);
  struct Item {
    std::size_t config;
    std::size_t replica;
  };
  std::vector<Item> items;
  std::vector<std::vector<std::size_t>> placement(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    validate(configs[i]);
    placement[i].assign(static_cast<std::size_t>(configs[i].replicas), 0);
    for (int r = 0; r < configs[i].replicas; ++r) items.push_back({i, static_cast<std::size_t>(r)});
  }
  std::stable_sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
    const auto& ca = configs[a.config].container;
    const auto& cb = configs[b.config].container;
    if (ca.cpus != cb.cpus) return ca.cpus > cb.cpus;
    return ca.mem_mb > cb.mem_mb;
  });

  std::vector<NodeSpec> free = cluster.nodes;
  for (const auto& item : items) {
    const auto& c = configs[item.config].container;
    // Remaining capacity accumulates rounding error from repeated subtraction.
    constexpr double kSlack = 1e-9;
    auto node = std::find_if(free.begin(), free.end(), [&](const NodeSpec& n) {
      return n.cpus + kSlack >= c.cpus && n.mem_mb + kSlack >= c.mem_mb;
    });
    if (node == free.end()) {
      throw Error(ErrorCode::kPackingFailed, "cannot place " + std::to_string(items.size()) +
                                                 " containers on " + std::to_string(cluster.nodes.size()) +
                                                 " nodes");
    }
    node->cpus -= c.cpus;
    node->mem_mb -= c.mem_mb;
    placement[item.config][item.replica] = static_cast<std::size_t>(node - free.begin());
  }
  return placement;
}

}  // namespace faasprov
