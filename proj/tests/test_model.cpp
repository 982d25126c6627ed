#include <doctest.h>

#include <cmath>
#include <random>

#include "faasprov/error.hpp"
#include "faasprov/model.hpp"

using namespace faasprov;

namespace {

FunctionSpec fn(double base, double ref_cpu, double exponent, double ref_mem = 128.0) {
  FunctionSpec f;
  f.id = "f";
  f.base_exec_time = base;
  f.ref_cpu = ref_cpu;
  f.cpu_scaling_exponent = exponent;
  f.ref_mem = ref_mem;
  return f;
}

ErrorCode code_of(auto&& call) {
  try {
    call();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("exec_time follows the CPU power law") {
  CHECK(exec_time(fn(0.1, 1, 1), {512, 1}) == doctest::Approx(0.1));
  CHECK(exec_time(fn(0.1, 1, 1), {512, 2}) == doctest::Approx(0.05));
  CHECK(exec_time(fn(0.1, 1, 0.5), {512, 4}) == doctest::Approx(0.1 * std::pow(0.25, 0.5)));
  CHECK(exec_time(fn(0.1, 1, 0.5), {512, 4}) == doctest::Approx(0.05));
}

TEST_CASE("exec_time treats memory as a floor only") {
  const auto f = fn(0.2, 1, 0.8, 256);
  CHECK(exec_time(f, {256, 1}) == exec_time(f, {4096, 1}));
  CHECK(code_of([&] { exec_time(f, {255, 1}); }) == ErrorCode::kInsufficientMemory);
}

TEST_CASE("exec_time is non-increasing in cpus") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const auto f = fn(0.01 + u(rng), 0.25 + u(rng), u(rng));
    const double c1 = 0.1 + u(rng), c2 = c1 + u(rng);
    CHECK(exec_time(f, {512, c2}) <= exec_time(f, {512, c1}));
  }
}

TEST_CASE("fits_cluster needs one node that holds a whole container") {
  const ClusterSpec cluster{{{8, 16384}}};
  CHECK(fits_cluster({3, {4096, 4}}, cluster));
  CHECK_FALSE(fits_cluster({1, {1024, 9}}, cluster));
  CHECK(fits_cluster({1, {16384, 8}}, cluster));
  CHECK_FALSE(fits_cluster({1, {16385, 8}}, cluster));
  // replicas may spread over nodes, so the count does not matter here
  CHECK(fits_cluster({1000, {1024, 1}}, cluster));
}

TEST_CASE("fits_cluster is monotone under shrinking") {
  const ClusterSpec cluster{{{4, 8192}, {2, 16384}}};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> cpu(0.1, 6.0), mem(64, 20000), shrink(0.1, 1.0);
  for (int i = 0; i < 300; ++i) {
    const ContainerConfig big{mem(rng), cpu(rng)};
    const ContainerConfig small{big.mem_mb * shrink(rng), big.cpus * shrink(rng)};
    if (fits_cluster({1, big}, cluster)) CHECK(fits_cluster({1, small}, cluster));
  }
}

TEST_CASE("monthly_cost charges reserved GB-seconds") {
  CHECK(monthly_cost({1, {1024, 1}}, {1.0}) == doctest::Approx(2'592'000.0));
  CHECK(monthly_cost({30, {2048, 2}}, {0.000017}) == doctest::Approx(30 * 2 * 2'592'000.0 * 0.000017));
  CHECK(monthly_cost({30, {2048, 2}}, {0.000017}) == doctest::Approx(2643.84));
  CHECK(code_of([] { validate(Configuration{0, {1024, 1}}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("monthly_cost is strictly increasing in replicas and memory") {
  const PricingScheme p{0.000017};
  for (int r = 1; r < 40; ++r) CHECK(monthly_cost({r + 1, {512, 1}}, p) > monthly_cost({r, {512, 1}}, p));
  for (double m = 128; m < 8192; m *= 1.5) CHECK(monthly_cost({3, {m * 1.5, 1}}, p) > monthly_cost({3, {m, 1}}, p));
}

TEST_CASE("validation rejects out-of-range values") {
  CHECK(code_of([] { validate(ContainerConfig{0, 1}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(ContainerConfig{128, 0}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(fn(0, 1, 1)); }) == ErrorCode::kInvalidArgument);
  auto f = fn(0.1, 1, 1);
  f.init_time = -1;
  CHECK(code_of([&] { validate(f); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(PipelineSpec{"p", {}, 1, 1}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(PipelineSpec{"p", {"f"}, 0, 1}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(PipelineSpec{"p", {"f"}, 1, 0}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(ClusterSpec{}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { validate(PricingScheme{0}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("lookup reports unknown functions") {
  FunctionTable t{{"f", fn(0.1, 1, 1)}};
  CHECK(lookup(t, "f").base_exec_time == 0.1);
  CHECK(code_of([&] { lookup(t, "g"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("pack_replicas places replicas first-fit-decreasing") {
  const ClusterSpec cluster{{{4, 4096}, {4, 4096}}};
  const std::vector<Configuration> configs{{2, {1024, 1}}, {2, {2048, 2}}};
  const auto placement = pack_replicas(configs, cluster);
  REQUIRE(placement.size() == 2);
  // the two 2-CPU replicas go first and fill node 0; the 1-CPU ones land on node 1
  CHECK(placement[1] == std::vector<std::size_t>{0, 0});
  CHECK(placement[0] == std::vector<std::size_t>{1, 1});

  const std::vector<Configuration> too_many{{9, {1024, 1}}};
  CHECK(code_of([&] { pack_replicas(too_many, cluster); }) == ErrorCode::kPackingFailed);
}

TEST_CASE("pack_replicas never overcommits a node") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> reps(1, 6);
  std::uniform_real_distribution<double> cpu(0.25, 3.0), mem(128, 6000);
  const ClusterSpec cluster{{{8, 16384}, {6, 8192}, {4, 16384}}};
  int packed = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<Configuration> configs;
    for (int k = 0; k < 3; ++k) configs.push_back({reps(rng), {mem(rng), cpu(rng)}});
    try {
      const auto placement = pack_replicas(configs, cluster);
      std::vector<double> used_cpu(cluster.nodes.size()), used_mem(cluster.nodes.size());
      for (std::size_t i = 0; i < configs.size(); ++i) {
        REQUIRE(placement[i].size() == std::size_t(configs[i].replicas));
        for (auto n : placement[i]) {
          used_cpu[n] += configs[i].container.cpus;
          used_mem[n] += configs[i].container.mem_mb;
        }
      }
      for (std::size_t n = 0; n < cluster.nodes.size(); ++n) {
        CHECK(used_cpu[n] <= cluster.nodes[n].cpus + 1e-9);
        CHECK(used_mem[n] <= cluster.nodes[n].mem_mb + 1e-9);
      }
      ++packed;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPackingFailed);
    }
  }
  CHECK(packed > 20);
}
