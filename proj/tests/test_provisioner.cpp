#include <doctest.h>

#include <cmath>

#include "faasprov/error.hpp"
#include "faasprov/provisioner.hpp"

using namespace faasprov;

namespace {

const ClusterSpec kCluster{{{16, 65536}, {16, 65536}}};
const PricingScheme kPricing{0.000017};

FunctionSpec fn(std::string id, double base, double exponent = 1.0, double init = 0.0) {
  FunctionSpec f;
  f.id = std::move(id);
  f.base_exec_time = base;
  f.cpu_scaling_exponent = exponent;
  f.init_time = init;
  return f;
}

// Ignores its input and always favours class `index`.
PredictionModel constant_model(const ReplicaClassMap& classes, std::size_t index) {
  auto m = initialize_model({2}, classes, LossKind::kCce, 0);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  m.layers.back().bias[index] = 2.0;
  return m;
}

ErrorCode code_of(auto&& call) {
  try {
    call();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("enumerate is container-major") {
  ConfigurationCatalog c{{{256, 0.5}, {512, 1}, {1024, 1.5}, {2048, 2}}, {}};
  const auto all = enumerate(c);
  REQUIRE(all.size() == 24);
  CHECK(all[0] == Configuration{5, {256, 0.5}});
  CHECK(all[5] == Configuration{30, {256, 0.5}});
  CHECK(all[6] == Configuration{5, {512, 1}});
  CHECK(enumerate({{{512, 1}}, ReplicaClassMap{{7}}}).size() == 1);
  CHECK(code_of([] { enumerate({{}, {}}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { enumerate({{{512, 1}, {512, 1}}, {}}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("single-container grid returns the predicted class") {
  const FunctionTable fs{{"f", fn("f", 0.1)}};
  const PipelineSpec p{"p", {"f"}, 2.0, 10.0};
  const ConfigurationCatalog cat{{{512, 1}}, {}};
  const ModelMap models{{"f", constant_model(cat.class_map, 2)}};
  const auto r = select_configuration(p, fs, models, cat, 10.0, kCluster, kPricing);
  REQUIRE(r.functions.size() == 1);
  CHECK(r.functions[0].chosen == Configuration{15, {512, 1}});
  CHECK(r.total_monthly_cost == doctest::Approx(monthly_cost({15, {512, 1}}, kPricing)));
  const auto& probs = r.functions[0].class_probabilities;
  CHECK(r.functions[0].slo_probability == doctest::Approx(probs[2] + probs[3] + probs[4] + probs[5]));
}

TEST_CASE("cost decides between a small slow and a large fast container") {
  // the large container halves the service time and doubles the memory
  const FunctionTable fs{{"f", fn("f", 0.1)}};
  const PipelineSpec p{"p", {"f"}, 2.0, 10.0};
  const ConfigurationCatalog cat{{{512, 1}, {1024, 2}}, {}};
  const double small = monthly_cost({20, {512, 1}}, kPricing);   // 20 x 0.5 GB
  const double large = monthly_cost({15, {1024, 2}}, kPricing);  // 15 x 1 GB
  REQUIRE(small < large);

  // a model that answers 20 on the small container and 15 on the large one
  auto m = initialize_model({2}, cat.class_map, LossKind::kCce, 0);
  for (auto& l : m.layers) std::fill(l.bias.begin(), l.bias.end(), 0.0);
  auto& first = m.layers.front();
  std::fill(first.weights.begin(), first.weights.end(), 0.0);
  first.weights[0 * 3 + 1] = 1.0;   // hidden 0 = relu(standardized log cpus)
  first.weights[1 * 3 + 1] = -1.0;  // hidden 1 = relu(-standardized log cpus)
  m.feature_stats.mean = {0, std::log(std::sqrt(2.0)), 0};
  auto& out = m.layers.back();
  std::fill(out.weights.begin(), out.weights.end(), 0.0);
  out.weights[2 * 2 + 0] = 10.0;  // class 15 when cpus is large
  out.weights[3 * 2 + 1] = 10.0;  // class 20 when cpus is small
  CHECK(predict_replicas(m, {512, 1}, 10) == 20);
  CHECK(predict_replicas(m, {1024, 2}, 10) == 15);

  const auto r = select_configuration(p, fs, {{"f", m}}, cat, 10.0, kCluster, kPricing);
  CHECK(r.functions[0].chosen == Configuration{20, {512, 1}});
  CHECK(r.total_monthly_cost == doctest::Approx(small));
}

TEST_CASE("predictions that cannot keep up are raised to a sufficient class") {
  // 0.1 s per request: 5 replicas serve 50/s, so at 60/s the answer 5 becomes 10
  const FunctionTable fs{{"f", fn("f", 0.1)}};
  const PipelineSpec p{"p", {"f"}, 2.0, 60.0};
  const ConfigurationCatalog cat{{{512, 1}}, {}};
  const auto r = select_configuration(p, fs, {{"f", constant_model(cat.class_map, 0)}}, cat, 60.0, kCluster,
                                      kPricing);
  CHECK(r.functions[0].chosen.replicas == 10);
  // beyond 30 replicas of capacity nothing is left
  CHECK(code_of([&] {
          select_configuration(p, fs, {{"f", constant_model(cat.class_map, 5)}}, cat, 400.0, kCluster, kPricing);
        }) == ErrorCode::kNoFeasibleConfiguration);
}

TEST_CASE("selection errors") {
  const FunctionTable fs{{"f", fn("f", 0.1)}};
  const ConfigurationCatalog cat{{{512, 1}}, {}};
  const ModelMap models{{"f", constant_model(cat.class_map, 0)}};
  const PipelineSpec tight{"p", {"f"}, 0.000001, 1.0};
  CHECK(code_of([&] { select_configuration(tight, fs, models, cat, 1.0, kCluster, kPricing); }) ==
        ErrorCode::kNoFeasibleConfiguration);
  const PipelineSpec ok{"p", {"f"}, 2.0, 1.0};
  CHECK(code_of([&] { select_configuration(ok, fs, {}, cat, 1.0, kCluster, kPricing); }) ==
        ErrorCode::kInvalidArgument);
  const ModelMap other{{"f", constant_model(ReplicaClassMap{{1, 2, 3, 4, 5, 6}}, 0)}};
  CHECK(code_of([&] { select_configuration(ok, fs, other, cat, 1.0, kCluster, kPricing); }) ==
        ErrorCode::kInvalidArgument);
  const ClusterSpec tiny{{{0.25, 128}}};
  CHECK(code_of([&] { select_configuration(ok, fs, models, cat, 1.0, tiny, kPricing); }) ==
        ErrorCode::kNoFeasibleConfiguration);
}

TEST_CASE("grid-search oracle picks the cheapest SLO-meeting row of its own table") {
  const FunctionTable fs{{"a", fn("a", 0.08, 0.9, 0.3)}, {"b", fn("b", 0.05, 0.7, 0.2)}};
  const PipelineSpec p{"p", {"a", "b"}, 0.8, 60.0};
  const ConfigurationCatalog cat{{{256, 0.5}, {512, 1}, {1024, 1.5}, {2048, 2}}, {}};
  const WorkloadSpec w{60.0, 10.0, ArrivalKind::kPoisson, 3};
  OracleOptions o;
  const auto r = grid_search_oracle(p, fs, cat, kCluster, w, kPricing, o);
  REQUIRE(r.table.size() == 48);
  for (const auto& fid : {"a", "b"}) {
    const OracleRow* best = nullptr;
    for (const auto& row : r.table) {
      if (row.function_id != fid || !row.deployable || !row.slo_met) continue;
      if (!best || row.monthly_cost < best->monthly_cost - 1e-9 ||
          (std::abs(row.monthly_cost - best->monthly_cost) <= 1e-9 && row.config.replicas < best->config.replicas)) {
        best = &row;
      }
    }
    REQUIRE(best);
    CHECK(r.optimal.at(fid) == best->config);
    // the optimum holds up when simulated again with the same seed
    const auto again = evaluate_stage(fs.at(fid), stage_deadline(p, fs, fid), r.optimal.at(fid), kCluster, w,
                                      stage_quantile(p, o.quantile));
    CHECK(again.slo_met);
  }
  o.jobs = 3;
  const auto parallel = grid_search_oracle(p, fs, cat, kCluster, w, kPricing, o);
  for (std::size_t i = 0; i < r.table.size(); ++i) CHECK(parallel.table[i].pct_quantile == r.table[i].pct_quantile);
}

TEST_CASE("oracle edge cases") {
  const FunctionTable fs{{"f", fn("f", 0.01)}};
  const ConfigurationCatalog cat{{{512, 1}, {1024, 2}}, {}};
  const WorkloadSpec w{1.0, 10.0, ArrivalKind::kUniform, 0};
  // every configuration meets a generous deadline, so the global cheapest wins
  const auto loose = grid_search_oracle({"p", {"f"}, 10.0, 1.0}, fs, cat, kCluster, w, kPricing);
  CHECK(loose.optimal.at("f") == Configuration{5, {512, 1}});
  CHECK(code_of([&] { grid_search_oracle({"p", {"f"}, 0.001, 1.0}, fs, cat, kCluster, w, kPricing); }) ==
        ErrorCode::kNoFeasibleConfiguration);
  // a single deployable configuration
  const ClusterSpec small{{{1, 4096}}};
  const ConfigurationCatalog one{{{512, 0.2}}, ReplicaClassMap{{5, 10}}};
  const auto r = grid_search_oracle({"p", {"f"}, 10.0, 1.0}, fs, one, small, w, kPricing);
  CHECK(r.optimal.at("f") == Configuration{5, {512, 0.2}});
  CHECK_FALSE(r.table[1].deployable);
}

TEST_CASE("performance similarity") {
  CHECK(performance_similarity(40, 40) == doctest::Approx(100));
  CHECK(performance_similarity(80, 40) == doctest::Approx(0));
  CHECK(performance_similarity(50, 40) == doctest::Approx(75));
  // as written, a slower agnostic pipeline scores above 100
  CHECK(performance_similarity(20, 40) == doctest::Approx(150));
  CHECK(deviation_similarity(20, 40) == doctest::Approx(50));
  CHECK(deviation_similarity(50, 40) == doctest::Approx(75));
  CHECK(deviation_similarity(40, 40) == doctest::Approx(100));
  CHECK(code_of([] { performance_similarity(1, 0); }) == ErrorCode::kZeroBaseline);
  CHECK(code_of([] { deviation_similarity(1, 0); }) == ErrorCode::kZeroBaseline);
}

TEST_CASE("saving against the naive maximum") {
  const ConfigurationCatalog cat{{{2048, 2}, {256, 0.5}, {1024, 1.5}}, {}};
  CHECK(naive_max_configuration(cat) == Configuration{30, {2048, 2}});
  CHECK(cost_saving_vs_naive({30, {2048, 2}}, cat, kPricing) == doctest::Approx(0));
  CHECK(cost_saving_vs_naive({15, {2048, 2}}, cat, kPricing) == doctest::Approx(50));
  CHECK(cost_saving_vs_naive({30, {1024, 1.5}}, cat, kPricing) == doctest::Approx(50));
  for (const auto& c : enumerate(cat)) {
    const double s = cost_saving_vs_naive(c, cat, kPricing);
    CHECK(s >= 0.0);
    CHECK(s < 100.0);
  }
}
