#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sstkg/error.hpp"
#include "sstkg/graph.hpp"
#include "sstkg/synthetic.hpp"

using namespace sstkg;

TEST_CASE("relation weight") {
  const std::vector<double> one{0.7};
  CHECK(compute_weight(5.0, 5.0, 0.7, one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> two{1.0, 3.0};
  CHECK(compute_weight(10.0, 5.0, 1.0, two) == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-15));
  CHECK(compute_weight(0.0, 5.0, 1.0, two) == 0.0);
  const std::vector<double> zero{0.0};
  CHECK_THROWS_WITH_AS(compute_weight(1.0, 1.0, 0.0, zero), "co-located entities", ValidationError);
}

TEST_CASE("self-weights") {
  // a=0, b=1, c=2
  std::vector<InfluenceEdge> edges{{0, 2, 1.0, 0, 1}, {1, 2, 3.0, 0, 1}, {0, 1, 1.0, 0, 1}};
  const SelfWeights sw = compute_self_weights(3, edges);
  CHECK(sw.p[2] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(sw.p[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(sw.p[0] == 0.0);
  CHECK(sw.isolated[0]);
  CHECK_FALSE(sw.isolated[1]);

  std::vector<InfluenceEdge> single{{0, 1, 0.3, 0, 1}};
  const SelfWeights one = compute_self_weights(2, single);
  CHECK(one.p[1] == 1.0);
  CHECK(one.p[0] == 0.0);
  CHECK(one.isolated[0]);

  std::vector<InfluenceEdge> dead{{0, 1, 0.0, 0, 1}};
  CHECK_THROWS_AS(compute_self_weights(2, dead), ValidationError);
}

TEST_CASE("influence regression") {
  const std::size_t slots = 20;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 9.0);
  TimeSeries target(slots);
  std::vector<TimeSeries> nb(3, TimeSeries(slots));
  for (std::size_t t = 0; t < slots; ++t) {
    for (auto& s : nb) s.set(t, u(rng));
  }

  SUBCASE("zero target gives zero influences") {
    for (std::size_t t = 0; t < slots; ++t) target.set(t, 0.0);
    RegressionInput in{&target, {&nb[0], &nb[1]}, {0.5, 0.8}, 0.3, {0, slots}, 1e-3};
    CHECK(fit_influences(in) == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("single scaled neighbour") {
    const double p = 0.37;
    const double truth = 0.045;
    TimeSeries source(slots);
    for (std::size_t t = 0; t < slots; ++t) {
      target.set(t, u(rng));
      source.set(t, p / truth * target.value(t));
    }
    RegressionInput in{&target, {&source}, {0.69}, p, {0, slots}, 1e-10};
    const auto fitted = fit_influences(in);
    CHECK(std::abs(fitted[0] - truth) < 1e-8);
  }

  SUBCASE("recovers a known mixture") {
    const double p = 0.21;
    const std::vector<double> truth{0.05, -0.02, 0.11};
    for (std::size_t t = 0; t < slots; ++t) {
      double v = 0.0;
      for (std::size_t i = 0; i < 3; ++i) v += truth[i] * nb[i].value(t);
      target.set(t, v / p);
    }
    RegressionInput in{&target, {&nb[0], &nb[1], &nb[2]}, {0.4, 1.3, 0.9}, p, {0, slots}, 1e-10};
    const auto fitted = fit_influences(in);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(fitted[i] - truth[i]) < 1e-8);
  }

  SUBCASE("error paths") {
    for (std::size_t t = 0; t < slots; ++t) target.set(t, u(rng));
    RegressionInput dup{&target, {&nb[0], &nb[0]}, {1.0, 1.0}, 0.5, {0, slots}, 0.0};
    CHECK_THROWS_AS(fit_influences(dup), ValidationError);
    TimeSeries empty(slots);
    RegressionInput none{&empty, {&nb[0]}, {1.0}, 0.5, {0, slots}, 1e-3};
    CHECK_THROWS_AS(fit_influences(none), ValidationError);
  }
}

TEST_CASE("graph container") {
  EntitySet es = fixture::set({fixture::entity("a", 0, 0, {1.0}), fixture::entity("b", 0, 0.01, {1.0})});
  CHECK_THROWS_AS(Sstkg(es, {{0, 1, 1, 1, 1}, {0, 1, 1, 1, 1}}, {0, 1}, {}), ValidationError);
  CHECK_THROWS_AS(Sstkg(es, {{0, 0, 1, 1, 1}}, {0, 1}, {}), ValidationError);
  CHECK_THROWS_AS(Sstkg(es, {{0, 2, 1, 1, 1}}, {0, 1}, {}), ValidationError);
  const Sstkg g(es, {{0, 1, 1, 0.5, 1}}, {0, 1}, {});
  CHECK(g.find_edge(0, 1) == 0);
  CHECK_FALSE(g.find_edge(1, 0).has_value());
  CHECK(g.connected(1, 0));
  CHECK(g.isolated(0));
}

TEST_CASE("build on degenerate inputs") {
  CHECK_THROWS_WITH_AS(build_graph(EntitySet{}, {}), doctest::Contains("degenerate graph"), ValidationError);

  SyntheticSpec spec;
  spec.entity_count = 60;
  const SyntheticWorld world = generate_synthetic(spec);
  BuildConfig config;
  config.prune_epsilon = std::numeric_limits<double>::infinity();
  const Sstkg none = build_graph(world.entities, config);
  CHECK(none.edges().empty());
  for (std::size_t e = 0; e < none.entities().size(); ++e) CHECK(none.isolated(e));

  BuildConfig tiny;
  tiny.distance_threshold_km = 0.0001;
  CHECK(build_graph(world.entities, tiny).edges().empty());
}

TEST_CASE("noise-free build recovers the generating support") {
  const SyntheticWorld world = generate_synthetic(fixture::sparse_world());
  BuildConfig config;
  config.ridge_lambda = 1e-10;
  const Sstkg g = build_graph(world.entities, config);

  std::map<std::pair<std::string, std::string>, double> truth;
  double max_truth = 0.0;
  for (const auto& e : world.truth.edges) {
    truth[{e.source, e.target}] = e.influence;
    max_truth = std::max(max_truth, std::abs(e.influence));
  }
  std::size_t matched = 0;
  for (const InfluenceEdge& e : g.edges()) {
    const std::string& target = g.entities()[e.target].id;
    if (!std::binary_search(world.truth.targets.begin(), world.truth.targets.end(), target)) continue;
    auto it = truth.find({g.entities()[e.source].id, target});
    REQUIRE(it != truth.end());
    CHECK(std::abs(e.influence - it->second) / max_truth < 1e-4);
    ++matched;
  }
  CHECK(matched == truth.size());
  for (const auto& [id, p] : world.truth.self_weight) {
    CHECK(std::abs(g.self_weight(*g.entities().index_of(id)) - p) < 1e-12);
  }
}

TEST_CASE("self-weights partition the graph on random worlds") {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 10; ++round) {
    SyntheticSpec spec;
    spec.seed = rng();
    spec.entity_count = 40 + rng() % 80;
    spec.slot_count = 20 + rng() % 20;
    spec.influence_density = 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
    BuildConfig config;
    config.distance_threshold_km = 1.0 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Sstkg g = build_graph(generate_synthetic(spec).entities, config);
    if (g.edges().empty()) continue;
    double sum = 0.0;
    for (double p : g.self_weights()) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("build is independent of input order and worker count") {
  SyntheticSpec spec;
  spec.entity_count = 120;
  const SyntheticWorld world = generate_synthetic(spec);
  const Sstkg reference = build_graph(world.entities, {});

  std::vector<Entity> shuffled(world.entities.entities().begin(), world.entities.entities().end());
  std::mt19937_64 rng(2);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const EntitySet reordered(world.entities.time_index(), shuffled);
  CHECK(build_graph(reordered, {}) == reference);

  BuildConfig parallel;
  parallel.workers = 4;
  const Sstkg threaded = build_graph(world.entities, parallel);
  CHECK(std::ranges::equal(threaded.edges(), reference.edges()));
  CHECK(std::ranges::equal(threaded.self_weights(), reference.self_weights()));
}

TEST_CASE("training window limits overall records and regression") {
  SyntheticSpec spec;
  spec.entity_count = 60;
  const SyntheticWorld world = generate_synthetic(spec);
  BuildConfig config;
  config.training_window = SlotRange{0, 30};
  const Sstkg g = build_graph(world.entities, config);
  const Entity& first = g.entities()[0];
  CHECK(first.overall_record == doctest::Approx(first.series.sum({0, 30})).epsilon(1e-15));
  config.training_window = SlotRange{0, 61};
  CHECK_THROWS_AS(build_graph(world.entities, config), ValidationError);
}
