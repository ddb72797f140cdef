#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sstkg/error.hpp"
#include "sstkg/inference.hpp"
#include "sstkg/synthetic.hpp"

using namespace sstkg;

namespace {

// a -> c and b -> c; d is isolated.
TrainedModel toy_model(double ia, double ib, double p, std::vector<double> a_records = {10.0, 20.0, 30.0, 40.0}) {
  EntitySet es = fixture::set({fixture::entity("a", 0, 0, a_records),
                               fixture::entity("b", 0, 0.01, {5.0, 5.0, 5.0, 5.0}),
                               fixture::entity("c", 0, 0.02, {7.0, 8.0, 9.0, 10.0}),
                               fixture::entity("d", 0, 0.03, "x", {3.0, 42.0, std::nullopt, std::nullopt})});
  TrainedModel model;
  model.graph = Sstkg(es, {{0, 2, 1.0, ia, 1.0}, {1, 2, 2.0, ib, 2.0}}, {0.0, 0.0, p, 0.0}, {});
  model.config.static_dim = 2;
  model.config.record_window = 2;
  model.embeddings = EmbeddingSet::initialize(model.graph, model.config);
  return model;
}

}  // namespace

TEST_CASE("isolated entity falls back to its last observation") {
  const TrainedModel model = toy_model(0.5, 0.5, 1.0);
  const Prediction p = predict(model, "d", 3);
  CHECK(p.predicted_value == 42.0);
  CHECK(p.method == PredictionMethod::persistence_fallback);
  CHECK(std::string(to_string(p.method)) == "persistence_fallback");
  CHECK(explain(model, "d").ranking.empty());
}

TEST_CASE("prediction examples") {
  SUBCASE("influence equal to p cancels") {
    const TrainedModel model = toy_model(0.4, 0.0, 0.4);
    const NeighborRecords obs{{"a", 100.0}};
    CHECK(predict_influence_direct(model, "c", 3, obs).predicted_value == doctest::Approx(100.0).epsilon(1e-15));
    CHECK(predict(model, "c", 3, obs).predicted_value == doctest::Approx(100.0).epsilon(1e-15));
  }
  SUBCASE("zero neighbour records") {
    const TrainedModel model = toy_model(0.4, 0.7, 0.4);
    const NeighborRecords obs{{"a", 0.0}, {"b", 0.0}};
    CHECK(predict_influence_direct(model, "c", 2, obs).predicted_value == 0.0);
    CHECK(predict(model, "c", 2, obs).predicted_value == 0.0);
  }
  SUBCASE("dataset records are used when no observation is given") {
    const TrainedModel model = toy_model(0.2, 0.6, 0.5);
    const Prediction p = predict_influence_direct(model, "c", 1);
    CHECK(p.predicted_value == doctest::Approx((0.2 * 20.0 + 0.6 * 5.0) / 0.5).epsilon(1e-15));
    REQUIRE(p.contributions.size() == 2);
    CHECK(p.contributions[0].source == "a");
    CHECK(p.contributions[0].value == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("negative values are clipped but kept") {
    const TrainedModel model = toy_model(-0.5, 0.1, 0.5);
    const Prediction p = predict(model, "c", 1);
    CHECK(p.clipped);
    CHECK(p.predicted_value == 0.0);
    CHECK(p.unclipped_value == doctest::Approx((-10.0 + 0.5) / 0.5).epsilon(1e-12));
  }
  SUBCASE("errors") {
    const TrainedModel model = toy_model(0.2, 0.6, 0.5);
    CHECK_THROWS_AS(predict(model, "zz", 1), ValidationError);
    CHECK_THROWS_AS(predict(model, "c", 4), ValidationError);
  }
}

TEST_CASE("masking") {
  const TrainedModel model = toy_model(0.3, -0.1, 0.5);
  for (std::size_t slot = 0; slot < 4; ++slot) {
    const Prediction base = predict(model, "c", slot);
    const Prediction same = predict_masked(model, "c", slot, {}, {});
    CHECK(same.unclipped_value == base.unclipped_value);
    CHECK(same.predicted_value == base.predicted_value);
    // a contributes positively, b negatively.
    CHECK(predict_masked(model, "c", slot, {}, {"a"}).unclipped_value < base.unclipped_value);
    CHECK(predict_masked(model, "c", slot, {}, {"b"}).unclipped_value > base.unclipped_value);
  }
  const Prediction all = predict_masked(model, "c", 2, {}, {"a", "b"});
  CHECK(all.method == PredictionMethod::persistence_fallback);
  CHECK(all.predicted_value == 8.0);
  CHECK_FALSE(all.warnings.empty());
  CHECK_THROWS_AS(predict_masked(model, "c", 2, {}, {"nope"}), ValidationError);
}

TEST_CASE("temporal relation") {
  // a's only record equals its overall record at slot 1.
  const TrainedModel model = toy_model(0.35, 0.1, 0.5, {0.0, 100.0, 0.0, 0.0});
  CHECK(temporal_relation(model, "a", "c", 0) == 0.0);
  CHECK(temporal_relation(model, "a", "c", 1) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK_THROWS_AS(temporal_relation(model, "c", "a", 1), ValidationError);

  const ExplainReport report = explain(model, "c");
  CHECK(report.self_weight == 0.5);
  REQUIRE(report.ranking.size() == 2);
  CHECK(report.ranking[0].source == "a");
  CHECK(report.ranking[0].mean_temporal_relation == doctest::Approx(0.35 / 4).epsilon(1e-15));
  CHECK(report.ranking[1].distance_km == 2.0);
}

TEST_CASE("explain orders by absolute influence") {
  const TrainedModel model = toy_model(0.05, -0.3, 0.5);
  const ExplainReport report = explain(model, "c");
  CHECK(report.ranking[0].source == "b");
  CHECK(report.ranking[0].influence == -0.3);
}

TEST_CASE("noise-free synthetic targets are reproduced by both prediction paths") {
  const SyntheticWorld world = generate_synthetic(fixture::sparse_world());
  BuildConfig build;
  build.training_window = SlotRange{0, 54};
  build.ridge_lambda = 1e-10;
  EmbeddingConfig config;
  config.epochs_embedding = 0;
  config.epochs_influence = 0;
  const TrainedModel model = train(build_graph(world.entities, build), config);
  for (const std::string& target : world.truth.targets) {
    for (std::size_t slot = 54; slot < 60; ++slot) {
      const double real = world.entities.at(target).series.value(slot);
      const Prediction decoded = predict(model, target, slot);
      const Prediction direct = predict_influence_direct(model, target, slot);
      CHECK(oracle::relative_error(decoded.predicted_value, real) < 1e-3);
      CHECK(oracle::relative_error(decoded.unclipped_value, direct.unclipped_value) < 1e-6);
    }
  }
}
