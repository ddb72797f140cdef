#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sstkg/error.hpp"
#include "sstkg/synthetic.hpp"
#include "sstkg/training.hpp"

using namespace sstkg;

namespace {

Sstkg single_edge_graph(std::vector<double> target, std::vector<double> source, double p, double influence) {
  EntitySet es = fixture::set({fixture::entity("s", 0, 0, source), fixture::entity("t", 0, 0.01, target)});
  return Sstkg(es, {{0, 1, 1.0, influence, 1.0}}, {0.0, p}, {});
}

}  // namespace

TEST_CASE("scores match a hand-assembled residual") {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 50; ++round) {
    const fixture::Toy toy = fixture::random_toy(rng);
    for (std::size_t slot = 0; slot < 6; ++slot) {
      const TrainingSample sample{0, slot, {0, 1}};
      for (bool scaled : {false, true}) {
        const double want = oracle::score(toy.graph, toy.embeddings, 0, slot, scaled);
        CHECK(score_embedding(sample, toy.graph, toy.embeddings, scaled) ==
              doctest::Approx(want).epsilon(1e-12));
      }
      CHECK(score_influence(sample, toy.graph, toy.embeddings) ==
            doctest::Approx(oracle::score(toy.graph, toy.embeddings, 0, slot, true)).epsilon(1e-12));
    }
  }
}

TEST_CASE("score examples") {
  SUBCASE("perfect reconstruction") {
    const Sstkg g = single_edge_graph({2.0, 2.0}, {4.0, 4.0}, 0.5, 0.25);
    EmbeddingSet emb(2, 2, 2, 1.0);
    emb.static_slice(0)[0] = 1.0;
    emb.static_slice(1)[0] = 2.0;  // p * 2 = 1
    CHECK(score_embedding({1, 1, {0}}, g, emb) == 0.0);
  }
  SUBCASE("residual (3, 4, 0, 0)") {
    const Sstkg g = single_edge_graph({0.0, 0.0}, {0.0, 0.0}, 1.0, 0.0);
    EmbeddingSet emb(2, 2, 2, 1.0);
    emb.static_slice(1)[0] = 3.0;
    emb.static_slice(1)[1] = 4.0;
    CHECK(score_embedding({1, 1, {0}}, g, emb) == 25.0);
  }
  SUBCASE("influence equal to p with identical out embeddings") {
    const Sstkg g = single_edge_graph({3.0, 5.0}, {3.0, 5.0}, 0.4, 0.4);
    EmbeddingSet emb(2, 2, 2, 1.0);
    emb.static_slice(0)[1] = -1.25;
    emb.static_slice(1)[1] = -1.25;
    CHECK(score_influence({1, 1, {0}}, g, emb) == 0.0);
  }
  SUBCASE("all influences zero") {
    const Sstkg g = single_edge_graph({3.0, 4.0}, {9.0, 9.0}, 0.5, 0.0);
    EmbeddingSet emb(2, 1, 2, 1.0);
    emb.static_slice(1)[0] = 2.0;
    // p * (2, 3, 4) -> (1, 1.5, 2)
    CHECK(score_influence({1, 1, {0}}, g, emb) == 1.0 + 2.25 + 4.0);
  }
}

TEST_CASE("training samples skip isolated targets and incomplete slots") {
  EntitySet es = fixture::set({fixture::entity("s", 0, 0, "x", {1.0, std::nullopt, 3.0}),
                               fixture::entity("t", 0, 0.01, "x", {1.0, 2.0, std::nullopt}),
                               fixture::entity("u", 0, 0.02, "x", {1.0, 2.0, 3.0})});
  const Sstkg g(es, {{0, 1, 1, 1, 1}, {2, 1, 1, 1, 1}}, {0, 1, 0}, {});
  const auto samples = make_training_samples(g, {0, 3});
  REQUIRE(samples.size() == 1);
  CHECK(samples[0] == TrainingSample{1, 0, {0, 1}});
}

TEST_CASE("negative sampler") {
  SUBCASE("single valid candidate") {
    EntitySet es = fixture::set({fixture::entity("c", 0, 0.00, {105.0}), fixture::entity("d", 0, 0.01, {500.0}),
                                 fixture::entity("n", 0, 0.02, {100.0}), fixture::entity("t", 0, 0.03, {90.0})});
    const Sstkg g(es, {{2, 3, 1, 1, 1}}, {0, 0, 0, 1}, {});
    Rng rng(1);
    for (int i = 0; i < 20; ++i) CHECK(sample_negative_entity(2, 3, g, 0.2, rng) == 0);
  }
  SUBCASE("band widens once, then fails") {
    EntitySet es = fixture::set({fixture::entity("c", 0, 0.00, {135.0}), fixture::entity("n", 0, 0.02, {100.0}),
                                 fixture::entity("t", 0, 0.03, {500.0})});
    const Sstkg g(es, {{1, 2, 1, 1, 1}}, {0, 0, 1}, {});
    Rng rng(1);
    CHECK(sample_negative_entity(1, 2, g, 0.2, rng) == 0);
    CHECK_THROWS_WITH(sample_negative_entity(1, 2, g, 0.1, rng), doctest::Contains("no negative candidates"));
  }
  SUBCASE("filter contract over many draws") {
    SyntheticSpec spec;
    const SyntheticWorld world = generate_synthetic(spec);
    const Sstkg g = build_graph(world.entities, {});
    const double band = 0.2;
    const NegativeSampler sampler(g, band);
    Rng rng(99);
    std::size_t draws = 0;
    for (const InfluenceEdge& edge : g.edges()) {
      if (draws >= 10000) break;
      const bool widened = sampler.candidates(edge.source, edge.target, band).empty();
      const double center = g.entities()[edge.source].overall_record;
      const double b = widened ? 2 * band : band;
      for (int i = 0; i < 50; ++i, ++draws) {
        const std::size_t neg = sampler.sample(edge.source, edge.target, rng);
        CHECK(neg != edge.source);
        CHECK(neg != edge.target);
        CHECK_FALSE(g.connected(neg, edge.target));
        const double o = g.entities()[neg].overall_record;
        CHECK(o >= center * (1 - b));
        CHECK(o <= center * (1 + b));
      }
    }
    CHECK(draws >= 10000);
  }
}

TEST_CASE("loss identities at zero margin") {
  std::mt19937_64 rng(21);
  const fixture::Toy toy = fixture::random_toy(rng);
  const auto samples = make_training_samples(toy.graph, {0, 6});
  REQUIRE(samples.size() == 6);

  // A negative that re-draws the replaced neighbour leaves the score unchanged.
  std::vector<std::vector<Negative>> same(samples.size());
  const std::size_t k = 4;
  for (auto& list : same) {
    for (std::size_t q = 0; q < k; ++q) list.push_back({q % 2, q % 2 == 0 ? std::size_t{1} : std::size_t{2}});
  }
  const StaticGradient g1 = embedding_phase_loss(samples, same, toy.graph, toy.embeddings);
  CHECK(g1.loss == doctest::Approx(k * samples.size() * std::numbers::ln2).epsilon(1e-15));

  Sstkg flat = toy.graph;
  flat.set_influence(0, 0.3);
  flat.set_influence(1, 0.3);
  const InfluenceGradient g2 = loss_influence_phase(samples, flat, toy.embeddings);
  CHECK(g2.loss == doctest::Approx(2 * samples.size() * std::numbers::ln2).epsilon(1e-15));

  std::vector<std::vector<Negative>> none(samples.size());
  const StaticGradient zero = embedding_phase_loss(samples, none, toy.graph, toy.embeddings);
  CHECK(zero.loss == 0.0);
  CHECK(zero.gradient.empty());
}

TEST_CASE("embedding-phase gradient matches finite differences") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 25; ++round) {
    const fixture::Toy toy = fixture::random_toy(rng);
    const auto samples = make_training_samples(toy.graph, {0, 6});
    const auto negatives = fixture::toy_negatives(samples.size(), rng);
    for (bool scaled : {false, true}) {
      const std::size_t sd = toy.embeddings.static_dim();
      std::vector<double> x;
      for (std::size_t e = 0; e < 5; ++e) {
        for (double v : toy.embeddings.static_slice(e)) x.push_back(v);
      }
      auto loss = [&](const std::vector<double>& params) {
        EmbeddingSet emb = toy.embeddings;
        for (std::size_t e = 0; e < 5; ++e) {
          for (std::size_t d = 0; d < sd; ++d) emb.static_slice(e)[d] = params[e * sd + d];
        }
        return embedding_phase_loss(samples, negatives, toy.graph, emb, scaled).loss;
      };
      const StaticGradient g = embedding_phase_loss(samples, negatives, toy.graph, toy.embeddings, scaled);
      std::vector<double> analytic(x.size(), 0.0);
      for (const auto& [e, grad] : g.gradient) {
        for (std::size_t d = 0; d < sd; ++d) analytic[e * sd + d] = grad[d];
      }
      std::vector<double> numeric(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) numeric[i] = oracle::central_difference(loss, x, i, 1e-5);
      CHECK(oracle::gradient_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("influence-phase gradient matches finite differences") {
  std::mt19937_64 rng(6);
  for (int round = 0; round < 25; ++round) {
    const fixture::Toy toy = fixture::random_toy(rng);
    const auto samples = make_training_samples(toy.graph, {0, 6});
    const double mean = mean_influence(toy.graph);
    std::vector<double> x{toy.graph.edges()[0].influence, toy.graph.edges()[1].influence};
    auto loss = [&](const std::vector<double>& params) {
      Sstkg g = toy.graph;
      g.set_influence(0, params[0]);
      g.set_influence(1, params[1]);
      return influence_phase_loss(samples, g, toy.embeddings, mean).loss;
    };
    const InfluenceGradient g = influence_phase_loss(samples, toy.graph, toy.embeddings, mean);
    std::vector<double> analytic{g.gradient.count(0) ? g.gradient.at(0) : 0.0,
                                 g.gradient.count(1) ? g.gradient.at(1) : 0.0};
    std::vector<double> numeric{oracle::central_difference(loss, x, 0, 1e-5),
                                oracle::central_difference(loss, x, 1, 1e-5)};
    CHECK(oracle::gradient_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("losses do not depend on entity naming") {
  std::mt19937_64 rng(31);
  const fixture::Toy toy = fixture::random_toy(rng);
  const auto samples = make_training_samples(toy.graph, {0, 6});
  const auto negatives = fixture::toy_negatives(samples.size(), rng);

  // Reverse the id order so that every index moves.
  const std::size_t n = 5;
  auto moved = [&](std::size_t i) { return n - 1 - i; };
  std::vector<Entity> renamed;
  for (std::size_t i = 0; i < n; ++i) {
    Entity e = toy.graph.entities()[i];
    e.id = "z" + std::to_string(9 - i);
    renamed.push_back(e);
  }
  EntitySet es(toy.graph.time_index(), renamed);
  std::vector<InfluenceEdge> edges;
  std::vector<double> p(n);
  for (const auto& e : toy.graph.edges()) {
    edges.push_back({moved(e.source), moved(e.target), e.weight, e.influence, e.distance_km});
  }
  for (std::size_t i = 0; i < n; ++i) p[moved(i)] = toy.graph.self_weight(i);
  const Sstkg g(es, edges, p, {});
  EmbeddingSet emb(n, toy.embeddings.static_dim(), toy.embeddings.record_window(), toy.embeddings.record_scale());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(toy.embeddings.static_slice(i).begin(), toy.embeddings.static_slice(i).end(),
              emb.static_slice(moved(i)).begin());
  }
  // Keep the original neighbour order; incoming() would list them flipped.
  std::vector<TrainingSample> batch;
  std::vector<std::vector<Negative>> negs;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    batch.push_back({moved(samples[s].target), samples[s].slot, {*g.find_edge(moved(1), moved(0)), *g.find_edge(moved(2), moved(0))}});
    std::vector<Negative> list;
    for (const Negative& q : negatives[s]) list.push_back({q.position, moved(q.entity)});
    negs.push_back(list);
  }
  const StaticGradient a = embedding_phase_loss(samples, negatives, toy.graph, toy.embeddings);
  const StaticGradient b = embedding_phase_loss(batch, negs, g, emb);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  for (const auto& [e, grad] : a.gradient) {
    for (std::size_t d = 0; d < grad.size(); ++d) {
      CHECK(grad[d] == doctest::Approx(b.gradient.at(moved(e))[d]).epsilon(1e-12));
    }
  }
  const double mean = mean_influence(toy.graph);
  CHECK(influence_phase_loss(samples, toy.graph, toy.embeddings, mean).loss ==
        doctest::Approx(influence_phase_loss(batch, g, emb, mean).loss).epsilon(1e-12));
}

TEST_CASE("generative relation holds on record slices with ground-truth influences") {
  const SyntheticWorld world = generate_synthetic(fixture::sparse_world());
  BuildConfig config;
  config.ridge_lambda = 1e-10;
  Sstkg g = build_graph(world.entities, config);
  const EmbeddingSet emb = EmbeddingSet::initialize(g, {});
  std::map<std::pair<std::string, std::string>, double> truth;
  for (const auto& e : world.truth.edges) truth[{e.source, e.target}] = e.influence;
  for (const std::string& target : world.truth.targets) {
    const std::size_t t = *g.entities().index_of(target);
    for (std::size_t slot = 6; slot < 60; slot += 7) {
      const RecordSlice own = record_slice(g.entities()[t].series, slot, 7, emb.record_scale());
      std::vector<double> mix(7, 0.0);
      for (std::size_t k : g.incoming(t)) {
        const InfluenceEdge& e = g.edges()[k];
        const auto it = truth.find({g.entities()[e.source].id, target});
        const double influence = it == truth.end() ? 0.0 : it->second;
        const RecordSlice r = record_slice(g.entities()[e.source].series, slot, 7, emb.record_scale());
        for (std::size_t d = 0; d < 7; ++d) mix[d] += influence * r.values[d];
      }
      for (std::size_t d = 0; d < 7; ++d) CHECK(std::abs(g.self_weight(t) * own.values[d] - mix[d]) < 1e-6);
    }
  }
}

TEST_CASE("training is deterministic and epochs = 0 is a no-op") {
  SyntheticSpec spec = fixture::sparse_world();
  spec.entity_count = 120;
  const Sstkg g = build_graph(generate_synthetic(spec).entities, {});
  EmbeddingConfig config;
  config.epochs_embedding = 3;
  config.epochs_influence = 2;
  const TrainedModel a = train(g, config);
  const TrainedModel b = train(g, config);
  CHECK(a == b);
  CHECK(a.trace.embedding.size() == 3);
  CHECK(a.trace.influence.size() == 2);

  // Record slices are not trainable.
  for (std::size_t e = 0; e < g.entities().size(); ++e) {
    const auto before = out_embedding(g, EmbeddingSet::initialize(g, config), e, 10);
    const auto after = out_embedding(a.graph, a.embeddings, e, 10);
    CHECK(std::equal(before.begin() + 16, before.end(), after.begin() + 16));
  }

  config.epochs_embedding = 0;
  config.epochs_influence = 0;
  const TrainedModel idle = train(g, config);
  CHECK(idle.graph == g);
  CHECK(idle.embeddings == EmbeddingSet::initialize(g, config));
  CHECK(idle.trace.embedding.empty());
  CHECK(idle.trace.influence.empty());

  config.epochs_embedding = 2;
  config.negatives_per_sample = 0;
  CHECK(train(g, config).embeddings == EmbeddingSet::initialize(g, config));
}

TEST_CASE("embedding phase lowers its loss on synthetic data") {
  const Sstkg g = build_graph(generate_synthetic(fixture::sparse_world()).entities, {});
  EmbeddingConfig config;
  config.epochs_influence = 0;
  const TrainedModel model = train(g, config);
  const auto samples = make_training_samples(g, g.config().window(g.time_index()));
  const NegativeSampler sampler(g, config.similarity_band);
  auto mean_loss = [&](const EmbeddingSet& emb) {
    Rng rng(1234);
    return loss_embedding_phase(samples, g, emb, sampler, config.negatives_per_sample, rng).loss /
           static_cast<double>(samples.size());
  };
  CHECK(mean_loss(model.embeddings) <= mean_loss(EmbeddingSet::initialize(g, config)));

  // Twenty full-batch steps with one fixed set of negatives.
  Rng rng(77);
  const auto negatives = draw_negatives(samples, g, sampler, config.negatives_per_sample, rng);
  EmbeddingSet emb = EmbeddingSet::initialize(g, config);
  double previous = embedding_phase_loss(samples, negatives, g, emb).loss;
  const double step_size = config.learning_rate / static_cast<double>(samples.size());
  for (int step = 0; step < 20; ++step) {
    const StaticGradient grad = embedding_phase_loss(samples, negatives, g, emb);
    for (const auto& [e, gr] : grad.gradient) {
      for (std::size_t d = 0; d < gr.size(); ++d) emb.static_slice(e)[d] -= step_size * gr[d];
    }
    const double now = embedding_phase_loss(samples, negatives, g, emb).loss;
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("influence phase keeps noise-free influences near the regression optimum" * doctest::may_fail()) {
  const Sstkg g = build_graph(generate_synthetic(fixture::sparse_world()).entities, {});
  TrainedModel model;
  REQUIRE_NOTHROW(model = train(g, EmbeddingConfig{}));
  double worst = 0.0;
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    const double before = g.edges()[k].influence;
    worst = std::max(worst, std::abs(model.graph.edges()[k].influence - before) / std::abs(before));
  }
  CHECK(worst < 0.05);
}
