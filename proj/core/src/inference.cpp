#include "sstkg/inference.hpp"

#include <algorithm>
#include <cmath>

#include "sstkg/error.hpp"

namespace sstkg {

const char* to_string(PredictionMethod method) {
  switch (method) {
    case PredictionMethod::embedding_decode:
      return "embedding_decode";
    case PredictionMethod::influence_direct:
      return "influence_direct";
    case PredictionMethod::persistence_fallback:
      return "persistence_fallback";
  }
  return "unknown";
}

namespace {

std::size_t require_entity(const TrainedModel& model, const std::string& id) {
  auto idx = model.graph.entities().index_of(id);
  if (!idx) throw ValidationError("unknown entity id '" + id + "'");
  return *idx;
}

double neighbor_record(const TrainedModel& model, std::size_t source, std::size_t slot,
                       const NeighborRecords& observed) {
  const Entity& e = model.graph.entities()[source];
  if (auto it = observed.find(e.id); it != observed.end()) return it->second;
  if (auto v = e.series.at(slot)) return *v;
  throw ValidationError("no observed record for neighbour '" + e.id + "' at slot " + std::to_string(slot));
}

Prediction fallback(const Entity& target, std::size_t slot) {
  Prediction out;
  out.entity = target.id;
  out.slot = slot;
  out.method = PredictionMethod::persistence_fallback;
  const std::optional<double> last = target.series.last_present_before(slot);
  out.predicted_value = out.unclipped_value = last.value_or(0.0);
  if (!last) out.warnings.push_back("no record before slot " + std::to_string(slot) + "; predicting 0");
  return out;
}

Prediction run(const TrainedModel& model, const std::string& target_id, std::size_t slot,
               const NeighborRecords& observed, const std::set<std::string>& mask, PredictionMethod method) {
  const Sstkg& graph = model.graph;
  const std::size_t target = require_entity(model, target_id);
  if (slot >= graph.time_index().slot_count) {
    throw ValidationError("slot " + std::to_string(slot) + " outside the time index");
  }
  for (const std::string& id : mask) require_entity(model, id);

  const Entity& entity = graph.entities()[target];
  std::vector<std::size_t> active;
  for (std::size_t k : graph.incoming(target)) {
    if (!mask.contains(graph.entities()[graph.edges()[k].source].id)) active.push_back(k);
  }
  if (active.empty()) {
    Prediction out = fallback(entity, slot);
    if (!graph.incoming(target).empty()) out.warnings.push_back("all neighbours masked; persistence fallback");
    return out;
  }
  const double p = graph.self_weight(target);
  if (!(p > 0.0)) throw Error("entity '" + target_id + "' has incoming edges but p = 0");

  Prediction out;
  out.entity = target_id;
  out.slot = slot;
  out.method = method;
  double sum = 0.0;
  for (std::size_t k : active) {
    const InfluenceEdge& e = graph.edges()[k];
    const double contribution = e.influence * neighbor_record(model, e.source, slot, observed);
    out.contributions.push_back({graph.entities()[e.source].id, contribution});
    sum += contribution;
  }

  double value = 0.0;
  if (method == PredictionMethod::influence_direct) {
    value = sum / p;
  } else {
    // Record slice of the in embedding, restricted to unmasked neighbours, then
    // p * out = in solved for the target's final record entry.
    const EmbeddingSet& emb = model.embeddings;
    const std::size_t w = emb.record_window();
    std::vector<double> in_records(w, 0.0);
    for (std::size_t k : active) {
      const InfluenceEdge& e = graph.edges()[k];
      RecordSlice r = record_slice(graph.entities()[e.source].series, slot, w, emb.record_scale());
      r.values[w - 1] = neighbor_record(model, e.source, slot, observed) / emb.record_scale();
      for (std::size_t d = 0; d < w; ++d) in_records[d] += e.influence * r.values[d];
    }
    value = decode_record(in_records[w - 1] / p, emb.record_scale());
  }
  out.unclipped_value = value;
  out.clipped = value < 0.0;
  out.predicted_value = std::max(0.0, value);
  return out;
}

}  // namespace

Prediction predict(const TrainedModel& model, const std::string& target, std::size_t slot,
                   const NeighborRecords& neighbor_records) {
  return run(model, target, slot, neighbor_records, {}, PredictionMethod::embedding_decode);
}

Prediction predict_influence_direct(const TrainedModel& model, const std::string& target, std::size_t slot,
                                    const NeighborRecords& neighbor_records) {
  return run(model, target, slot, neighbor_records, {}, PredictionMethod::influence_direct);
}

Prediction predict_masked(const TrainedModel& model, const std::string& target, std::size_t slot,
                          const NeighborRecords& neighbor_records, const std::set<std::string>& mask) {
  return run(model, target, slot, neighbor_records, mask, PredictionMethod::embedding_decode);
}

double temporal_relation(const TrainedModel& model, const std::string& source, const std::string& target,
                         std::size_t slot) {
  const std::size_t j = require_entity(model, source);
  const std::size_t i = require_entity(model, target);
  const auto edge = model.graph.find_edge(j, i);
  if (!edge) throw ValidationError("no edge " + source + " -> " + target);
  const Entity& src = model.graph.entities()[j];
  const std::optional<double> record = src.series.at(slot);
  if (!record) throw ValidationError("record of '" + source + "' absent at slot " + std::to_string(slot));
  const double scale = phi(src.overall_record);
  if (!(scale > 0.0)) throw ValidationError("'" + source + "' has zero overall record");
  return model.graph.edges()[*edge].influence * phi(*record) / scale;
}

ExplainReport explain(const TrainedModel& model, const std::string& target) {
  const Sstkg& graph = model.graph;
  const std::size_t i = require_entity(model, target);
  ExplainReport report;
  report.target = target;
  report.self_weight = graph.self_weight(i);
  const SlotRange window = graph.config().window(graph.time_index());
  for (std::size_t k : graph.incoming(i)) {
    const InfluenceEdge& e = graph.edges()[k];
    const Entity& src = graph.entities()[e.source];
    ExplainEntry entry{src.id, e.distance_km, e.weight, e.influence, 0.0};
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = window.begin; t < window.end; ++t) {
      if (!src.series.present(t)) continue;
      sum += temporal_relation(model, src.id, target, t);
      ++count;
    }
    entry.mean_temporal_relation = count ? sum / static_cast<double>(count) : 0.0;
    report.ranking.push_back(entry);
  }
  std::sort(report.ranking.begin(), report.ranking.end(), [](const ExplainEntry& a, const ExplainEntry& b) {
    const double ia = std::abs(a.influence);
    const double ib = std::abs(b.influence);
    return ia != ib ? ia > ib : a.source < b.source;
  });
  return report;
}

}  // namespace sstkg
