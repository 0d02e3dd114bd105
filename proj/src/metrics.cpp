#include "sublens/metrics.hpp"

#include "sublens/errors.hpp"

namespace sublens {

std::string kind_name(SubLayerKind k) {
  switch (k) {
    case SubLayerKind::kSa:
      return "sa";
    case SubLayerKind::kActs:
      return "acts";
    case SubLayerKind::kOut:
      return "out";
  }
  return "?";
}

SubLayerKind parse_kind(const std::string& s) {
  for (auto k : kAllKinds)
    if (kind_name(k) == s) return k;
  throw Error("unknown sub-layer kind '" + s + "' (expected sa, acts or out)");
}

const Vector& sublayer_vector(const SubLayerTrace& trace, SubLayerKind kind, std::size_t layer) {
  if (layer >= trace.layers.size()) {
    throw IndexError("layer " + std::to_string(layer) + " outside trace of " + std::to_string(trace.layers.size()) +
                     " layers");
  }
  const auto& lt = trace.layers[layer];
  switch (kind) {
    case SubLayerKind::kSa:
      return lt.sa;
    case SubLayerKind::kActs:
      return lt.acts;
    case SubLayerKind::kOut:
      break;
  }
  return lt.out;
}

float sublayer_sim(const SubLayerTrace& t1, const SubLayerTrace& t2, SubLayerKind kind, std::size_t layer) {
  if (t1.layers.size() != t2.layers.size()) throw ShapeError("traces come from models with different depths");
  try {
    return cosine(sublayer_vector(t1, kind, layer), sublayer_vector(t2, kind, layer));
  } catch (const DegenerateVectorError&) {
    throw DegenerateVectorError("zero-norm " + kind_name(kind) + " vector at layer " + std::to_string(layer + 1));
  }
}

float we_sim(const SubLayerTrace& trace, SubLayerKind kind, std::size_t layer) {
  const auto& v = sublayer_vector(trace, kind, layer);
  if (kind == SubLayerKind::kActs || v.size() != trace.static_vec.size()) {
    throw DimensionalityMismatchError("WESim undefined for " + kind_name(kind) + ": width " +
                                      std::to_string(v.size()) + " vs static embedding width " +
                                      std::to_string(trace.static_vec.size()));
  }
  try {
    return cosine(v, trace.static_vec);
  } catch (const DegenerateVectorError&) {
    throw DegenerateVectorError("zero-norm vector in WESim for " + kind_name(kind) + " at layer " +
                                std::to_string(layer + 1));
  }
}

PcaPairResult pca_pair(const SubLayerTrace& t1, const SubLayerTrace& t2, SubLayerKind kind) {
  const std::size_t L = t1.layers.size();
  if (L == 0 || t2.layers.size() != L) throw ShapeError("pca_pair needs two complete traces of equal depth");
  const std::size_t d = sublayer_vector(t1, kind, 0).size();
  Matrix stacked(2 * L, d);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& t = s == 0 ? t1 : t2;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& v = sublayer_vector(t, kind, l);
      if (v.size() != d) throw ShapeError("inconsistent sub-layer width in trace");
      std::copy(v.begin(), v.end(), stacked.row(s * L + l).begin());
    }
  }
  PcaPairResult r{pca_2(stacked), std::vector<double>(L)};
  for (std::size_t l = 0; l < L; ++l) r.layer_sq_l2[l] = squared_l2(r.pca.projected.row(l), r.pca.projected.row(L + l));
  return r;
}

std::size_t PairMetrics::num_layers() const {
  for (const auto& k : kinds)
    if (k) return k->sublayer_sim.size();
  return 0;
}

PairMetrics compute_pair_metrics(const std::string& word, const SubLayerTrace& t1, const SubLayerTrace& t2,
                                 std::span<const SubLayerKind> kinds) {
  PairMetrics pm;
  pm.word = word;
  const std::size_t L = t1.layers.size();
  for (auto kind : kinds) {
    KindMetrics km;
    for (std::size_t l = 0; l < L; ++l) {
      km.sublayer_sim.push_back(sublayer_sim(t1, t2, kind, l));
      if (kind != SubLayerKind::kActs) km.we_sim.push_back({we_sim(t1, kind, l), we_sim(t2, kind, l)});
    }
    km.pca = pca_pair(t1, t2, kind);
    pm.kinds[kind_index(kind)] = std::move(km);
  }
  return pm;
}

CorpusAggregate aggregate(std::span<const PairMetrics> processed, std::size_t flagged) {
  if (processed.empty()) throw EmptyCorpusError("no successfully processed words to aggregate");
  CorpusAggregate agg;
  agg.processed = processed.size();
  agg.flagged = flagged;
  const std::size_t L = processed.front().num_layers();
  const auto n = static_cast<double>(processed.size());

  for (auto kind : kAllKinds) {
    const std::size_t ki = kind_index(kind);
    if (!processed.front().kinds[ki]) continue;
    const bool has_we = kind != SubLayerKind::kActs;
    KindAggregate ka;
    ka.layer_sublayer_sim.assign(L, 0.0);
    ka.layer_pca_l2.assign(L, 0.0);
    if (has_we) ka.layer_we_sim.assign(L, 0.0);
    for (const auto& pm : processed) {
      const auto& km = pm.kinds[ki];
      if (!km || km->sublayer_sim.size() != L) throw ShapeError("pair metrics disagree on kinds or depth");
      for (std::size_t l = 0; l < L; ++l) {
        ka.layer_sublayer_sim[l] += km->sublayer_sim[l];
        ka.layer_pca_l2[l] += km->pca.layer_sq_l2[l];
        if (has_we) ka.layer_we_sim[l] += 0.5 * (static_cast<double>(km->we_sim[l][0]) + km->we_sim[l][1]);
      }
    }
    auto finish = [&](std::vector<double>& layerwise) {
      double total = 0.0;
      for (double& v : layerwise) {
        v /= n;
        total += v;
      }
      return total / static_cast<double>(L);
    };
    ka.avg_sublayer_sim = finish(ka.layer_sublayer_sim);
    ka.avg_pca_l2 = finish(ka.layer_pca_l2);
    if (has_we) ka.avg_we_sim = finish(ka.layer_we_sim);
    agg.kinds[ki] = std::move(ka);
  }
  return agg;
}

}  // namespace sublens
