#include "sublens/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "sublens/errors.hpp"

#ifndef SUBLENS_VERSION
#define SUBLENS_VERSION "0.0.0"
#endif

namespace sublens {

std::string tool_version() { return SUBLENS_VERSION; }

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json kinds_json = nlohmann::ordered_json::array();
  for (auto k : kinds) kinds_json.push_back(kind_name(k));
  const std::string static_desc =
      taps.static_vec == StaticTap::kRawEmbedding
          ? "raw token-embedding row(s); no position or segment embedding, no embedding layernorm"
          : "embedding output (token + position + segment 0) after the embedding layernorm";
  const std::string sa_desc = taps.sa == SaTap::kPreResidual
                                  ? "attention output projection before residual addition and layernorm"
                                  : "after residual addition and the attention layernorm";
  nlohmann::ordered_json conventions = {
      {"similarity", "plain cosine dot(a,b)/(|a||b|), clamped to [-1,1]; no further division by the norms"},
      {"pooling", "mean over the target word's subword positions for every tap and for the static embedding"},
      {"sa_tap", sa_desc},
      {"acts_tap", "intermediate dense output after GELU (tanh approximation)"},
      {"out_tap", "layer output after residual addition and the output layernorm"},
      {"static_embedding", static_desc},
      {"we_sim", "per layer, mean of the sentence-1 and sentence-2 values; not defined for acts"},
      {"pca", "per word and kind: PCA on 2L stacked rows (sentence 1 layers 1..L, then sentence 2), 2 components"},
      {"pca_l2", "squared Euclidean distance between the two sentences' projected points at each layer"},
      {"averaging", "layerwise = mean over words; scalar = mean over layers of the layerwise means"},
      {"layer_labels", "1-based: label k is encoder layer index k-1; the static embedding is layer 0"},
      {"flagging", "samples with [UNK] in the target word or a zero-norm vector are excluded from averages"},
  };
  return {
      {"tool", "sublens"},
      {"tool_version", tool_version},
      {"weights_sha256", weights_sha256},
      {"sa_tap", to_string(taps.sa)},
      {"static_tap", to_string(taps.static_vec)},
      {"corpus", corpus_name},
      {"corpus_source", corpus_source},
      {"num_layers", num_layers},
      {"kinds", kinds_json},
      {"samples", sample_count},
      {"processed", processed_count},
      {"flagged", flagged_count},
      {"conventions", conventions},
  };
}

namespace {

struct EncodedSide {
  TokenizedSentence ts;
  SubwordRange target;
};

EncodedSide encode_side(const Vocab& vocab, std::size_t max_position, const std::string& sentence, std::size_t index,
                        const char* which, SampleOutcome& outcome) {
  EncodedSide side{encode_sentence(vocab, sentence, max_position), {}};
  side.target = target_span(side.ts, index);
  if (side.ts.range_has_unk(side.target, vocab.unk())) {
    throw IndexError(std::string("target word in ") + which + " maps to [UNK]");
  }
  if (side.ts.unk_count > 0) {
    outcome.warnings.push_back(std::string(which) + " contains " + std::to_string(side.ts.unk_count) +
                               " [UNK] token(s) outside the target");
  }
  return side;
}

}  // namespace

SampleOutcome process_sample(const LoadedModel& model, const Vocab& vocab, const WordPairSample& sample,
                             std::size_t index, const TapPointSpec& taps, std::span<const SubLayerKind> kinds) {
  SampleOutcome out;
  out.index = index;
  out.word = sample.word;
  try {
    const auto a = encode_side(vocab, model.config.max_position, sample.sentence1, sample.index1, "s1", out);
    const auto b = encode_side(vocab, model.config.max_position, sample.sentence2, sample.index2, "s2", out);
    const auto t1 = forward_with_taps(model.config, model.weights, a.ts, a.target, taps);
    const auto t2 = forward_with_taps(model.config, model.weights, b.ts, b.target, taps);
    out.metrics = compute_pair_metrics(sample.word, t1, t2, kinds);
  } catch (const Error& e) {
    out.metrics.reset();
    out.flag_reason = e.what();
  }
  return out;
}

std::vector<SampleOutcome> analyze_corpus(const LoadedModel& model, const Vocab& vocab, const Corpus& corpus,
                                          const TapPointSpec& taps, std::span<const SubLayerKind> kinds,
                                          std::size_t jobs) {
  if (model.config.vocab_size != vocab.size()) {
    throw LoadError("vocab has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                    std::to_string(model.config.vocab_size));
  }
  const std::size_t n = corpus.samples.size();
  std::vector<SampleOutcome> outcomes(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      outcomes[i] = process_sample(model, vocab, corpus.samples[i], i, taps, kinds);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return outcomes;
}

namespace {

std::string fmt_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_f2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string manifest_comment_lines(const RunManifest& m) {
  std::string out;
  const auto j = m.to_json();
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) out += "# " + key + "." + k2 + ": " + v2.get<std::string>() + "\n";
    } else {
      out += "# " + key + ": " + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
    }
  }
  return out;
}

}  // namespace

std::string layerwise_csv(const CorpusAggregate& agg, const RunManifest& manifest) {
  std::string out = manifest_comment_lines(manifest);
  out += "layer,kind,avg_sublayer_sim,avg_we_sim,avg_pca_l2\n";
  for (auto kind : manifest.kinds) {
    const auto& ka = agg.kinds[kind_index(kind)];
    if (!ka) continue;
    for (std::size_t l = 0; l < ka->layer_sublayer_sim.size(); ++l) {
      out += std::to_string(l + 1) + "," + kind_name(kind) + "," + fmt_g6(ka->layer_sublayer_sim[l]) + "," +
             (ka->layer_we_sim.empty() ? std::string() : fmt_g6(ka->layer_we_sim[l])) + "," +
             fmt_g6(ka->layer_pca_l2[l]) + "\n";
    }
  }
  return out;
}

nlohmann::ordered_json aggregate_json(const std::optional<CorpusAggregate>& agg, const RunManifest& manifest,
                                      const std::vector<SampleOutcome>& outcomes) {
  nlohmann::ordered_json j;
  j["manifest"] = manifest.to_json();
  nlohmann::ordered_json table = nlohmann::ordered_json::object();
  nlohmann::ordered_json layerwise = nlohmann::ordered_json::object();
  if (agg) {
    for (auto kind : manifest.kinds) {
      const auto& ka = agg->kinds[kind_index(kind)];
      if (!ka) continue;
      table[kind_name(kind)] = {
          {"avg_sublayer_sim", ka->avg_sublayer_sim},
          {"avg_we_sim", ka->avg_we_sim ? nlohmann::ordered_json(*ka->avg_we_sim) : nlohmann::ordered_json()},
          {"avg_pca_l2", ka->avg_pca_l2},
      };
      nlohmann::ordered_json layers = nlohmann::ordered_json::array();
      for (std::size_t l = 0; l < ka->layer_sublayer_sim.size(); ++l) layers.push_back(l + 1);
      layerwise[kind_name(kind)] = {
          {"layer", layers},
          {"avg_sublayer_sim", ka->layer_sublayer_sim},
          {"avg_we_sim", ka->layer_we_sim.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(ka->layer_we_sim)},
          {"avg_pca_l2", ka->layer_pca_l2},
      };
    }
  }
  j["table"] = table;
  j["layerwise"] = layerwise;
  nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
  for (const auto& o : outcomes)
    if (o.flagged()) flagged.push_back({{"index", o.index}, {"word", o.word}, {"reason", o.flag_reason}});
  j["flagged_samples"] = flagged;
  return j;
}

std::string words_jsonl(const std::vector<SampleOutcome>& outcomes, const RunManifest& manifest) {
  std::string out = nlohmann::ordered_json{{"manifest", manifest.to_json()}}.dump() + "\n";
  for (const auto& o : outcomes) {
    nlohmann::ordered_json j = {{"index", o.index}, {"word", o.word}, {"status", o.flagged() ? "flagged" : "ok"}};
    if (!o.warnings.empty()) j["warnings"] = o.warnings;
    if (o.flagged()) {
      j["reason"] = o.flag_reason;
    } else {
      for (auto kind : manifest.kinds) {
        const auto& km = o.metrics->kinds[kind_index(kind)];
        if (!km) continue;
        nlohmann::ordered_json k;
        k["sublayer_sim"] = km->sublayer_sim;
        if (kind != SubLayerKind::kActs) {
          nlohmann::ordered_json we = nlohmann::ordered_json::array();
          for (const auto& p : km->we_sim) we.push_back({p[0], p[1]});
          k["we_sim"] = we;
        }
        k["pca_l2"] = km->pca.layer_sq_l2;
        k["explained_variance"] = km->pca.pca.explained_variance;
        nlohmann::ordered_json proj = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < km->pca.pca.projected.rows(); ++r)
          proj.push_back({km->pca.pca.projected(r, 0), km->pca.pca.projected(r, 1)});
        k["projection"] = proj;
        j[kind_name(kind)] = k;
      }
    }
    out += j.dump() + "\n";
  }
  return out;
}

std::string sanitize_filename(const std::string& word) {
  std::string out;
  for (char c : normalize_text(word)) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out.empty() ? "word" : out;
}

namespace {

constexpr double kCanvas = 500.0;
constexpr double kMargin = 60.0;

std::vector<double> map_axis(const MatrixD& p, std::size_t col, bool invert) {
  double lo = p(0, col), hi = p(0, col);
  for (std::size_t r = 1; r < p.rows(); ++r) {
    lo = std::min(lo, p(r, col));
    hi = std::max(hi, p(r, col));
  }
  const double span = hi - lo;
  std::vector<double> out(p.rows(), kCanvas / 2);
  if (!(span > 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)}))) return out;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double t = (p(r, col) - lo) / span;
    if (invert) t = 1.0 - t;
    out[r] = kMargin + t * (kCanvas - 2 * kMargin);
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string emit_biplot_svg(const MatrixD& projection, const BiplotLabels& labels) {
  const std::size_t L = labels.num_layers ? labels.num_layers : projection.rows() / 2;
  const auto xs = map_axis(projection, 0, false);
  const auto ys = map_axis(projection, 1, true);
  auto ev = [&](std::size_t k) {
    return k < labels.explained_variance.size() ? fmt_g6(labels.explained_variance[k]) : std::string("n/a");
  };
  std::string comment = labels.manifest_comment;
  for (std::size_t p = comment.find("--"); p != std::string::npos; p = comment.find("--")) comment.replace(p, 2, "- -");

  const std::string c = fmt_f2(kCanvas / 2), lo = fmt_f2(kMargin), hi = fmt_f2(kCanvas - kMargin);
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" viewBox=\"0 0 500 500\">\n";
  if (!comment.empty()) s += "<!-- " + comment + " -->\n";
  s += "<rect x=\"0\" y=\"0\" width=\"500\" height=\"500\" fill=\"white\"/>\n";
  s += "<text x=\"250.00\" y=\"24.00\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       xml_escape(labels.word) + " / " + xml_escape(labels.kind) + "</text>\n";
  s += "<line x1=\"" + lo + "\" y1=\"" + c + "\" x2=\"" + hi + "\" y2=\"" + c + "\" stroke=\"#999\"/>\n";
  s += "<line x1=\"" + c + "\" y1=\"" + lo + "\" x2=\"" + c + "\" y2=\"" + hi + "\" stroke=\"#999\"/>\n";
  s += "<text x=\"250.00\" y=\"490.00\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">PC1 (var " +
       ev(0) + ")</text>\n";
  s += "<text x=\"14.00\" y=\"250.00\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       "transform=\"rotate(-90 14.00 250.00)\">PC2 (var " +
       ev(1) + ")</text>\n";
  for (std::size_t r = 0; r < projection.rows(); ++r) {
    const bool second = r >= L;
    const std::size_t layer = (second ? r - L : r) + 1;
    const std::string x = fmt_f2(xs[r]), y = fmt_f2(ys[r]);
    const std::string cls = second ? "s2" : "s1";
    if (!second) {
      s += "<circle class=\"s1\" data-layer=\"" + std::to_string(layer) + "\" cx=\"" + x + "\" cy=\"" + y +
           "\" r=\"5\" fill=\"#1f77b4\"/>\n";
    } else {
      s += "<rect class=\"s2\" data-layer=\"" + std::to_string(layer) + "\" x=\"" + fmt_f2(xs[r] - 5) + "\" y=\"" +
           fmt_f2(ys[r] - 5) + "\" width=\"10\" height=\"10\" fill=\"#d62728\"/>\n";
    }
    s += "<text class=\"" + cls + "\" x=\"" + fmt_f2(xs[r] + 7) + "\" y=\"" + fmt_f2(ys[r] - 7) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + std::to_string(layer) + "</text>\n";
  }
  s += "<text x=\"440.00\" y=\"40.00\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">o s1</text>\n";
  s += "<text x=\"440.00\" y=\"54.00\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">[] s2</text>\n";
  s += "</svg>\n";
  return s;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

int run_analysis(const RunOptions& options) {
  const auto model = load_weights(options.weights);
  const auto vocab = Vocab::load(options.vocab);
  const auto corpus = resolve_corpus(options.corpus);
  if (options.kinds.empty()) throw Error("no sub-layer kinds selected");

  auto outcomes = analyze_corpus(model, vocab, corpus, options.taps, options.kinds, options.jobs);

  std::vector<PairMetrics> processed;
  for (const auto& o : outcomes)
    if (!o.flagged()) processed.push_back(*o.metrics);

  RunManifest manifest;
  manifest.tool_version = tool_version();
  manifest.weights_sha256 = model.sha256;
  manifest.taps = options.taps;
  manifest.corpus_name = corpus.name;
  manifest.corpus_source = corpus.source_note;
  manifest.num_layers = model.config.num_layers;
  manifest.sample_count = outcomes.size();
  manifest.processed_count = processed.size();
  manifest.flagged_count = outcomes.size() - processed.size();
  manifest.kinds = options.kinds;

  std::filesystem::create_directories(options.out_dir);
  std::optional<CorpusAggregate> agg;
  if (!processed.empty()) agg = aggregate(processed, manifest.flagged_count);

  write_text(options.out_dir / "words.jsonl", words_jsonl(outcomes, manifest));
  write_text(options.out_dir / "aggregate.json", aggregate_json(agg, manifest, outcomes).dump(2) + "\n");
  if (!agg) return 2;
  write_text(options.out_dir / "layerwise.csv", layerwise_csv(*agg, manifest));

  if (options.svg) {
    const auto dir = options.out_dir / "biplots";
    std::filesystem::create_directories(dir);
    const std::string comment = "sublens manifest " + manifest.to_json().dump();
    std::map<std::string, int> seen;
    for (const auto& o : outcomes) {
      if (o.flagged()) continue;
      std::string stem = sanitize_filename(o.word);
      if (const int n = ++seen[stem]; n > 1) stem += "." + std::to_string(n);
      for (auto kind : options.kinds) {
        const auto& km = o.metrics->kinds[kind_index(kind)];
        BiplotLabels labels{o.word, kind_name(kind), manifest.num_layers, km->pca.pca.explained_variance, comment};
        write_text(dir / (stem + "-" + kind_name(kind) + ".svg"), emit_biplot_svg(km->pca.pca.projected, labels));
      }
    }
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"sublens: locate contextualization inside encoder sub-layers", "sublens"};
  RunOptions opt;
  std::string weights, vocab, out, sa_tap = "pre-residual", static_tap = "raw", kind = "all";
  app.add_option("--weights", weights, "weight container (SUBLENS1)")->required();
  app.add_option("--vocab", vocab, "vocabulary file, one token per line")->required();
  app.add_option("--corpus", opt.corpus, "JSONL corpus path or 'builtin'")->capture_default_str();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--sa-tap", sa_tap, "SA tap point")->check(CLI::IsMember({"pre-residual", "post-layernorm"}))
      ->capture_default_str();
  app.add_option("--static-tap", static_tap, "static embedding tap")->check(CLI::IsMember({"raw", "post-layernorm"}))
      ->capture_default_str();
  app.add_option("--kind", kind, "sub-layers to analyse")->check(CLI::IsMember({"sa", "acts", "out", "all"}))
      ->capture_default_str();
  app.add_flag("--svg", opt.svg, "write PCA bi-plots to <out>/biplots");
  app.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.set_version_flag("--version", tool_version());

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    opt.weights = weights;
    opt.vocab = vocab;
    opt.out_dir = out;
    opt.taps = {parse_sa_tap(sa_tap), parse_static_tap(static_tap)};
    if (kind != "all") opt.kinds = {parse_kind(kind)};
    const int rc = run_analysis(opt);
    if (rc == 2) std::cerr << "sublens: every sample was flagged; see " << (opt.out_dir / "aggregate.json") << "\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "sublens: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sublens
