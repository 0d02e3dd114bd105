#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sublens/corpus.hpp"
#include "sublens/encoder.hpp"
#include "sublens/errors.hpp"
#include "sublens/metrics.hpp"
#include "sublens/model.hpp"
#include "sublens/report.hpp"
#include "sublens/tensor.hpp"
#include "sublens/tokenizer.hpp"

namespace py = pybind11;
using namespace sublens;

namespace {

template <class T>
py::array_t<T> to_array(const BasicMatrix<T>& m) {
  py::array_t<T> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<float> to_array(const Vector& v) {
  py::array_t<float> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array, got " + std::to_string(a.ndim()) + " dimensions");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Vector vec_from(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  return Vector(a.data(), a.data() + a.size());
}

py::dict trace_dict(const SubLayerTrace& t) {
  py::dict d;
  py::list sa, acts, out;
  for (const auto& l : t.layers) {
    sa.append(to_array(l.sa));
    acts.append(to_array(l.acts));
    out.append(to_array(l.out));
  }
  d["sa"] = sa;
  d["acts"] = acts;
  d["out"] = out;
  d["static"] = to_array(t.static_vec);
  d["subword_count"] = t.subword_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sublens, m) {
  m.doc() = "Sub-layer contextualization probe for BERT-style encoders";
  m.attr("__version__") = tool_version();

  auto base = py::register_exception<Error>(m, "SublensError", PyExc_RuntimeError);
  py::register_exception<CorpusError>(m, "CorpusError", base.ptr());
  py::register_exception<LoadError>(m, "LoadError", base.ptr());
  py::register_exception<DegenerateVectorError>(m, "DegenerateVectorError", base.ptr());
  py::register_exception<DimensionalityMismatchError>(m, "DimensionalityMismatchError", base.ptr());
  py::register_exception<IndexError>(m, "IndexError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());

  py::class_<Vocab>(m, "Vocab")
      .def_static("load", &Vocab::load, py::arg("path"))
      .def_static("from_tokens", &Vocab::from_tokens, py::arg("tokens"))
      .def("__len__", &Vocab::size)
      .def("__contains__", &Vocab::contains)
      .def("id", &Vocab::id)
      .def("token", &Vocab::token);

  py::class_<TokenizedSentence>(m, "TokenizedSentence")
      .def_readonly("token_ids", &TokenizedSentence::token_ids)
      .def_readonly("words", &TokenizedSentence::words)
      .def_readonly("unk_count", &TokenizedSentence::unk_count)
      .def_property_readonly("word_spans", [](const TokenizedSentence& ts) {
        py::list out;
        for (const auto& s : ts.word_spans) out.append(py::make_tuple(s.begin, s.end, s.lexical_begin, s.lexical_end));
        return out;
      });

  m.def("encode_sentence", &encode_sentence, py::arg("vocab"), py::arg("sentence"), py::arg("max_tokens") = 512);
  m.def(
      "target_span",
      [](const TokenizedSentence& ts, std::size_t word_index) {
        const auto r = target_span(ts, word_index);
        return py::make_tuple(r.begin, r.end);
      },
      py::arg("sentence"), py::arg("word_index"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def_readonly("num_layers", &ModelConfig::num_layers)
      .def_readonly("hidden_dim", &ModelConfig::hidden_dim)
      .def_readonly("intermediate_dim", &ModelConfig::intermediate_dim)
      .def_readonly("num_heads", &ModelConfig::num_heads)
      .def_readonly("vocab_size", &ModelConfig::vocab_size)
      .def_readonly("max_position", &ModelConfig::max_position);

  py::class_<LoadedModel>(m, "Model")
      .def_readonly("config", &LoadedModel::config)
      .def_readonly("sha256", &LoadedModel::sha256)
      .def(
          "trace",
          [](const LoadedModel& model, const Vocab& vocab, const std::string& sentence, std::size_t word_index,
             const std::string& sa_tap, const std::string& static_tap) {
            const auto ts = encode_sentence(vocab, sentence, model.config.max_position);
            const auto trace = forward_with_taps(model.config, model.weights, ts, target_span(ts, word_index),
                                                 {parse_sa_tap(sa_tap), parse_static_tap(static_tap)});
            return trace_dict(trace);
          },
          py::arg("vocab"), py::arg("sentence"), py::arg("word_index"), py::arg("sa_tap") = "pre-residual",
          py::arg("static_tap") = "raw",
          "Mean-pooled SA, Acts and Out vectors per layer plus the static embedding for one word.");

  m.def("load_weights", &load_weights, py::arg("path"));

  m.def(
      "cosine", [](const py::array_t<float>& a, const py::array_t<float>& b) { return cosine(vec_from(a), vec_from(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "pca_2",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& x) {
        const auto p = pca_2(from_array(x));
        py::dict d;
        d["components"] = to_array(p.components);
        d["projected"] = to_array(p.projected);
        d["explained_variance"] = p.explained_variance;
        d["zero_variance"] = p.zero_variance;
        return d;
      },
      py::arg("x"));

  py::class_<WordPairSample>(m, "WordPairSample")
      .def_readonly("word", &WordPairSample::word)
      .def_readonly("sentence1", &WordPairSample::sentence1)
      .def_readonly("sentence2", &WordPairSample::sentence2)
      .def_readonly("index1", &WordPairSample::index1)
      .def_readonly("index2", &WordPairSample::index2)
      .def_readonly("sense1", &WordPairSample::sense1)
      .def_readonly("sense2", &WordPairSample::sense2);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("source_note", &Corpus::source_note)
      .def_readonly("samples", &Corpus::samples)
      .def("__len__", [](const Corpus& c) { return c.samples.size(); });

  m.def("load_corpus", &resolve_corpus, py::arg("path_or_builtin"));
  m.def("builtin_corpus", &builtin_sample_corpus);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return run_cli(args);
      },
      py::arg("args"), "Runs the sublens command line; returns the exit code.");
}
