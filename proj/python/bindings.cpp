#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "hatebench/config.hpp"
#include "hatebench/csv.hpp"
#include "hatebench/embeddings.hpp"
#include "hatebench/evalharness.hpp"
#include "hatebench/features.hpp"
#include "hatebench/textprep.hpp"

namespace py = pybind11;
namespace hb = hatebench;
namespace eh = hatebench::evalharness;

namespace {

hb::Label to_label(const std::string& s) {
  if (s == "hate") return hb::Label::Hate;
  if (s == "nonhate") return hb::Label::NonHate;
  throw py::value_error("label must be 'hate' or 'nonhate', got '" + s + "'");
}

py::dict metrics_dict(const eh::MetricsReport& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hatebench, m) {
  m.doc() = "Hate-speech classification benchmark toolkit (C++ core).";

  // Translators run newest first, so the subclass goes last.
  auto error = py::register_exception<hb::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<hb::ConfigError>(m, "ConfigError", error.ptr());

  m.def(
      "strip_patterns",
      [](const std::string& text, bool keep_hashtag_text) {
        hb::textprep::StripOptions o;
        o.keep_hashtag_text = keep_hashtag_text;
        return hb::textprep::strip_patterns(text, o);
      },
      py::arg("text"), py::arg("keep_hashtag_text") = false,
      "Drop mentions, hashtags, URLs and standalone numbers.");
  m.def("tokenize", [](const std::string& text) { return hb::textprep::tokenize(text); }, py::arg("text"));
  m.def(
      "clean",
      [](const std::string& text) {
        static const hb::textprep::Pipeline pipeline;
        return pipeline.clean("", text).sequence.tokens;
      },
      py::arg("text"), "Full cleaning pipeline with the bundled stopwords and lemma table.");

  m.def(
      "read_csv",
      [](const std::string& text) {
        std::istringstream in(text);
        const auto t = hb::csv::read(in);
        return py::make_tuple(t.header, t.rows, t.skipped.size());
      },
      py::arg("text"), "Parse CSV text. Returns (header, rows, skipped_count).");

  m.def(
      "write_fake_sentence_embeddings",
      [](const std::filesystem::path& path, const std::vector<std::string>& ids, std::size_t dim, std::uint64_t seed) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw hb::ConfigError("cannot write " + path.string());
        hb::embeddings::write_fake_sentence_embeddings(out, ids, dim, seed);
      },
      py::arg("path"), py::arg("ids"), py::arg("dim") = 1024, py::arg("seed") = 1);
  m.def(
      "load_sentence_embeddings",
      [](const std::filesystem::path& path) {
        const auto set = hb::embeddings::load_sentence_embeddings(path);
        std::vector<std::vector<double>> rows;
        rows.reserve(set.ids.size());
        for (const auto& id : set.ids) rows.push_back(set.rows.at(id));
        return py::make_tuple(set.dim, set.ids, rows);
      },
      py::arg("path"), "Returns (dim, ids, rows) in file order.");

  m.def(
      "metrics",
      [](const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
        std::vector<hb::Label> p;
        std::vector<hb::Label> t;
        for (const auto& s : predicted) p.push_back(to_label(s));
        for (const auto& s : truth) t.push_back(to_label(s));
        return metrics_dict(eh::metrics(eh::confusion(p, t)));
      },
      py::arg("predicted"), py::arg("truth"), "Binary metrics with 'hate' as the positive class.");
  m.def("format_metric", &eh::format_metric, py::arg("value"));

  m.def(
      "run_experiment",
      [](const std::filesystem::path& corpus, const std::string& recipe, const std::string& classifier,
         std::uint64_t seed, double split_ratio) {
        hb::config::RunConfig cfg;
        cfg.corpora = {corpus};
        const auto docs = hb::config::load_corpus(cfg).docs;
        eh::ExperimentSpec spec;
        spec.recipe = eh::parse_recipe(recipe);
        spec.classifier = hb::classifiers::parse_classifier(classifier);
        spec.options.seed = seed;
        spec.options.split_ratio = split_ratio;
        eh::CellResult r;
        {
          py::gil_scoped_release release;
          r = eh::run_experiment(spec, docs);
        }
        py::dict out = metrics_dict(*r.metrics);
        out["width"] = r.width;
        out["train_rows"] = r.train_rows;
        out["test_rows"] = r.test_rows;
        out["spec_digest"] = r.spec_digest;
        return out;
      },
      py::arg("corpus"), py::arg("recipe"), py::arg("classifier") = "lr", py::arg("seed") = 1,
      py::arg("split_ratio") = 0.7, "Split, featurize, train and evaluate one cell.");
}
