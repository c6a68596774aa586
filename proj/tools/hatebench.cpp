// hatebench command-line tool.
//
// Exit codes: 0 success, 1 one or more failed cells (or a runtime failure),
// 2 bad configuration or usage. Settings come from defaults, then flags, then
// --config (a JSON file, which wins). Environment variables are never read.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hatebench/classifiers.hpp"
#include "hatebench/config.hpp"
#include "hatebench/corpus.hpp"
#include "hatebench/csv.hpp"
#include "hatebench/evalharness.hpp"
#include "hatebench/neural.hpp"
#include "hatebench/textprep.hpp"

namespace fs = std::filesystem;
namespace eh = hatebench::evalharness;
using hatebench::ConfigError;
using hatebench::Error;
using hatebench::config::RunConfig;

namespace {

// Flags shared by every command that reads a corpus.
struct InputFlags {
  std::vector<std::string> corpora;
  std::string id_column;
  std::string split_dir;
  bool no_dedupe = false;
  std::string config_path;
};

void add_corpus_flags(CLI::App* cmd, RunConfig& cfg, InputFlags& in, bool allow_split_dir) {
  cmd->add_option("--corpus", in.corpora, "Labeled CSV corpus; give two to merge them")->expected(1, 2);
  cmd->add_option("--id-column", in.id_column, "Id column (default: row index)");
  cmd->add_option("--text-column", cfg.schema.text, "Text column")->capture_default_str();
  cmd->add_option("--label-column", cfg.schema.label, "Label column")->capture_default_str();
  cmd->add_option("--label-map", cfg.label_map,
                  "Label mapping such as 'hate=hate,offensive=nonhate' (default: hate vs everything else)");
  cmd->add_flag("--no-dedupe", in.no_dedupe, "Keep duplicate texts when merging two corpora");
  if (allow_split_dir) {
    cmd->add_option("--split-dir", in.split_dir, "Directory with train.csv and test.csv instead of --corpus");
  }
  cmd->add_option("--config", in.config_path, "JSON config file; its values override flags");
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg) {
  auto& o = cfg.options;
  cmd->add_option("--seed", o.seed, "Seed for the split and every trainer")->capture_default_str();
  cmd->add_option("--split-ratio", o.split_ratio, "Train fraction")->capture_default_str();
  cmd->add_flag("--stratified", o.stratified, "Split each class separately");
  cmd->add_flag("--keep-hashtag-text", o.strip.keep_hashtag_text, "Keep '#tag' as 'tag'");
  cmd->add_flag("--sentiment-on-clean", o.sentiment_on_clean,
                "Score sentiment on fully cleaned tokens instead of lightly cleaned ones");
  cmd->add_option_function<std::string>(
         "--vocab-ranking",
         [&o](const std::string& v) {
           o.ranking = v == "doc" ? hatebench::features::VocabRanking::DocumentFrequency
                                  : hatebench::features::VocabRanking::TotalFrequency;
         },
         "Rank n-grams by total frequency or document frequency")
      ->check(CLI::IsMember({"total", "doc"}))
      ->default_str("total");
  cmd->add_flag("--doc2vec-transductive", o.doc2vec_transductive,
                "Train Doc2Vec on train and test text (leaks test text; reported, not blocked)");
  cmd->add_option_function<std::string>(
         "--metrics", [&o](const std::string& v) { o.averaging = eh::parse_averaging(v); },
         "binary (Hate positive) or macro")
      ->check(CLI::IsMember({"binary", "macro"}))
      ->default_str("binary");
  cmd->add_option("--resource-dir", o.resource_dir, "Base directory for relative embedding file paths");
}

// Flags first, then the config file on top.
void finish_config(RunConfig& cfg, const InputFlags& in) {
  if (!in.corpora.empty()) cfg.corpora.assign(in.corpora.begin(), in.corpora.end());
  if (!in.id_column.empty()) cfg.schema.id = in.id_column;
  if (!in.split_dir.empty()) cfg.split_dir = in.split_dir;
  if (in.no_dedupe) cfg.dedupe = false;
  if (!in.config_path.empty()) hatebench::config::apply_file(in.config_path, cfg);
  if (cfg.jobs == 0) throw ConfigError("--jobs must be >= 1");
}

std::vector<fs::path> input_files(const RunConfig& cfg, const InputFlags& in) {
  std::vector<fs::path> files;
  if (!cfg.split_dir.empty()) {
    files.push_back(cfg.split_dir / "train.csv");
    files.push_back(cfg.split_dir / "test.csv");
  } else {
    files = cfg.corpora;
  }
  if (!in.config_path.empty()) files.emplace_back(in.config_path);
  return files;
}

struct Split {
  std::vector<eh::LabeledDocument> train;
  std::vector<eh::LabeledDocument> test;
};

Split load_split(const RunConfig& cfg) {
  if (!cfg.split_dir.empty()) {
    auto s = hatebench::corpus::read_split(cfg.split_dir);
    return {std::move(s.train), std::move(s.test)};
  }
  const auto loaded = hatebench::config::load_corpus(cfg);
  if (loaded.malformed_rows > 0) {
    std::cerr << "warning: skipped " << loaded.malformed_rows << " malformed CSV rows\n";
  }
  const auto& o = cfg.options;
  auto s = hatebench::corpus::split(loaded.docs, o.split_ratio, o.seed, o.stratified);
  return {std::move(s.train), std::move(s.test)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

// File resources named in recipes must exist before anything runs.
void check_resources(std::span<const eh::ExperimentSpec> specs) {
  auto check = [](const std::string& resource, const eh::RunOptions& o) {
    if (resource.starts_with("fake:")) return;
    fs::path p(resource);
    if (!p.is_absolute() && !o.resource_dir.empty()) p = o.resource_dir / p;
    if (!fs::is_regular_file(p)) throw ConfigError("embedding file not found: " + p.string());
  };
  for (const auto& spec : specs) {
    if (spec.neural && spec.neural->vectors == eh::WordVectors::Glove) check(spec.neural->resource, spec.options);
    for (const auto& part : spec.recipe.parts) {
      if (part.source == eh::FeatureSource::Sent2Vec) check(part.resource, spec.options);
    }
  }
}

// report.csv, report.md, provenance.json, manifest.json. Returns the exit code.
int write_results(const fs::path& out_dir, std::span<const eh::CellResult> cells, std::string_view command,
                  const RunConfig& cfg, const std::vector<fs::path>& inputs,
                  std::vector<std::pair<std::string, std::string>> extra) {
  ensure_dir(out_dir);
  const eh::ReportTable table = eh::make_report(cells);
  eh::emit_report(out_dir / "report.csv", table, eh::ReportFormat::Csv);
  eh::emit_report(out_dir / "report.md", table, eh::ReportFormat::Markdown);
  auto settings = hatebench::config::describe(cfg);
  settings.insert(settings.begin(), extra.begin(), extra.end());
  write_text(out_dir / "provenance.json", eh::provenance_json(cells, command, settings));
  const std::vector<std::string> outputs{"report.csv", "report.md", "provenance.json"};
  eh::write_manifest(out_dir, inputs, outputs);

  std::size_t failed = 0;
  std::size_t accesses = 0;
  for (const auto& c : cells) {
    accesses += c.test_accesses;
    if (!c.ok()) {
      ++failed;
      std::cerr << "cell failed: " << c.table << " " << c.classifier << " / " << c.features << ": " << c.error
                << "\n";
    }
  }
  std::cout << cells.size() - failed << "/" << cells.size() << " cells ok, test-document accesses during fit: "
            << accesses << ", results in " << out_dir.string() << "\n";
  return failed > 0 ? 1 : 0;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------ export-model

using ojson = nlohmann::ordered_json;

ojson tree_json(const hatebench::classifiers::DTModel& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes) {
    ojson j;
    if (n.is_leaf()) {
      j["leaf"] = std::string(hatebench::to_string(n.label));
    } else {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    j["counts"] = {{"nonhate", n.count_nonhate}, {"hate", n.count_hate}};
    nodes.push_back(std::move(j));
  }
  return nodes;
}

ojson classifier_json(const hatebench::classifiers::TrainedClassifier& model) {
  namespace cl = hatebench::classifiers;
  ojson j;
  j["format"] = "hatebench-model-json v1";
  j["kind"] = std::string(cl::to_string(cl::kind_of(model)));
  j["width"] = cl::width_of(model);
  if (const auto* m = std::get_if<cl::LRModel>(&model)) {
    j["mean"] = m->mean;
    j["scale"] = m->scale;
    j["weights"] = m->weights;
    j["bias"] = m->bias;
  } else if (const auto* m = std::get_if<cl::DTModel>(&model)) {
    j["nodes"] = tree_json(*m);
  } else if (const auto* m = std::get_if<cl::RFModel>(&model)) {
    j["max_features"] = m->max_features == cl::MaxFeatures::Sqrt ? "sqrt" : "all";
    ojson trees = ojson::array();
    for (std::size_t t = 0; t < m->trees.size(); ++t) {
      trees.push_back({{"seed", m->tree_seeds[t]}, {"nodes", tree_json(m->trees[t])}});
    }
    j["trees"] = std::move(trees);
  } else if (const auto* m = std::get_if<cl::NBModel>(&model)) {
    j["variant"] = m->variant == cl::NBVariant::Multinomial ? "multinomial" : "gaussian";
    j["prior"] = {{"nonhate", m->prior[0]}, {"hate", m->prior[1]}};
    if (m->variant == cl::NBVariant::Multinomial) {
      j["rate"] = {{"nonhate", m->rate[0]}, {"hate", m->rate[1]}};
    } else {
      j["mean"] = {{"nonhate", m->mean[0]}, {"hate", m->mean[1]}};
      j["variance"] = {{"nonhate", m->variance[0]}, {"hate", m->variance[1]}};
    }
  }
  return j;
}

ojson rnn_json(hatebench::neural::RNNModel model) {
  ojson j;
  j["format"] = "hatebench-rnn-json v1";
  j["cell"] = std::string(hatebench::neural::to_string(model.kind));
  j["vocab_size"] = model.vocab_size();
  j["embed_dim"] = model.embed_dim();
  j["hidden"] = model.hidden();
  j["max_len"] = model.hyper.max_len;
  j["embedding_trainable"] = model.embedding_trainable;
  j["vocab"] = model.vocab;
  ojson params = ojson::object();
  for (const auto& view : hatebench::neural::parameter_views(model.params, true)) {
    params[view.name] = std::vector<double>(view.values.begin(), view.values.end());
  }
  j["parameters"] = std::move(params);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hatebench: hate-speech classification benchmarks (features, classifiers, recurrent models)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hatebench 0.1.0");

  RunConfig cfg;
  InputFlags in;
  std::string out;
  std::string features_path;

  // clean
  auto* clean = app.add_subcommand("clean", "Clean a corpus into an id,tokens CSV");
  clean->add_option("--in", in.corpora, "Input CSV")->required()->expected(1);
  clean->add_option("--out", out, "Output CSV")->required();
  clean->add_option("--id-column", in.id_column, "Id column (default: row index)");
  clean->add_option("--text-column", cfg.schema.text, "Text column")->capture_default_str();
  clean->add_option("--label-column", cfg.schema.label, "Label column")->capture_default_str();
  clean->add_flag("--keep-hashtag-text", cfg.options.strip.keep_hashtag_text, "Keep '#tag' as 'tag'");
  clean->add_option("--config", in.config_path, "JSON config file; its values override flags");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Fit a feature recipe on the train split and write both matrices");
  add_corpus_flags(featurize, cfg, in, true);
  add_run_flags(featurize, cfg);
  featurize->add_option("--recipe", cfg.recipe, "Feature recipe, e.g. 'tfidf+sentiment'");
  featurize->add_option("--out", out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a classifier on a feature CSV, or a recurrent model on a corpus");
  add_corpus_flags(train, cfg, in, true);
  add_run_flags(train, cfg);
  train->add_option("--features", features_path, "Labeled feature CSV written by 'featurize'");
  train->add_option("--clf", cfg.classifier, "Classifier: lr, dt, rf or nb")->capture_default_str();
  train->add_option("--neural", cfg.neural, "Recurrent model, e.g. 'bigru(word2vec:100)'");
  train->add_option("--out", out, "Model file")->required();

  // run
  auto* run = app.add_subcommand("run", "Run one experiment and write the report");
  add_corpus_flags(run, cfg, in, true);
  add_run_flags(run, cfg);
  run->add_option("--recipe", cfg.recipe, "Feature recipe, e.g. 'tfidf+sentiment'");
  run->add_option("--clf", cfg.classifier, "Classifier: lr, dt, rf or nb")->capture_default_str();
  run->add_option("--neural", cfg.neural, "Recurrent model instead of recipe + classifier");
  run->add_option("--out", out, "Output directory")->required();

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Run every cell of a preset and write the report");
  add_corpus_flags(matrix, cfg, in, true);
  add_run_flags(matrix, cfg);
  matrix->add_option("--preset", cfg.preset, "Bundled preset name or preset file")->capture_default_str();
  matrix->add_option("--jobs", cfg.jobs, "Worker threads (output does not depend on it)")->capture_default_str();
  matrix->add_option("--out", out, "Output directory")->required();

  // audit
  double plant = 0.0;
  auto* audit = app.add_subcommand("audit", "Report duplicate texts shared by the train and test sides");
  add_corpus_flags(audit, cfg, in, true);
  add_run_flags(audit, cfg);
  audit->add_option("--plant", plant, "Copy this fraction of train texts into test first (demonstration)")
      ->check(CLI::Range(0.0, 1.0));
  audit->add_option("--out", out, "Audit JSON file")->required();

  // export-model
  std::string model_path;
  auto* export_model = app.add_subcommand("export-model", "Convert a saved model or checkpoint to JSON");
  export_model->add_option("--model", model_path, "Model file written by 'train'")->required();
  export_model->add_option("--out", out, "JSON output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == clean) {
      finish_config(cfg, in);
      if (cfg.corpora.size() != 1) throw ConfigError("clean takes exactly one input file");
      const auto loaded = hatebench::corpus::load_csv(cfg.corpora.front(), cfg.schema);
      const hatebench::textprep::Pipeline pipeline(hatebench::textprep::StopwordList::bundled(),
                                                   hatebench::textprep::Lemmatizer::bundled(), cfg.options.strip);
      std::ostringstream buffer;
      const std::vector<std::string> header{"id", "tokens"};
      hatebench::csv::write_row(buffer, header);
      std::size_t empty = 0;
      for (const auto& r : loaded.records) {
        const auto result = pipeline.clean(r.id, r.text);
        empty += result.empty_after_clean ? 1 : 0;
        std::string joined;
        for (const auto& t : result.sequence.tokens) joined += (joined.empty() ? "" : " ") + t;
        const std::vector<std::string> row{r.id, joined};
        hatebench::csv::write_row(buffer, row);
      }
      const fs::path out_path(out);
      write_text(out_path, buffer.str());
      const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
      const std::vector<std::string> outputs{out_path.filename().string()};
      eh::write_manifest(dir, input_files(cfg, in), outputs, out_path.filename().string() + ".manifest.json");
      std::cout << "cleaned " << loaded.records.size() << " documents (" << empty << " empty after cleaning, "
                << loaded.skipped.size() << " malformed rows skipped)\n";
      return 0;
    }

    if (active == export_model) {
      const std::string blob = read_all(model_path);
      ojson j;
      if (blob.starts_with("hatebench-rnn")) {
        std::istringstream is(blob);
        j = rnn_json(hatebench::neural::load_checkpoint(is));
      } else {
        std::istringstream is(blob);
        j = classifier_json(hatebench::classifiers::load_model(is));
      }
      write_text(out, j.dump(2) + "\n");
      std::cout << "exported " << j["format"].get<std::string>() << " to " << out << "\n";
      return 0;
    }

    finish_config(cfg, in);
    const std::vector<fs::path> inputs = input_files(cfg, in);

    if (active == featurize) {
      if (cfg.recipe.empty()) throw ConfigError("featurize needs --recipe");
      const eh::Recipe recipe = eh::parse_recipe(cfg.recipe);
      Split s = load_split(cfg);
      const eh::PreparedSplit data = eh::prepare_split(std::move(s.train), std::move(s.test), cfg.options);
      eh::HygieneMonitor monitor(data.test);
      std::vector<hatebench::FeatureMatrix> train_parts;
      std::vector<hatebench::FeatureMatrix> test_parts;
      for (const auto& part : recipe.parts) {
        auto block = eh::build_feature_block(part, data, cfg.options, monitor);
        train_parts.push_back(std::move(block.train));
        test_parts.push_back(std::move(block.test));
      }
      const auto x_train = hatebench::concat_features(train_parts);
      const auto x_test = hatebench::concat_features(test_parts);
      const fs::path dir(out);
      ensure_dir(dir);
      {
        std::ofstream f(dir / "train_features.csv", std::ios::binary);
        hatebench::write_feature_csv(f, x_train, std::span<const hatebench::Label>(data.train_labels));
        std::ofstream g(dir / "test_features.csv", std::ios::binary);
        hatebench::write_feature_csv(g, x_test, std::span<const hatebench::Label>(data.test_labels));
        if (!f || !g) throw ConfigError("failed writing feature files in " + dir.string());
      }
      const std::vector<std::string> outputs{"train_features.csv", "test_features.csv"};
      eh::write_manifest(dir, inputs, outputs);
      std::cout << "width " << x_train.cols() << ", " << x_train.rows() << " train rows, " << x_test.rows()
                << " test rows, test-document accesses during fit: " << monitor.test_accesses() << "\n";
      return 0;
    }

    if (active == train) {
      std::ostringstream blob;
      fs::path out_path(out);
      std::vector<fs::path> model_inputs = inputs;
      if (!cfg.neural.empty()) {
        const eh::NeuralSpec spec = eh::parse_neural(cfg.neural);
        eh::ExperimentSpec probe;
        probe.neural = spec;
        probe.options = cfg.options;
        check_resources(std::span<const eh::ExperimentSpec>(&probe, 1));
        Split s = load_split(cfg);
        const eh::PreparedSplit data = eh::prepare_split(std::move(s.train), std::move(s.test), cfg.options);
        eh::HygieneMonitor monitor(data.test);
        const auto fitted = eh::fit_neural(spec, data, cfg.options, monitor);
        hatebench::neural::save_checkpoint(blob, fitted.model);
        std::cout << "trained " << spec.row_label() << " (" << spec.display() << ", dim " << fitted.width
                  << ") on " << data.train.size() << " documents\n";
      } else {
        if (features_path.empty()) throw ConfigError("train needs --features (or --neural)");
        const auto kind = hatebench::classifiers::parse_classifier(cfg.classifier);
        std::ifstream f(features_path, std::ios::binary);
        if (!f) throw ConfigError("cannot read " + features_path);
        const auto data = hatebench::read_feature_csv(f);
        if (data.labels.empty()) throw ConfigError(features_path + " has no label column");
        auto config = cfg.options.classifier;
        config.rf.seed = cfg.options.seed;
        const auto model = hatebench::classifiers::fit(kind, data.matrix, data.labels, config);
        hatebench::classifiers::save_model(blob, model);
        model_inputs = {fs::path(features_path)};
        if (!in.config_path.empty()) model_inputs.emplace_back(in.config_path);
        std::cout << "trained " << hatebench::classifiers::to_string(kind) << " on " << data.matrix.rows()
                  << " rows of width " << data.matrix.cols() << "\n";
      }
      write_text(out_path, blob.str());
      const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
      const std::vector<std::string> outputs{out_path.filename().string()};
      eh::write_manifest(dir, model_inputs, outputs, out_path.filename().string() + ".manifest.json");
      return 0;
    }

    if (active == run) {
      eh::ExperimentSpec spec;
      spec.table = "run";
      spec.options = cfg.options;
      if (!cfg.neural.empty()) {
        spec.neural = eh::parse_neural(cfg.neural);
        spec.title = "Recurrent model";
      } else {
        if (cfg.recipe.empty()) throw ConfigError("run needs --recipe (or --neural)");
        spec.recipe = eh::parse_recipe(cfg.recipe);
        spec.classifier = hatebench::classifiers::parse_classifier(cfg.classifier);
        spec.title = spec.recipe.display();
      }
      check_resources(std::span<const eh::ExperimentSpec>(&spec, 1));
      Split s = load_split(cfg);
      std::vector<eh::CellResult> cells;
      {
        const eh::PreparedSplit data = eh::prepare_split(std::move(s.train), std::move(s.test), cfg.options);
        try {
          cells.push_back(eh::run_on_split(spec, data));
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          eh::CellResult failed;
          failed.table = spec.table;
          failed.title = spec.title;
          failed.classifier = spec.row_label();
          failed.features = spec.features_label();
          failed.spec_digest = spec.digest();
          failed.seed = spec.options.seed;
          failed.error = e.what();
          cells.push_back(std::move(failed));
        }
      }
      const std::string model = spec.neural ? spec.neural->text() : std::string(hatebench::classifiers::to_string(spec.classifier));
      return write_results(out, cells, "run", cfg, inputs,
                           {{"recipe", spec.neural ? "" : spec.recipe.text()}, {"model", model}});
    }

    if (active == matrix) {
      const eh::Preset preset = eh::load_preset(cfg.preset);
      const auto specs = preset.expand(cfg.options);
      check_resources(specs);
      std::vector<fs::path> all_inputs = inputs;
      if (fs::is_regular_file(cfg.preset)) all_inputs.emplace_back(cfg.preset);
      std::vector<eh::CellResult> cells;
      if (!cfg.split_dir.empty()) {
        Split s = load_split(cfg);
        // A fixed split: run each cell on it (cells still share nothing mutable).
        const eh::PreparedSplit data = eh::prepare_split(std::move(s.train), std::move(s.test), cfg.options);
        for (const auto& spec : specs) {
          try {
            cells.push_back(eh::run_on_split(spec, data));
          } catch (const std::exception& e) {
            eh::CellResult failed;
            failed.table = spec.table;
            failed.title = spec.title;
            failed.classifier = spec.row_label();
            failed.features = spec.features_label();
            failed.spec_digest = spec.digest();
            failed.error = e.what();
            cells.push_back(std::move(failed));
          }
        }
      } else {
        const auto loaded = hatebench::config::load_corpus(cfg);
        cells = eh::run_matrix(specs, loaded.docs, cfg.jobs);
      }
      return write_results(out, cells, "matrix", cfg, all_inputs, {{"preset", preset.name}});
    }

    if (active == audit) {
      Split s = load_split(cfg);
      std::size_t planted = 0;
      if (plant > 0.0) planted = eh::plant_duplicates(s.train, s.test, plant, cfg.options.seed);
      const hatebench::textprep::Pipeline pipeline(hatebench::textprep::StopwordList::bundled(),
                                                   hatebench::textprep::Lemmatizer::bundled(), cfg.options.strip);
      const auto report = eh::leakage_audit(s.train, s.test, pipeline);
      const fs::path out_path(out);
      write_text(out_path, eh::audit_json(report));
      const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
      const std::vector<std::string> outputs{out_path.filename().string()};
      eh::write_manifest(dir, inputs, outputs, out_path.filename().string() + ".manifest.json");
      if (plant > 0.0) std::cout << "planted " << planted << " duplicates\n";
      std::cout << report.exact_duplicates << " exact and " << report.near_duplicates
                << " near duplicates among " << report.test_rows << " test documents\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
