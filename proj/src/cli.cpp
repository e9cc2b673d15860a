#include "lbpbevm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lbpbevm/datasets.hpp"
#include "lbpbevm/error.hpp"
#include "lbpbevm/metrics.hpp"
#include "lbpbevm/text.hpp"

namespace fs = std::filesystem;

namespace lbpbevm {

namespace {

/// Everything a command needs, resolved from defaults, then the config file,
/// then explicit flags.
struct RunConfig {
  ExtractionConfig extraction;
  EbtParams ebt;
  std::size_t k = 10;
  TraceSchema schema;

  std::vector<std::pair<std::string, std::string>> entries() const {
    const auto& x = extraction;
    return {{"width", x.width == 0 ? "auto" : std::to_string(x.width)},
            {"pad", to_string(x.pad)},
            {"kernel", std::to_string(x.kernel)},
            {"thre", format_double(x.thre)},
            {"uniform_lbp", x.uniform_lbp ? "true" : "false"},
            {"normalization", to_string(x.normalization)},
            {"descriptor", to_string(x.descriptor)},
            {"max_samples", std::to_string(x.max_samples)},
            {"learners", std::to_string(ebt.learners)},
            {"max_splits", std::to_string(ebt.max_splits)},
            {"bootstrap", ebt.bootstrap ? "true" : "false"},
            {"k", std::to_string(k)},
            {"seed", std::to_string(ebt.seed)},
            {"power_column", std::to_string(schema.power_column)},
            {"time_column", schema.time_column ? std::to_string(*schema.time_column) : "none"},
            {"label_source", schema.label_source == LabelSource::Filename ? "filename" : "column"},
            {"label_column", std::to_string(schema.label_column)},
            {"delimiter", std::string(1, schema.delimiter)},
            {"header", schema.has_header ? "true" : "false"},
            {"sample_rate", format_double(schema.sample_rate_hz)}};
  }

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : entries()) out.push_back(key + " = " + value);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [key, value] : entries()) j[key] = value;
    return j;
  }
};

std::size_t to_size(const std::string& key, const std::string& value) {
  const auto v = parse_double(value);
  if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
    throw Error(ErrorCode::BadConfig, key + ": expected a non-negative integer, got '" + value + "'");
  return static_cast<std::size_t>(*v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::BadConfig, key + ": expected true|false, got '" + value + "'");
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& x = cfg.extraction;
  if (key == "width") {
    x.width = value == "auto" ? 0 : to_size(key, value);
  } else if (key == "pad") {
    x.pad = parse_pad_policy(value);
  } else if (key == "kernel") {
    x.kernel = to_size(key, value);
  } else if (key == "thre") {
    const auto v = parse_double(value);
    if (!v) throw Error(ErrorCode::BadConfig, "thre: expected a number, got '" + value + "'");
    x.thre = *v;
  } else if (key == "uniform_lbp") {
    x.uniform_lbp = to_bool(key, value);
  } else if (key == "normalization") {
    x.normalization = parse_normalization(value);
  } else if (key == "descriptor") {
    x.descriptor = parse_descriptor(value);
  } else if (key == "max_samples") {
    x.max_samples = to_size(key, value);
  } else if (key == "learners") {
    cfg.ebt.learners = to_size(key, value);
  } else if (key == "max_splits") {
    cfg.ebt.max_splits = to_size(key, value);
  } else if (key == "bootstrap") {
    cfg.ebt.bootstrap = to_bool(key, value);
  } else if (key == "k") {
    cfg.k = to_size(key, value);
  } else if (key == "seed") {
    cfg.ebt.seed = to_size(key, value);
  } else if (key == "power_column") {
    cfg.schema.power_column = to_size(key, value);
  } else if (key == "time_column") {
    cfg.schema.time_column =
        value == "none" ? std::nullopt : std::optional<std::size_t>(to_size(key, value));
  } else if (key == "label_source") {
    if (value == "filename")
      cfg.schema.label_source = LabelSource::Filename;
    else if (value == "column")
      cfg.schema.label_source = LabelSource::Column;
    else
      throw Error(ErrorCode::BadConfig, "label_source: expected filename|column");
  } else if (key == "label_column") {
    cfg.schema.label_column = to_size(key, value);
  } else if (key == "delimiter") {
    if (value.size() != 1) throw Error(ErrorCode::BadConfig, "delimiter must be one character");
    cfg.schema.delimiter = value[0];
  } else if (key == "header") {
    cfg.schema.has_header = to_bool(key, value);
  } else if (key == "sample_rate") {
    const auto v = parse_double(value);
    if (!v || !(*v > 0)) throw Error(ErrorCode::BadConfig, "sample_rate must be positive");
    cfg.schema.sample_rate_hz = *v;
  } else {
    throw Error(ErrorCode::BadConfig, "unknown config key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::BadConfig, path + ":" + std::to_string(line_no) + ": expected key = value");
    apply(cfg, std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))));
  }
}

/// Flags shared by every subcommand. Values stay as text so that only flags
/// actually given override the config file.
struct SharedFlags {
  std::map<std::string, std::string> values;
  bool uniform_lbp = false;
  std::string config_path;
  std::string out;

  void attach(CLI::App* app, bool extraction, bool training) {
    app->add_option("--config", config_path, "flat key = value config file");
    app->add_option("--out", out, "output file or directory");
    const auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
      app->add_option(flag, values[key], help);
    };
    if (extraction) {
      opt("--width", "width", "matrix width (default: ceil(sqrt(L)))");
      opt("--pad", "pad", "zero|edge|truncate (default truncate)");
      opt("--kernel", "kernel", "odd moment kernel size (default 15)");
      opt("--thre", "thre", "EVM threshold (default 4225)");
      opt("--normalization", "normalization", "l1|counts (default l1)");
      opt("--descriptor", "descriptor", "lbp-bevm|lbp (default lbp-bevm)");
      opt("--max-samples", "max_samples", "leading samples kept per trace (default 1048576, 0 = all)");
      opt("--power-col", "power_column", "0-based power column (default 1)");
      opt("--time-col", "time_column", "0-based time column or none (default 0)");
      opt("--label-from", "label_source", "filename|column (default filename)");
      opt("--label-col", "label_column", "0-based label column (default 2)");
      opt("--delimiter", "delimiter", "field delimiter (default ,)");
      opt("--header", "header", "first data line is a header: true|false");
      opt("--sample-rate", "sample_rate", "trace sample rate in Hz (default 1)");
      app->add_flag("--uniform-lbp", uniform_lbp, "59-bin uniform-pattern histograms");
    }
    if (training) {
      opt("--learners", "learners", "trees in the ensemble (default 30)");
      opt("--max-splits", "max_splits", "split cap per tree (default 42000)");
      opt("--bootstrap", "bootstrap", "bootstrap-resample each tree: true|false (default true)");
      opt("--k", "k", "cross-validation folds (default 10)");
    }
    opt("--seed", "seed", "random seed (default 42)");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    cfg.ebt.seed = 42;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, value] : values) {
      if (!value.empty()) apply(cfg, key, value);
    }
    if (uniform_lbp) cfg.extraction.uniform_lbp = true;
    cfg.extraction.validate();
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    write_text(out_path, text);
}

std::string comment_block(const RunConfig& cfg) {
  std::string out;
  for (const auto& l : cfg.lines()) out += "# " + l + "\n";
  return out;
}

std::string features_text(const FeatureDataset& ds, const RunConfig& cfg) {
  std::ostringstream out;
  out << comment_block(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.classes[static_cast<std::size_t>(ds.labels[i])];
    for (double v : ds.rows[i]) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

void require_dir(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorCode::BadConfig, "--out directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  for (auto f : split_fields(text, ',')) {
    const auto t = trim(f);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

int warn_single_class(const FeatureDataset& ds) {
  if (ds.classes.size() < 2)
    std::cerr << "warning: training data has a single class ('" << ds.classes.front()
              << "'); every prediction will be that class\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"LBP-BEVM appliance signatures and ensemble bagged-tree identification"};
  app.require_subcommand(1);

  SharedFlags synth_flags, extract_flags, train_flags, classify_flags, evaluate_flags,
      sweep_flags, correlate_flags;

  auto* synth = app.add_subcommand("synth", "write a synthetic appliance trace corpus");
  SynthSpec spec;
  synth->add_option("--classes", spec.class_count, "appliance classes (default 6)");
  synth->add_option("--per-class", spec.signatures_per_class, "traces per class (default 40)");
  synth->add_option("--length", spec.trace_length, "samples per trace (default 8192)");
  synth->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma in watts (default 2)");
  synth_flags.attach(synth, false, false);

  std::string input;
  auto* extract = app.add_subcommand("extract", "trace CSV file/directory -> feature CSV");
  extract->add_option("input", input, "trace file or directory")->required();
  extract_flags.attach(extract, true, false);

  std::string features_path, model_path;
  auto* train = app.add_subcommand("train", "feature CSV -> EBT model");
  train->add_option("features", features_path, "feature CSV")->required();
  train_flags.attach(train, false, true);

  auto* classify = app.add_subcommand("classify", "model + feature CSV -> predictions");
  classify->add_option("model", model_path, "model file")->required();
  classify->add_option("features", features_path, "feature CSV")->required();
  classify_flags.attach(classify, false, false);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "stratified k-fold evaluation of a feature CSV");
  evaluate_cmd->add_option("features", features_path, "feature CSV")->required();
  evaluate_flags.attach(evaluate_cmd, false, true);

  std::string param, values_text;
  bool use_synthetic = false;
  auto* sweep = app.add_subcommand("sweep", "accuracy/F1 versus threshold or kernel size");
  sweep->add_option("input", input, "trace file or directory");
  sweep->add_flag("--synthetic", use_synthetic, "sweep the default synthetic corpus");
  sweep->add_option("--param", param, "thre|kernel")->required();
  sweep->add_option("--values", values_text, "comma-separated values")->required();
  sweep_flags.attach(sweep, true, true);

  auto* correlate = app.add_subcommand("correlate", "within- and cross-class NCC grids");
  correlate->add_option("features", features_path, "feature CSV")->required();
  std::size_t group_limit = 6;
  correlate->add_option("--per-group", group_limit, "rows per class in the within-class grids (default 6)");
  correlate_flags.attach(correlate, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      const RunConfig cfg = synth_flags.resolve();
      spec.seed = cfg.ebt.seed;
      require_dir(synth_flags.out);
      const LabeledDataset ds = generate_synthetic(spec);
      std::map<std::string, std::size_t> seen;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string& name = ds.classes[static_cast<std::size_t>(ds.labels[i])];
        char idx[16];
        std::snprintf(idx, sizeof idx, "%03zu", seen[name]++);
        write_trace_csv((fs::path(synth_flags.out) / (name + "_" + idx + ".csv")).string(),
                        ds.signals[i]);
      }
      std::cerr << "wrote " << ds.size() << " traces to " << synth_flags.out << "\n";
      return 0;
    }

    if (extract->parsed()) {
      const RunConfig cfg = extract_flags.resolve();
      const LabeledDataset traces = load_trace_csv(input, cfg.schema);
      const FeatureDataset ds = extract_dataset(traces, cfg.extraction);
      emit(extract_flags.out, features_text(ds, cfg));
      std::cerr << "extracted " << ds.size() << " signatures of dimension " << ds.dimension()
                << "\n";
      return 0;
    }

    if (train->parsed()) {
      const RunConfig cfg = train_flags.resolve();
      const FeatureDataset ds = load_features(features_path);
      warn_single_class(ds);
      const EbtModel model = train_ebt(ds.rows, ds.labels, cfg.ebt, ds.classes);
      emit(train_flags.out, serialize_model(model));
      return 0;
    }

    if (classify->parsed()) {
      const RunConfig cfg = classify_flags.resolve();
      const EbtModel model = load_model(model_path);
      const FeatureDataset ds = load_features(features_path);
      std::ostringstream out;
      out << comment_block(cfg) << "row,true,predicted\n";
      std::size_t matches = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto pred = model.classes[static_cast<std::size_t>(ensemble_predict(model, ds.rows[i]))];
        const auto& truth = ds.classes[static_cast<std::size_t>(ds.labels[i])];
        matches += pred == truth;
        out << i << ',' << truth << ',' << pred << '\n';
      }
      emit(classify_flags.out, out.str());
      std::cerr << "matched " << matches << " of " << ds.size() << " labels\n";
      return 0;
    }

    if (evaluate_cmd->parsed()) {
      const RunConfig cfg = evaluate_flags.resolve();
      const FeatureDataset ds = load_features(features_path);
      warn_single_class(ds);
      const EvalReport report = kfold_evaluate(ds, cfg.k, cfg.ebt);
      std::cout << report.to_table();
      if (!evaluate_flags.out.empty()) {
        require_dir(evaluate_flags.out);
        auto doc = nlohmann::json::parse(report.to_json());
        doc["config"] = cfg.to_json();
        doc["features"] = features_path;
        const fs::path dir(evaluate_flags.out);
        write_text((dir / "report.json").string(), doc.dump(2) + "\n");
        write_text((dir / "report.txt").string(), comment_block(cfg) + report.to_table());
        write_text((dir / "confusion.csv").string(), confusion_to_csv(report.confusion));
      }
      return 0;
    }

    if (sweep->parsed()) {
      const RunConfig base = sweep_flags.resolve();
      if (param != "thre" && param != "kernel")
        throw Error(ErrorCode::BadConfig, "--param must be thre or kernel");
      const auto values = split_values(values_text);
      if (values.size() < 2) throw Error(ErrorCode::BadConfig, "sweep needs at least two values");
      std::vector<RunConfig> runs;
      for (const auto& v : values) {
        RunConfig cfg = base;
        apply(cfg, param, v);
        cfg.extraction.validate();
        runs.push_back(cfg);
      }
      if (use_synthetic == !input.empty())
        throw Error(ErrorCode::BadConfig, "give either an input path or --synthetic");
      SynthSpec corpus;
      corpus.seed = base.ebt.seed;
      const LabeledDataset traces =
          use_synthetic ? generate_synthetic(corpus) : load_trace_csv(input, base.schema);
      std::ostringstream out;
      out << comment_block(base) << "# sweep = " << param << "\n" << param
          << ",accuracy,macro_f1\n";
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const FeatureDataset ds = extract_dataset(traces, runs[r].extraction);
        const EvalReport report = kfold_evaluate(ds, runs[r].k, runs[r].ebt);
        out << values[r] << ',' << format_double(report.accuracy) << ','
            << format_double(report.macro_f1) << '\n';
        std::cerr << param << " = " << values[r] << ": accuracy " << report.accuracy
                  << ", macro-F1 " << report.macro_f1 << "\n";
      }
      emit(sweep_flags.out, out.str());
      return 0;
    }

    if (correlate->parsed()) {
      const RunConfig cfg = correlate_flags.resolve();
      const FeatureDataset ds = load_features(features_path);
      require_dir(correlate_flags.out);
      const fs::path dir(correlate_flags.out);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (std::all_of(ds.rows[i].begin(), ds.rows[i].end(), [](double v) { return v == 0.0; }))
          throw Error(ErrorCode::ZeroVector, features_path + ": feature row " + std::to_string(i) +
                                                 " is all zero");
      }
      if (ds.size() < 2) throw Error(ErrorCode::BadConfig, "correlate needs at least two rows");

      double within_sum = 0.0, cross_sum = 0.0;
      std::size_t within_n = 0, cross_n = 0;
      for (std::size_t a = 0; a < ds.size(); ++a) {
        for (std::size_t b = a + 1; b < ds.size(); ++b) {
          const double v = ncc(ds.rows[a], ds.rows[b]);
          if (ds.labels[a] == ds.labels[b]) {
            within_sum += v;
            ++within_n;
          } else {
            cross_sum += v;
            ++cross_n;
          }
        }
      }

      FeatureRows firsts;
      std::vector<std::string> first_names;
      for (std::size_t c = 0; c < ds.classes.size(); ++c) {
        FeatureRows group;
        for (std::size_t i = 0; i < ds.size() && group.size() < group_limit; ++i) {
          if (ds.labels[i] != static_cast<ClassIndex>(c)) continue;
          if (group.empty()) {
            firsts.push_back(ds.rows[i]);
            first_names.push_back(ds.classes[c]);
          }
          group.push_back(ds.rows[i]);
        }
        if (group.size() >= 2)
          write_text((dir / ("ncc_within_" + ds.classes[c] + ".csv")).string(),
                     grid_to_csv(ncc_matrix(group)));
      }
      if (firsts.size() >= 2)
        write_text((dir / "ncc_cross.csv").string(), grid_to_csv(ncc_matrix(firsts), first_names));
      write_text((dir / "config.txt").string(), comment_block(cfg));

      std::cout << "within_class_pairs," << within_n << "\nwithin_class_mean_ncc,"
                << (within_n ? format_double(within_sum / static_cast<double>(within_n)) : "nan")
                << "\ncross_class_pairs," << cross_n << "\ncross_class_mean_ncc,"
                << (cross_n ? format_double(cross_sum / static_cast<double>(cross_n)) : "nan")
                << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace lbpbevm
