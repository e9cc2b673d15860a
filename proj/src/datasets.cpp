#include "lbpbevm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "lbpbevm/error.hpp"
#include "lbpbevm/parallel.hpp"
#include "lbpbevm/text.hpp"

namespace fs = std::filesystem;

namespace lbpbevm {

namespace {

std::string where(const std::string& path, std::size_t line) {
  return path + ": row " + std::to_string(line);
}

struct RawTrace {
  std::vector<double> samples;
  std::string label;
  std::string origin;
};

void read_trace_file(const std::string& path, const TraceSchema& schema,
                     std::vector<RawTrace>& out) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  const std::string file_label = label_from_filename(path);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = schema.has_header;
  std::size_t first_out = out.size();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_fields(text, schema.delimiter);
    const std::size_t needed =
        std::max({schema.power_column,
                  schema.label_source == LabelSource::Column ? schema.label_column : 0,
                  schema.time_column.value_or(0)}) + 1;
    if (fields.size() < needed)
      throw Error(ErrorCode::MissingColumn, where(path, line_no) + " has " +
                                                std::to_string(fields.size()) +
                                                " columns, need " + std::to_string(needed));
    const auto value = parse_double(fields[schema.power_column]);
    if (!value || !std::isfinite(*value))
      throw Error(ErrorCode::ParseError, where(path, line_no) + ": power value '" +
                                             std::string(trim(fields[schema.power_column])) +
                                             "' is not a finite number");
    if (*value < 0.0)
      throw Error(ErrorCode::NegativePower, where(path, line_no) + ": " + format_double(*value));
    std::string label = file_label;
    if (schema.label_source == LabelSource::Column) {
      label = std::string(trim(fields[schema.label_column]));
      if (label.empty())
        throw Error(ErrorCode::ParseError, where(path, line_no) + ": empty label");
    }
    if (out.size() == first_out || out.back().label != label) {
      std::string origin = path;
      if (schema.label_source == LabelSource::Column)
        origin += "#" + std::to_string(out.size() - first_out);
      out.push_back({{}, std::move(label), std::move(origin)});
    }
    out.back().samples.push_back(*value);
  }
  if (out.size() == first_out) throw Error(ErrorCode::EmptyDataset, path + " has no samples");
}

LabeledDataset assemble(std::vector<RawTrace> raw, double rate, std::string source) {
  std::set<std::string> names;
  for (const auto& r : raw) names.insert(r.label);
  LabeledDataset ds;
  ds.classes.assign(names.begin(), names.end());
  ds.source = std::move(source);
  for (auto& r : raw) {
    const auto it = std::lower_bound(ds.classes.begin(), ds.classes.end(), r.label);
    ds.labels.push_back(static_cast<ClassIndex>(it - ds.classes.begin()));
    ds.signals.emplace_back(std::move(r.samples), rate, r.label);
    ds.origins.push_back(std::move(r.origin));
  }
  return ds;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::string label_from_filename(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  return stem.substr(0, stem.find('_'));
}

LabeledDataset load_trace_csv(const std::string& path, const TraceSchema& schema) {
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::EmptyDataset, path + " contains no .csv files");
  } else if (fs::exists(path, ec)) {
    files.push_back(path);
  } else {
    throw Error(ErrorCode::IoError, path + " does not exist");
  }
  std::vector<RawTrace> raw;
  for (const auto& f : files) read_trace_file(f, schema, raw);
  return assemble(std::move(raw), schema.sample_rate_hz, path);
}

void write_trace_csv(const std::string& path, const PowerSignal& signal) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  const auto& s = signal.samples();
  for (std::size_t t = 0; t < s.size(); ++t)
    out << format_double(static_cast<double>(t) / signal.sample_rate_hz()) << ','
        << format_double(s[t]) << '\n';
}

FeatureDataset extract_dataset(const LabeledDataset& dataset, const ExtractionConfig& config) {
  config.validate();
  FeatureDataset out;
  out.rows.resize(dataset.size());
  out.labels = dataset.labels;
  out.classes = dataset.classes;
  out.source = dataset.source;
  parallel_for(dataset.size(), [&](std::size_t i) {
    try {
      out.rows[i] = extract_features(dataset.signals[i], config);
    } catch (const Error& e) {
      const std::string origin = i < dataset.origins.size() ? dataset.origins[i]
                                                            : "signal " + std::to_string(i);
      throw Error(e.code(), origin + ": " + e.what());
    }
  });
  return out;
}

void save_features(const std::string& path, const FeatureDataset& dataset,
                   const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.classes[static_cast<std::size_t>(dataset.labels[i])];
    for (double v : dataset.rows[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

FeatureDataset load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::vector<std::string> names;
  FeatureRows rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split_fields(text, ',');
    if (fields.size() < 2)
      throw Error(ErrorCode::ParseError, where(path, line_no) + ": expected label and values");
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = parse_double(fields[k]);
      if (!v || !std::isfinite(*v))
        throw Error(ErrorCode::ParseError, where(path, line_no) + ", column " +
                                               std::to_string(k + 1) + ": '" +
                                               std::string(fields[k]) + "'");
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::DimensionMismatch, where(path, line_no) + " has " +
                                                    std::to_string(row.size()) +
                                                    " values, earlier rows have " +
                                                    std::to_string(rows.front().size()));
    names.emplace_back(trim(fields[0]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, path + " has no feature rows");
  FeatureDataset ds;
  std::set<std::string> unique(names.begin(), names.end());
  ds.classes.assign(unique.begin(), unique.end());
  for (const auto& n : names)
    ds.labels.push_back(static_cast<ClassIndex>(
        std::lower_bound(ds.classes.begin(), ds.classes.end(), n) - ds.classes.begin()));
  ds.rows = std::move(rows);
  ds.source = path;
  return ds;
}

void SynthSpec::validate() const {
  if (class_count < 2) throw Error(ErrorCode::BadSpec, "class_count must be >= 2");
  if (signatures_per_class == 0) throw Error(ErrorCode::BadSpec, "signatures_per_class must be >= 1");
  if (trace_length == 0) throw Error(ErrorCode::BadSpec, "trace_length must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(ErrorCode::BadSpec, "noise_sigma must be finite and >= 0");
  if (!archetypes.empty() && archetypes.size() != class_count)
    throw Error(ErrorCode::BadSpec, std::to_string(archetypes.size()) + " archetypes for " +
                                        std::to_string(class_count) + " classes");
  for (const auto& a : archetypes) {
    if (!(a.duty_cycle > 0.0 && a.duty_cycle < 1.0))
      throw Error(ErrorCode::BadSpec, a.name + ": duty_cycle must lie in (0, 1)");
    if (a.cycle_period < 2) throw Error(ErrorCode::BadSpec, a.name + ": cycle_period must be >= 2");
    if (a.base_load < 0.0 || a.cycle_amplitude < 0.0 || a.spike_rate < 0.0 ||
        a.spike_rate > 1.0 || a.spike_height < 0.0)
      throw Error(ErrorCode::BadSpec, a.name + ": negative load or bad spike rate");
  }
}

std::vector<ApplianceArchetype> default_archetypes(std::size_t class_count) {
  static const std::vector<ApplianceArchetype> table = {
      {"fridge", 3.0, 120.0, 900, 0.35, 0.0005, 300.0},
      {"kettle", 1.0, 2000.0, 2400, 0.08, 0.0, 0.0},
      {"washer", 10.0, 500.0, 160, 0.6, 0.002, 800.0},
      {"tv", 80.0, 20.0, 64, 0.5, 0.0002, 50.0},
      {"microwave", 4.0, 1100.0, 300, 0.25, 0.001, 400.0},
      {"laptop", 35.0, 25.0, 45, 0.3, 0.003, 40.0},
  };
  std::vector<ApplianceArchetype> out;
  for (std::size_t c = 0; c < class_count; ++c) {
    ApplianceArchetype a = table[c % table.size()];
    if (c >= table.size()) {
      const double k = static_cast<double>(c / table.size());
      a.name += "_" + std::to_string(c / table.size());
      a.base_load *= 1.0 + 0.5 * k;
      a.cycle_period = static_cast<std::size_t>(static_cast<double>(a.cycle_period) * (1.0 + 0.37 * k));
      a.duty_cycle = std::clamp(a.duty_cycle * (1.0 + 0.2 * k), 0.05, 0.95);
    }
    out.push_back(std::move(a));
  }
  return out;
}

LabeledDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const auto archetypes =
      spec.archetypes.empty() ? default_archetypes(spec.class_count) : spec.archetypes;
  std::vector<RawTrace> raw(spec.class_count * spec.signatures_per_class);
  parallel_for(raw.size(), [&](std::size_t idx) {
    const std::size_t c = idx / spec.signatures_per_class;
    const std::size_t s = idx % spec.signatures_per_class;
    const ApplianceArchetype& a = archetypes[c];
    std::mt19937_64 gen(mix(mix(spec.seed, c), s));
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const auto period = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(static_cast<double>(a.cycle_period) *
                                                (1.0 + 0.03 * jitter(gen)))));
    const auto on_len = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(a.duty_cycle * static_cast<double>(period))), 1,
        period - 1);
    const double amplitude = a.cycle_amplitude * (1.0 + 0.05 * jitter(gen));
    const std::size_t phase = std::uniform_int_distribution<std::size_t>(0, period - 1)(gen);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::bernoulli_distribution spike_onset(a.spike_rate);
    std::uniform_real_distribution<double> spike_scale(0.5, 1.5);
    std::uniform_int_distribution<int> spike_len(1, 3);

    std::vector<double> x(spec.trace_length);
    int spike_left = 0;
    double spike_level = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      double v = a.base_load + (((t + phase) % period) < on_len ? amplitude : 0.0);
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(gen);
      if (a.spike_rate > 0.0) {
        if (spike_left == 0 && spike_onset(gen)) {
          spike_left = spike_len(gen);
          spike_level = a.spike_height * spike_scale(gen);
        }
        if (spike_left > 0) {
          v += spike_level;
          --spike_left;
        }
      }
      x[t] = std::max(v, 0.0);
    }
    raw[idx] = {std::move(x), a.name, "synthetic:" + a.name + "_" + std::to_string(s)};
  });
  return assemble(std::move(raw), 1.0,
                  "synthetic(seed=" + std::to_string(spec.seed) + ", classes=" +
                      std::to_string(spec.class_count) + ")");
}

}  // namespace lbpbevm
