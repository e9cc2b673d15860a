#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbpbevm/ebt.hpp"
#include "lbpbevm/features.hpp"
#include "lbpbevm/signal2d.hpp"

namespace lbpbevm {

/// Labelled power traces. `labels[i]` indexes `classes`, which is sorted by
/// name.
struct LabeledDataset {
  std::vector<PowerSignal> signals;
  std::vector<ClassIndex> labels;
  std::vector<std::string> classes;
  std::vector<std::string> origins;  ///< file (and segment) each signal came from
  std::string source;

  std::size_t size() const noexcept { return signals.size(); }
};

enum class LabelSource {
  Filename,  ///< file stem up to the first '_' (coffee_03.csv -> coffee)
  Column,    ///< per-row label column; each run of equal labels is one signal
};

struct TraceSchema {
  std::optional<std::size_t> time_column = 0;
  std::size_t power_column = 1;
  LabelSource label_source = LabelSource::Filename;
  std::size_t label_column = 2;
  char delimiter = ',';
  bool has_header = false;
  double sample_rate_hz = 1.0;
};

/// Reads one trace file or every *.csv file of a directory in lexicographic
/// path order. Blank lines and lines starting with '#' are skipped; rows are
/// reported 1-based by file line. Throws ParseError, NegativePower,
/// MissingColumn, EmptyDataset or IoError.
LabeledDataset load_trace_csv(const std::string& path, const TraceSchema& schema = {});

/// Label a trace file would get under LabelSource::Filename.
std::string label_from_filename(const std::string& path);

/// "t,power" rows, t in seconds.
void write_trace_csv(const std::string& path, const PowerSignal& signal);

/// Extracts one feature row per signal, in dataset order.
FeatureDataset extract_dataset(const LabeledDataset& dataset, const ExtractionConfig& config);

/// Rows "label,v1,...,vD" with shortest round-trip decimals. `comments` are
/// written first as "# " lines.
void save_features(const std::string& path, const FeatureDataset& dataset,
                   const std::vector<std::string>& comments = {});
/// Throws ParseError, DimensionMismatch, EmptyDataset or IoError.
FeatureDataset load_features(const std::string& path);

struct ApplianceArchetype {
  std::string name;
  double base_load = 0.0;        ///< watts while idle
  double cycle_amplitude = 0.0;  ///< watts added while the cycle is on
  std::size_t cycle_period = 0;  ///< samples per on/off cycle
  double duty_cycle = 0.5;       ///< on fraction, in (0, 1)
  double spike_rate = 0.0;       ///< spike onsets per sample
  double spike_height = 0.0;     ///< mean spike height in watts
};

struct SynthSpec {
  std::size_t class_count = 6;
  std::size_t signatures_per_class = 40;
  std::size_t trace_length = 8192;
  double noise_sigma = 2.0;
  std::uint64_t seed = 42;
  /// One per class; empty selects default_archetypes(class_count).
  std::vector<ApplianceArchetype> archetypes;

  /// Throws BadSpec.
  void validate() const;
};

/// Built-in appliance table (fridge, kettle, ...) for up to six classes;
/// further classes are derived deterministically from the first six.
std::vector<ApplianceArchetype> default_archetypes(std::size_t class_count);

/// Square-wave cycling on a base load with per-trace phase, period and
/// amplitude jitter, Gaussian noise and random spikes, clipped at 0.
/// Deterministic under spec.seed.
LabeledDataset generate_synthetic(const SynthSpec& spec);

}  // namespace lbpbevm
