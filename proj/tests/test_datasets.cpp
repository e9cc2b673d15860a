#include <numeric>
#include <set>

#include "doctest.h"
#include "lbpbevm/datasets.hpp"
#include "lbpbevm/error.hpp"
#include "temp_dir.hpp"

using namespace lbpbevm;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("three-row trace file") {
  TempDir dir;
  const auto path = dir.write("meter.csv", "0,120.5\n1,121.0\n2,0.0\n");
  const LabeledDataset ds = load_trace_csv(path);
  REQUIRE(ds.size() == 1);
  CHECK(ds.signals[0].samples() == std::vector<double>{120.5, 121.0, 0.0});
  CHECK(ds.classes == std::vector<std::string>{"meter"});
}

TEST_CASE("bad power values") {
  TempDir dir;
  const auto nan_file = dir.write("a.csv", "0,NaN\n1,2\n");
  CHECK(code_of([&] { load_trace_csv(nan_file); }) == ErrorCode::ParseError);
  try {
    load_trace_csv(nan_file);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  const auto neg = dir.write("b.csv", "0,1\n1,-2\n");
  CHECK(code_of([&] { load_trace_csv(neg); }) == ErrorCode::NegativePower);
  const auto narrow = dir.write("c.csv", "5\n");
  CHECK(code_of([&] { load_trace_csv(narrow); }) == ErrorCode::MissingColumn);
  const auto text = dir.write("d.csv", "0,abc\n");
  CHECK(code_of([&] { load_trace_csv(text); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { load_trace_csv(dir.file("missing.csv")); }) == ErrorCode::IoError);
}

TEST_CASE("directory with filename labels in lexicographic order") {
  TempDir dir;
  for (const char* name : {"tv_2.csv", "coffee_1.csv", "tv_1.csv", "coffee_3.csv", "coffee_2.csv", "tv_3.csv"})
    dir.write(name, "0,1\n1,2\n2,3\n");
  dir.write("notes.txt", "ignored");
  const LabeledDataset ds = load_trace_csv(dir.path().string());
  REQUIRE(ds.size() == 6);
  CHECK(ds.classes == std::vector<std::string>{"coffee", "tv"});
  CHECK(ds.labels == std::vector<ClassIndex>{0, 0, 0, 1, 1, 1});
  CHECK(ds.origins[0].find("coffee_1.csv") != std::string::npos);
  CHECK(ds.origins[5].find("tv_3.csv") != std::string::npos);
  CHECK(label_from_filename("/x/y/fridge_day_12.csv") == "fridge");
  CHECK(label_from_filename("kettle.csv") == "kettle");
}

TEST_CASE("label column splits runs into signals") {
  TempDir dir;
  TraceSchema schema;
  schema.label_source = LabelSource::Column;
  schema.label_column = 2;
  schema.has_header = true;
  schema.delimiter = ';';
  const auto path = dir.write("whited.csv",
                              "t;watts;device\n# comment\n0;1;fan\n1;2;fan\n\n2;9;lamp\n3;8;lamp\n4;3;fan\n");
  const LabeledDataset ds = load_trace_csv(path, schema);
  REQUIRE(ds.size() == 3);
  CHECK(ds.classes == std::vector<std::string>{"fan", "lamp"});
  CHECK(ds.labels == std::vector<ClassIndex>{0, 1, 0});
  CHECK(ds.signals[1].samples() == std::vector<double>{9, 8});
  CHECK(ds.signals[2].samples() == std::vector<double>{3});
}

TEST_CASE("feature CSV round trip") {
  TempDir dir;
  FeatureDataset ds;
  ds.classes = {"fan", "lamp"};
  ds.rows = {{0.1, 1.0 / 3.0, 2e-17}, {1e300, 0.0, 123456.789012345678}};
  ds.labels = {1, 0};
  save_features(dir.file("f.csv"), ds, {"kernel = 15"});
  CHECK(slurp(dir.file("f.csv")).rfind("# kernel = 15\n", 0) == 0);
  const FeatureDataset back = load_features(dir.file("f.csv"));
  CHECK(back.classes == ds.classes);
  CHECK(back.labels == ds.labels);
  CHECK(back.rows == ds.rows);
}

TEST_CASE("feature CSV errors") {
  TempDir dir;
  const auto ragged = dir.write("r.csv", "a,1,2\nb,1\n");
  CHECK(code_of([&] { load_features(ragged); }) == ErrorCode::DimensionMismatch);
  const auto empty = dir.write("e.csv", "");
  CHECK(code_of([&] { load_features(empty); }) == ErrorCode::EmptyDataset);
  const auto comments = dir.write("c.csv", "# only comments\n");
  CHECK(code_of([&] { load_features(comments); }) == ErrorCode::EmptyDataset);
  const auto bad = dir.write("b.csv", "a,1,x\n");
  CHECK(code_of([&] { load_features(bad); }) == ErrorCode::ParseError);
}

TEST_CASE("noise-free synthetic traces are exact square waves") {
  SynthSpec spec;
  spec.class_count = 2;
  spec.signatures_per_class = 3;
  spec.trace_length = 3000;
  spec.noise_sigma = 0.0;
  spec.archetypes = {{"a", 5.0, 100.0, 50, 0.3, 0.0, 0.0}, {"b", 20.0, 40.0, 80, 0.6, 0.0, 0.0}};
  const LabeledDataset ds = generate_synthetic(spec);
  REQUIRE(ds.size() == 6);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.signals[i].samples();
    std::set<double> levels(s.begin(), s.end());
    CHECK(levels.size() == 2);
    // Find the period: smallest lag with s[t] == s[t + lag] everywhere.
    std::size_t period = 0;
    for (std::size_t lag = 2; lag < 200 && period == 0; ++lag) {
      bool same = true;
      for (std::size_t t = 0; t + lag < s.size() && same; ++t) same = s[t] == s[t + lag];
      if (same) period = lag;
    }
    const double nominal = ds.classes[static_cast<std::size_t>(ds.labels[i])] == "a" ? 50 : 80;
    CHECK(std::abs(static_cast<double>(period) - nominal) <= 0.031 * nominal + 0.5);
  }
  const LabeledDataset again = generate_synthetic(spec);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(again.signals[i].samples() == ds.signals[i].samples());
  // Traces of different archetypes never coincide.
  CHECK(ds.signals[0].samples() != ds.signals[3].samples());
}

TEST_CASE("synthetic generator determinism with noise and spikes") {
  SynthSpec spec;
  spec.signatures_per_class = 2;
  spec.trace_length = 1024;
  const LabeledDataset a = generate_synthetic(spec);
  const LabeledDataset b = generate_synthetic(spec);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.signals[i].samples() == b.signals[i].samples());
    for (double v : a.signals[i].samples()) CHECK(v >= 0.0);
  }
  spec.seed = 43;
  CHECK(generate_synthetic(spec).signals[0].samples() != a.signals[0].samples());
  CHECK(a.classes.size() == 6);
}

TEST_CASE("default archetypes differ pairwise in at least two parameters") {
  const auto table = default_archetypes(9);
  REQUIRE(table.size() == 9);
  for (std::size_t x = 0; x < table.size(); ++x)
    for (std::size_t y = x + 1; y < table.size(); ++y) {
      const auto& a = table[x];
      const auto& b = table[y];
      const int differing = (a.base_load != b.base_load) + (a.cycle_amplitude != b.cycle_amplitude) +
                            (a.cycle_period != b.cycle_period) + (a.duty_cycle != b.duty_cycle) +
                            (a.spike_rate != b.spike_rate);
      CHECK(differing >= 2);
      CHECK(a.name != b.name);
    }
}

TEST_CASE("bad synth specs") {
  SynthSpec spec;
  spec.class_count = 1;
  CHECK(code_of([&] { generate_synthetic(spec); }) == ErrorCode::BadSpec);
  spec = SynthSpec{};
  spec.class_count = 2;
  spec.archetypes = {{"a", 1, 1, 10, 1.0, 0, 0}, {"b", 1, 2, 10, 0.5, 0, 0}};
  CHECK(code_of([&] { generate_synthetic(spec); }) == ErrorCode::BadSpec);
  spec.archetypes.pop_back();
  CHECK(code_of([&] { generate_synthetic(spec); }) == ErrorCode::BadSpec);
}

TEST_CASE("trace writer feeds the loader") {
  TempDir dir;
  const PowerSignal s(std::vector<double>{1.5, 0.0, 1e-7, 2500.25}, 2.0);
  write_trace_csv(dir.file("kettle_01.csv"), s);
  const LabeledDataset ds = load_trace_csv(dir.path().string());
  CHECK(ds.signals[0].samples() == s.samples());
  CHECK(slurp(dir.file("kettle_01.csv")).rfind("0,1.5\n0.5,0\n", 0) == 0);
}

TEST_CASE("dataset extraction names the failing signal") {
  LabeledDataset ds;
  ds.signals = {PowerSignal(std::vector<double>(900, 1.0)), PowerSignal(std::vector<double>(50, 1.0))};
  ds.labels = {0, 0};
  ds.classes = {"x"};
  ds.origins = {"long.csv", "short.csv"};
  try {
    extract_dataset(ds, ExtractionConfig{});
    FAIL("expected SignalTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SignalTooShort);
    CHECK(std::string(e.what()).find("short.csv") != std::string::npos);
  }
}
