#include <iostream>
#include <sstream>

#include "doctest.h"
#include "lbpbevm/cli.hpp"
#include "lbpbevm/datasets.hpp"
#include "temp_dir.hpp"

using namespace lbpbevm;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lbpbevm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::size_t field_count(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

/// Small two- or three-class trace corpus written through the synth command.
std::string make_corpus(const TempDir& dir, int classes, int per_class, int length = 2048) {
  const std::string traces = dir.file("traces");
  const Run r = run({"synth", "--out", traces, "--classes", std::to_string(classes), "--per-class",
                     std::to_string(per_class), "--length", std::to_string(length)});
  REQUIRE(r.code == 0);
  return traces;
}

}  // namespace

TEST_CASE("extract writes one row per trace with the resolved config") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 3);
  const Run r = run({"extract", traces, "--out", dir.file("f.csv")});
  CHECK(r.code == 0);
  const std::string text = slurp(dir.file("f.csv"));
  CHECK(text.find("# kernel = 15\n") != std::string::npos);
  CHECK(text.find("# thre = 4225\n") != std::string::npos);
  const auto rows = data_lines(text);
  REQUIRE(rows.size() == 6);
  CHECK(field_count(rows[0]) == 513);

  const Run again = run({"extract", traces});
  CHECK(again.out == text);
}

TEST_CASE("extract errors exit 1 with the error name") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 3);
  const Run r = run({"extract", traces, "--width", "2"});
  CHECK(r.code == 1);
  CHECK(r.err.find("WidthTooSmall") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(run({"extract", dir.file("nope")}).code == 1);
  CHECK(run({"extract", traces, "--kernel", "6"}).err.find("EvenKernel") != std::string::npos);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("uniform LBP rows have 118 values") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 3);
  const Run r = run({"extract", traces, "--uniform-lbp"});
  REQUIRE(r.code == 0);
  CHECK(field_count(data_lines(r.out).front()) == 119);
  const Run plain = run({"extract", traces, "--descriptor", "lbp"});
  CHECK(field_count(data_lines(plain.out).front()) == 257);
}

TEST_CASE("plain tree reproduces its training labels") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 3, 6);
  REQUIRE(run({"extract", traces, "--out", dir.file("f.csv")}).code == 0);
  REQUIRE(run({"train", dir.file("f.csv"), "--learners", "1", "--bootstrap", "false", "--out",
               dir.file("m.json")})
              .code == 0);
  const Run r = run({"classify", dir.file("m.json"), dir.file("f.csv")});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  REQUIRE(rows.size() == 19);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto a = rows[i].find(',') + 1;
    const auto b = rows[i].find(',', a);
    CHECK(rows[i].substr(a, b - a) == rows[i].substr(b + 1));
  }
  CHECK(r.err.find("matched 18 of 18") != std::string::npos);
}

TEST_CASE("train is reproducible") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 5);
  REQUIRE(run({"extract", traces, "--out", dir.file("f.csv")}).code == 0);
  const Run a = run({"train", dir.file("f.csv"), "--learners", "4", "--seed", "9"});
  const Run b = run({"train", dir.file("f.csv"), "--learners", "4", "--seed", "9"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("evaluate writes reports and rejects oversize k") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 6);
  REQUIRE(run({"extract", traces, "--out", dir.file("f.csv")}).code == 0);
  const Run r = run({"evaluate", dir.file("f.csv"), "--k", "3", "--learners", "5", "--out",
                     dir.file("report")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("accuracy:") != std::string::npos);
  const std::string json = slurp(dir.file("report/report.json"));
  CHECK(json.find("\"protocol\": \"stratified 3-fold, seed 42\"") != std::string::npos);
  CHECK(json.find("\"config\"") != std::string::npos);
  CHECK(slurp(dir.file("report/confusion.csv")).rfind("true\\predicted,", 0) == 0);

  const Run bad = run({"evaluate", dir.file("f.csv"), "--k", "7"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ClassTooSmall") != std::string::npos);
}

TEST_CASE("sweeps produce one row per value") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 4, 1600);
  const Run thre = run({"sweep", traces, "--param", "thre", "--values", "4200,4225,4250", "--k", "2",
                        "--learners", "3"});
  REQUIRE(thre.code == 0);
  auto rows = data_lines(thre.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "thre,accuracy,macro_f1");
  CHECK(rows[1].rfind("4200,", 0) == 0);
  CHECK(rows[3].rfind("4250,", 0) == 0);

  const Run kernel = run({"sweep", traces, "--param", "kernel", "--values", "5,9,15", "--k", "2",
                          "--learners", "3"});
  REQUIRE(kernel.code == 0);
  CHECK(data_lines(kernel.out).size() == 4);

  const Run even = run({"sweep", traces, "--param", "kernel", "--values", "5,8"});
  CHECK(even.code == 1);
  CHECK(even.err.find("EvenKernel") != std::string::npos);
  CHECK(run({"sweep", traces, "--param", "thre", "--values", "4225"}).code == 1);
}

TEST_CASE("correlate grids") {
  TempDir dir;
  dir.write("same.csv", "fan,1,2,3\nfan,1,2,3\n");
  const Run r = run({"correlate", dir.file("same.csv"), "--out", dir.file("ncc")});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir.file("ncc/ncc_within_fan.csv")) == "1,1\n1,1\n");

  dir.write("zero.csv", "fan,1,2\nlamp,0,0\n");
  const Run z = run({"correlate", dir.file("zero.csv"), "--out", dir.file("z")});
  CHECK(z.code == 1);
  CHECK(z.err.find("ZeroVector") != std::string::npos);
  CHECK(z.err.find("row 1") != std::string::npos);

  const std::string traces = make_corpus(dir, 6, 6);
  REQUIRE(run({"extract", traces, "--out", dir.file("f.csv")}).code == 0);
  const Run c = run({"correlate", dir.file("f.csv"), "--out", dir.file("grids")});
  REQUIRE(c.code == 0);
  const FeatureDataset cross = load_features(dir.file("f.csv"));
  for (const auto& name : cross.classes) {
    const auto grid = data_lines(slurp(dir.file("grids/ncc_within_" + name + ".csv")));
    CHECK(grid.size() == 6);
    CHECK(grid[0].rfind("1,", 0) == 0);
  }
  CHECK(data_lines(slurp(dir.file("grids/ncc_cross.csv"))).size() == 7);

  double within = 0, across = 0;
  std::istringstream in(c.out);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("within_class_mean_ncc,", 0) == 0) within = std::stod(line.substr(22));
    if (line.rfind("cross_class_mean_ncc,", 0) == 0) across = std::stod(line.substr(21));
  }
  CHECK(within > across);
}

TEST_CASE("config file values yield to explicit flags") {
  TempDir dir;
  const std::string traces = make_corpus(dir, 2, 3);
  dir.write("run.conf", "# extraction\nkernel = 9\nthre = 100\nnormalization = counts\n");
  const Run r = run({"extract", traces, "--config", dir.file("run.conf"), "--thre", "300"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# kernel = 9\n") != std::string::npos);
  CHECK(r.out.find("# thre = 300\n") != std::string::npos);
  CHECK(r.out.find("# normalization = counts\n") != std::string::npos);

  dir.write("bad.conf", "colour = blue\n");
  const Run bad = run({"extract", traces, "--config", dir.file("bad.conf")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("BadConfig") != std::string::npos);
}
