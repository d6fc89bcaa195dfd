#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ecgnet/dataset.hpp"
#include "ecgnet/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "ecgnet_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& args) {
  static int call_id = 0;
  const auto out_path = work_dir() / ("stdout_" + std::to_string(call_id) + ".txt");
  const auto err_path = work_dir() / ("stderr_" + std::to_string(call_id) + ".txt");
  ++call_id;
  const std::string cmd = std::string(ECGNET_CLI_PATH) + " " + args + " >" + out_path.string() +
                          " 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
#ifdef WIFEXITED
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  r.code = status;
#endif
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string q(const fs::path& p) { return p.string(); }

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

}  // namespace

TEST(Cli, NoSubcommandFails) {
  const auto r = run("");
  EXPECT_NE(r.code, 0);
}

TEST(Cli, GenWritesDatasetAndClassCounts) {
  const auto out = work_dir() / "two_class.ecgd";
  const auto r = run("--seed 1 gen --classes N,ST --per-class 3 --duration 2 --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("class,count"), std::string::npos);
  EXPECT_NE(r.out.find("N,3"), std::string::npos);
  EXPECT_NE(r.out.find("ST,3"), std::string::npos);
  const auto ds = ecgnet::data::read_dataset(out.string());
  EXPECT_EQ(ds.records.size(), 6u);
  EXPECT_EQ(ds.num_classes, 2);
  for (const auto& rec : ds.records) EXPECT_EQ(rec.samples.size(), 1024u);
}

TEST(Cli, GenIsSeedDeterministic) {
  const auto a = work_dir() / "gen_a.ecgd";
  const auto b = work_dir() / "gen_b.ecgd";
  const auto c = work_dir() / "gen_c.ecgd";
  ASSERT_EQ(run("--seed 9 gen --classes N --per-class 2 --duration 1 --out " + q(a)).code, 0);
  ASSERT_EQ(run("--seed 9 gen --classes N --per-class 2 --duration 1 --out " + q(b)).code, 0);
  ASSERT_EQ(run("--seed 10 gen --classes N --per-class 2 --duration 1 --out " + q(c)).code, 0);
  EXPECT_TRUE(same_bytes(a, b));
  EXPECT_FALSE(same_bytes(a, c));
}

TEST(Cli, GenRejectsUnknownClass) {
  const auto r = run("gen --classes NOSUCH --per-class 1 --out " + q(work_dir() / "x.ecgd"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BadLabel"), std::string::npos);
}

TEST(Cli, TrainWritesModelHistoryAndAccuracy) {
  const auto ds = work_dir() / "train_set.ecgd";
  ASSERT_EQ(run("--seed 2 gen --classes N,ST --per-class 6 --duration 1 --out " + q(ds)).code, 0);
  const auto dir = work_dir() / "run1";
  const auto r = run("--seed 3 --out-dir " + q(dir) + " train --data " + q(ds) +
                     " --level 1 --iters 30 --batch 8");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("level,final_train_accuracy"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "h1.ecgm"));
  const auto hist = slurp(dir / "history_h1.csv");
  EXPECT_EQ(hist.rfind("iter,loss,lr\n", 0), 0u);
  const auto model = ecgnet::io::load_model((dir / "h1.ecgm").string());
  EXPECT_EQ(model.spec.num_classes, 2);
}

TEST(Cli, TrainTwiceSameSeedIsByteIdentical) {
  const auto ds = work_dir() / "train_set.ecgd";  // from the previous test's gen
  ASSERT_TRUE(fs::exists(ds));
  const auto d1 = work_dir() / "det_a";
  const auto d2 = work_dir() / "det_b";
  const std::string tail = " train --data " + q(ds) + " --level 1 --iters 25 --batch 8";
  ASSERT_EQ(run("--seed 7 --out-dir " + q(d1) + tail).code, 0);
  ASSERT_EQ(run("--seed 7 --out-dir " + q(d2) + tail).code, 0);
  EXPECT_TRUE(same_bytes(d1 / "h1.ecgm", d2 / "h1.ecgm"));
  EXPECT_TRUE(same_bytes(d1 / "history_h1.csv", d2 / "history_h1.csv"));
}

TEST(Cli, TrainRequiresLevelChoice) {
  const auto ds = work_dir() / "train_set.ecgd";
  const auto r = run("train --data " + q(ds));
  EXPECT_NE(r.code, 0);
}

TEST(Cli, EvalPrintsFoldAndMeanRows) {
  const auto ds = work_dir() / "train_set.ecgd";
  const auto model = work_dir() / "run1" / "h1.ecgm";
  ASSERT_TRUE(fs::exists(model));
  const auto r = run("--seed 4 eval --data " + q(ds) + " --model " + q(model) +
                     " --level 1 --folds 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fold,accuracy"), std::string::npos);
  EXPECT_NE(r.out.find("mean,"), std::string::npos);
  EXPECT_NE(r.out.find("std,"), std::string::npos);
  EXPECT_NE(r.out.find("class,sensitivity,specificity_paper,f1"), std::string::npos);
}

TEST(Cli, FuseReportsEveryLevelAndEmitsWeights) {
  const auto ds = work_dir() / "fuse_set.ecgd";
  ASSERT_EQ(run("--seed 5 gen --classes N,ST --per-class 4 --duration 2 --out " + q(ds)).code, 0);
  const auto bank = work_dir() / "bank";
  for (int s : {1, 2}) {
    ASSERT_EQ(run("--seed 6 --out-dir " + q(bank) + " train --data " + q(ds) + " --level " +
                  std::to_string(s) + " --iters 20 --batch 8")
                  .code,
              0);
  }
  const auto r = run("fuse --data " + q(ds) + " --bank-dir " + q(bank) +
                     " --scheme geometric --max-level 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("level,accuracy,mean_f1"), std::string::npos);
  EXPECT_NE(r.out.find("\n1,"), std::string::npos);
  EXPECT_NE(r.out.find("\n2,"), std::string::npos);
  EXPECT_NE(r.err.find("fusion weights"), std::string::npos);
  EXPECT_NE(r.err.find("geometric"), std::string::npos);
}

TEST(Cli, BenchReportsFlopsAndTiming) {
  const auto model = work_dir() / "run1" / "h1.ecgm";
  const auto r = run("bench --model " + q(model) + " --batch 2 --repeats 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("level,flops,mean_ms,std_ms"), std::string::npos);
  EXPECT_NE(r.out.find("\n1,"), std::string::npos);
}

TEST(Cli, BenchRejectsNonPositiveRepeats) {
  const auto model = work_dir() / "run1" / "h1.ecgm";
  EXPECT_NE(run("bench --model " + q(model) + " --repeats 0").code, 0);
}

TEST(Cli, InspectModelShowsShapeTrace) {
  const auto model = work_dir() / "run1" / "h1.ecgm";
  const auto r = run("inspect --model " + q(model));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("layer,type,output"), std::string::npos);
  EXPECT_NE(r.out.find("params,"), std::string::npos);
  EXPECT_NE(r.out.find("flops,"), std::string::npos);
}

TEST(Cli, InspectDatasetShowsCounts) {
  const auto ds = work_dir() / "train_set.ecgd";
  const auto r = run("inspect --data " + q(ds));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("records,12"), std::string::npos);
  EXPECT_NE(r.out.find("classes,2"), std::string::npos);
}

TEST(Cli, InspectCorruptModelFailsWithBadMagic) {
  const auto bad = work_dir() / "corrupt.ecgm";
  std::ofstream(bad) << "this is not a model";
  const auto r = run("inspect --model " + q(bad));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos);
}

TEST(Cli, ExportWritesSpectrogramGrid) {
  const auto ds = work_dir() / "export_set.ecgd";
  ASSERT_EQ(run("--seed 8 gen --classes N --per-class 1 --duration 1 --out " + q(ds)).code, 0);
  const auto csv = work_dir() / "spec.csv";
  const auto r = run("export --record " + q(ds) + " --index 0 --out " + q(csv));
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(csv);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << "row " << rows;
  }
  EXPECT_EQ(rows, 32);
}

TEST(Cli, ExportFromCsvInput) {
  const auto csv_in = work_dir() / "raw.csv";
  {
    std::ofstream os(csv_in);
    os << "0";
    for (int i = 0; i < 512; ++i) os << "," << 0.001 * i;
    os << "\n";
  }
  const auto out = work_dir() / "spec_from_csv.csv";
  const auto r = run("export --record " + q(csv_in) + " --out " + q(out));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out));
}

TEST(Cli, ExportIndexOutOfRangeFails) {
  const auto ds = work_dir() / "export_set.ecgd";
  const auto r = run("export --record " + q(ds) + " --index 99 --out " +
                     q(work_dir() / "nope.csv"));
  EXPECT_EQ(r.code, 1);
}
