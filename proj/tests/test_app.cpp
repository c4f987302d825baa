#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ratingxva/app/cli.hpp"

using namespace ratingxva;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ratingxva_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string small_config(const fs::path& out) {
  const std::string d = RATINGXVA_DATA_DIR;
  return "ratings.labels = A, B, C, D\n"
         "grid.steps_per_year = 12\n"
         "seed = 5\n"
         "data.cohort = " + d + "/table2b_cohort.csv\n"
         "data.pd = " + d + "/pd_case2.csv\n"
         "model.params = " + d + "/table6_params.csv\n"
         "simulate.trajectories = 12\n"
         "simulate.checkpoints = 0.25, 1\n"
         "calibrate_hist.trajectories = 8\n"
         "calibrate_hist.max_iterations = 1\n"
         "calibrate_rn.trajectories = 10\n"
         "calibrate_rn.max_iterations = 2\n"
         "ssa.m1 = 3\nssa.m2 = 10\n"
         "xva.m1 = 3\nxva.m2 = 10\n"
         "csa.postings_per_year = 12\n"
         "plot.paths = 4\n"
         "output.dir = " + out.string() + "\n";
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ratingxva");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return app::read_file(p.string()); }

}  // namespace

// ---- file formats ----

TEST(MatrixIo, RoundTripsExactly) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(3, 3);
  for (int i = 0; i < 9; ++i) m.data()[i] = u(gen) * 1e-3;
  const Vector w = Eigen::Vector3d(0.1, 1.0 / 3.0, 0.0);
  std::stringstream ss;
  write_rating_matrix(ss, {"A", "B", "D"}, m, &w);
  const auto back = read_rating_matrix(ss);
  EXPECT_EQ(back.labels, (std::vector<std::string>{"A", "B", "D"}));
  EXPECT_EQ(back.values, m);
  ASSERT_TRUE(back.withdrawal);
  EXPECT_EQ(*back.withdrawal, w);
}

TEST(MatrixIo, ParseErrorsCarryLocation) {
  std::istringstream bad("from,A,B\nA,1,x\nB,0,1\n");
  try {
    read_rating_matrix(bad, "m.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  std::istringstream mislabeled("from,A,B\nB,1,0\nA,0,1\n");
  EXPECT_THROW(read_rating_matrix(mislabeled), ParseError);
}

TEST(ParamsIo, RoundTripsExactly) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Vector x(27);
  for (int i = 0; i < 27; ++i) x[i] = u(gen);
  const SdeParams p = SdeParams::unpack(4, x);
  std::stringstream ss;
  write_sde_params(ss, p);
  const SdeParams q = read_sde_params(ss, 4);
  EXPECT_EQ(q.packed(), p.packed());
}

TEST(ParamsIo, LabelAddressedRowsInAnyOrder) {
  const SdeParams p = read_sde_params_file(oracle::data("table6_params.csv"), 4);
  const BasisIndexMap basis(4);
  // The 1-4 coordinate carries the smallest volatility parameters.
  EXPECT_DOUBLE_EQ(p.a[static_cast<Eigen::Index>(basis.coordinate(0, 3))], 0.787);
  EXPECT_DOUBLE_EQ(p.sigma[static_cast<Eigen::Index>(basis.coordinate(2, 3))], 0.051);
  std::istringstream dup("from-to,a,b,sigma\n1-2,1,1,1\n1-2,1,1,1\n2-1,1,1,1\n");
  EXPECT_THROW(read_sde_params(dup, 2), ParseError);
  std::istringstream missing("from-to,a,b,sigma\n");
  EXPECT_THROW(read_sde_params(missing, 2), ParseError);
  std::istringstream header("from,a,b,sigma\n1-2,1,1,1\n");
  EXPECT_THROW(read_sde_params(header, 2), ParseError);
}

TEST(ParamsIo, PdTargetsAndMeasure) {
  const auto pd = read_pd_targets_file(oracle::data("pd_case2.csv"), {"A", "B", "C", "D"});
  EXPECT_EQ(pd.pd[3], 1.0);
  EXPECT_THROW(read_pd_targets_file(oracle::data("pd_case2.csv"), {"A", "B", "X", "D"}), ParseError);
  MeasureChange m{MeasureKind::jlt, Eigen::Vector4d(0.1 + 0.2, 1.0 / 7.0, 3.0, 1.0)};
  std::stringstream ss;
  write_measure(ss, m);
  const auto back = read_measure(ss, 4);
  EXPECT_EQ(back.kind, MeasureKind::jlt);
  EXPECT_EQ(back.h, m.h);
}

// ---- configuration ----

TEST(Config, Grammar) {
  const auto c = app::Config::parse_string("# comment\n a.b = 1/12  # trailing\nlist = x, y ,z\nflag = yes\nbig = inf\n", "t.conf");
  EXPECT_DOUBLE_EQ(*c.number("a.b"), 1.0 / 12.0);
  EXPECT_EQ(*c.list("list"), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_TRUE(*c.boolean("flag"));
  EXPECT_TRUE(std::isinf(*c.number("big")));
  EXPECT_NO_THROW(c.check_all_used());
}

TEST(Config, Errors) {
  EXPECT_THROW(app::Config::parse_string("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(app::Config::parse_string("A = 1\n"), ParseError);
  EXPECT_THROW(app::Config::parse_string("novalue\n"), ParseError);
  const auto c = app::Config::parse_string("n = 1.5\nunused = 3\n", "t.conf");
  try {
    c.integer("n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("t.conf:1: n:"), std::string::npos);
  }
  EXPECT_THROW(c.check_all_used(), ValidationError);
}

TEST(RunConfig, DefaultsAndOverrides) {
  const auto c = app::Config::parse_string("seed = 4\n");
  const auto r = app::load_run_config(c, {9, std::string("elsewhere")});
  EXPECT_EQ(r.seed, 9u);
  EXPECT_EQ(r.output_dir, "elsewhere");
  EXPECT_EQ(r.k(), 4);
  EXPECT_EQ(r.grid().steps(), 120);
  EXPECT_EQ(r.ssa_initial, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(r.csa.threshold_bank, (std::vector<double>{10e6, 5e6, 0, 0}));
  EXPECT_EQ(r.portfolio.seed, 9u);
}

TEST(RunConfig, RejectsInconsistencies) {
  using app::Config;
  EXPECT_THROW(app::load_run_config(Config::parse_string("grid.steps_per_year = 12\n")), ValidationError);  // no seed
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\ngrid.steps_per_year = 12\nsimulate.checkpoints = 0.1\n")),
               ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\nmeasure.h = 1, 2, 1\n")), ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\ncsa.threshold_bank = 1, 2\n")), ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\nxva.bank_rating = AAA\n")), ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\nxva.regimes = partial\n")), ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\ncalibrate_rn.lower = 0\n")), ValidationError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\nmodel.params = /nonexistent/p.csv\n")), IoError);
  EXPECT_THROW(app::load_run_config(Config::parse_string("seed = 1\ntypo.key = 1\n")), ValidationError);
}

// ---- command line ----

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit_codes");
  EXPECT_EQ(cli({"--config", (dir / "missing.conf").string(), "simulate"}).code, app::kIo);
  write_text(dir / "bad.conf", "seed = 1\nbogus = 2\n");
  const auto bad = cli({"--config", (dir / "bad.conf").string(), "simulate"});
  EXPECT_EQ(bad.code, app::kValidation);
  EXPECT_NE(bad.err.find("bogus"), std::string::npos);
  EXPECT_EQ(cli({"--frobnicate", "simulate"}).code, app::kValidation);
  EXPECT_EQ(cli({"simulate"}).code, app::kValidation);

  // K mismatch between the labels and the parameter file is caught before compute.
  write_text(dir / "k.conf", "seed = 1\nratings.labels = A, B, D\nmodel.params = " + oracle::data("table6_params.csv") + "\n");
  const auto k = cli({"--config", (dir / "k.conf").string(), "--out", (dir / "k").string(), "simulate"});
  EXPECT_EQ(k.code, app::kValidation);
  EXPECT_FALSE(fs::exists(dir / "k" / "checkpoint_stats.csv"));
}

TEST(Cli, ReportOnEmptyAndPartialDirectories) {
  const auto dir = scratch("report");
  const auto empty = cli({"--out", dir.string(), "report"});
  EXPECT_EQ(empty.code, app::kIo);
  EXPECT_NE(empty.err.find("xva.csv"), std::string::npos);
  EXPECT_NE(empty.err.find("params.csv"), std::string::npos);

  write_text(dir / "run.conf", small_config(dir));
  ASSERT_EQ(cli({"--config", (dir / "run.conf").string(), "calibrate-rn"}).code, 0);
  const auto partial = cli({"--out", dir.string(), "report"});
  ASSERT_EQ(partial.code, 0) << partial.err;
  EXPECT_NE(partial.out.find("== XVA ==\n  absent"), std::string::npos);
  EXPECT_NE(partial.out.find("== Risk-neutral calibration ==\n  sse"), std::string::npos);
}

TEST(Cli, FullPipelineIsDeterministic) {
  const auto a = scratch("pipeline_a");
  const auto b = scratch("pipeline_b");
  const std::vector<std::string> commands{"reconstruct", "calibrate-hist", "calibrate-rn", "simulate", "ssa", "xva", "report"};
  for (const auto& [dir, threads] : {std::pair{a, "1"}, std::pair{b, "3"}}) {
    write_text(dir / "run.conf", small_config(a));
    for (const auto& c : commands) {
      const auto r = cli({"--config", (dir / "run.conf").string(), "--out", dir.string(), "--threads", threads, c});
      ASSERT_EQ(r.code, 0) << c << ": " << r.err;
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name.find("_timings.json") != std::string::npos) continue;
    ASSERT_TRUE(fs::exists(b / name)) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 30u);

  const auto report = slurp(a / "report.txt");
  for (auto p : kAllProperties) EXPECT_NE(report.find(std::string(to_string(p))), std::string::npos);
  for (const char* svg : {"fan.svg", "histograms.svg", "occupancy.svg", "predefault.svg"}) {
    const auto text = slurp(a / svg);
    EXPECT_EQ(text.rfind("<svg", 0), 0u) << svg;
    EXPECT_NE(text.find("</svg>"), std::string::npos) << svg;
  }
  const auto summary = app::Json::parse(slurp(a / "xva_summary.json"));
  EXPECT_EQ(summary["seed"], 5);
  EXPECT_EQ(summary["results"]["regimes"].size(), 3u);
  EXPECT_EQ(summary["inputs_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, OutputsRoundTripThroughParsers) {
  const auto dir = scratch("roundtrip");
  write_text(dir / "run.conf", small_config(dir));
  for (const char* c : {"reconstruct", "calibrate-hist", "calibrate-rn"})
    ASSERT_EQ(cli({"--config", (dir / "run.conf").string(), c}).code, 0) << c;
  const auto cohort = read_rating_matrix_file((dir / "cohort.csv").string());
  EXPECT_EQ(cohort.values, read_rating_matrix_file(oracle::data("table2b_cohort.csv")).values);
  const auto params = read_sde_params_file((dir / "params.csv").string(), 4);
  std::ostringstream again;
  write_sde_params(again, params);
  EXPECT_EQ(again.str(), slurp(dir / "params.csv"));
  const auto measure = read_measure_file((dir / "measure.csv").string(), 4);
  EXPECT_EQ(measure.kind, MeasureKind::exponential);
  // A calibrated measure file feeds later commands directly.
  write_text(dir / "q.conf", "seed = 5\ngrid.steps_per_year = 12\nmeasure.file = " + (dir / "measure.csv").string() +
                                 "\nmodel.params = " + oracle::data("table6_params.csv") + "\nsimulate.trajectories = 4\n" +
                                 "simulate.checkpoints = 1\noutput.dir = " + (dir / "q").string() + "\n");
  EXPECT_EQ(cli({"--config", (dir / "q.conf").string(), "simulate"}).code, 0);
}

TEST(Cli, SeedFlagChangesResults) {
  const auto dir = scratch("seed");
  write_text(dir / "run.conf", small_config(dir));
  ASSERT_EQ(cli({"--config", (dir / "run.conf").string(), "--out", (dir / "s5").string(), "simulate"}).code, 0);
  ASSERT_EQ(cli({"--config", (dir / "run.conf").string(), "--out", (dir / "s6").string(), "--seed", "6", "simulate"}).code, 0);
  EXPECT_NE(slurp(dir / "s5" / "checkpoint_stats.csv"), slurp(dir / "s6" / "checkpoint_stats.csv"));
}
