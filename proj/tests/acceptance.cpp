// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ratingxva/app/cli.hpp"
#include "ratingxva/calibration.hpp"
#include "ratingxva/cohort.hpp"
#include "ratingxva/lie.hpp"
#include "ratingxva/matrix_io.hpp"
#include "ratingxva/params_io.hpp"
#include "ratingxva/properties.hpp"
#include "ratingxva/ssa.hpp"
#include "ratingxva/xva.hpp"

using namespace ratingxva;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string data(const std::string& name) { return std::string(RATINGXVA_DATA_DIR) + "/" + name; }
Matrix table(const std::string& name) { return read_rating_matrix_file(data(name)).values; }
SdeParams table6() { return read_sde_params_file(data("table6_params.csv"), 4); }

void group_preservation() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double worst_sum = 0.0, worst_range = 0.0, worst_last = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 0; n < 1000; ++n) {
    Vector c(9);
    for (int i = 0; i < 9; ++i) c[i] = u(gen);
    const Matrix r = mat_exp(algebra_from_coeffs(AlgebraCoeffs(4, c))).matrix();
    worst_sum = std::max(worst_sum, (r.rowwise().sum().array() - 1.0).abs().maxCoeff());
    worst_range = std::max({worst_range, -r.minCoeff(), r.maxCoeff() - 1.0});
    worst_last = std::max(worst_last, (r.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(t0);
  report(1, worst_sum <= 1e-10 && worst_range <= 0.0 && worst_last == 0.0 && elapsed < 1.0,
         "max |row sum - 1| " + fmt("%.2e", worst_sum) + ", range excess " + fmt("%.2e", worst_range) + ", last row dev " +
             fmt("%.1e", worst_last) + ", " + fmt("%.3f", elapsed) + " s");
}

void table_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix cohort = table("table2b_cohort.csv");
  const Matrix rec = table("table2c_reconstructed.csv");
  const double d4 = (distance_matrix(rec, cohort) - table("table4_distance.csv")).cwiseAbs().maxCoeff();
  const double d5 = (adjusted_matrix(cohort, rec) - table("table5_adjusted.csv")).cwiseAbs().maxCoeff();
  const double elapsed = seconds_since(t0);
  report(2, d4 <= 5e-5 && d5 <= 5e-5 && elapsed < 1.0,
         "distance max err " + fmt("%.2e", d4) + ", adjusted max err " + fmt("%.2e", d5) + ", " + fmt("%.3f", elapsed) + " s");
}

void reconstruction_identity() {
  const CohortMatrix cohort(table("table2b_cohort.csv"));
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    Matrix f(4, 4);
    for (int i = 0; i < 16; ++i) f.data()[i] = u(gen);
    const Matrix r = reconstruct(cohort, WeightMatrix(f)).matrix();
    worst = std::max(worst, (r.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  report(3, worst <= 1e-12, "max |row sum - 1| over 100 weight matrices " + fmt("%.2e", worst));
}

SdeParams historical_fit() {
  const SdeParams p = table6();
  const auto bundle = simulate_paths(p, MeasureChange::historical(4), TimeGrid(1.0, 120), 1000, 7);
  const double mean_err = (bundle.at_time(1.0).mean() - table("table2c_reconstructed.csv")).cwiseAbs().maxCoeff();

  HistCalibrationSpec spec;
  spec.target_rec = table("table2c_reconstructed.csv");
  spec.target_adj = table("table5_adjusted.csv");
  spec.seed = 7;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = calibrate_historical(spec);
  report(4, mean_err <= 0.02 && res.sse <= 1e-4,
         "mean at t=1 max err " + fmt("%.4f", mean_err) + "; recalibrated SSE " + fmt("%.3e", res.sse) + " after " +
             std::to_string(res.iterations) + " iterations, " + fmt("%.0f", seconds_since(t0)) + " s");
  return res.params;
}

RnCalibrationResult rn_fit(const SdeParams& p, MeasureKind kind, const std::string& pd_file) {
  RnCalibrationSpec spec{p, kind, read_pd_targets_file(data(pd_file), {"A", "B", "C", "D"})};
  spec.seed = 7;
  spec.lower = kind == MeasureKind::jlt ? 0.0 : 1e-6;
  return calibrate_risk_neutral(spec);
}

MeasureChange risk_neutral_fit() {
  const SdeParams p = table6();
  const auto c1 = rn_fit(p, MeasureKind::exponential, "pd_case1.csv");
  const auto c2 = rn_fit(p, MeasureKind::exponential, "pd_case2.csv");
  const auto c3e = rn_fit(p, MeasureKind::exponential, "pd_case3.csv");
  const auto c3j = rn_fit(p, MeasureKind::jlt, "pd_case3.csv");
  const bool ratio_ok = c3j.sse >= 10.0 * c3e.sse;
  report(5, c1.sse <= 1e-4 && c2.sse <= 1e-4 && ratio_ok,
         "exponential SSE case 1 " + fmt("%.2e", c1.sse) + ", case 2 " + fmt("%.2e", c2.sse) + "; case 3 JLT " +
             fmt("%.3e", c3j.sse) + " vs exponential " + fmt("%.3e", c3e.sse));
  return c2.measure;
}

void girsanov_martingale() {
  const std::size_t m = 100000;
  const int n = 9, steps = 12;
  const TimeGrid grid(1.0, steps);
  const BrownianNoise noise(606, m, n, steps);
  std::mt19937_64 gen(606);
  std::normal_distribution<double> z;
  bool ok = true;
  std::ostringstream detail;
  for (double norm : {0.5, 1.0, 2.0}) {
    Vector kappa(n);
    for (int i = 0; i < n; ++i) kappa[i] = z(gen);
    kappa *= norm / kappa.norm();
    double sum = 0.0, sq = 0.0;
    Matrix inc(n, steps);
    for (std::size_t w = 0; w < m; ++w) {
      for (int i = 0; i < n; ++i) {
        const auto row = noise.row(w, static_cast<std::size_t>(i));
        for (int s = 0; s < steps; ++s) inc(i, s) = std::sqrt(grid.dt()) * row[static_cast<std::size_t>(s)];
      }
      const double l = girsanov_density(kappa, inc, grid);
      sum += l;
      sq += l * l;
    }
    const double mean = sum / m;
    const double sd = std::sqrt((sq - sum * mean) / (m - 1.0));
    const double bound = 3.0 * sd / std::sqrt(static_cast<double>(m));
    ok = ok && std::abs(mean - 1.0) <= bound;
    detail << "|kappa| " << norm << ": mean " << fmt("%.4f", mean) << " (bound " << fmt("%.4f", bound) << ") ";
  }
  report(6, ok, detail.str());
}

void ssa_equivalence() {
  Matrix a(4, 4);
  a << -0.5, 0.3, 0.15, 0.05,  //
      0.2, -0.9, 0.4, 0.3,      //
      0.05, 0.25, -1.1, 0.8,    //
      0, 0, 0, 0;
  const double horizon = 1.0;
  const GeneratorPath gen{TimeGrid(horizon, 12), std::vector<Matrix>(12, a)};
  const Matrix expected = mat_exp(a * horizon).matrix();
  const std::size_t m = 100000;
  double worst_z = 0.0;
  for (int i0 = 0; i0 < 3; ++i0) {
    Vector counts = Vector::Zero(4);
    for (std::size_t p = 0; p < m; ++p) {
      auto rng = ssa_stream(707, 0, p, i0);
      counts[ssa_sample(gen, i0, rng).final_rating()] += 1.0;
    }
    for (int j = 0; j < 4; ++j) {
      const double q = expected(i0, j);
      const double se = std::sqrt(q * (1.0 - q) / m);
      worst_z = std::max(worst_z, std::abs(counts[j] / m - q) / se);
    }
  }
  const auto nested = nested_simulate(table6(), MeasureChange::historical(4), TimeGrid(1.0, 120), 100, 1000, transient_ratings(4), 7);
  const double err = empirical_transition(nested, 1.0).error;
  report(7, worst_z <= 3.0 && err <= 0.01,
         "constant generator worst |z| " + fmt("%.2f", worst_z) + " (limit 3); nested error at t=1 " + fmt("%.5f", err));
}

void rating_properties() {
  const auto bundle = simulate_paths(table6(), MeasureChange::historical(4), TimeGrid(1.0, 120), 1000, 7);
  const auto rep = property_report(bundle, {1.0 / 12.0, 0.25, 0.5, 1.0});
  double worst_late = 0.0;
  for (std::size_t c = 1; c < rep.checkpoints.size(); ++c)
    for (auto p : kAllProperties)
      if (const auto& s = rep.checkpoints[c][p]) worst_late = std::max(worst_late, s->fraction);
  const double early_bc = rep.checkpoints[0][RatingProperty::monotone_default]->pair_fraction(1, 2, rep.trajectories);
  report(8, worst_late <= 0.01 && early_bc < 0.10,
         "worst violation fraction at t >= 0.25 " + fmt("%.4f", worst_late) + "; monotone default B-C at t=1/12 " +
             fmt("%.4f", early_bc));
}

void xva_structure(const MeasureChange& q) {
  const auto base = [] {
    CsaTerms t;
    t.threshold_bank = {10e6, 5e6, 0, 0};
    t.threshold_counterparty = {10e6, 5e6, 0, 0};
    return t;
  }();
  const double inf = std::numeric_limits<double>::infinity();
  CsaTerms inf_terms = base, zero_terms = base;
  inf_terms.threshold_bank = inf_terms.threshold_counterparty = {inf, inf, inf, inf};
  zero_terms.threshold_bank = zero_terms.threshold_counterparty = {0, 0, 0, 0};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& [name, m] : {std::pair{"P", MeasureChange::historical(4)}, std::pair{"Q", q}}) {
    const auto s = simulate_xva_scenario(table6(), m, TimeGrid(1.0, 120), 100, 100, 0, 1, PortfolioSpec{}, base, 9);
    const auto none = compute_xva(s, base, CollateralRegime::uncollateralized);
    const auto trig = compute_xva(s, base, CollateralRegime::triggers);
    const auto perf = compute_xva(s, base, CollateralRegime::perfect);
    const auto lim_inf = compute_xva(s, inf_terms, CollateralRegime::triggers);
    const auto lim_zero = compute_xva(s, zero_terms, CollateralRegime::triggers);
    const bool order = perf.cva <= trig.cva && trig.cva <= none.cva && perf.dva <= trig.dva && trig.dva <= none.dva;
    const bool limits = lim_inf.cva == none.cva && lim_inf.dva == none.dva && lim_zero.cva == perf.cva && lim_zero.dva == perf.dva;
    bool bva = true;
    for (const auto* r : {&none, &trig, &perf}) bva = bva && r->bva == r->dva - r->cva;
    ok = ok && order && limits && bva;
    detail << name << ": CVA " << fmt("%.0f", perf.cva) << " <= " << fmt("%.0f", trig.cva) << " <= " << fmt("%.0f", none.cva)
           << ", DVA " << fmt("%.0f", perf.dva) << " <= " << fmt("%.0f", trig.dva) << " <= " << fmt("%.0f", none.dva)
           << (limits ? ", limits exact" : ", limits differ") << (bva ? ", BVA exact; " : ", BVA mismatch; ");
  }
  report(9, ok, detail.str());
}

void predefault(const MeasureChange& q) {
  const TimeGrid grid(1.0, 120);
  const auto p_paths = nested_simulate(table6(), MeasureChange::historical(4), grid, 100, 1000, transient_ratings(4), 7);
  const auto q_paths = nested_simulate(table6(), q, grid, 100, 1000, transient_ratings(4), 7);
  const auto dp = predefault_distribution(p_paths);
  const auto dq = predefault_distribution(q_paths);
  int modal = 0;
  for (int r = 1; r < 3; ++r)
    if (dp.column_share(r) > dp.column_share(modal)) modal = r;
  const double ab_p = dp.column_share(0) + dp.column_share(1);
  const double ab_q = dq.column_share(0) + dq.column_share(1);
  report(10, !dp.empty && modal == 2 && ab_q > ab_p,
         "P modal pre-default rating " + std::string(1, "ABC"[modal]) + " (C share " + fmt("%.3f", dp.column_share(2)) +
             "); A or B share P " + fmt("%.4f", ab_p) + " vs Q " + fmt("%.4f", ab_q));
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"ratingxva"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "ratingxva_acceptance";
  fs::remove_all(root);
  const std::string configs = RATINGXVA_CONFIG_DIR;
  const std::vector<std::pair<std::string, std::vector<std::string>>> pipelines{
      {"smoke", {"reconstruct", "calibrate-hist", "calibrate-rn", "simulate", "ssa", "xva", "report"}},
      {"risk_neutral", {"calibrate-rn", "simulate", "ssa", "xva", "report"}}};
  bool ok = true;
  std::size_t files = 0;
  for (const auto& [config, commands] : pipelines) {
    std::vector<fs::path> dirs;
    for (const char* threads : {"1", "8", "8"}) {
      const fs::path dir = root / (config + "_" + threads + "_" + std::to_string(dirs.size()));
      for (const auto& c : commands)
        ok = ok && cli({"--config", configs + "/" + config + ".conf", "--out", dir.string(), "--threads", threads, c}) == 0;
      dirs.push_back(dir);
    }
    if (!ok) break;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename().string();
      if (name.size() > 13 && name.compare(name.size() - 13, 13, "_timings.json") == 0) continue;
      const auto reference = app::read_file(entry.path().string());
      for (std::size_t d = 1; d < dirs.size(); ++d)
        ok = ok && fs::exists(dirs[d] / name) && app::read_file((dirs[d] / name).string()) == reference;
      ++files;
    }
  }
  set_thread_count(1);
  report(11, ok && files > 0, std::to_string(files) + " output files compared across 1 and 8 threads and a rerun");
}

}  // namespace

int main() {
  group_preservation();
  table_reproduction();
  reconstruction_identity();
  historical_fit();
  const MeasureChange q = risk_neutral_fit();
  girsanov_martingale();
  ssa_equivalence();
  rating_properties();
  xva_structure(q);
  predefault(q);
  determinism();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
