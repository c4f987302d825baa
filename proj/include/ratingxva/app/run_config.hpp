#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ratingxva/app/config.hpp"
#include "ratingxva/calibration.hpp"
#include "ratingxva/matrix_io.hpp"
#include "ratingxva/params_io.hpp"
#include "ratingxva/xva.hpp"

namespace ratingxva::app {

struct RunConfig {
  std::vector<std::string> labels;
  double horizon = 1.0;
  int steps_per_year = 120;
  std::uint64_t seed = 0;
  std::size_t trajectories = 1000;
  std::vector<double> checkpoints{1.0 / 12.0, 0.25, 0.5, 1.0};

  std::optional<std::string> cohort, reconstructed, adjusted, pd, params, measure_file;
  std::string weights = "uniform";  // uniform | proportional | path to a K x K weight CSV
  MeasureChange measure;

  // historical calibration
  std::size_t hist_trajectories = 1000;
  double hist_w1 = 1.0, hist_w2 = 1.0, hist_lower = 0.0, hist_upper = 3.0;
  double hist_start_a = 1.5, hist_start_b = 0.1, hist_start_sigma = 0.05;
  double hist_target_time = 1.0;
  int hist_max_iterations = 100;

  // risk-neutral calibration
  MeasureKind rn_kind = MeasureKind::exponential;
  std::size_t rn_trajectories = 1000;
  double rn_lower = 1e-6, rn_upper = 1e3, rn_start = 1.0;
  int rn_max_iterations = 100;

  // nested SSA
  std::size_t ssa_m1 = 100, ssa_m2 = 1000;
  std::vector<int> ssa_initial;
  bool ssa_dump_events = false;

  // XVA
  std::size_t xva_m1 = 100, xva_m2 = 100;
  int bank_rating = 0, counterparty_rating = 1;
  std::vector<CollateralRegime> regimes{kAllRegimes.begin(), kAllRegimes.end()};
  CsaTerms csa;
  PortfolioSpec portfolio;

  std::size_t plot_paths = 50;
  std::string output_dir = "out";

  int k() const { return static_cast<int>(labels.size()); }
  TimeGrid grid() const { return TimeGrid::per_year(horizon, steps_per_year); }

  int rating_index(const std::string& label, const Config& c, const std::string& key) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    throw c.error(key, "unknown rating '" + label + "'");
  }
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

namespace detail {

inline std::size_t positive_count(const Config& c, const std::string& key, std::size_t fallback) {
  const auto v = c.integer(key);
  if (!v) return fallback;
  if (*v < 1) throw c.error(key, "must be at least 1");
  return static_cast<std::size_t>(*v);
}

inline void require_file(const Config& c, const std::string& key, const std::optional<std::string>& path) {
  if (path && !std::filesystem::is_regular_file(*path)) throw IoError(c.source() + ": " + key + ": file '" + *path + "' not found");
}

}  // namespace detail

/// Reads every key, applies overrides and validates; unknown keys are errors.
inline RunConfig load_run_config(const Config& c, const Overrides& o = {}) {
  RunConfig r;
  r.labels = c.list("ratings.labels").value_or(std::vector<std::string>{"A", "B", "C", "D"});
  if (r.labels.size() < 2) throw c.error("ratings.labels", "need at least two ratings");
  const int k = r.k();

  r.horizon = c.number("grid.horizon", r.horizon);
  r.steps_per_year = static_cast<int>(c.integer("grid.steps_per_year", r.steps_per_year));
  if (!(r.horizon > 0.0) || r.steps_per_year < 1) throw c.error("grid.steps_per_year", "grid needs T > 0 and at least one step per year");
  const TimeGrid grid = r.grid();
  if (std::abs(grid.dt() * grid.steps() - r.horizon) > 1e-12 * r.horizon || std::abs(r.horizon * r.steps_per_year - grid.steps()) > 1e-9)
    throw c.error("grid.horizon", "horizon times steps_per_year must be an integer");

  const auto config_seed = c.unsigned_integer("seed");
  const auto seed = o.seed ? o.seed : config_seed;
  if (!seed) throw ValidationError(c.source() + ": seed is required (set 'seed' or pass --seed)");
  r.seed = *seed;

  r.trajectories = detail::positive_count(c, "simulate.trajectories", r.trajectories);
  if (const auto cp = c.numbers("simulate.checkpoints")) r.checkpoints = *cp;
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
    try {
      grid.index_of(r.checkpoints[i]);
    } catch (const DomainError& e) {
      throw c.error("simulate.checkpoints", e.what());
    }
    if (i > 0 && !(r.checkpoints[i] > r.checkpoints[i - 1])) throw c.error("simulate.checkpoints", "checkpoints must increase");
  }

  r.cohort = c.path("data.cohort");
  r.reconstructed = c.path("data.reconstructed");
  r.adjusted = c.path("data.adjusted");
  r.pd = c.path("data.pd");
  r.params = c.path("model.params");
  r.weights = c.text("data.weights", r.weights);
  if (r.weights != "uniform" && r.weights != "proportional") r.weights = c.path("data.weights").value();
  detail::require_file(c, "data.cohort", r.cohort);
  detail::require_file(c, "data.reconstructed", r.reconstructed);
  detail::require_file(c, "data.adjusted", r.adjusted);
  detail::require_file(c, "data.pd", r.pd);
  detail::require_file(c, "model.params", r.params);
  if (r.weights != "uniform" && r.weights != "proportional") detail::require_file(c, "data.weights", r.weights);

  r.measure = MeasureChange::historical(k);
  if (const auto kind = c.text("measure.kind")) {
    try {
      r.measure.kind = parse_measure_kind(*kind);
    } catch (const ValidationError& e) {
      throw c.error("measure.kind", e.what());
    }
  }
  if (const auto h = c.numbers("measure.h")) {
    if (static_cast<int>(h->size()) != k) throw c.error("measure.h", "needs K=" + std::to_string(k) + " values");
    r.measure.h = Eigen::Map<const Vector>(h->data(), k);
  }
  r.measure_file = c.path("measure.file");
  detail::require_file(c, "measure.file", r.measure_file);
  if (r.measure_file) {
    if (c.has("measure.kind") || c.has("measure.h")) throw c.error("measure.file", "give either measure.file or measure.kind/measure.h");
    r.measure = read_measure_file(*r.measure_file, k);
  }
  try {
    r.measure.validate(k);
  } catch (const Error& e) {
    throw c.error("measure.h", e.what());
  }

  r.hist_trajectories = detail::positive_count(c, "calibrate_hist.trajectories", r.hist_trajectories);
  r.hist_w1 = c.number("calibrate_hist.w1", r.hist_w1);
  r.hist_w2 = c.number("calibrate_hist.w2", r.hist_w2);
  r.hist_lower = c.number("calibrate_hist.lower", r.hist_lower);
  r.hist_upper = c.number("calibrate_hist.upper", r.hist_upper);
  r.hist_start_a = c.number("calibrate_hist.start_a", r.hist_start_a);
  r.hist_start_b = c.number("calibrate_hist.start_b", r.hist_start_b);
  r.hist_start_sigma = c.number("calibrate_hist.start_sigma", r.hist_start_sigma);
  r.hist_target_time = c.number("calibrate_hist.target_time", r.hist_target_time);
  r.hist_max_iterations = static_cast<int>(c.integer("calibrate_hist.max_iterations", r.hist_max_iterations));
  if (!(r.hist_w1 > 0.0 && r.hist_w2 > 0.0)) throw c.error("calibrate_hist.w1", "weights must be positive");
  if (!(r.hist_lower >= 0.0 && r.hist_lower <= r.hist_upper)) throw c.error("calibrate_hist.lower", "need 0 <= lower <= upper");
  if (r.hist_trajectories < 2) throw c.error("calibrate_hist.trajectories", "need at least 2");
  try {
    grid.index_of(r.hist_target_time);
  } catch (const DomainError& e) {
    throw c.error("calibrate_hist.target_time", e.what());
  }

  if (const auto kind = c.text("calibrate_rn.kind")) {
    r.rn_kind = parse_measure_kind(*kind);
    if (r.rn_kind == MeasureKind::historical) throw c.error("calibrate_rn.kind", "must be jlt or exponential");
  }
  r.rn_trajectories = detail::positive_count(c, "calibrate_rn.trajectories", r.rn_trajectories);
  r.rn_lower = c.number("calibrate_rn.lower", r.rn_kind == MeasureKind::jlt ? 0.0 : r.rn_lower);
  r.rn_upper = c.number("calibrate_rn.upper", r.rn_upper);
  r.rn_start = c.number("calibrate_rn.start", r.rn_start);
  r.rn_max_iterations = static_cast<int>(c.integer("calibrate_rn.max_iterations", r.rn_max_iterations));
  if (!(r.rn_lower <= r.rn_upper)) throw c.error("calibrate_rn.lower", "need lower <= upper");
  if (r.rn_kind == MeasureKind::exponential && !(r.rn_lower > 0.0)) throw c.error("calibrate_rn.lower", "exponential kind needs lower > 0");

  r.ssa_m1 = detail::positive_count(c, "ssa.m1", r.ssa_m1);
  r.ssa_m2 = detail::positive_count(c, "ssa.m2", r.ssa_m2);
  if (const auto init = c.list("ssa.initial")) {
    for (const auto& l : *init) r.ssa_initial.push_back(r.rating_index(l, c, "ssa.initial"));
  } else {
    r.ssa_initial = transient_ratings(k);
  }
  r.ssa_dump_events = c.boolean("ssa.dump_events", false);

  r.xva_m1 = detail::positive_count(c, "xva.m1", r.xva_m1);
  r.xva_m2 = detail::positive_count(c, "xva.m2", r.xva_m2);
  if (const auto b = c.text("xva.bank_rating")) r.bank_rating = r.rating_index(*b, c, "xva.bank_rating");
  if (const auto b = c.text("xva.counterparty_rating")) r.counterparty_rating = r.rating_index(*b, c, "xva.counterparty_rating");
  if (const auto regs = c.list("xva.regimes")) {
    r.regimes.clear();
    for (const auto& s : *regs) {
      try {
        r.regimes.push_back(parse_regime(s));
      } catch (const ValidationError& e) {
        throw c.error("xva.regimes", e.what());
      }
    }
  }

  const std::vector<double> default_thresholds = [&] {
    std::vector<double> t(static_cast<std::size_t>(k), 0.0);
    const double preset[] = {10e6, 5e6};
    for (int i = 0; i < std::min(k - 2, 2); ++i) t[static_cast<std::size_t>(i)] = preset[i];
    return t;
  }();
  r.csa.threshold_bank = c.numbers("csa.threshold_bank").value_or(default_thresholds);
  r.csa.threshold_counterparty = c.numbers("csa.threshold_counterparty").value_or(default_thresholds);
  r.csa.lgd_bank = c.number("csa.lgd_bank", r.csa.lgd_bank);
  r.csa.lgd_counterparty = c.number("csa.lgd_counterparty", r.csa.lgd_counterparty);
  r.csa.postings_per_year = static_cast<int>(c.integer("csa.postings_per_year", r.csa.postings_per_year));
  try {
    r.csa.validate(k);
  } catch (const Error& e) {
    throw c.error("csa.threshold_bank", e.what());
  }

  r.portfolio.v0 = c.number("portfolio.v0", r.portfolio.v0);
  r.portfolio.n = static_cast<int>(c.integer("portfolio.n", r.portfolio.n));
  r.portfolio.sigma_scale = c.number("portfolio.sigma_scale", r.portfolio.sigma_scale);
  r.portfolio.horizon = r.horizon;
  r.portfolio.seed = c.unsigned_integer("portfolio.seed").value_or(r.seed);
  try {
    r.portfolio.validate();
  } catch (const Error& e) {
    throw c.error("portfolio.n", e.what());
  }

  r.plot_paths = static_cast<std::size_t>(c.integer("plot.paths", static_cast<std::int64_t>(r.plot_paths)));
  r.output_dir = c.text("output.dir", r.output_dir);
  if (o.output_dir) r.output_dir = *o.output_dir;

  c.check_all_used();
  return r;
}

}  // namespace ratingxva::app
