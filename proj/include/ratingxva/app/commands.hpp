#pragma once

// The CLI subcommands. Each reads a RunConfig, loads and cross-checks every
// input before computing, and writes CSV/SVG outputs plus a deterministic
// <command>_summary.json into the output directory. Wall-clock timings go to a
// separate <command>_timings.json so that the remaining files are
// byte-reproducible for a given config and seed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratingxva/app/run_config.hpp"
#include "ratingxva/app/svg.hpp"
#include "ratingxva/calibration.hpp"
#include "ratingxva/cohort.hpp"
#include "ratingxva/matrix_io.hpp"
#include "ratingxva/params_io.hpp"
#include "ratingxva/properties.hpp"
#include "ratingxva/ssa.hpp"
#include "ratingxva/xva.hpp"

namespace ratingxva::app {

using Json = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// Run state shared by the commands.
class Run {
 public:
  Run(std::string command, RunConfig cfg, const std::string& config_text)
      : command_(std::move(command)), cfg_(std::move(cfg)), out_(cfg_.output_dir), start_(std::chrono::steady_clock::now()) {
    std::uint64_t h = fnv1a(config_text);
    for (const auto* p : {&cfg_.cohort, &cfg_.reconstructed, &cfg_.adjusted, &cfg_.pd, &cfg_.params, &cfg_.measure_file})
      if (*p) h = fnv1a(read_file(**p), h);
    if (cfg_.weights != "uniform" && cfg_.weights != "proportional") h = fnv1a(read_file(cfg_.weights), h);
    h = fnv1a(std::to_string(cfg_.seed), h);
    inputs_hash_ = hex64(h);
    std::error_code ec;
    std::filesystem::create_directories(out_, ec);
    if (ec || !std::filesystem::is_directory(out_)) throw IoError("cannot create output directory '" + out_.string() + "'");
  }

  const RunConfig& cfg() const noexcept { return cfg_; }
  const std::vector<std::string>& labels() const noexcept { return cfg_.labels; }
  std::string path(const std::string& name) const { return (out_ / name).string(); }

  void write(const std::string& name, const std::string& content) {
    auto out = csv::open_output(path(name));
    out << content;
    if (!out) throw IoError("failed writing '" + path(name) + "'");
    files_.push_back(name);
  }

  void write_matrix(const std::string& name, const Matrix& m, const Vector* withdrawal = nullptr) {
    std::ostringstream ss;
    write_rating_matrix(ss, labels(), m, withdrawal);
    write(name, ss.str());
  }

  void mark(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    timings_[phase] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

  /// Writes <command>_summary.json (deterministic) and <command>_timings.json.
  void finish(Json results) {
    Json summary;
    summary["command"] = command_;
    summary["seed"] = cfg_.seed;
    summary["inputs_hash"] = inputs_hash_;
    summary["results"] = std::move(results);
    summary["outputs"] = files_;
    const std::string stem = stem_name();
    write(stem + "_summary.json", summary.dump(2) + "\n");
    Json t;
    t["command"] = command_;
    for (const auto& [k, v] : timings_) t["seconds"][k] = v;
    t["seconds"]["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    t["threads"] = thread_count();
    auto out = csv::open_output(path(stem + "_timings.json"));
    out << t.dump(2) << "\n";
  }

 private:
  std::string stem_name() const {
    std::string s = command_;
    for (auto& ch : s)
      if (ch == '-') ch = '_';
    return s;
  }

  std::string command_;
  RunConfig cfg_;
  std::filesystem::path out_;
  std::string inputs_hash_;
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point start_, last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> timings_;
};

namespace detail {

template <class T>
const T& require(const std::optional<T>& v, const std::string& key) {
  if (!v) throw ValidationError("config key '" + key + "' is required for this command");
  return *v;
}

inline LabeledMatrix load_matrix(const RunConfig& cfg, const std::string& path) {
  auto m = read_rating_matrix_file(path);
  if (m.labels != cfg.labels) throw ValidationError(path + ": rating labels differ from ratings.labels (K mismatch or order)");
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline std::string num(double v) { return csv::format_number(v); }

struct ReconstructionInputs {
  Matrix cohort;
  Matrix reconstructed;
  bool reconstructed_given = false;
};

inline WeightMatrix weights_for(const RunConfig& cfg, const CohortMatrix& cohort) {
  if (cfg.weights == "uniform") return weights::uniform(cfg.k());
  if (cfg.weights == "proportional") return weights::proportional(cohort);
  return WeightMatrix(load_matrix(cfg, cfg.weights).values);
}

inline ReconstructionInputs reconstruction_inputs(const RunConfig& cfg) {
  ReconstructionInputs in;
  const CohortMatrix cohort(load_matrix(cfg, require(cfg.cohort, "data.cohort")).values);
  in.cohort = cohort.matrix();
  if (cfg.reconstructed) {
    in.reconstructed = load_matrix(cfg, *cfg.reconstructed).values;
    in.reconstructed_given = true;
    const auto report = validate_stochastic(in.reconstructed, kPublishedTolerance);
    if (!report.passes) throw DomainError(*cfg.reconstructed + ": reconstructed matrix is not stochastic at tolerance 1e-3");
  } else {
    in.reconstructed = reconstruct(cohort, weights_for(cfg, cohort)).matrix();
  }
  return in;
}

inline SdeParams load_params(const RunConfig& cfg) {
  auto p = read_sde_params_file(require(cfg.params, "model.params"), cfg.k());
  return p;
}

inline std::string property_csv(const PropertyReport& rep, const std::vector<std::string>& labels) {
  std::ostringstream ss;
  ss << "time,property,violating,fraction,worst,offenders\n";
  for (const auto& cp : rep.checkpoints)
    for (const auto prop : kAllProperties) {
      const auto& s = cp[prop];
      if (!s) continue;
      std::string offenders;
      for (const auto& [pair, count] : s->offenders) {
        if (!offenders.empty()) offenders += ';';
        offenders += labels[static_cast<std::size_t>(pair.first)] + "-" + labels[static_cast<std::size_t>(pair.second)] + ":" +
                     std::to_string(count);
      }
      ss << num(cp.time) << ',' << to_string(prop) << ',' << s->violating << ',' << num(s->fraction) << ',' << num(s->worst) << ','
         << offenders << '\n';
    }
  return ss.str();
}

}  // namespace detail

inline void cmd_reconstruct(Run& run) {
  const auto& cfg = run.cfg();
  const auto in = detail::reconstruction_inputs(cfg);
  run.mark("load");
  const CohortMatrix cohort(in.cohort);
  const Vector w = withdrawal_rates(cohort);
  const Matrix d = distance_matrix(in.reconstructed, in.cohort);
  const Matrix adj = adjusted_matrix(in.cohort, in.reconstructed);
  const Matrix u = uncertainty_target(in.reconstructed, adj);
  run.write_matrix("cohort.csv", in.cohort, &w);
  run.write_matrix("reconstructed.csv", in.reconstructed);
  run.write_matrix("distance.csv", d);
  run.write_matrix("adjusted.csv", adj);
  run.write_matrix("uncertainty.csv", u);
  run.mark("compute");
  const auto report = validate_stochastic(in.reconstructed, kPublishedTolerance);
  Json res;
  res["mode"] = in.reconstructed_given ? "adjust" : "reconstruct";
  res["weights"] = in.reconstructed_given ? "n/a" : cfg.weights;
  res["withdrawal"] = detail::vector_json(w);
  res["max_row_sum_deviation"] = report.max_row_sum_deviation();
  run.finish(std::move(res));
}

inline void cmd_calibrate_hist(Run& run) {
  const auto& cfg = run.cfg();
  HistCalibrationSpec spec;
  Matrix cohort;
  if (cfg.reconstructed && cfg.adjusted) {
    spec.target_rec = detail::load_matrix(cfg, *cfg.reconstructed).values;
    spec.target_adj = detail::load_matrix(cfg, *cfg.adjusted).values;
  } else {
    const auto in = detail::reconstruction_inputs(cfg);
    spec.target_rec = in.reconstructed;
    spec.target_adj = cfg.adjusted ? detail::load_matrix(cfg, *cfg.adjusted).values : adjusted_matrix(in.cohort, in.reconstructed);
  }
  spec.w1 = cfg.hist_w1;
  spec.w2 = cfg.hist_w2;
  spec.trajectories = cfg.hist_trajectories;
  spec.seed = cfg.seed;
  spec.grid = cfg.grid();
  spec.target_time = cfg.hist_target_time;
  spec.lower = cfg.hist_lower;
  spec.upper = cfg.hist_upper;
  spec.start_a = cfg.hist_start_a;
  spec.start_b = cfg.hist_start_b;
  spec.start_sigma = cfg.hist_start_sigma;
  spec.lsq.max_iterations = cfg.hist_max_iterations;
  spec.validate();
  run.mark("load");

  const auto result = calibrate_historical(spec);
  run.mark("calibrate");
  std::ostringstream params;
  write_sde_params(params, result.params);
  run.write("params.csv", params.str());
  const BrownianNoise noise(spec.seed, spec.trajectories, result.params.size(), spec.grid.steps());
  const auto fit = simulate_checkpoints(result.params, Vector::Zero(static_cast<Eigen::Index>(result.params.size())), spec.grid, noise,
                                        {spec.grid.index_of(spec.target_time)});
  run.write_matrix("fit_mean.csv", fit[0].mean());
  run.write_matrix("fit_variance.csv", fit[0].variance());
  run.mark("report");

  Json res;
  res["sse"] = result.sse;
  res["iterations"] = result.iterations;
  res["evaluations"] = result.evaluations;
  res["converged"] = result.converged;
  res["warning"] = result.warning;
  res["trajectories"] = spec.trajectories;
  res["bounds"] = {spec.lower, spec.upper};
  res["target_time"] = spec.target_time;
  run.finish(std::move(res));
}

inline void cmd_calibrate_rn(Run& run) {
  const auto& cfg = run.cfg();
  RnCalibrationSpec spec;
  spec.params = detail::load_params(cfg);
  spec.kind = cfg.rn_kind;
  spec.targets = read_pd_targets_file(detail::require(cfg.pd, "data.pd"), cfg.labels);
  spec.grid = cfg.grid();
  spec.horizon = cfg.horizon;
  spec.trajectories = cfg.rn_trajectories;
  spec.seed = cfg.seed;
  spec.lower = cfg.rn_lower;
  spec.upper = cfg.rn_upper;
  spec.start = cfg.rn_start;
  spec.lsq.max_iterations = cfg.rn_max_iterations;
  spec.validate();
  run.mark("load");

  const auto result = calibrate_risk_neutral(spec);
  run.mark("calibrate");
  std::ostringstream m;
  write_measure(m, result.measure);
  run.write("measure.csv", m.str());
  const Vector residual = RnObjective(spec)(result.measure);
  std::ostringstream fit;
  fit << "rating,target_pd,model_pd\n";
  for (int i = 0; i < cfg.k(); ++i)
    fit << cfg.labels[static_cast<std::size_t>(i)] << ',' << detail::num(spec.targets.pd[i]) << ','
        << detail::num(spec.targets.pd[i] + residual[i]) << '\n';
  run.write("rn_fit.csv", fit.str());
  run.mark("report");

  Json res;
  res["kind"] = std::string(to_string(result.measure.kind));
  res["h"] = detail::vector_json(result.measure.h);
  res["sse"] = result.sse;
  res["iterations"] = result.iterations;
  res["evaluations"] = result.evaluations;
  res["converged"] = result.converged;
  res["warning"] = result.warning;
  res["trajectories"] = spec.trajectories;
  res["bounds"] = {spec.lower, spec.upper};
  run.finish(std::move(res));
}

inline void cmd_simulate(Run& run) {
  const auto& cfg = run.cfg();
  const SdeParams p = detail::load_params(cfg);
  const TimeGrid grid = cfg.grid();
  run.mark("load");
  const auto bundle = simulate_paths(p, cfg.measure, grid, cfg.trajectories, cfg.seed);
  run.mark("simulate");

  std::ostringstream stats;
  stats << "time,from,to,mean,variance\n";
  for (double t : cfg.checkpoints) {
    const auto sample = bundle.at_time(t);
    const Matrix mean = sample.mean();
    const Matrix var = sample.size() > 1 ? sample.variance() : Matrix::Zero(p.k, p.k);
    for (int i = 0; i < p.k; ++i)
      for (int j = 0; j < p.k; ++j)
        stats << detail::num(t) << ',' << cfg.labels[static_cast<std::size_t>(i)] << ',' << cfg.labels[static_cast<std::size_t>(j)] << ','
              << detail::num(mean(i, j)) << ',' << detail::num(var(i, j)) << '\n';
  }
  run.write("checkpoint_stats.csv", stats.str());
  run.write_matrix("mean_horizon.csv", mean_matrix(bundle, grid.horizon()));
  const auto report = property_report(bundle, cfg.checkpoints);
  run.write("properties.csv", detail::property_csv(report, cfg.labels));
  run.mark("statistics");

  std::vector<double> times;
  for (int s = 0; s <= grid.steps(); ++s) times.push_back(grid.time(s));
  const std::size_t shown = std::min(cfg.plot_paths, bundle.trajectories());
  run.write("fan.svg", svg::entry_fan(cfg.labels, times, shown,
                                       [&](std::size_t w, std::size_t s, std::size_t i, std::size_t j) {
                                         return bundle.r(w, static_cast<int>(s))(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                                       },
                                       "Rating matrix entries over time"));
  run.write("histograms.svg", svg::entry_histograms(cfg.labels, bundle.trajectories(),
                                                     [&](std::size_t w, std::size_t i, std::size_t j) {
                                                       return bundle.r(w, grid.steps())(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                                                     },
                                                     "Entries at the horizon"));
  run.mark("plots");

  Json res;
  res["trajectories"] = cfg.trajectories;
  res["measure"] = {{"kind", std::string(to_string(cfg.measure.kind))}, {"h", detail::vector_json(cfg.measure.h)}};
  res["mean_horizon"] = detail::matrix_json(mean_matrix(bundle, grid.horizon()));
  Json props = Json::array();
  for (const auto& cp : report.checkpoints) {
    Json row;
    row["time"] = cp.time;
    for (const auto prop : kAllProperties)
      if (cp[prop]) row[std::string(to_string(prop))] = cp[prop]->fraction;
    props.push_back(row);
  }
  res["property_violation_fractions"] = props;
  run.finish(std::move(res));
}

inline void cmd_ssa(Run& run) {
  const auto& cfg = run.cfg();
  const SdeParams p = detail::load_params(cfg);
  const TimeGrid grid = cfg.grid();
  run.mark("load");
  const auto nested = nested_simulate(p, cfg.measure, grid, cfg.ssa_m1, cfg.ssa_m2, cfg.ssa_initial, cfg.seed);
  run.mark("simulate");

  std::ostringstream occ, errs;
  occ << "time,from,to,simulated,model_mean\n";
  errs << "time,error\n";
  std::vector<double> times;
  std::vector<Matrix> sims, models;
  Json err_json = Json::array();
  for (int s = 0; s <= grid.steps(); ++s) {
    const double t = grid.time(s);
    const auto e = empirical_transition(nested, t);
    const Matrix model = nested.bundle.at_index(s).mean();
    times.push_back(t);
    sims.push_back(e.frequencies);
    models.push_back(model);
    bool checkpoint = false;
    for (double c : cfg.checkpoints) checkpoint = checkpoint || grid.index_of(c) == s;
    if (!checkpoint) continue;
    errs << detail::num(t) << ',' << detail::num(e.error) << '\n';
    err_json.push_back({{"time", t}, {"error", e.error}});
    for (int i = 0; i < p.k; ++i) {
      if (!e.row_present[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < p.k; ++j)
        occ << detail::num(t) << ',' << cfg.labels[static_cast<std::size_t>(i)] << ',' << cfg.labels[static_cast<std::size_t>(j)] << ','
            << detail::num(e.frequencies(i, j)) << ',' << detail::num(model(i, j)) << '\n';
    }
  }
  run.write("occupancy.csv", occ.str());
  run.write("ssa_errors.csv", errs.str());
  const auto pre = predefault_distribution(nested);
  run.write_matrix("predefault.csv", pre.share);
  if (cfg.ssa_dump_events) {
    std::ostringstream ev;
    ev << "initial,m1,m2,time,rating\n";
    for (std::size_t g = 0; g < nested.initial.size(); ++g)
      for (std::size_t idx = 0; idx < nested.paths[g].size(); ++idx)
        for (const auto& e : nested.paths[g][idx].events)
          ev << cfg.labels[static_cast<std::size_t>(nested.initial[g])] << ',' << idx / nested.m2 << ',' << idx % nested.m2 << ','
             << detail::num(e.time) << ',' << cfg.labels[static_cast<std::size_t>(e.rating)] << '\n';
    run.write("ssa_events.csv", ev.str());
  }
  run.mark("statistics");
  std::vector<int> shown;
  for (int i : cfg.ssa_initial)
    if (i != p.k - 1) shown.push_back(i);
  if (!shown.empty()) run.write("occupancy.svg", svg::occupancy(cfg.labels, shown, times, sims, models, "Occupancy: simulated (solid) vs model mean (dashed)"));
  run.write("predefault.svg", svg::predefault_bars(cfg.labels, pre.share, "Rating before default"));
  run.mark("plots");

  Json res;
  res["m1"] = cfg.ssa_m1;
  res["m2"] = cfg.ssa_m2;
  res["measure"] = {{"kind", std::string(to_string(cfg.measure.kind))}, {"h", detail::vector_json(cfg.measure.h)}};
  res["errors"] = err_json;
  res["defaults"] = pre.defaults;
  res["predefault_share"] = detail::matrix_json(pre.share);
  run.finish(std::move(res));
}

inline void cmd_xva(Run& run) {
  const auto& cfg = run.cfg();
  const SdeParams p = detail::load_params(cfg);
  run.mark("load");
  const auto scenario = simulate_xva_scenario(p, cfg.measure, cfg.grid(), cfg.xva_m1, cfg.xva_m2, cfg.bank_rating, cfg.counterparty_rating,
                                              cfg.portfolio, cfg.csa, cfg.seed);
  run.mark("simulate");
  std::ostringstream table;
  table << "regime,cva,dva,bva,cva_se,dva_se,bva_se,bank_first,counterparty_first,simultaneous,none,paths\n";
  Json rows = Json::array();
  for (const auto regime : cfg.regimes) {
    const auto r = compute_xva(scenario, cfg.csa, regime);
    table << to_string(regime) << ',' << detail::num(r.cva) << ',' << detail::num(r.dva) << ',' << detail::num(r.bva) << ','
          << detail::num(r.cva_se) << ',' << detail::num(r.dva_se) << ',' << detail::num(r.bva_se) << ',' << r.bank_first << ','
          << r.counterparty_first << ',' << r.simultaneous << ',' << r.none << ',' << r.paths << '\n';
    rows.push_back({{"regime", std::string(to_string(regime))}, {"cva", r.cva}, {"dva", r.dva}, {"bva", r.bva}});
  }
  run.write("xva.csv", table.str());
  const std::vector<const std::vector<RatingPath>*> groups{&scenario.bank.paths.front(), &scenario.counterparty};
  const auto pre = predefault_distribution(groups, p.k);
  run.write_matrix("xva_predefault.csv", pre.share);
  run.mark("price");

  Json res;
  res["paths"] = cfg.xva_m1 * cfg.xva_m2;
  res["bank_rating"] = cfg.labels[static_cast<std::size_t>(cfg.bank_rating)];
  res["counterparty_rating"] = cfg.labels[static_cast<std::size_t>(cfg.counterparty_rating)];
  res["measure"] = {{"kind", std::string(to_string(cfg.measure.kind))}, {"h", detail::vector_json(cfg.measure.h)}};
  res["regimes"] = rows;
  run.finish(std::move(res));
}

/// Artifacts the report looks for, by section.
struct ReportSection {
  std::string title;
  std::vector<std::string> files;
};

inline const std::vector<ReportSection>& report_sections() {
  static const std::vector<ReportSection> sections = {
      {"Historical calibration", {"calibrate_hist_summary.json", "params.csv"}},
      {"Risk-neutral calibration", {"calibrate_rn_summary.json", "measure.csv"}},
      {"Rating properties", {"properties.csv"}},
      {"Nested simulation", {"ssa_errors.csv"}},
      {"XVA", {"xva.csv"}},
  };
  return sections;
}

/// Writes report.txt for a run directory. Missing sections are listed; a
/// directory with none of the expected artifacts is an error.
inline std::string cmd_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("run directory '" + dir.string() + "' does not exist");
  std::ostringstream out;
  std::vector<std::string> missing_all;
  std::size_t present = 0;
  out << "Run report\n";

  auto csv_table = [&](const std::string& file) {
    std::istringstream in(read_file((dir / file).string()));
    const auto lines = csv::read_lines(in);
    std::vector<std::size_t> width;
    for (const auto& l : lines)
      for (std::size_t c = 0; c < l.fields.size(); ++c) {
        if (width.size() <= c) width.push_back(0);
        width[c] = std::max(width[c], l.fields[c].size());
      }
    for (const auto& l : lines) {
      out << "  ";
      for (std::size_t c = 0; c < l.fields.size(); ++c) out << l.fields[c] << std::string(width[c] - l.fields[c].size() + 2, ' ');
      out << "\n";
    }
  };

  for (const auto& section : report_sections()) {
    out << "\n== " << section.title << " ==\n";
    std::vector<std::string> missing;
    for (const auto& f : section.files)
      if (!fs::is_regular_file(dir / f)) missing.push_back(f);
    if (!missing.empty()) {
      out << "  absent (missing:";
      for (const auto& f : missing) out << ' ' << f;
      out << ")\n";
      missing_all.insert(missing_all.end(), missing.begin(), missing.end());
      continue;
    }
    ++present;
    const auto& first = section.files.front();
    if (first.size() > 5 && first.substr(first.size() - 5) == ".json") {
      const auto summary = Json::parse(read_file((dir / first).string()));
      const auto& r = summary.at("results");
      out << "  sse " << r.at("sse").dump() << ", iterations " << r.at("iterations").dump() << ", converged " << r.at("converged").dump()
          << ", warning " << r.at("warning").dump() << "\n";
      if (r.contains("h")) out << "  h " << r.at("h").dump() << " (" << r.at("kind").get<std::string>() << ")\n";
      csv_table(section.files[1]);
    } else {
      csv_table(first);
    }
  }
  if (present == 0) {
    std::string list;
    for (const auto& f : missing_all) list += "\n  " + f;
    throw IoError("no run artifacts in '" + dir.string() + "'; expected any of:" + list);
  }
  const std::string text = out.str();
  auto file = csv::open_output((dir / "report.txt").string());
  file << text;
  return text;
}

}  // namespace ratingxva::app
