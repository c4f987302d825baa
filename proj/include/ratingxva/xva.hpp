#pragma once

// Collateral-inclusive CVA / DVA / BVA under rating-trigger CSAs.
//
// The portfolio is a sum of independent Brownian components, each frozen after
// its lifetime. Collateral is posted on every grid date,
//
//   C_j = (V_j + rho_B(X^B_j))^- + (V_j - rho_C(X^C_j))^+,   C_0 = 0,
//
// with X^- = min(X, 0), X^+ = max(X, 0), and stops updating at the first
// default. At a default time tau in (t_{j-1}, t_j] the exposure uses V_j and the
// cash balance C_{j-1}. C > 0 means the bank holds collateral. No discounting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ratingxva/parallel.hpp"
#include "ratingxva/rng.hpp"
#include "ratingxva/ssa.hpp"

namespace ratingxva {

struct PortfolioSpec {
  double v0 = 0.0;
  int n = 24;
  double sigma_scale = 1e7;  // currency per sqrt(year)
  double horizon = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 0) throw ValidationError("portfolio cash-flow count must be nonnegative");
    if (!(sigma_scale >= 0.0) || !std::isfinite(sigma_scale)) throw ValidationError("portfolio sigma_scale must be finite and >= 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("portfolio horizon must be positive");
    if (!std::isfinite(v0)) throw ValidationError("portfolio V0 must be finite");
  }
};

/// Volatilities sigma_0..sigma_n and lifetimes l_1..l_n; component 0 never expires.
struct PortfolioDraw {
  std::vector<double> sigma;
  std::vector<double> lifetime;  // lifetime[0] = +inf

  /// Variance of V_t.
  double variance(double t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) v += sigma[i] * sigma[i] * std::min(t, lifetime[i]);
    return v;
  }
};

inline PortfolioDraw draw_portfolio(const PortfolioSpec& spec) {
  spec.validate();
  StreamRng rng(spec.seed, {stream_label::kPortfolioDraw});
  PortfolioDraw d;
  const auto n = static_cast<std::size_t>(spec.n);
  d.sigma.resize(n + 1);
  d.lifetime.resize(n + 1);
  for (auto& s : d.sigma) s = spec.sigma_scale * rng.normal();
  d.lifetime[0] = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= n; ++i) d.lifetime[i] = spec.horizon * rng.uniform_open();
  return d;
}

/// Portfolio values V[p][j] on grid dates t_0..t_N.
class ValuePaths {
 public:
  ValuePaths(TimeGrid grid, std::size_t paths) : grid_(grid), m_(paths), v_(paths * points()) {}

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t paths() const noexcept { return m_; }
  std::span<const double> path(std::size_t p) const { return {v_.data() + p * points(), points()}; }
  std::span<double> path(std::size_t p) { return {v_.data() + p * points(), points()}; }

 private:
  std::size_t points() const noexcept { return static_cast<std::size_t>(grid_.steps()) + 1; }
  TimeGrid grid_;
  std::size_t m_;
  std::vector<double> v_;
};

/// Paths of V_t = V0 + sum_i sigma_i W^i_{min(t, l_i)}. The components are
/// independent, so each grid increment of V is drawn as one normal with the
/// summed variance of the live components over that step.
inline ValuePaths simulate_portfolio(const PortfolioSpec& spec, const TimeGrid& grid, std::size_t paths, std::uint64_t seed) {
  const PortfolioDraw d = draw_portfolio(spec);
  std::vector<double> step_sd(static_cast<std::size_t>(grid.steps()));
  for (int s = 0; s < grid.steps(); ++s) step_sd[static_cast<std::size_t>(s)] = std::sqrt(d.variance(grid.time(s + 1)) - d.variance(grid.time(s)));
  ValuePaths out(grid, paths);
  parallel_for(paths, [&](std::size_t p) {
    StreamRng rng(seed, {stream_label::kPortfolioPath, p});
    auto v = out.path(p);
    v[0] = spec.v0;
    for (std::size_t s = 0; s < step_sd.size(); ++s) v[s + 1] = v[s] + step_sd[s] * rng.normal();
  });
  return out;
}

enum class Party { bank, counterparty };

struct CsaTerms {
  std::vector<double> threshold_bank;          // r^B per rating, +inf allowed
  std::vector<double> threshold_counterparty;  // r^C per rating
  double lgd_bank = 0.6;
  double lgd_counterparty = 0.6;
  int postings_per_year = 365;

  void validate(int k) const {
    if (static_cast<int>(threshold_bank.size()) != k || static_cast<int>(threshold_counterparty.size()) != k)
      throw DimensionError("CSA thresholds need one entry per rating (K=" + std::to_string(k) + ")");
    for (double r : threshold_bank)
      if (!(r >= 0.0)) throw ValidationError("CSA thresholds must be nonnegative");
    for (double r : threshold_counterparty)
      if (!(r >= 0.0)) throw ValidationError("CSA thresholds must be nonnegative");
    if (!(lgd_bank >= 0.0 && lgd_bank <= 1.0 && lgd_counterparty >= 0.0 && lgd_counterparty <= 1.0))
      throw ValidationError("LGD must lie in [0,1]");
    if (postings_per_year < 1) throw ValidationError("postings per year must be at least 1");
  }
};

inline double threshold_of(Party x, int rating, const CsaTerms& terms) {
  const auto& table = x == Party::bank ? terms.threshold_bank : terms.threshold_counterparty;
  if (rating < 0 || rating >= static_cast<int>(table.size())) throw DomainError("rating out of range for CSA thresholds");
  return table[static_cast<std::size_t>(rating)];
}

enum class CollateralRegime { uncollateralized, perfect, triggers };

inline constexpr std::array<CollateralRegime, 3> kAllRegimes = {CollateralRegime::uncollateralized, CollateralRegime::triggers,
                                                                CollateralRegime::perfect};

inline std::string_view to_string(CollateralRegime r) {
  switch (r) {
    case CollateralRegime::uncollateralized: return "uncollateralized";
    case CollateralRegime::perfect: return "perfect";
    case CollateralRegime::triggers: return "triggers";
  }
  return "";
}

inline CollateralRegime parse_regime(std::string_view s) {
  if (s == "none" || s == "uncollateralized") return CollateralRegime::uncollateralized;
  if (s == "perfect") return CollateralRegime::perfect;
  if (s == "triggers") return CollateralRegime::triggers;
  throw ValidationError("unknown collateral regime '" + std::string(s) + "' (none | perfect | triggers)");
}

/// Closed-form collateral balance after posting at value v with the current thresholds.
inline double collateral_target(double v, double rho_bank, double rho_counterparty) {
  return std::min(v + rho_bank, 0.0) + std::max(v - rho_counterparty, 0.0);
}

namespace detail {

// Walks a rating path forward through increasing query times.
class RatingCursor {
 public:
  explicit RatingCursor(const RatingPath& x) : x_(x), rating_(x.initial) {}
  int at(double t) {
    while (next_ < x_.events.size() && x_.events[next_].time <= t) rating_ = x_.events[next_++].rating;
    return rating_;
  }

 private:
  const RatingPath& x_;
  std::size_t next_ = 0;
  int rating_;
};

// Grid point at or immediately after t.
inline int grid_point_after(double t, const TimeGrid& grid) {
  return std::min(grid.steps(), static_cast<int>(std::ceil(t / grid.dt() - 1e-12)));
}

}  // namespace detail

/// Collateral balance at every grid date. Postings stop at the first default
/// of either party; later dates carry the last pre-default balance.
inline std::vector<double> collateral_path(std::span<const double> v, const TimeGrid& grid, const RatingPath& bank,
                                           const RatingPath& counterparty, const CsaTerms& terms, int k,
                                           CollateralRegime regime = CollateralRegime::triggers) {
  if (v.size() != static_cast<std::size_t>(grid.steps()) + 1) throw DimensionError("value path does not match grid");
  std::vector<double> c(v.size(), 0.0);
  std::optional<double> tau;
  for (const auto t : {default_time(bank, k), default_time(counterparty, k)})
    if (t && (!tau || *t < *tau)) tau = t;
  const int stop = tau ? detail::grid_point_after(*tau, grid) : grid.steps() + 1;
  detail::RatingCursor xb(bank), xc(counterparty);
  for (int j = 1; j < static_cast<int>(v.size()); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (j >= stop) {
      c[jj] = c[jj - 1];
      continue;
    }
    switch (regime) {
      case CollateralRegime::uncollateralized: c[jj] = 0.0; break;
      case CollateralRegime::perfect: c[jj] = v[jj]; break;
      case CollateralRegime::triggers: {
        const double t = grid.time(j);
        c[jj] = collateral_target(v[jj], threshold_of(Party::bank, xb.at(t), terms),
                                  threshold_of(Party::counterparty, xc.at(t), terms));
        break;
      }
    }
  }
  return c;
}

struct XvaResult {
  double cva = 0.0, dva = 0.0, bva = 0.0;
  double cva_se = 0.0, dva_se = 0.0, bva_se = 0.0;
  std::size_t bank_first = 0, counterparty_first = 0, simultaneous = 0, none = 0;
  std::size_t paths = 0;
};

struct PathContribution {
  double cva = 0.0, dva = 0.0;
};

/// Per-path CVA and DVA contributions. Defaults of both parties in the same grid
/// cell are ties and contribute to neither.
inline PathContribution xva_contribution(std::span<const double> v, const TimeGrid& grid, const RatingPath& bank,
                                         const RatingPath& counterparty, const CsaTerms& terms, int k,
                                         CollateralRegime regime, int* outcome = nullptr) {
  const double horizon = grid.horizon();
  auto before_t = [&](std::optional<double> t) -> std::optional<double> {
    return t && *t < horizon ? t : std::nullopt;
  };
  const auto tb = before_t(default_time(bank, k));
  const auto tc = before_t(default_time(counterparty, k));
  int kind = 0;  // 0 none, 1 bank first, 2 counterparty first, 3 tie
  int j = 0;
  if (tb || tc) {
    const int jb = tb ? detail::grid_point_after(*tb, grid) : grid.steps() + 1;
    const int jc = tc ? detail::grid_point_after(*tc, grid) : grid.steps() + 1;
    if (jb == jc) {
      kind = 3;
    } else {
      kind = jb < jc ? 1 : 2;
      j = std::min(jb, jc);
    }
  }
  if (outcome) *outcome = kind;
  if (kind == 0 || kind == 3) return {};
  const auto c = collateral_path(v, grid, bank, counterparty, terms, k, regime);
  const double vt = v[static_cast<std::size_t>(j)];
  const double ct = j > 0 ? c[static_cast<std::size_t>(j - 1)] : 0.0;
  PathContribution out;
  if (kind == 2) out.cva = terms.lgd_counterparty * (std::max(vt, 0.0) - std::max(ct, 0.0));
  else out.dva = -terms.lgd_bank * (std::min(vt, 0.0) - std::min(ct, 0.0));
  return out;
}

inline XvaResult compute_xva(const ValuePaths& values, const std::vector<RatingPath>& bank,
                             const std::vector<RatingPath>& counterparty, const CsaTerms& terms, int k,
                             CollateralRegime regime) {
  const std::size_t m = values.paths();
  if (bank.size() != m || counterparty.size() != m) throw DimensionError("value and rating path collections differ in size");
  if (m == 0) throw DimensionError("XVA needs at least one path");
  terms.validate(k);
  std::vector<PathContribution> contrib(m);
  std::vector<int> outcome(m);
  parallel_for(m, [&](std::size_t p) {
    contrib[p] = xva_contribution(values.path(p), values.grid(), bank[p], counterparty[p], terms, k, regime, &outcome[p]);
  });

  XvaResult r;
  r.paths = m;
  double s_c = 0.0, s_d = 0.0, s_b = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    s_c += contrib[p].cva;
    s_d += contrib[p].dva;
    s_b += contrib[p].dva - contrib[p].cva;
    switch (outcome[p]) {
      case 0: ++r.none; break;
      case 1: ++r.bank_first; break;
      case 2: ++r.counterparty_first; break;
      default: ++r.simultaneous; break;
    }
  }
  const double md = static_cast<double>(m);
  r.cva = s_c / md;
  r.dva = s_d / md;
  r.bva = r.dva - r.cva;
  if (m > 1) {
    double q_c = 0.0, q_d = 0.0, q_b = 0.0;
    const double mean_b = s_b / md;
    for (std::size_t p = 0; p < m; ++p) {
      q_c += (contrib[p].cva - r.cva) * (contrib[p].cva - r.cva);
      q_d += (contrib[p].dva - r.dva) * (contrib[p].dva - r.dva);
      const double b = contrib[p].dva - contrib[p].cva;
      q_b += (b - mean_b) * (b - mean_b);
    }
    r.cva_se = std::sqrt(q_c / (md - 1.0) / md);
    r.dva_se = std::sqrt(q_d / (md - 1.0) / md);
    r.bva_se = std::sqrt(q_b / (md - 1.0) / md);
  }
  return r;
}

/// Share of defaults by (initial rating, rating held just before default).
struct PredefaultDistribution {
  Matrix share;  // K x K, sums to 1 unless empty
  std::size_t defaults = 0;
  bool empty = true;

  /// Share of defaults whose pre-default rating is r, over all initial ratings.
  double column_share(int r) const { return empty ? 0.0 : share.col(r).sum(); }
};

inline PredefaultDistribution predefault_distribution(const std::vector<const std::vector<RatingPath>*>& groups, int k) {
  PredefaultDistribution out;
  out.share = Matrix::Zero(k, k);
  for (const auto* paths : groups)
    for (const auto& x : *paths)
      if (const auto r = predefault_rating(x, k)) {
        out.share(x.initial, *r) += 1.0;
        ++out.defaults;
      }
  out.empty = out.defaults == 0;
  if (!out.empty) out.share /= static_cast<double>(out.defaults);
  return out;
}

inline PredefaultDistribution predefault_distribution(const NestedPaths& nested) {
  std::vector<const std::vector<RatingPath>*> groups;
  for (const auto& g : nested.paths) groups.push_back(&g);
  return predefault_distribution(groups, nested.bundle.k());
}

/// Everything one XVA run prices on: shared generator trajectories, bank and
/// counterparty rating paths (independent given the generator) and portfolio paths.
struct XvaScenario {
  NestedPaths bank;
  std::vector<RatingPath> counterparty;
  ValuePaths values;
};

inline XvaScenario simulate_xva_scenario(const SdeParams& p, const MeasureChange& m, const TimeGrid& rating_grid,
                                         std::size_t m1, std::size_t m2, int bank_rating, int counterparty_rating,
                                         const PortfolioSpec& portfolio, const CsaTerms& terms, std::uint64_t seed) {
  terms.validate(p.k);
  if (std::abs(portfolio.horizon - rating_grid.horizon()) > 1e-12)
    throw ValidationError("portfolio horizon differs from the rating grid horizon");
  NestedPaths bank = nested_simulate(p, m, rating_grid, m1, m2, bank_rating, seed);
  std::vector<RatingPath> cpty(m1 * m2);
  parallel_for(m1, [&](std::size_t w) {
    const GeneratorPath gen = piecewise_generators(bank.bundle, w);
    for (std::size_t j = 0; j < m2; ++j) {
      auto rng = ssa_stream(seed, w, j, counterparty_rating, stream_label::kCounterparty);
      cpty[w * m2 + j] = ssa_sample(gen, counterparty_rating, rng);
    }
  });
  const TimeGrid value_grid = TimeGrid::per_year(rating_grid.horizon(), terms.postings_per_year);
  ValuePaths values = simulate_portfolio(portfolio, value_grid, m1 * m2, seed);
  return {std::move(bank), std::move(cpty), std::move(values)};
}

inline XvaResult compute_xva(const XvaScenario& s, const CsaTerms& terms, CollateralRegime regime) {
  return compute_xva(s.values, s.bank.paths.front(), s.counterparty, terms, s.bank.bundle.k(), regime);
}

}  // namespace ratingxva
