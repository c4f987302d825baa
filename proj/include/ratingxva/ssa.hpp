#pragma once

// Rating paths sampled from a piecewise-homogeneous CTMC whose generator on
// [t_k, t_{k+1}) is the simulated A-increment of that step divided by dt
// (Gillespie SSA, one generator per grid interval), and the nested
// M1 generators x M2 paths driver built on it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ratingxva/parallel.hpp"
#include "ratingxva/rng.hpp"
#include "ratingxva/sde.hpp"

namespace ratingxva {

/// Generators (per year) on each grid interval of one matrix trajectory.
struct GeneratorPath {
  TimeGrid grid{1.0, 1};
  std::vector<Matrix> generators;  // generators[s] acts on [t_s, t_{s+1})

  int k() const { return generators.empty() ? 0 : static_cast<int>(generators.front().rows()); }
};

/// Generator path of trajectory w: increments over [t_s, t_{s+1}] divided by dt.
inline GeneratorPath piecewise_generators(const MatrixPathBundle& bundle, std::size_t w) {
  if (w >= bundle.trajectories()) throw DimensionError("trajectory index out of range");
  GeneratorPath g{bundle.grid(), {}};
  const int k = bundle.k();
  const double dt = bundle.grid().dt();
  std::vector<double> scaled(bundle.coords());
  g.generators.resize(static_cast<std::size_t>(bundle.grid().steps()));
  for (int s = 0; s < bundle.grid().steps(); ++s) {
    const auto inc = bundle.increments(w, s);
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = inc[i] / dt;
    detail::assemble_generator(k, scaled, g.generators[static_cast<std::size_t>(s)]);
  }
  return g;
}

inline std::vector<GeneratorPath> piecewise_generators(const MatrixPathBundle& bundle) {
  std::vector<GeneratorPath> out(bundle.trajectories());
  parallel_for(out.size(), [&](std::size_t w) { out[w] = piecewise_generators(bundle, w); });
  return out;
}

struct RatingEvent {
  double time;
  int rating;  // 0-based rating entered at `time`
};

/// Right-continuous piecewise-constant rating path on [0, T]. Ratings are
/// 0-based; rating K-1 is default and absorbing.
struct RatingPath {
  int initial = 0;
  std::vector<RatingEvent> events;       // strictly increasing times in (0, T)
  std::vector<std::uint8_t> snapshots;   // rating at each grid point t_0..t_N

  int rating_at(double t) const {
    int r = initial;
    for (const auto& e : events) {
      if (e.time > t) break;
      r = e.rating;
    }
    return r;
  }

  int final_rating() const { return events.empty() ? initial : events.back().rating; }
};

/// Gillespie sampling along a generator path. Within each interval the state
/// holds when its exit rate is zero or the exponential waiting time overshoots
/// the interval end; otherwise it jumps to the first destination whose
/// cumulative rate exceeds rate * r2.
inline RatingPath ssa_sample(const GeneratorPath& g, int i0, StreamRng& rng) {
  const int k = g.k();
  if (i0 < 0 || i0 >= k) throw DomainError("initial rating out of range");
  if (k > 255) throw DimensionError("rating paths store at most 255 ratings");
  RatingPath path;
  path.initial = i0;
  path.snapshots.resize(g.generators.size() + 1);
  path.snapshots[0] = static_cast<std::uint8_t>(i0);
  int state = i0;
  for (std::size_t s = 0; s < g.generators.size(); ++s) {
    const Matrix& a = g.generators[s];
    double t = g.grid.time(static_cast<int>(s));
    const double end = g.grid.time(static_cast<int>(s) + 1);
    while (state != k - 1) {
      const double rate = -a(state, state);
      if (!(rate > 0.0)) break;
      const double tau = -std::log(rng.uniform_open()) / rate;
      if (t + tau >= end) break;
      t += tau;
      const double target = rate * rng.uniform_open();
      double cum = 0.0;
      int next = -1;
      for (int j = 0; j < k; ++j) {
        if (j == state || a(state, j) <= 0.0) continue;
        cum += a(state, j);
        next = j;
        if (cum > target) break;
      }
      state = next;
      path.events.push_back({t, state});
    }
    path.snapshots[s + 1] = static_cast<std::uint8_t>(state);
  }
  return path;
}

/// Independent path streams per (m1, m2, initial rating); `party` separates
/// the bank (0) from the counterparty in XVA runs.
inline StreamRng ssa_stream(std::uint64_t seed, std::size_t m1, std::size_t m2, int i0, std::uint64_t party = 0) {
  if (party == 0) return StreamRng(seed, {stream_label::kSsa, m1, m2, static_cast<std::uint64_t>(i0)});
  return StreamRng(seed, {stream_label::kSsa, party, m1, m2, static_cast<std::uint64_t>(i0)});
}

/// M1 matrix trajectories, M2 rating paths per trajectory and initial rating.
struct NestedPaths {
  MatrixPathBundle bundle;
  std::size_t m2 = 0;
  std::vector<int> initial;                    // 0-based initial ratings simulated
  std::vector<std::vector<RatingPath>> paths;  // paths[g][m1 * M2 + m2] for initial[g]

  std::size_t m1() const { return bundle.trajectories(); }

  const std::vector<RatingPath>* paths_from(int i0) const {
    for (std::size_t g = 0; g < initial.size(); ++g)
      if (initial[g] == i0) return &paths[g];
    return nullptr;
  }
};

inline NestedPaths nested_simulate(const SdeParams& p, const MeasureChange& m, const TimeGrid& grid, std::size_t m1,
                                   std::size_t m2, const std::vector<int>& initial, std::uint64_t seed) {
  if (m1 < 1 || m2 < 1) throw DomainError("nested simulation needs M1, M2 >= 1");
  for (int i0 : initial)
    if (i0 < 0 || i0 >= p.k) throw DomainError("initial rating out of range");
  NestedPaths out{simulate_paths(p, m, grid, m1, seed), m2, initial, {}};
  out.paths.assign(initial.size(), std::vector<RatingPath>(m1 * m2));
  parallel_for(m1, [&](std::size_t w) {
    const GeneratorPath gen = piecewise_generators(out.bundle, w);
    for (std::size_t g = 0; g < initial.size(); ++g)
      for (std::size_t j = 0; j < m2; ++j) {
        auto rng = ssa_stream(seed, w, j, initial[g]);
        out.paths[g][w * m2 + j] = ssa_sample(gen, initial[g], rng);
      }
  });
  return out;
}

/// Nested simulation from a single initial rating.
inline NestedPaths nested_simulate(const SdeParams& p, const MeasureChange& m, const TimeGrid& grid, std::size_t m1,
                                   std::size_t m2, int i0, std::uint64_t seed) {
  return nested_simulate(p, m, grid, m1, m2, std::vector<int>{i0}, seed);
}

/// Every non-default initial rating 0..K-2.
inline std::vector<int> transient_ratings(int k) {
  std::vector<int> out;
  for (int i = 0; i + 1 < k; ++i) out.push_back(i);
  return out;
}

struct EmpiricalTransition {
  Matrix frequencies;             // pooled occupancy; rows without paths are NaN
  std::vector<bool> row_present;  // false where no path started in that rating
  /// Mean over matrix trajectories of ||R_t - R_t^Sim||_F / K^2, comparing only
  /// present rows.
  double error = 0.0;
};

/// Occupancy frequencies at grid time t. The default row is the absorbing unit
/// vector by definition and always present.
inline EmpiricalTransition empirical_transition(const NestedPaths& nested, double t) {
  const int k = nested.bundle.k();
  const int s = nested.bundle.grid().index_of(t);
  EmpiricalTransition out;
  out.frequencies = Matrix::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  out.row_present.assign(static_cast<std::size_t>(k), false);
  out.frequencies.row(k - 1).setZero();
  out.frequencies(k - 1, k - 1) = 1.0;
  out.row_present[static_cast<std::size_t>(k - 1)] = true;

  const std::size_t m1 = nested.m1(), m2 = nested.m2;
  std::vector<Matrix> per_traj(m1, Matrix::Zero(k, k));
  for (std::size_t w = 0; w < m1; ++w) per_traj[w](k - 1, k - 1) = 1.0;
  for (std::size_t g = 0; g < nested.initial.size(); ++g) {
    const int i0 = nested.initial[g];
    if (i0 == k - 1) continue;
    out.row_present[static_cast<std::size_t>(i0)] = true;
    out.frequencies.row(i0).setZero();
    for (std::size_t w = 0; w < m1; ++w) {
      for (std::size_t j = 0; j < m2; ++j) per_traj[w](i0, nested.paths[g][w * m2 + j].snapshots[static_cast<std::size_t>(s)]) += 1.0;
      per_traj[w].row(i0) /= static_cast<double>(m2);
      out.frequencies.row(i0) += per_traj[w].row(i0);
    }
    out.frequencies.row(i0) /= static_cast<double>(m1);
  }

  double total = 0.0;
  for (std::size_t w = 0; w < m1; ++w) {
    const auto model = nested.bundle.r(w, s);
    double sq = 0.0;
    for (int i = 0; i < k; ++i) {
      if (!out.row_present[static_cast<std::size_t>(i)]) continue;
      sq += (model.row(i) - per_traj[w].row(i)).squaredNorm();
    }
    total += std::sqrt(sq) / static_cast<double>(k * k);
  }
  out.error = total / static_cast<double>(m1);
  return out;
}

/// First time the path enters the default state K-1 (0 when it starts there).
inline std::optional<double> default_time(const RatingPath& x, int k) {
  if (x.initial == k - 1) return 0.0;
  for (const auto& e : x.events)
    if (e.rating == k - 1) return e.time;
  return std::nullopt;
}

/// Rating held immediately before the jump to default; nullopt without a default
/// or when the path starts in default.
inline std::optional<int> predefault_rating(const RatingPath& x, int k) {
  int prev = x.initial;
  for (const auto& e : x.events) {
    if (e.rating == k - 1) return prev;
    prev = e.rating;
  }
  return std::nullopt;
}

}  // namespace ratingxva
