#pragma once

// Pathwise checks of the four empirical properties expected from short-term
// rating matrices, evaluated literally on every sampled matrix:
//
//   diagonal dominance     R_ii >= sum_{j != i} R_ij
//   downgrade bias         sum_{i<j} R_ij >= sum_{i>j} R_ij
//   monotone default       R_1K <= R_2K <= ... <= R_KK
//   decreasing diagonal    R_s,ii >= R_t,ii for consecutive checkpoints s < t

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ratingxva/sde.hpp"

namespace ratingxva {

enum class RatingProperty : std::size_t { diagonal_dominance = 0, downgrade_bias = 1, monotone_default = 2, decreasing_diagonal = 3 };

inline constexpr std::array<RatingProperty, 4> kAllProperties = {RatingProperty::diagonal_dominance, RatingProperty::downgrade_bias,
                                                                  RatingProperty::monotone_default, RatingProperty::decreasing_diagonal};

inline std::string_view to_string(RatingProperty p) {
  switch (p) {
    case RatingProperty::diagonal_dominance: return "diagonal_dominance";
    case RatingProperty::downgrade_bias: return "downgrade_bias";
    case RatingProperty::monotone_default: return "monotone_default";
    case RatingProperty::decreasing_diagonal: return "decreasing_diagonal";
  }
  return "";
}

struct PropertyStats {
  std::size_t violating = 0;  // trajectories with at least one violation
  double fraction = 0.0;
  double worst = 0.0;  // largest violation magnitude seen
  /// 0-based rating pairs (i, j) involved in violations, with trajectory counts.
  /// Diagonal properties report (i, i); the monotone default column reports (i, i+1);
  /// downgrade bias has no pair.
  std::map<std::pair<int, int>, std::size_t> offenders;

  double pair_fraction(int i, int j, std::size_t trajectories) const {
    const auto it = offenders.find({i, j});
    return it == offenders.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trajectories);
  }
};

struct CheckpointProperties {
  double time = 0.0;
  std::array<std::optional<PropertyStats>, 4> stats;  // decreasing_diagonal is empty at the first checkpoint

  const std::optional<PropertyStats>& operator[](RatingProperty p) const { return stats[static_cast<std::size_t>(p)]; }
};

struct PropertyReport {
  std::size_t trajectories = 0;
  std::vector<CheckpointProperties> checkpoints;
};

namespace detail {

class Tally {
 public:
  void record(bool violated_any) { violating_ += violated_any ? 1 : 0; }
  PropertyStats finish(std::size_t m) {
    stats_.violating = violating_;
    stats_.fraction = m == 0 ? 0.0 : static_cast<double>(violating_) / static_cast<double>(m);
    return std::move(stats_);
  }
  void violation(double magnitude, std::optional<std::pair<int, int>> pair, std::vector<std::pair<int, int>>& seen) {
    stats_.worst = std::max(stats_.worst, magnitude);
    if (pair && std::find(seen.begin(), seen.end(), *pair) == seen.end()) {
      seen.push_back(*pair);
      ++stats_.offenders[*pair];
    }
  }

 private:
  std::size_t violating_ = 0;
  PropertyStats stats_;
};

}  // namespace detail

/// Properties over samples taken at increasing times. samples[c] holds the M
/// trajectory matrices at times[c]; trajectory w must be the same path in every sample.
inline PropertyReport property_report(const std::vector<MatrixSample>& samples, const std::vector<double>& times) {
  if (samples.size() != times.size()) throw DimensionError("one time per sample set required");
  PropertyReport report;
  if (samples.empty()) return report;
  const std::size_t m = samples.front().size();
  const int k = samples.front().k();
  report.trajectories = m;
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].size() != m || samples[c].k() != k) throw DimensionError("sample sets differ in shape");
    std::array<detail::Tally, 4> tally;
    for (std::size_t w = 0; w < m; ++w) {
      const auto r = samples[c].at(w);
      std::array<std::vector<std::pair<int, int>>, 4> seen;
      std::array<bool, 4> bad{};

      for (int i = 0; i < k; ++i) {
        const double off = r.row(i).sum() - r(i, i);
        if (r(i, i) < off) {
          bad[0] = true;
          tally[0].violation(off - r(i, i), std::pair{i, i}, seen[0]);
        }
      }
      double upper = 0.0, lower = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) (j > i ? upper : lower) += (i == j ? 0.0 : r(i, j));
      if (upper < lower) {
        bad[1] = true;
        tally[1].violation(lower - upper, std::nullopt, seen[1]);
      }
      for (int i = 0; i + 1 < k; ++i)
        if (r(i, k - 1) > r(i + 1, k - 1)) {
          bad[2] = true;
          tally[2].violation(r(i, k - 1) - r(i + 1, k - 1), std::pair{i, i + 1}, seen[2]);
        }
      if (c > 0) {
        const auto prev = samples[c - 1].at(w);
        for (int i = 0; i < k; ++i)
          if (prev(i, i) < r(i, i)) {
            bad[3] = true;
            tally[3].violation(r(i, i) - prev(i, i), std::pair{i, i}, seen[3]);
          }
      }
      for (std::size_t p = 0; p < 4; ++p) tally[p].record(bad[p]);
    }
    CheckpointProperties cp;
    cp.time = times[c];
    for (std::size_t p = 0; p < 3; ++p) cp.stats[p] = tally[p].finish(m);
    if (c > 0) cp.stats[3] = tally[3].finish(m);
    report.checkpoints.push_back(std::move(cp));
  }
  return report;
}

/// Properties of a bundle at the given grid times (increasing).
inline PropertyReport property_report(const MatrixPathBundle& bundle, const std::vector<double>& checkpoints) {
  std::vector<MatrixSample> samples;
  samples.reserve(checkpoints.size());
  for (double t : checkpoints) samples.push_back(bundle.at_time(t));
  return property_report(samples, checkpoints);
}

}  // namespace ratingxva
