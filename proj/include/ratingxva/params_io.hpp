#pragma once

// Text formats for model parameters:
//
//   SdeParams     from-to,a,b,sigma       one row per basis coordinate, e.g. "2-1,1.57,0.0469,0.0576";
//                                         rows are matched by label, so their order is free
//   PdTargets     rating,pd               K rows in rating order
//   MeasureChange kind,h_1,...,h_K        one data row, e.g. "exponential,12.4,3.07,0.46,1"

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ratingxva/calibration.hpp"
#include "ratingxva/csv.hpp"
#include "ratingxva/sde.hpp"

namespace ratingxva {

inline SdeParams read_sde_params(std::istream& in, int k, const std::string& source = "<stream>") {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, 0, "empty parameter file");
  const auto& header = lines.front();
  if (header.fields != std::vector<std::string>{"from-to", "a", "b", "sigma"})
    throw ParseError(source, header.number, 1, "header must be 'from-to,a,b,sigma'");
  const BasisIndexMap basis(k);
  const auto n = static_cast<Eigen::Index>(basis.size());
  Vector a(n), b(n), sigma(n);
  std::vector<bool> seen(basis.size(), false);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != 4) throw ParseError(source, line.number, 0, "expected 4 fields");
    std::size_t idx = basis.size();
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis.label(i) == line.fields[0]) idx = i;
    if (idx == basis.size())
      throw ParseError(source, line.number, 1, "'" + line.fields[0] + "' is not an off-diagonal pair of a K=" + std::to_string(k) + " model");
    if (seen[idx]) throw ParseError(source, line.number, 1, "duplicate coordinate '" + line.fields[0] + "'");
    seen[idx] = true;
    const auto ii = static_cast<Eigen::Index>(idx);
    a[ii] = csv::field_number(source, line, 1);
    b[ii] = csv::field_number(source, line, 2);
    sigma[ii] = csv::field_number(source, line, 3);
  }
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (!seen[i]) throw ParseError(source, lines.back().number, 0, "missing coordinate '" + basis.label(i) + "'");
  return SdeParams(k, a, b, sigma);
}

inline SdeParams read_sde_params_file(const std::string& path, int k) {
  auto in = csv::open_input(path);
  return read_sde_params(in, k, path);
}

/// Writes rows in basis order.
inline void write_sde_params(std::ostream& out, const SdeParams& p) {
  const BasisIndexMap basis(p.k);
  out << "from-to,a,b,sigma\n";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out << basis.label(i) << ',' << csv::format_number(p.a[ii]) << ',' << csv::format_number(p.b[ii]) << ','
        << csv::format_number(p.sigma[ii]) << '\n';
  }
}

inline void write_sde_params_file(const std::string& path, const SdeParams& p) {
  auto out = csv::open_output(path);
  write_sde_params(out, p);
}

/// PD targets; when `labels` is non-empty the rating column must match it.
inline PdTargets read_pd_targets(std::istream& in, const std::vector<std::string>& labels = {},
                                 const std::string& source = "<stream>") {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, 0, "empty PD file");
  if (lines.front().fields != std::vector<std::string>{"rating", "pd"})
    throw ParseError(source, lines.front().number, 1, "header must be 'rating,pd'");
  Vector pd(static_cast<Eigen::Index>(lines.size() - 1));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != 2) throw ParseError(source, line.number, 0, "expected 2 fields");
    if (!labels.empty() && (r - 1 >= labels.size() || line.fields[0] != labels[r - 1]))
      throw ParseError(source, line.number, 1, "rating '" + line.fields[0] + "' does not match the model labels");
    pd[static_cast<Eigen::Index>(r - 1)] = csv::field_number(source, line, 1);
  }
  if (!labels.empty() && static_cast<std::size_t>(pd.size()) != labels.size())
    throw ParseError(source, lines.back().number, 0, "expected " + std::to_string(labels.size()) + " ratings");
  return PdTargets(pd);
}

inline PdTargets read_pd_targets_file(const std::string& path, const std::vector<std::string>& labels = {}) {
  auto in = csv::open_input(path);
  return read_pd_targets(in, labels, path);
}

inline void write_pd_targets(std::ostream& out, const std::vector<std::string>& labels, const Vector& pd) {
  if (static_cast<Eigen::Index>(labels.size()) != pd.size()) throw DimensionError("label count does not match PD vector");
  out << "rating,pd\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << labels[i] << ',' << csv::format_number(pd[static_cast<Eigen::Index>(i)]) << '\n';
}

inline MeasureChange read_measure(std::istream& in, int k, const std::string& source = "<stream>") {
  const auto lines = csv::read_lines(in);
  if (lines.size() != 2) throw ParseError(source, lines.empty() ? 0 : lines.back().number, 0, "expected a header and one data row");
  const auto& header = lines[0];
  if (header.fields.size() != static_cast<std::size_t>(k) + 1 || header.fields[0] != "kind")
    throw ParseError(source, header.number, 1, "header must be 'kind,h_1,...,h_" + std::to_string(k) + "'");
  const auto& row = lines[1];
  if (row.fields.size() != header.fields.size()) throw ParseError(source, row.number, 0, "field count differs from header");
  MeasureChange m;
  m.kind = parse_measure_kind(row.fields[0]);
  m.h.resize(k);
  for (int i = 0; i < k; ++i) m.h[i] = csv::field_number(source, row, static_cast<std::size_t>(i) + 1);
  m.validate(k);
  return m;
}

inline MeasureChange read_measure_file(const std::string& path, int k) {
  auto in = csv::open_input(path);
  return read_measure(in, k, path);
}

inline void write_measure(std::ostream& out, const MeasureChange& m) {
  out << "kind";
  for (Eigen::Index i = 0; i < m.h.size(); ++i) out << ",h_" << i + 1;
  out << '\n' << to_string(m.kind);
  for (Eigen::Index i = 0; i < m.h.size(); ++i) out << ',' << csv::format_number(m.h[i]);
  out << '\n';
}

inline void write_measure_file(const std::string& path, const MeasureChange& m) {
  auto out = csv::open_output(path);
  write_measure(out, m);
}

}  // namespace ratingxva
