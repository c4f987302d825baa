#pragma once

// Rating-matrix CSV:
//
//   from,A,B,C,D
//   A,0.9395,0.0566,0.0037,2.7804e-04
//   ...
//
// An optional trailing "w_t" header column (withdrawal rates of a cohort
// matrix) is ignored on read; write_rating_matrix emits it on request.

#include <istream>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include "ratingxva/csv.hpp"
#include "ratingxva/lie.hpp"

namespace ratingxva {

struct LabeledMatrix {
  std::vector<std::string> labels;
  Matrix values;
  std::optional<Vector> withdrawal;  // trailing w_t column, when present

  int k() const { return static_cast<int>(labels.size()); }
};

inline LabeledMatrix read_rating_matrix(std::istream& in, const std::string& source = "<stream>") {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, 0, "empty rating matrix file");
  const auto& header = lines.front();
  if (header.fields.size() < 3 || header.fields.front() != "from")
    throw ParseError(source, header.number, 1, "header must start with 'from' followed by at least two labels");
  std::vector<std::string> labels(header.fields.begin() + 1, header.fields.end());
  const bool has_withdrawal = labels.back() == "w_t";
  if (has_withdrawal) labels.pop_back();
  const auto k = labels.size();
  if (k < 2) throw ParseError(source, header.number, 2, "need at least two rating labels");
  if (lines.size() != k + 1)
    throw ParseError(source, lines.back().number, 0,
                     "expected " + std::to_string(k) + " data rows, found " + std::to_string(lines.size() - 1));

  Matrix m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  std::optional<Vector> withdrawal;
  if (has_withdrawal) withdrawal = Vector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < k; ++r) {
    const auto& line = lines[r + 1];
    if (line.fields.size() != header.fields.size())
      throw ParseError(source, line.number, 0,
                       "expected " + std::to_string(header.fields.size()) + " fields, found " + std::to_string(line.fields.size()));
    if (line.fields.front() != labels[r])
      throw ParseError(source, line.number, 1, "row label '" + line.fields.front() + "' does not match header '" + labels[r] + "'");
    for (std::size_t c = 0; c < k; ++c) {
      const double v = csv::field_number(source, line, c + 1);
      if (!std::isfinite(v)) throw ParseError(source, line.number, c + 2, "matrix entries must be finite");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    if (withdrawal) (*withdrawal)[static_cast<Eigen::Index>(r)] = csv::field_number(source, line, k + 1);
  }
  return {std::move(labels), std::move(m), std::move(withdrawal)};
}

inline LabeledMatrix read_rating_matrix_file(const std::string& path) {
  auto in = csv::open_input(path);
  return read_rating_matrix(in, path);
}

inline void write_rating_matrix(std::ostream& out, const std::vector<std::string>& labels, const Matrix& m,
                                const Vector* withdrawal = nullptr) {
  if (static_cast<Eigen::Index>(labels.size()) != m.rows() || m.rows() != m.cols())
    throw DimensionError("label count does not match matrix size");
  out << "from";
  for (const auto& l : labels) out << ',' << l;
  if (withdrawal) out << ",w_t";
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << csv::format_number(m(r, c));
    if (withdrawal) out << ',' << csv::format_number((*withdrawal)[r]);
    out << '\n';
  }
}

inline void write_rating_matrix_file(const std::string& path, const std::vector<std::string>& labels, const Matrix& m,
                                     const Vector* withdrawal = nullptr) {
  auto out = csv::open_output(path);
  write_rating_matrix(out, labels, m, withdrawal);
}

/// Labels A, B, C, ... for K ratings.
inline std::vector<std::string> default_labels(int k) {
  std::vector<std::string> labels;
  for (int i = 0; i < k; ++i) labels.emplace_back(1, static_cast<char>('A' + i));
  return labels;
}

}  // namespace ratingxva
