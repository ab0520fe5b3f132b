#pragma once

#include <Eigen/SparseCore>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "diagest/core.hpp"

namespace diagest {

/// Matrix Market I/O: array (dense, column-major) and coordinate (sparse,
/// 1-based indices) formats, real/integer/pattern fields, general/symmetric
/// symmetry.

template <typename Scalar>
void write_matrix_market(const std::string& path, const MatrixX<Scalar>& a) {
  std::ofstream out(path);
  if (!out) throw invalid_input("write_matrix_market: cannot open '" + path + "'");
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  char buf[40];
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\n", static_cast<double>(a(i, j)));
      out << buf;
    }
}

template <typename Scalar>
void write_matrix_market(const std::string& path,
                         const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>& a,
                         bool symmetric = false) {
  std::ofstream out(path);
  if (!out) throw invalid_input("write_matrix_market: cannot open '" + path + "'");
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general")
      << "\n";
  std::vector<std::string> lines;
  char buf[80];
  for (Index i = 0; i < a.outerSize(); ++i)
    for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(a, i); it;
         ++it) {
      if (symmetric && it.col() > it.row()) continue;  // keep lower triangle
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n",
                    static_cast<long long>(it.row() + 1), static_cast<long long>(it.col() + 1),
                    static_cast<double>(it.value()));
      lines.emplace_back(buf);
    }
  out << a.rows() << " " << a.cols() << " " << lines.size() << "\n";
  for (const auto& l : lines) out << l;
}

template <typename Scalar>
using MatrixMarketData =
    std::variant<MatrixX<Scalar>, Eigen::SparseMatrix<Scalar, Eigen::RowMajor>>;

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool next_data_line(std::istream& in, std::string& line, long& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace detail

template <typename Scalar>
MatrixMarketData<Scalar> read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("read_matrix_market: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw invalid_input("read_matrix_market: missing %%MatrixMarket header in '" + path + "'");

  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  detail::require(object == "matrix", "read_matrix_market: unsupported object '" + object + "'");
  detail::require(field == "real" || field == "integer" || field == "pattern",
                  "read_matrix_market: unsupported field '" + field + "'");
  detail::require(symmetry == "general" || symmetry == "symmetric",
                  "read_matrix_market: unsupported symmetry '" + symmetry + "'");
  const bool sym = symmetry == "symmetric";

  std::string line;
  long line_no = 1;
  if (!detail::next_data_line(in, line, line_no))
    throw invalid_input("read_matrix_market: missing size line");

  if (format == "array") {
    detail::require(field != "pattern", "read_matrix_market: pattern array is not a thing");
    Index rows, cols;
    {
      std::istringstream ls(line);
      if (!(ls >> rows >> cols)) throw invalid_input("read_matrix_market: bad size line");
    }
    MatrixX<Scalar> a(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      const Index i0 = sym ? j : 0;
      for (Index i = i0; i < rows; ++i) {
        if (!detail::next_data_line(in, line, line_no))
          throw invalid_input("read_matrix_market: truncated array data at line " +
                              std::to_string(line_no));
        std::istringstream ls(line);
        double v;
        if (!(ls >> v))
          throw invalid_input("read_matrix_market: bad value at line " + std::to_string(line_no));
        a(i, j) = static_cast<Scalar>(v);
        if (sym) a(j, i) = static_cast<Scalar>(v);
      }
    }
    return a;
  }

  if (format != "coordinate")
    throw invalid_input("read_matrix_market: unsupported format '" + format + "'");
  Index rows, cols;
  long long nnz;
  {
    std::istringstream ls(line);
    if (!(ls >> rows >> cols >> nnz)) throw invalid_input("read_matrix_market: bad size line");
  }
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(sym ? 2 * nnz : nnz));
  for (long long e = 0; e < nnz; ++e) {
    if (!detail::next_data_line(in, line, line_no))
      throw invalid_input("read_matrix_market: truncated coordinate data at line " +
                          std::to_string(line_no));
    std::istringstream ls(line);
    Index i, j;
    double v = 1.0;
    if (!(ls >> i >> j) || (field != "pattern" && !(ls >> v)))
      throw invalid_input("read_matrix_market: bad entry at line " + std::to_string(line_no));
    detail::require(i >= 1 && i <= rows && j >= 1 && j <= cols,
                    "read_matrix_market: index out of range at line " + std::to_string(line_no));
    trip.emplace_back(i - 1, j - 1, static_cast<Scalar>(v));
    if (sym && i != j) trip.emplace_back(j - 1, i - 1, static_cast<Scalar>(v));
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> a(rows, cols);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

}  // namespace diagest
