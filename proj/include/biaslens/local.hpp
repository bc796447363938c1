#pragma once

// Local stereotypical bias: one value per (group, class) cell.

#include <biaslens/core.hpp>
#include <biaslens/stereotypical.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace biaslens {

/// Per-cell association matrix in [-1, 1]. Has the full table shape; cells
/// in zero-marginal rows or columns are undefined.
struct LocalBiasMatrix {
  MetricId metric = MetricId::Npmi;
  std::string component;
  std::vector<std::string> groups;
  std::vector<std::string> classes;
  std::vector<CellValue> cells;  // row-major

  [[nodiscard]] const CellValue& at(std::size_t r, std::size_t c) const { return cells[r * classes.size() + c]; }
  [[nodiscard]] std::size_t rows() const { return groups.size(); }
  [[nodiscard]] std::size_t cols() const { return classes.size(); }
};

namespace detail {

template <typename F>
LocalBiasMatrix local_matrix(const ContingencyTable& t, MetricId id, F&& cell_fn) {
  LocalBiasMatrix m{id, t.component(), t.groups(), t.classes(), {}};
  m.cells.reserve(t.rows() * t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (t.row_total(r) == 0 || t.col_total(c) == 0) {
        m.cells.push_back(CellValue::none(UndefinedReason::EmptyInput));
      } else {
        m.cells.push_back(cell_fn(r, c));
      }
    }
  }
  return m;
}

}  // namespace detail

/// Normalized pointwise mutual information. Empty subgroups with positive
/// marginals are -1; a cell holding the whole dataset is undefined.
inline LocalBiasMatrix npmi_matrix(const ContingencyTable& table) {
  return detail::local_matrix(table, MetricId::Npmi, [&](std::size_t r, std::size_t c) {
    const Count joint = table.cell(r, c);
    if (joint == 0) return CellValue::of(-1.0);
    if (joint == table.total()) return CellValue::none(UndefinedReason::ZeroDenominator);
    const long double expected = static_cast<long double>(table.row_total(r)) * table.col_total(c);
    const long double pmi = std::log1p(static_cast<long double>(detail::cell_excess(table, r, c)) / expected);
    const long double log_joint = std::log(static_cast<long double>(joint) / table.total());
    return CellValue::of(static_cast<double>(-pmi / log_joint));
  });
}

/// Ducher's Z: the cell excess over independence, scaled by its attainable
/// extreme in the same direction.
inline LocalBiasMatrix duchers_z_matrix(const ContingencyTable& table) {
  return detail::local_matrix(table, MetricId::DuchersZ, [&](std::size_t r, std::size_t c) {
    // Everything is scaled by n^2 so the branch test and both terms are exact.
    const __int128 n = table.total();
    const __int128 ng = table.row_total(r);
    const __int128 ny = table.col_total(c);
    const __int128 excess = detail::cell_excess(table, r, c);
    if (excess == 0) return CellValue::of(0.0);
    __int128 denom = 0;
    if (excess > 0) {
      denom = n * std::min(ng, ny) - ng * ny;
    } else {
      const __int128 overlap = std::max<__int128>(0, ng + ny - n);
      denom = ng * ny - n * overlap;
    }
    if (denom == 0) return CellValue::none(UndefinedReason::ZeroDenominator);
    return CellValue::of(static_cast<double>(static_cast<long double>(excess) / static_cast<long double>(denom)));
  });
}

}  // namespace biaslens
