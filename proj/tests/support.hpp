#pragma once

#include <biaslens/biaslens.hpp>

#include "oracle/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace testing_support {

using biaslens::ContingencyTable;
using biaslens::Count;
using biaslens::PopulationProfile;

inline PopulationProfile profile_of(const std::vector<Count>& counts) {
  return {"c", biaslens::detail::names("g", counts.size()), counts};
}

inline ContingencyTable table_of(const std::vector<std::vector<Count>>& rows) {
  return biaslens::validate_table(rows);
}

inline oracle::Matrix to_matrix(const ContingencyTable& t) {
  oracle::Matrix m(t.rows(), oracle::Counts(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.cell(r, c);
  }
  return m;
}

inline ContingencyTable scaled(const ContingencyTable& t, Count k) {
  auto cells = t.cells();
  for (auto& v : cells) v *= k;
  return {t.component(), t.groups(), t.classes(), std::move(cells)};
}

/// Reverses group order and rotates class order.
inline ContingencyTable permuted(const ContingencyTable& t) {
  std::vector<std::size_t> rp(t.rows()), cp(t.cols());
  std::iota(rp.rbegin(), rp.rend(), 0);
  for (std::size_t c = 0; c < t.cols(); ++c) cp[c] = (c + 1) % t.cols();
  std::vector<std::string> groups, classes;
  for (auto r : rp) groups.push_back(t.groups()[r]);
  for (auto c : cp) classes.push_back(t.classes()[c]);
  std::vector<Count> cells;
  for (auto r : rp) {
    for (auto c : cp) cells.push_back(t.cell(r, c));
  }
  return {t.component(), groups, classes, std::move(cells)};
}

/// Varied random profile: 1..12 groups, skew, some empty groups, totals up to 1e6.
inline PopulationProfile random_profile(std::uint64_t seed) {
  biaslens::SplitMix64 rng(seed * 7919 + 1);
  biaslens::SynthSpec s;
  s.seed = seed;
  s.groups = 1 + rng.below(12);
  s.concentration = 4.0 * rng.uniform();
  s.sparsity = rng.below(3) == 0 ? 0.5 * rng.uniform() : 0.0;
  static constexpr Count kTotals[] = {1, 7, 50, 999, 12345, 1000000};
  s.total = std::max<Count>(kTotals[rng.below(6)], static_cast<Count>(s.groups));
  return biaslens::random_profile(s);
}

/// Varied random table: 1..9 x 1..8, joint or independence mode, optional sparsity.
inline ContingencyTable random_table(std::uint64_t seed, double sparsity = -1.0) {
  biaslens::SplitMix64 rng(seed * 104729 + 3);
  biaslens::SynthSpec s;
  s.seed = seed;
  s.groups = 1 + rng.below(9);
  s.classes = 1 + rng.below(8);
  s.concentration = 3.0 * rng.uniform();
  s.sparsity = sparsity >= 0.0 ? sparsity : (rng.below(2) == 0 ? 0.6 * rng.uniform() : 0.0);
  static constexpr Count kTotals[] = {3, 40, 500, 9999, 250000};
  s.total = std::max<Count>(kTotals[rng.below(5)], static_cast<Count>(s.groups));
  s.mode = rng.below(6) == 0 ? biaslens::TableMode::Independence : biaslens::TableMode::Joint;
  return biaslens::random_table(s);
}

inline oracle::Maybe expected(biaslens::MetricId id, const oracle::Profile& p) {
  using biaslens::MetricId;
  switch (id) {
    case MetricId::Richness: return p.R;
    case MetricId::ShannonEntropy: return p.H;
    case MetricId::ShannonEvenness: return p.SEI;
    case MetricId::NormalizedStd: return p.NSD;
    case MetricId::InverseImbalanceRatio: return p.IR_inv;
    case MetricId::BergerParker: return p.BP;
    case MetricId::EffectiveNumberOfSpecies: return p.ENS;
    case MetricId::SimpsonIndex: return p.D;
    case MetricId::SimpsonDiversity: return p.one_minus_D;
    case MetricId::SimpsonReciprocal: return p.inv_D;
    default: throw biaslens::Error("not a profile metric");
  }
}

inline oracle::Maybe expected(biaslens::MetricId id, const oracle::Table& t) {
  using biaslens::MetricId;
  switch (id) {
    case MetricId::ChiSquared: return t.chi2;
    case MetricId::CramersV: return t.phi_C;
    case MetricId::TschuprowT: return t.T;
    case MetricId::PearsonC: return t.C;
    case MetricId::TheilsU: return t.U;
    case MetricId::TheilsUReverse: return t.U_R;
    case MetricId::NormalizedMutualInformation: return t.NMI;
    default: throw biaslens::Error("not a table metric");
  }
}

/// chi2 grows with n, so it is compared relative to its magnitude.
inline double tolerance_for(biaslens::MetricId id, const oracle::Maybe& want, double tol) {
  if (id == biaslens::MetricId::ChiSquared && want) return tol * std::max(1.0, oracle::to_double(*want));
  return tol;
}

inline bool close(double got, const oracle::Real& want, double tol) {
  return std::abs(got - oracle::to_double(want)) <= tol;
}

/// Both undefined, or both defined and within `tol`.
inline bool matches(const std::optional<double>& got, const oracle::Maybe& want, double tol) {
  if (got.has_value() != want.has_value()) return false;
  return !got || close(*got, *want, tol);
}

}  // namespace testing_support
