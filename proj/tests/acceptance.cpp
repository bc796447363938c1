// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "cli_util.hpp"
#include "support.hpp"

#include <biaslens/pipeline.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace biaslens;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  int failures = 0;
  // Stated example values that disagree with the arbitrary-precision oracle.
  std::vector<std::string> errata;

  void check(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (failures++ < 5) detail << (failures > 1 ? "; " : "") << what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_val(const std::optional<double>& v) { return v ? std::to_string(*v) : "undef"; }

// --- 1: oracle equivalence ----------------------------------------------------------------

void oracle_equivalence(Outcome& o) {
  const auto t0 = Clock::now();
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = ts::random_profile(seed);
    const auto want = oracle::profile(p.counts());
    for (const auto& m : all_representational(p)) {
      ++compared;
      o.check(ts::matches(m.value, ts::expected(m.id, want), 1e-9),
              "profile seed " + std::to_string(seed) + " " + std::string(metric_key(m.id)) + "=" + fmt_val(m.value));
    }
  }
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto t = ts::random_table(seed);
    const auto matrix = ts::to_matrix(t);
    const auto want = oracle::table(matrix);
    for (const auto& m : all_stereotypical(t)) {
      ++compared;
      const auto w = ts::expected(m.id, want);
      o.check(ts::matches(m.value, w, ts::tolerance_for(m.id, w, 1e-9)),
              "table seed " + std::to_string(seed) + " " + std::string(metric_key(m.id)) + "=" + fmt_val(m.value));
    }
    const auto n = npmi_matrix(t);
    const auto z = duchers_z_matrix(t);
    const auto wn = oracle::npmi(matrix);
    const auto wz = oracle::duchers_z(matrix);
    for (std::size_t i = 0; i < wn.size(); ++i) {
      compared += 2;
      o.check(ts::matches(n.cells[i].value, wn[i], 1e-9), "table seed " + std::to_string(seed) + " NPMI cell");
      o.check(ts::matches(z.cells[i].value, wz[i], 1e-9), "table seed " + std::to_string(seed) + " Z cell");
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 30.0, "runtime " + std::to_string(secs) + " s");
  if (o.ok) o.detail << compared << " values, " << secs << " s";
}

// --- 2: closed-form fixtures --------------------------------------------------------------

void closed_forms(Outcome& o) {
  int n = 0;
  auto near = [&](const std::optional<double>& got, double want, double tol, const std::string& what) {
    ++n;
    o.check(got && std::abs(*got - want) <= tol, what + " = " + fmt_val(got) + ", want " + std::to_string(want));
  };
  // A stated value that the oracle contradicts is reported as an erratum; the
  // library must still agree with the oracle.
  auto stated = [&](const std::optional<double>& got, double want, const oracle::Real& ref, const std::string& what) {
    ++n;
    const double r = oracle::to_double(ref);
    o.check(got && std::abs(*got - r) <= 1e-12, what + " = " + fmt_val(got) + ", oracle " + std::to_string(r));
    if (std::abs(want - r) > 5e-7) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s stated %.6f, oracle %.9f", what.c_str(), want, r);
      o.errata.emplace_back(buf);
    }
  };
  auto undef = [&](const MetricValue& m, UndefinedReason r, const std::string& what) {
    ++n;
    o.check(!m.is_defined() && m.reason == r, what + " should be undefined");
  };
  constexpr double k6 = 5e-7;  // values stated to 6 decimals
  constexpr double kx = 1e-12;

  // profiles
  const auto skew = ts::profile_of({45, 45, 10});
  const auto o_skew = oracle::profile({45, 45, 10});
  const auto half = ts::profile_of({50, 50});
  const auto single = ts::profile_of({0, 12, 0});
  near(richness(half).value, 2, 0, "R(50,50)");
  near(richness(single).value, 1, 0, "R(single)");
  near(richness(ts::profile_of({3, 0, 1})).value, 2, 0, "R(3,0,1)");
  near(shannon_entropy(half).value, std::log(2.0), kx, "H(.5,.5)");
  near(shannon_entropy(single).value, 0, 0, "H(single)");
  stated(shannon_entropy(skew).value, 0.948916, o_skew.H, "H(.45,.45,.1)");
  near(shannon_evenness(ts::profile_of({4, 4, 4, 4, 4})).value, 1, kx, "SEI(uniform)");
  stated(shannon_evenness(skew).value, 0.863742, *o_skew.SEI, "SEI(.45,.45,.1)");
  undef(shannon_evenness(single), UndefinedReason::SingleGroupDegenerate, "SEI(single)");
  near(normalized_std(ts::profile_of({3, 3, 3})).value, 0, kx, "NSD(uniform)");
  undef(normalized_std(ts::profile_of({1, 0})), UndefinedReason::SingleGroupDegenerate, "NSD(1,0)");
  near(normalized_std(ts::profile_of({999, 1})).value, 0.998, 1e-9, "NSD(.999,.001)");
  stated(normalized_std(skew).value, 0.35, *o_skew.NSD, "NSD(.45,.45,.1)");
  near(inverse_imbalance_ratio(half).value, 1, 0, "IR_inv(50,50)");
  near(inverse_imbalance_ratio(ts::profile_of({90, 10})).value, 0.111111, k6, "IR_inv(90,10)");
  near(inverse_imbalance_ratio(single).value, 1, 0, "IR_inv(single)");
  near(berger_parker(ts::profile_of({2, 2, 2, 2})).value, 0.25, kx, "BP(uniform 4)");
  near(berger_parker(skew).value, 0.45, kx, "BP(.45,.45,.1)");
  near(berger_parker(single).value, 1, 0, "BP(single)");
  near(effective_number_of_species(ts::profile_of({7, 7, 7, 7, 7})).value, 5, kx, "ENS(uniform 5)");
  near(effective_number_of_species(single).value, 1, 0, "ENS(single)");
  stated(effective_number_of_species(skew).value, 2.582871, o_skew.ENS, "ENS(.45,.45,.1)");
  const auto su = simpson_family(ts::profile_of({1, 1, 1, 1}));
  near(su.index.value, 0.25, kx, "D(uniform 4)");
  near(su.reciprocal.value, 4, kx, "1/D(uniform 4)");
  const auto ss = simpson_family(single);
  near(ss.index.value, 1, 0, "D(single)");
  near(ss.diversity.value, 0, 0, "1-D(single)");
  near(ss.reciprocal.value, 1, 0, "1/D(single)");
  const auto sk = simpson_family(skew);
  near(sk.index.value, 0.415, kx, "D(.45,.45,.1)");
  near(sk.diversity.value, 0.585, kx, "1-D(.45,.45,.1)");
  near(sk.reciprocal.value, 2.409639, k6, "1/D(.45,.45,.1)");

  // global association
  const auto indep = ts::table_of({{5, 5}, {5, 5}});
  const auto diag = ts::table_of({{10, 0}, {0, 10}});
  const auto mostly = ts::table_of({{8, 2}, {2, 8}});
  const auto asym = ts::table_of({{2, 2}, {0, 4}});
  const auto o_asym = oracle::table({{2, 2}, {0, 4}});
  near(chi_squared(indep).value, 0, kx, "chi2(indep)");
  near(chi_squared(diag).value, 20, kx, "chi2(diag)");
  stated(chi_squared(asym).value, 2.666667, *o_asym.chi2, "chi2([[2,2],[0,4]])");
  near(cramers_v(diag).value, 1, kx, "phi_C(diag)");
  near(cramers_v(indep).value, 0, kx, "phi_C(indep)");
  near(cramers_v(mostly).value, 0.6, kx, "phi_C([[8,2],[2,8]])");
  near(tschuprow_t(mostly).value, 0.6, kx, "T([[8,2],[2,8]])");
  near(tschuprow_t(indep).value, 0, kx, "T(indep)");
  near(tschuprow_t(diag).value, 1, kx, "T(diag)");
  near(pearson_c(indep).value, 0, kx, "C(indep)");
  near(pearson_c(mostly).value, 0.514496, k6, "C([[8,2],[2,8]])");
  near(pearson_c(diag).value, 0.707107, k6, "C(diag)");
  near(marginal_entropy(diag, Axis::Groups), std::log(2.0), kx, "H(G) diag");
  near(marginal_entropy(ts::table_of({{1, 2}, {0, 0}}), Axis::Groups), 0, 0, "H(G) single row");
  near(marginal_entropy(asym, Axis::Classes), 0.562335, k6, "H(Y) [[2,2],[0,4]]");
  near(conditional_entropy(diag, Axis::Classes), 0, kx, "H(G|Y) diag");
  near(conditional_entropy(indep, Axis::Classes), std::log(2.0), kx, "H(G|Y) indep");
  near(conditional_entropy(asym, Axis::Classes), 0.477386, k6, "H(G|Y) [[2,2],[0,4]]");
  const auto d3 = ts::table_of({{4, 0, 0}, {0, 4, 0}, {0, 0, 4}});
  near(theils_u(d3).value, 1, kx, "U(diag 3)");
  near(theils_u(d3, UDirection::Reverse).value, 1, kx, "U_R(diag 3)");
  near(theils_u(indep).value, 0, kx, "U(indep)");
  near(theils_u(indep, UDirection::Reverse).value, 0, kx, "U_R(indep)");
  stated(theils_u(asym).value, 0.383688, *o_asym.U, "U([[2,2],[0,4]])");
  stated(theils_u(asym, UDirection::Reverse).value, 0.311278, *o_asym.U_R, "U_R([[2,2],[0,4]])");
  near(nmi(d3).value, 1, kx, "NMI(diag 3)");
  near(nmi(indep).value, 0, kx, "NMI(indep)");
  stated(nmi(asym).value, 0.207518, *o_asym.NMI, "NMI([[2,2],[0,4]])");

  // local
  const auto np = npmi_matrix(ts::table_of({{2, 6}, {1, 3}}));
  near(np.at(0, 0).value, 0, kx, "NPMI(independent cell)");
  near(npmi_matrix(asym).at(1, 0).value, -1, 0, "NPMI(empty subgroup)");
  near(npmi_matrix(d3).at(1, 1).value, 1, kx, "NPMI(diag cell)");
  const auto z = duchers_z_matrix(asym);
  near(z.at(0, 0).value, 1, 0, "Z(a,x)");
  near(z.at(0, 1).value, -1, 0, "Z(a,y)");
  near(z.at(1, 0).value, -1, 0, "Z(b,x)");
  near(z.at(1, 1).value, 1, 0, "Z(b,y)");
  near(duchers_z_matrix(ts::table_of({{2, 6}, {1, 3}})).at(1, 1).value, 0, 0, "Z(independent cell)");
  near(duchers_z_matrix(ts::table_of({{3, 2, 0}, {0, 4, 6}})).at(0, 0).value, 1, 0, "Z(max overlap)");

  // agreement
  ++n;
  o.check(rank_with_ties(std::vector<double>{5, 5, 1}) == std::vector<double>{2.5, 2.5, 1}, "ranks [5,5,1]");
  ++n;
  o.check(rank_with_ties(std::vector<double>{3, 1, 2}) == std::vector<double>{3, 1, 2}, "ranks [3,1,2]");
  near(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 8}), 1, 0, "rho identical");
  near(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{8, 4, 2}), -1, 0, "rho reversed");
  near(spearman_rho(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 3, 2, 4}), 4.5 / std::sqrt(22.5), kx, "rho ties");

  // report
  near(to_bias_form(MetricId::SimpsonIndex, 0.415), 0.585, kx, "bias form D");
  near(to_bias_form(MetricId::EffectiveNumberOfSpecies, 2.582871, {7}), 4.417129, kx, "bias form ENS");
  near(to_bias_form(MetricId::CramersV, 0.6), 0.6, 0, "bias form phi_C");
  ReportGrid g{"g", SortOrder::Descending, {"a", "b", "c"}, {}, {}};
  GridRow r1;
  r1.values = {CellValue::of(1), CellValue::none(UndefinedReason::EmptyInput), CellValue::of(3)};
  GridRow r2;
  r2.values = {CellValue::of(0), CellValue::of(0), CellValue::of(0)};
  g.rows = {r1, r2};
  g = normalize_rows(g);
  near(g.rows[0].normalized[0], 1.0 / 3.0, kx, "normalized [1,undef,3][0]");
  near(g.rows[0].normalized[2], 1, 0, "normalized [1,undef,3][2]");
  ++n;
  o.check(!g.rows[0].normalized[1] && g.rows[1].normalization_undefined, "normalization flags");
  if (!o.errata.empty()) {
    o.ok = false;
    for (const auto& e : o.errata) o.detail << (o.failures++ ? "; " : "") << "erratum: " << e;
  }
  if (o.ok) o.detail << n << " examples";
}

// --- 3: bounds ------------------------------------------------------------------------------

void bound_suite(Outcome& o) {
  std::vector<double> hs, enss;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto p = ts::random_profile(seed + 50000);
    const auto vocab = static_cast<double>(p.size());
    for (const auto& m : all_representational(p)) {
      if (!m.value) continue;
      ++checked;
      o.check(m.within_bounds(), "profile " + std::string(metric_key(m.id)) + " out of bounds");
    }
    const double h = *shannon_entropy(p).value;
    const double ens = *effective_number_of_species(p).value;
    o.check(ens == std::exp(h), "ENS != exp(H)");
    // Vocabulary-level bounds.
    o.check(*richness(p).value <= vocab && h <= std::log(vocab) + 1e-12 && ens <= vocab + 1e-9, "vocabulary bound");
    hs.push_back(h);
    enss.push_back(ens);

    const auto t = ts::random_table(seed + 50000);
    for (const auto& m : all_stereotypical(t)) {
      if (!m.value) continue;
      ++checked;
      o.check(m.within_bounds(), "table " + std::string(metric_key(m.id)) + " out of bounds");
    }
    const auto v = cramers_v(t);
    if (v.value) {
      o.check(*tschuprow_t(t).value <= *v.value + 1e-12, "T > phi_C");
      o.check(*pearson_c(t).value < 1.0, "C >= 1");
    }
    for (const auto& lm : {npmi_matrix(t), duchers_z_matrix(t)}) {
      for (const auto& c : lm.cells) {
        if (c.value) o.check(*c.value >= -1.0 - 1e-12 && *c.value <= 1.0 + 1e-12, "local value outside [-1,1]");
      }
    }
  }
  const auto rho = spearman_rho(hs, enss);
  o.check(rho && *rho == 1.0, "rho(H, ENS) = " + fmt_val(rho));
  if (o.ok) o.detail << checked << " defined values, rho(H,ENS)=1";
}

// --- 4: invariance --------------------------------------------------------------------------

bool same(const std::optional<double>& a, const std::optional<double>& b, double tol) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::abs(*a - *b) <= tol * std::max(1.0, std::abs(*a));
}

void invariance_suite(Outcome& o) {
  constexpr double tol = 1e-12;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto p = ts::random_profile(seed + 90000);
    const auto base = all_representational(p);
    auto counts = p.counts();
    std::reverse(counts.begin(), counts.end());
    std::rotate(counts.begin(), counts.begin() + static_cast<long>(counts.size() / 2), counts.end());
    const auto perm = all_representational(ts::profile_of(counts));
    for (std::size_t i = 0; i < base.size(); ++i) o.check(same(base[i].value, perm[i].value, tol), "profile permutation");
    for (Count k : {2, 10, 1000}) {
      auto sc = p.counts();
      for (auto& c : sc) c *= k;
      const auto scaled = all_representational(ts::profile_of(sc));
      for (std::size_t i = 0; i < base.size(); ++i) {
        o.check(same(base[i].value, scaled[i].value, tol), "profile x" + std::to_string(k) + " " +
                                                               std::string(metric_key(base[i].id)));
      }
    }

    const auto t = ts::random_table(seed + 90000);
    const auto tb = all_stereotypical(t);
    const auto tp = all_stereotypical(ts::permuted(t));
    for (std::size_t i = 0; i < tb.size(); ++i) {
      o.check(same(tb[i].value, tp[i].value, tol), "table permutation " + std::string(metric_key(tb[i].id)));
    }
    // Local matrices follow the permutation cell by cell.
    const auto pt = ts::permuted(t);
    const auto n0 = npmi_matrix(t), n1 = npmi_matrix(pt);
    const auto z0 = duchers_z_matrix(t), z1 = duchers_z_matrix(pt);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t c = 0; c < t.cols(); ++c) {
        const std::size_t pr = t.rows() - 1 - r, pc = (c + t.cols() - 1) % t.cols();
        o.check(same(n0.at(r, c).value, n1.at(pr, pc).value, tol), "NPMI permutation");
        o.check(same(z0.at(r, c).value, z1.at(pr, pc).value, tol), "Z permutation");
      }
    }
    for (Count k : {2, 10, 1000}) {
      const auto st = ts::scaled(t, k);
      const auto ts_ = all_stereotypical(st);
      for (std::size_t i = 0; i < tb.size(); ++i) {
        auto want = tb[i].value;
        // chi2 is proportional to n; chi2 / n is the scale-free quantity.
        if (tb[i].id == MetricId::ChiSquared && want) want = *want * static_cast<double>(k);
        o.check(same(want, ts_[i].value, tol), "table x" + std::to_string(k) + " " + std::string(metric_key(tb[i].id)));
      }
      const auto ns = npmi_matrix(st), zs = duchers_z_matrix(st);
      for (std::size_t i = 0; i < ns.cells.size(); ++i) {
        // NPMI's denominator ln p(g,y) is unchanged by scaling; so is Z.
        o.check(same(n0.cells[i].value, ns.cells[i].value, tol), "NPMI x" + std::to_string(k));
        o.check(same(z0.cells[i].value, zs.cells[i].value, tol), "Z x" + std::to_string(k));
      }
    }
  }
  if (o.ok) o.detail << "500 profiles and 500 tables, 3 scale factors";
}

// --- 5: degenerate paths ----------------------------------------------------------------------

void degenerate_suite(Outcome& o) {
  for (const std::vector<Count>& counts : std::vector<std::vector<Count>>{{1}, {40}, {0, 0, 213, 0}, {0, 5}}) {
    const auto p = ts::profile_of(counts);
    const auto sei = shannon_evenness(p), nsd = normalized_std(p);
    o.check(!sei.value && sei.reason == UndefinedReason::SingleGroupDegenerate, "SEI defined");
    o.check(!nsd.value && nsd.reason == UndefinedReason::SingleGroupDegenerate, "NSD defined");
    o.check(inverse_imbalance_ratio(p).value == 1.0, "IR_inv != 1");
    o.check(richness(p).value == 1.0, "R != 1");
    o.check(effective_number_of_species(p).value == 1.0, "ENS != 1");
    o.check(berger_parker(p).value == 1.0, "BP != 1");
  }
  if (o.ok) o.detail << "4 single-group profiles";
}

// --- 6: local sign agreement -------------------------------------------------------------------

void local_sign_suite(Outcome& o) {
  std::size_t cells = 0, empties = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto t = ts::random_table(seed + 7000, 0.4);
    const auto n = npmi_matrix(t), z = duchers_z_matrix(t);
    const auto m = ts::to_matrix(t);
    std::vector<double> xs, ys;
    const auto on = oracle::npmi(m), oz = oracle::duchers_z(m);
    for (std::size_t i = 0; i < n.cells.size(); ++i) {
      const std::size_t r = i / t.cols(), c = i % t.cols();
      if (t.cell(r, c) == 0 && t.row_total(r) > 0 && t.col_total(c) > 0) {
        ++empties;
        o.check(n.cells[i].value == -1.0, "empty subgroup NPMI != -1");
      }
      if (n.cells[i].value && z.cells[i].value) {
        ++cells;
        auto sign = [](double v) { return (v > 0) - (v < 0); };
        o.check(sign(*n.cells[i].value) == sign(*z.cells[i].value), "sign mismatch seed " + std::to_string(seed));
      }
      if (on[i] && oz[i]) {
        xs.push_back(oracle::to_double(*on[i]));
        ys.push_back(oracle::to_double(*oz[i]));
      }
    }
    const auto got = local_agreement(n, z);
    const auto want = xs.size() >= 3 ? oracle::spearman(xs, ys) : std::nullopt;
    o.check(ts::matches(got, want, 1e-9), "rho(NPMI,Z) seed " + std::to_string(seed) + " = " + fmt_val(got));
  }
  o.check(empties > 0, "no empty subgroups exercised");
  if (o.ok) o.detail << cells << " jointly defined cells, " << empties << " empty subgroups";
}

// --- 7: agreement machinery --------------------------------------------------------------------

void agreement_suite(Outcome& o) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t len = 3 + rng.below(40);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < len; ++i) {
      xs.push_back(static_cast<double>(rng.below(6)));
      ys.push_back(static_cast<double>(rng.below(len)));
    }
    o.check(ts::matches(spearman_rho(xs, ys), oracle::spearman(xs, ys), 1e-9), "rho vs oracle");
  }
  // Several components over eight synthetic datasets, all representational metrics.
  std::vector<ComponentSeries> series;
  for (int comp = 0; comp < 4; ++comp) {
    ComponentSeries s{"c" + std::to_string(comp), {}, {}};
    for (std::uint64_t d = 0; d < 8; ++d) {
      s.datasets.push_back("d" + std::to_string(d));
      for (const auto& m : all_representational(ts::random_profile(1000 * comp + d))) {
        s.metrics[std::string(metric_key(m.id))].push_back(m.value);
      }
    }
    series.push_back(s);
  }
  const auto a = metric_agreement(series);
  for (std::size_t i = 0; i < a.size(); ++i) {
    o.check(a.at(i, i) == 1.0, "diagonal != 1");
    for (std::size_t j = 0; j < a.size(); ++j) {
      o.check(a.at(i, j) == a.at(j, i), "asymmetric");
      if (a.at(i, j)) o.check(*a.at(i, j) >= -1.0 && *a.at(i, j) <= 1.0, "rho outside [-1,1]");
    }
  }
  o.check(a.lookup("ENS", "H") == 1.0, "ENS/H = " + fmt_val(a.lookup("ENS", "H")));
  if (o.ok) o.detail << "500 tie-bearing vectors, " << a.size() << "x" << a.size() << " matrix";
}

// --- 8: end-to-end determinism --------------------------------------------------------------------

struct OracleRow {
  std::vector<std::optional<oracle::Real>> values;
};

// Ranking from oracle-computed grid values: row-max normalization, mean, ties by name.
std::vector<std::string> oracle_ranking(const std::vector<std::string>& names, const std::vector<OracleRow>& rows,
                                        bool descending) {
  std::vector<std::pair<std::string, std::optional<oracle::Real>>> means;
  for (std::size_t d = 0; d < names.size(); ++d) {
    oracle::Real sum = 0;
    int k = 0;
    for (const auto& row : rows) {
      std::optional<oracle::Real> top;
      for (const auto& v : row.values) {
        if (v && (!top || *v > *top)) top = v;
      }
      if (!top || *top <= 0 || !row.values[d]) continue;
      sum += *row.values[d] / *top;
      ++k;
    }
    means.emplace_back(names[d], k > 0 ? std::optional<oracle::Real>(sum / k) : std::nullopt);
  }
  std::sort(means.begin(), means.end(), [&](const auto& a, const auto& b) {
    if (a.second.has_value() != b.second.has_value()) return a.second.has_value();
    if (a.second && *a.second != *b.second) return descending ? *a.second > *b.second : *a.second < *b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& m : means) out.push_back(m.first);
  return out;
}

std::vector<std::string> reported_ranking(const nlohmann::json& grid) {
  std::vector<std::string> out;
  for (const auto& e : grid["ranking"]) out.push_back(e["dataset"].get<std::string>());
  return out;
}

void check_rankings(Outcome& o, const nlohmann::json& report) {
  const auto manifest = load_manifest(cli_util::kManifest);
  const std::vector<std::string> comps{"age", "gender", "race"};
  std::vector<std::string> all = comps;
  all.emplace_back("label");
  std::vector<std::string> names;
  std::vector<std::map<std::string, oracle::Profile>> profiles;
  std::vector<std::map<std::string, oracle::Table>> tables;
  std::vector<std::map<std::string, std::size_t>> vocab;
  for (const auto& e : manifest.datasets) {
    const auto r = evaluate_dataset(e, manifest.schema, all);
    names.push_back(r.name);
    auto& p = profiles.emplace_back();
    auto& t = tables.emplace_back();
    for (const auto& [c, prof] : r.profiles) p.emplace(c, oracle::profile(prof.counts()));
    for (const auto& [c, tab] : r.tables) t.emplace(c, oracle::table(ts::to_matrix(tab)));
  }
  using Get = std::function<oracle::Maybe(const oracle::Profile&)>;
  const std::vector<Get> rep{
      [](const auto& p) { return oracle::Maybe(p.R); },
      [](const auto& p) { return oracle::Maybe(p.H); },
      [](const auto& p) { return p.SEI; },
      [](const auto& p) { return p.NSD ? oracle::Maybe(1 - *p.NSD) : std::nullopt; },
      [](const auto& p) { return oracle::Maybe(p.IR_inv); },
      [](const auto& p) { return oracle::Maybe(1 - p.BP); },
      [](const auto& p) { return oracle::Maybe(p.ENS); },
      [](const auto& p) { return oracle::Maybe(p.one_minus_D); },
      [](const auto& p) { return oracle::Maybe(p.inv_D); },
  };
  std::vector<OracleRow> rep_rows;
  for (const auto& c : all) {
    for (const auto& get : rep) {
      OracleRow row;
      for (const auto& p : profiles) row.values.push_back(p.count(c) ? get(p.at(c)) : std::nullopt);
      rep_rows.push_back(row);
    }
  }
  using GetT = std::function<oracle::Maybe(const oracle::Table&)>;
  const std::vector<GetT> st{
      [](const auto& t) { return t.phi_C; }, [](const auto& t) { return t.T; },   [](const auto& t) { return t.C; },
      [](const auto& t) { return t.U; },     [](const auto& t) { return t.U_R; }, [](const auto& t) { return t.NMI; },
  };
  std::vector<OracleRow> st_rows;
  for (const auto& c : comps) {
    for (const auto& get : st) {
      OracleRow row;
      for (const auto& t : tables) row.values.push_back(t.count(c) ? get(t.at(c)) : std::nullopt);
      st_rows.push_back(row);
    }
  }
  const auto want_rep = oracle_ranking(names, rep_rows, true);
  const auto want_st = oracle_ranking(names, st_rows, false);
  o.check(reported_ranking(report["grids"]["representational"]) == want_rep, "representational ranking differs");
  o.check(reported_ranking(report["grids"]["stereotypical"]) == want_st, "stereotypical ranking differs");
}

void end_to_end(Outcome& o) {
  using namespace cli_util;
  const auto t0 = Clock::now();
  const std::string m = quote(kManifest.string());
  auto run_all = [&](const fs::path& out, int jobs) {
    const std::string common = " --manifest " + m + " --out " + quote(out.string()) + " --jobs " + std::to_string(jobs);
    int rc = run("analyze" + common + " --format json,csv,md,svg");
    rc |= run("agreement" + common + " --family representational --format json,csv,md");
    rc |= run("agreement" + common + " --family stereotypical --format json,csv,md");
    for (const char* d : {"lab_a", "lab_b", "itwi_a", "itwi_b", "itwm_a", "itwm_b"}) {
      for (const char* c : {"age", "gender", "race"}) {
        rc |= run("local" + common + " --dataset " + d + " --component " + c + " --svg --format json,csv");
      }
    }
    return rc;
  };
  const auto a = fresh_dir("biaslens_accept_a");
  const auto b = fresh_dir("biaslens_accept_b");
  const auto c = fresh_dir("biaslens_accept_c");
  o.check(run_all(a, 1) == 0, "run with --jobs 1 failed");
  o.check(run_all(b, 4) == 0, "run with --jobs 4 failed");
  o.check(run_all(c, 4) == 0, "repeat run failed");
  const double secs = seconds_since(t0) / 3.0;
  const auto sa = snapshot(a), sb = snapshot(b), sc = snapshot(c);
  o.check(!sa.empty() && sa == sb, "jobs 1 vs jobs 4 outputs differ");
  o.check(sb == sc, "repeated runs differ");
  if (sa.count("report.json")) {
    check_rankings(o, nlohmann::json::parse(sa.at("report.json")));
  } else {
    o.check(false, "report.json missing");
  }
  o.check(secs < 10.0, "runtime " + std::to_string(secs) + " s per run");
  if (o.ok) o.detail << sa.size() << " files byte-identical over 3 runs, " << secs << " s per run";
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

// --- 9: threshold classification ------------------------------------------------------------------

void threshold_suite(Outcome& o) {
  o.check(classify_cramers_v(0.05, 1).band == StrengthBand::Negligible, "(0.05,1) not negligible");
  o.check(classify_cramers_v(0.2, 1).band == StrengthBand::Weak, "(0.2,1) not weak");
  const auto four = classify_cramers_v(0.2, 4);
  o.check(four.band == StrengthBand::Medium, "(0.2,4) not medium");
  o.check(std::abs(four.t1 - 0.05) < 1e-15 && std::abs(four.t2 - 0.15) < 1e-15 && std::abs(four.t3 - 0.25) < 1e-15,
          "dof-4 thresholds");
  o.check(classify_cramers_v(0.2, 1, ThresholdMode::Literal).band == StrengthBand::Medium, "literal (0.2,1) not medium");
  if (o.ok) o.detail << "cohen: negligible/weak/medium; literal: (0.2,1) -> medium";
}

}  // namespace

// --known-errata: a criterion whose only failures are documented errata in
// stated example values still prints FAIL but does not fail the exit status.
int main(int argc, char** argv) {
  const bool known_errata = argc > 1 && std::string(argv[1]) == "--known-errata";
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"oracle equivalence (1000 profiles + 1000 tables, 1e-9, < 30 s)", oracle_equivalence},
      {"closed-form fixtures", closed_forms},
      {"bound suite (10000 random inputs)", bound_suite},
      {"invariance suite (permutation, scaling x2/x10/x1000, 1e-12)", invariance_suite},
      {"degenerate single-group paths", degenerate_suite},
      {"local NPMI/Z sign agreement (1000 sparse tables)", local_sign_suite},
      {"agreement machinery", agreement_suite},
      {"end-to-end determinism and ranking (< 10 s)", end_to_end},
      {"Cramer's V threshold classification", threshold_suite},
  };
  int failed = 0, errata_only = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failed += o.ok ? 0 : 1;
    errata_only += !o.ok && !o.errata.empty() && o.failures == static_cast<int>(o.errata.size()) ? 1 : 0;
    std::printf("AC%zu %s: %s [%s]\n", i + 1, o.ok ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  if (errata_only > 0) std::printf("%d failing criteria fail only on stated-value errata\n", errata_only);
  return failed == 0 || (known_errata && failed == errata_only) ? 0 : 1;
}
