// Acceptance suite: `acceptance [n ...]` runs the listed criteria (all when
// none are given) and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/mixlab.hpp"
#include "test_support.hpp"

using namespace mixlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Records the first few failures and keeps going.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& what) { info_ += (info_.empty() ? "" : ", ") + what; }

  Outcome outcome() const {
    Outcome o;
    o.pass = failures_ == 0;
    o.detail = info_;
    if (failures_ > 0) o.detail += (info_.empty() ? "" : "; ") + std::to_string(failures_) + " failure(s): " + notes_;
    return o;
  }

 private:
  int failures_ = 0;
  std::string notes_;
  std::string info_;
};

// 1. Two-state chain: d(t) = e^{-t}/2 and T_mix(1/4) = ln 2.
Outcome two_state() {
  Verdict v;
  const ExactChain chain(ChainSpec::make(Model::SSEP, 2, 1));
  const auto grid = linspace(0.0, 10.0, 50);
  const auto curve = chain.distance_curve(grid);
  double worst = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) worst = std::max(worst, std::abs(curve.values[g] - 0.5 * std::exp(-grid[g])));
  const double tmix = chain.mixing_time(0.25);
  v.require(worst < 1e-9, "max |d(t) - e^{-t}/2| = " + fmt(worst));
  v.require(std::abs(tmix - std::log(2.0)) < 1e-6, "T_mix(1/4) = " + fmt(tmix));
  v.note("max error " + fmt(worst));
  v.note("T_mix(1/4) - ln 2 = " + fmt(tmix - std::log(2.0)));
  return v.outcome();
}

// 2. Detailed balance and invariance of the closed-form stationary laws.
Outcome reversibility() {
  Verdict v;
  double worst_db = 0.0, worst_inv = 0.0;
  int instances = 0;
  auto check = [&](const ChainSpec& spec) {
    const StateIndex idx(spec);
    const auto g = build_generator(idx);
    const auto pi = closed_form_stationary(idx);
    const double db = detailed_balance_residual(g, pi);
    const double inv = invariance_residual(g, pi);
    worst_db = std::max(worst_db, db);
    worst_inv = std::max(worst_inv, inv);
    ++instances;
    const std::string name = std::string(model_code(spec.model())) + " N=" + std::to_string(spec.N()) + " k=" + std::to_string(spec.k());
    v.require(db < 1e-12, name + " detailed balance " + fmt(db));
    v.require(inv < 1e-10, name + " invariance " + fmt(inv));
  };
  for (int n = 2; n <= 8; ++n) {
    for (int k = 1; k < n; ++k) {
      check(ChainSpec::make(Model::SSEP, n, k));
      check(ChainSpec::make(Model::ASEP, n, k, 0.8));
      check(ChainSpec::make(Model::CornerFlip, n, k));
      check(ChainSpec::make(Model::BiasedCornerFlip, n, k, 0.8));
    }
  }
  for (int n = 2; n <= 5; ++n) {
    check(ChainSpec::make(Model::Interchange, n));
    check(ChainSpec::make(Model::BiasedInterchange, n, 0, 0.8));
  }
  v.note(std::to_string(instances) + " instances");
  v.note("max detailed-balance residual " + fmt(worst_db));
  v.note("max invariance residual " + fmt(worst_inv));
  return v.outcome();
}

// 3. Sine eigenvectors of the Dirichlet Laplacian.
Outcome spectrum() {
  Verdict v;
  double worst = 0.0;
  for (int n = 3; n <= 512; ++n) {
    const auto s = dirichlet_spectrum(n);
    for (int j = 1; j < n; ++j) {
      const double r = eigen_residual(s, j);
      worst = std::max(worst, r);
      v.require(r < 1e-12, "N=" + std::to_string(n) + " j=" + std::to_string(j) + " residual " + fmt(r));
    }
  }
  v.note("max residual " + fmt(worst) + " over N=3..512");
  return v.outcome();
}

// 4. Generator identity for the exponential of the heights.
Outcome cole_hopf_identity() {
  Verdict v;
  double worst = 0.0;
  const auto small = ChainSpec::make(Model::BiasedCornerFlip, 8, 4, 0.8);
  const StateIndex idx(small);
  for (std::size_t x = 0; x < idx.size(); ++x) {
    const double r = generator_identity_residual(small, idx.state<LatticePath>(x));
    worst = std::max(worst, r);
    v.require(r < 1e-10, "Xi_{8,4} state " + std::to_string(x) + " residual " + fmt(r));
  }
  const auto large = ChainSpec::make(Model::BiasedCornerFlip, 64, 32, 0.8);
  const auto uniform = ChainSpec::make(Model::CornerFlip, 64, 32);
  Rng rng(derive_seed(4, 0));
  for (int r = 0; r < 1000; ++r) {
    const double res = generator_identity_residual(large, sample_stationary_direct<LatticePath>(uniform, rng));
    worst = std::max(worst, res);
    v.require(res < 1e-10, "Xi_{64,32} sample " + std::to_string(r) + " residual " + fmt(res));
  }
  v.note(std::to_string(idx.size()) + " + 1000 states");
  v.note("max residual " + fmt(worst));
  return v.outcome();
}

// 5. Mean heights of the symmetric corner flip against the heat equation.
Outcome heat_consistency() {
  Verdict v;
  const auto spec = ChainSpec::make(Model::CornerFlip, 6, 3);
  const ExactChain chain(spec);
  double worst = 0.0;
  for (std::size_t x = 0; x < chain.size(); ++x) {
    const auto start = chain.states().state<LatticePath>(x);
    for (double t : {0.5, 2.0, 8.0}) {
      const auto e = chain.expected_heights(x, t);
      const auto u = heat_solve(HeightField::from_path(start), t, 0.5);
      for (int i = 0; i <= 6; ++i) worst = std::max(worst, std::abs(e[i] - u(i)));
    }
  }
  v.require(worst < 1e-6, "max |E h_t - u_t| = " + fmt(worst));
  v.note("all " + std::to_string(chain.size()) + " starts, max error " + fmt(worst));
  return v.outcome();
}

// 6. Empirical coupling-time tail of the extremal pair against the analytic bound.
Outcome coupling_tail() {
  Verdict v;
  const int n = 32, k = 16, R = 10000;
  for (double p : {0.5, 0.8}) {
    const auto spec = ChainSpec::make(p == 0.5 ? Model::CornerFlip : Model::BiasedCornerFlip, n, k, p);
    const auto [top, bottom] = extremal_paths(n, k);
    std::vector<double> taus(R);
    parallel_for(R, worker_count(), [&](std::size_t r) {
      const auto rep = coupling_time(spec, bottom, top, derive_seed(derive_seed(6, spec.biased()), r), 1e7);
      taus[r] = rep.tau.value_or(kInf);
    });
    std::sort(taus.begin(), taus.end());
    // Grid up to the time where the bound reaches 1e-3, or past the last coalescence.
    const double rate = spec.biased() ? spec.rho() : dirichlet_spectrum(n).gamma(1);
    const double t_end = std::max((coupling_tail_bound(spec, 0.0).log_raw - std::log(1e-3)) / rate, taus.back());
    double max_excess = -1.0;
    for (double t : linspace(t_end / 20.0, t_end, 20)) {
      const double survive = static_cast<double>(taus.end() - std::upper_bound(taus.begin(), taus.end(), t)) / R;
      const double sigma = std::sqrt(survive * (1.0 - survive) / R);
      const double bound = coupling_tail_bound(spec, t).clamped;
      if (bound < 1.0) max_excess = std::max(max_excess, survive - bound - 3 * sigma);
      v.require(survive <= bound + 3 * sigma,
                std::string(spec.biased() ? "p=0.8" : "symmetric") + " t=" + fmt(t) + ": " + fmt(survive) + " > " + fmt(bound));
    }
    v.note(std::string(spec.biased() ? "p=0.8" : "symmetric") + " median tau " + fmt(taus[R / 2]) + ", max(P-bound-3sd) " +
           fmt(max_excess));
  }
  return v.outcome();
}

// 7. Median coupling time of the extremal pair on the scale (2/pi^2) N^2 log k.
Outcome coupling_scaling() {
  Verdict v;
  const int R = 101;
  for (int n : {64, 128, 256}) {
    const int k = n / 2;
    const auto spec = ChainSpec::make(Model::SSEP, n, k);
    std::vector<double> taus(R);
    parallel_for(R, worker_count(), [&](std::size_t r) {
      const auto rep = coupling_time(spec, bottom_state<ExclusionConfig>(spec), top_state<ExclusionConfig>(spec),
                                     derive_seed(derive_seed(7, n), r), 1e9);
      taus[r] = rep.tau.value_or(kInf);
    });
    std::sort(taus.begin(), taus.end());
    const double scale = 2.0 / (std::numbers::pi * std::numbers::pi) * n * n * std::log(static_cast<double>(k));
    const double ratio = taus[R / 2] / scale;
    v.require(ratio >= 0.6 && ratio <= 1.6, "N=" + std::to_string(n) + " median/scale " + fmt(ratio));
    v.note("N=" + std::to_string(n) + " median/scale " + fmt(ratio));
  }
  return v.outcome();
}

// 8. SSEP: exact ratio trend and the Monte-Carlo bracket at N = 256.
Outcome ssep_cutoff() {
  Verdict v;
  const std::vector<int> ns{6, 8, 10};
  CutoffOptions co;
  co.estimate = false;
  const auto scan = cutoff_scan(Model::SSEP, ns, {0.25, 0.75}, 8, co);
  std::string ratios;
  for (std::size_t i = 0; i < scan.records.size(); ++i) {
    ratios += (i ? "/" : "") + fmt(scan.records[i].exact_ratio);
    if (i > 0) {
      v.require(scan.records[i].exact_ratio < scan.records[i - 1].exact_ratio,
                "ratio not decreasing at N=" + std::to_string(scan.records[i].N));
    }
  }
  v.note("exact ratios " + ratios);

  const auto spec = ChainSpec::make(Model::SSEP, 256, 128);
  const double theory = theory_mixing_time(spec);
  EstimatorOptions lo;
  lo.replicas = 800;
  lo.seed = derive_seed(8, 256);
  lo.workers = worker_count();
  EstimatorOptions up = lo;
  up.replicas = 150;
  const double t_lower = crossing_time(estimate_distance_lower(spec, linspace(0.0, 1.5 * theory, 31), lo));
  const double t_upper = crossing_time(estimate_distance_upper(spec, linspace(0.0, 3.0 * theory, 61), up));
  CutoffRecord rec;
  rec.t_half_lower = t_lower;
  rec.t_half_upper = t_upper;
  v.require(bracket_intersects(rec, 0.5 * theory, 2.5 * theory),
            "bracket [" + fmt(t_lower) + ", " + fmt(t_upper) + "] misses [" + fmt(0.5 * theory) + ", " + fmt(2.5 * theory) + "]");
  v.note("N=256 bracket/theory [" + fmt(t_lower / theory) + ", " + fmt(t_upper / theory) + "]");
  return v.outcome();
}

// 9. ASEP: bracket against (sqrt a + sqrt(1-a))^2 N / (2p-1) and the density profile.
Outcome asep_cutoff() {
  Verdict v;
  const auto spec = ChainSpec::make(Model::ASEP, 256, 128, 0.8);
  const double theory = theory_mixing_time(spec);
  EstimatorOptions o;
  o.replicas = 1000;
  o.seed = derive_seed(9, 256);
  o.workers = worker_count();
  const double t_lower = crossing_time(estimate_distance_lower(spec, linspace(0.0, 1.5 * theory, 61), o));
  const double t_upper = crossing_time(estimate_distance_upper(spec, linspace(0.0, 3.0 * theory, 121), o));
  CutoffRecord rec;
  rec.t_half_lower = t_lower;
  rec.t_half_upper = t_upper;
  v.require(bracket_intersects(rec, 0.8 * theory, 1.2 * theory),
            "bracket [" + fmt(t_lower) + ", " + fmt(t_upper) + "] misses [" + fmt(0.8 * theory) + ", " + fmt(1.2 * theory) + "]");
  v.note("bracket/theory [" + fmt(t_lower / theory) + ", " + fmt(t_upper / theory) + "]");

  const auto profile = density_profile(spec, 1.1 * theory, o);
  const double l1 = l1_distance(profile, step_profile(256, 128));
  v.require(l1 <= 0.1 * 256, "profile L1 to step " + fmt(l1));
  v.note("profile L1 to step at 1.1 T " + fmt(l1));
  return v.outcome();
}

// 10. lower - 3 sd <= exact <= upper + 3 sd on every enumerable instance.
Outcome sandwich() {
  Verdict v;
  std::vector<ChainSpec> specs;
  for (int n = 2; n <= 8; ++n) {
    for (int k = 1; k < n; ++k) {
      specs.push_back(ChainSpec::make(Model::SSEP, n, k));
      specs.push_back(ChainSpec::make(Model::ASEP, n, k, 0.8));
      specs.push_back(ChainSpec::make(Model::CornerFlip, n, k));
      specs.push_back(ChainSpec::make(Model::BiasedCornerFlip, n, k, 0.8));
    }
    if (exactly_solvable(ChainSpec::make(Model::Interchange, n), CutoffOptions{}.exact_limit)) {
      specs.push_back(ChainSpec::make(Model::Interchange, n));
      specs.push_back(ChainSpec::make(Model::BiasedInterchange, n, 0, 0.8));
    }
  }
  int points = 0;
  double min_up_margin = kInf, min_lo_margin = kInf;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto& spec = specs[s];
    const ExactChain chain(spec);
    const auto grid = linspace(0.0, 1.2 * chain.mixing_time(0.01), 15);
    const auto exact = chain.distance_curve(grid);
    EstimatorOptions o;
    o.replicas = 2000;
    o.seed = derive_seed(10, s);
    const auto lo = estimate_distance_lower(spec, grid, o);
    const auto up = estimate_distance_upper(spec, grid, o);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      ++points;
      const std::string where = std::string(model_code(spec.model())) + " N=" + std::to_string(spec.N()) + " k=" +
                                std::to_string(spec.k()) + " t=" + fmt(grid[g]);
      min_lo_margin = std::min(min_lo_margin, exact.values[g] - (lo.values[g] - lo.band[g]));
      min_up_margin = std::min(min_up_margin, up.values[g] + up.band[g] - exact.values[g]);
      v.require(lo.values[g] - lo.band[g] <= exact.values[g], where + " lower " + fmt(lo.values[g]) + " > exact " + fmt(exact.values[g]));
      v.require(exact.values[g] <= up.values[g] + up.band[g], where + " upper " + fmt(up.values[g]) + " < exact " + fmt(exact.values[g]));
    }
  }
  v.note(std::to_string(specs.size()) + " instances, " + std::to_string(points) + " grid points");
  v.note("min margins lower " + fmt(min_lo_margin) + " upper " + fmt(min_up_margin));
  return v.outcome();
}

// 11. Order preservation of the grand coupling; refined-coupling marginals.
Outcome order_preservation() {
  Verdict v;
  const std::vector<ChainSpec> specs{
      ChainSpec::make(Model::Interchange, 12),      ChainSpec::make(Model::BiasedInterchange, 12, 0, 0.8),
      ChainSpec::make(Model::SSEP, 16, 6),          ChainSpec::make(Model::ASEP, 16, 6, 0.8),
      ChainSpec::make(Model::CornerFlip, 16, 8),    ChainSpec::make(Model::BiasedCornerFlip, 16, 8, 0.8),
      ChainSpec::make(Model::SimplexRW, 16)};
  long long checks = 0;
  Rng rng(derive_seed(11, 0));
  for (const auto& spec : specs) {
    dispatch_state_type(spec.model(), [&]<class S>(std::type_identity<S>) {
      for (int pair = 0; pair < 10; ++pair) {
        auto [a, b] = mixtest::random_ordered_pair<S>(spec, rng);
        CoupledEnsemble<S> ens{spec, {bottom_state<S>(spec), a, b, top_state<S>(spec)}};
        EventStream stream(derive_seed(derive_seed(11, static_cast<std::uint64_t>(spec.model())), pair), spec.sites());
        bool ok = true;
        for (int e = 0; e < 100000 && ok; ++e) {
          coupled_step_graphical(ens, stream.next());
          for (std::size_t m = 0; m + 1 < ens.states.size(); ++m) ok = ok && partial_le(ens.states[m], ens.states[m + 1]);
          ++checks;
        }
        v.require(ok, std::string(model_code(spec.model())) + " pair " + std::to_string(pair) + " lost its order");
      }
    });
  }
  v.note(std::to_string(checks) + " coupled events checked");

  // Refined pairs: each member against an independent run (two-sample KS on Phi).
  const int n = 32, R = 400;
  const auto cf = ChainSpec::make(Model::CornerFlip, n, n / 2);
  const auto [top, bottom] = extremal_paths(n, n / 2);
  const PhiStatistic phi(n);
  double min_p = 1.0;
  for (double t : {60.0, static_cast<double>(n * n)}) {
    std::vector<double> lower, upper, lower_ref, upper_ref;
    for (int r = 0; r < R; ++r) {
      const std::uint64_t seed = derive_seed(derive_seed(11, static_cast<std::uint64_t>(t)), r);
      LatticePath lo = bottom, hi = top;
      EventStream stream(seed, cf.sites());
      Rng independent(derive_seed(seed, 0x5eed));
      while (true) {
        const auto e = stream.next();
        if (e.time > t) break;
        coupled_step_refined(cf, lo, hi, e, to_unit(independent()));
      }
      lower.push_back(phi(lo));
      upper.push_back(phi(hi));
      lower_ref.push_back(phi(simulate(cf, bottom, t, derive_seed(seed, 1)).final_state));
      upper_ref.push_back(phi(simulate(cf, top, t, derive_seed(seed, 2)).final_state));
    }
    const double pl = mixtest::ks_two_sample_pvalue(lower, lower_ref);
    const double pu = mixtest::ks_two_sample_pvalue(upper, upper_ref);
    min_p = std::min({min_p, pl, pu});
    v.require(pl > 0.01, "refined lower marginal t=" + fmt(t) + " p=" + fmt(pl));
    v.require(pu > 0.01, "refined upper marginal t=" + fmt(t) + " p=" + fmt(pu));
  }
  v.note("min refined KS p-value " + fmt(min_p));

  // Biased refined pair: chi-square of each member against the exact transition row.
  const auto acf = ChainSpec::make(Model::BiasedCornerFlip, 6, 3, 0.8);
  const ExactChain chain(acf);
  const auto [acf_top, acf_bottom] = extremal_paths(6, 3);
  const double t = 2.0;
  const int S = 20000;
  std::vector<long long> lo_counts(chain.size(), 0), hi_counts(chain.size(), 0);
  for (int r = 0; r < S; ++r) {
    const std::uint64_t seed = derive_seed(derive_seed(11, 0xb1a5), r);
    LatticePath lo = acf_bottom, hi = acf_top;
    EventStream stream(seed, acf.sites());
    Rng independent(derive_seed(seed, 0x5eed));
    while (true) {
      const auto e = stream.next();
      if (e.time > t) break;
      coupled_step_refined(acf, lo, hi, e, to_unit(independent()));
    }
    ++lo_counts[chain.states().index_of(lo)];
    ++hi_counts[chain.states().index_of(hi)];
  }
  // Cells with expected count below 5 are pooled.
  auto pooled_pvalue = [&](const std::vector<long long>& counts, const std::vector<double>& row) {
    std::vector<long long> c;
    std::vector<double> q;
    long long rest_c = 0;
    double rest_q = 0.0;
    for (std::size_t x = 0; x < row.size(); ++x) {
      if (row[x] * S >= 5.0) {
        c.push_back(counts[x]);
        q.push_back(row[x]);
      } else {
        rest_c += counts[x];
        rest_q += row[x];
      }
    }
    if (rest_q > 0.0) {
      c.push_back(rest_c);
      q.push_back(rest_q);
    }
    return mixtest::goodness_of_fit(c, q);
  };
  const double pl = pooled_pvalue(lo_counts, chain.transition_row(chain.states().index_of(acf_bottom), t));
  const double pu = pooled_pvalue(hi_counts, chain.transition_row(chain.states().index_of(acf_top), t));
  v.require(pl > 0.01, "biased refined lower marginal p=" + fmt(pl));
  v.require(pu > 0.01, "biased refined upper marginal p=" + fmt(pu));
  v.note("biased refined chi-square p-values " + fmt(pl) + "/" + fmt(pu));
  return v.outcome();
}

// 12. CFTP against the exact stationary law.
Outcome cftp() {
  Verdict v;
  const auto spec = ChainSpec::make(Model::ASEP, 4, 2, 0.8);
  const StateIndex idx(spec);
  const auto pi = stationary_exact(spec).pi;
  const int S = 100000;
  std::vector<std::size_t> draws(S);
  parallel_for(S, worker_count(), [&](std::size_t s) {
    draws[s] = idx.index_of(cftp_sample<ExclusionConfig>(spec, derive_seed(12, s)));
  });
  std::vector<long long> counts(idx.size(), 0);
  for (auto d : draws) ++counts[d];
  double worst_z = 0.0;
  for (std::size_t x = 0; x < idx.size(); ++x) {
    const double f = static_cast<double>(counts[x]) / S;
    const double sd = std::sqrt(pi[x] * (1.0 - pi[x]) / S);
    const double z = std::abs(f - pi[x]) / sd;
    worst_z = std::max(worst_z, z);
    v.require(z <= 3.0, "state " + format_state(idx.state<ExclusionConfig>(x)) + " freq " + fmt(f) + " vs " + fmt(pi[x]));
  }
  v.note(std::to_string(S) + " samples, max |z| " + fmt(worst_z));
  return v.outcome();
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
      {"two-state ground truth", two_state},
      {"reversibility", reversibility},
      {"Dirichlet spectrum", spectrum},
      {"Cole-Hopf generator identity", cole_hopf_identity},
      {"heat-equation consistency", heat_consistency},
      {"coupling-time tail bound", coupling_tail},
      {"coupling-time scaling", coupling_scaling},
      {"SSEP cutoff trend", ssep_cutoff},
      {"ASEP cutoff constant", asep_cutoff},
      {"estimator sandwich", sandwich},
      {"order preservation", order_preservation},
      {"CFTP correctness", cftp},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c < 1 || c > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "acceptance: unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.push_back(c);
  }
  if (selected.empty()) {
    for (int c = 1; c <= static_cast<int>(criteria().size()); ++c) selected.push_back(c);
  }
  int failed = 0;
  for (int c : selected) {
    const auto& [name, fn] = criteria()[c - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d [%s]: %s (%.1f s) %s\n", c, name.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
