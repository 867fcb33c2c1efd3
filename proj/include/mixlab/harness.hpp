#ifndef MIXLAB_HARNESS_HPP
#define MIXLAB_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/coupling.hpp"
#include "mixlab/dynamics.hpp"
#include "mixlab/exact.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/spectral.hpp"
#include "mixlab/states.hpp"

// Monte-Carlo estimates of d(t), density profiles and cutoff scans.

namespace mixlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::vector<double> linspace(double a, double b, int count) {
  if (count < 1) throw Error(ErrorKind::OutOfRange, "linspace needs at least one point");
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = b;
    return v;
  }
  for (int i = 0; i < count; ++i) v[i] = a + (b - a) * i / (count - 1);
  v.back() = b;
  return v;
}

// "start:stop:count" (inclusive) or an explicit comma list.
inline std::vector<double> parse_grid(std::string_view text) {
  auto to_double = [](std::string_view s) {
    const std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != str.size()) throw Error(ErrorKind::ParseError, "bad number '" + str + "' in grid");
    return v;
  };
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw Error(ErrorKind::ParseError, "grid range must be start:stop:count");
    const double lo = to_double(text.substr(0, a));
    const double hi = to_double(text.substr(a + 1, b - a - 1));
    const double count = to_double(text.substr(b + 1));
    if (count < 1 || count != std::floor(count)) throw Error(ErrorKind::ParseError, "grid count must be a positive integer");
    grid = linspace(lo, hi, static_cast<int>(count));
  } else {
    for (auto tok : detail::split_commas(text)) grid.push_back(to_double(tok));
  }
  if (grid.empty()) throw Error(ErrorKind::ParseError, "empty grid");
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0) {
    throw Error(ErrorKind::ParseError, "grid must be sorted and nonnegative");
  }
  return grid;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion at z standard deviations.
inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = 3.0) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double phat = successes / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (phat + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct EstimatorOptions {
  int replicas = 1000;
  int stationary_replicas = 0;  // 0: same as replicas
  std::uint64_t seed = 1;
  int workers = 1;
  int bins = 64;
};

namespace detail {

inline void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::OutOfRange, "empty time grid");
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0) {
    throw Error(ErrorKind::OutOfRange, "time grid must be sorted and nonnegative");
  }
}

inline void check_options(const EstimatorOptions& o) {
  if (o.replicas < 1) throw Error(ErrorKind::OutOfRange, "replicas must be >= 1");
  if (o.stationary_replicas < 0) throw Error(ErrorKind::OutOfRange, "stationary replicas must be >= 0");
  if (o.bins < 1) throw Error(ErrorKind::OutOfRange, "bins must be >= 1");
}

// Stream tags separating the independent sources of randomness.
inline constexpr std::uint64_t kUpperStream = 0x75707065;
inline constexpr std::uint64_t kWorstStream = 0x776f7273;
inline constexpr std::uint64_t kStationaryStream = 0x73746174;
inline constexpr std::uint64_t kProfileStream = 0x70726f66;

template <ChainState State>
DistanceCurve upper_curve(const ChainSpec& spec, std::span<const double> grid, const EstimatorOptions& o) {
  if constexpr (std::is_same_v<State, SimplexPoint>) {
    throw Error(ErrorKind::ModelUnsupported, "the coupling upper estimate needs a discrete model");
  } else {
    const auto R = static_cast<std::size_t>(o.replicas);
    const double t_end = grid.back();
    std::vector<double> tau1(R, kInf), tau2(R, kInf);
    const State bottom0 = bottom_state<State>(spec);
    const State top0 = top_state<State>(spec);
    parallel_for(R, o.workers, [&](std::size_t r) {
      const std::uint64_t seed_r = derive_seed(derive_seed(o.seed, kUpperStream), r);
      State pi = stationary_sample<State>(spec, derive_seed(seed_r, 1));
      State lo = bottom0;
      State hi = top0;
      PairTracker<State> low_pair(lo, pi), high_pair(hi, pi);
      double a = low_pair.coalesced() ? 0.0 : kInf;
      double b = high_pair.coalesced() ? 0.0 : kInf;
      EventStream stream(derive_seed(seed_r, 2), spec.sites());
      while (a == kInf || b == kInf) {
        const UpdateEvent e = stream.next();
        if (e.time > t_end) break;
        // A chain that has met the stationary one is no longer tracked.
        const bool track_lo = a == kInf, track_hi = b == kInf;
        const int d1 = track_lo ? low_pair.before(lo, pi, e.site) : 0;
        const int d2 = track_hi ? high_pair.before(hi, pi, e.site) : 0;
        if (track_lo) apply_update(spec, lo, e.site, e.mark);
        if (track_hi) apply_update(spec, hi, e.site, e.mark);
        apply_update(spec, pi, e.site, e.mark);
        if (track_lo) {
          low_pair.after(lo, pi, e.site, d1);
          if (low_pair.coalesced()) a = e.time;
        }
        if (track_hi) {
          high_pair.after(hi, pi, e.site, d2);
          if (high_pair.coalesced()) b = e.time;
        }
      }
      tau1[r] = a;
      tau2[r] = b;
    });
    DistanceCurve curve;
    curve.kind = CurveKind::UpperEstimate;
    curve.times.assign(grid.begin(), grid.end());
    for (double t : grid) {
      const auto c1 = static_cast<std::size_t>(std::count_if(tau1.begin(), tau1.end(), [t](double x) { return x > t; }));
      const auto c2 = static_cast<std::size_t>(std::count_if(tau2.begin(), tau2.end(), [t](double x) { return x > t; }));
      const double p1 = static_cast<double>(c1) / R;
      const double p2 = static_cast<double>(c2) / R;
      const double w1 = wilson_interval(c1, R).hi - p1;
      const double w2 = wilson_interval(c2, R).hi - p2;
      curve.values.push_back(std::min(1.0, p1 + p2));
      curve.band.push_back(std::hypot(w1, w2));
    }
    return curve;
  }
}

template <ChainState State>
DistanceCurve lower_curve(const ChainSpec& spec, std::span<const double> grid, const EstimatorOptions& o) {
  const auto R = static_cast<std::size_t>(o.replicas);
  const auto Rs = static_cast<std::size_t>(o.stationary_replicas > 0 ? o.stationary_replicas : o.replicas);
  const PhiStatistic phi(spec.N());

  std::vector<double> stationary(Rs);
  parallel_for(Rs, o.workers, [&](std::size_t j) {
    stationary[j] = phi(stationary_sample<State>(spec, derive_seed(derive_seed(o.seed, kStationaryStream), j)));
  });

  const std::size_t G = grid.size();
  std::vector<double> worst(R * G);
  const std::vector<ObserverHook> hooks{ObserverHook{std::vector<double>(grid.begin(), grid.end()), Statistic::Phi}};
  const State start = bottom_state<State>(spec);
  parallel_for(R, o.workers, [&](std::size_t r) {
    const auto res = simulate(spec, start, grid.back(), derive_seed(derive_seed(o.seed, kWorstStream), r), hooks);
    for (std::size_t g = 0; g < G; ++g) worst[r * G + g] = res.observations[0][g][0];
  });

  // Equal-probability bins under the stationary sample.
  std::vector<double> sorted = stationary;
  std::sort(sorted.begin(), sorted.end());
  const auto B = static_cast<std::size_t>(o.bins);
  std::vector<double> cuts;
  for (std::size_t b = 1; b < B; ++b) cuts.push_back(sorted[std::min(Rs - 1, b * Rs / B)]);
  auto bin_of = [&](double x) { return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin()); };

  std::vector<double> ref(B, 0.0);
  for (double x : stationary) ref[bin_of(x)] += 1.0 / static_cast<double>(Rs);

  const double band = 3.0 * std::sqrt(0.25 / static_cast<double>(R) + 0.25 / static_cast<double>(Rs));
  DistanceCurve curve;
  curve.kind = CurveKind::LowerEstimate;
  curve.times.assign(grid.begin(), grid.end());
  std::vector<double> hist(B);
  for (std::size_t g = 0; g < G; ++g) {
    std::fill(hist.begin(), hist.end(), 0.0);
    for (std::size_t r = 0; r < R; ++r) hist[bin_of(worst[r * G + g])] += 1.0 / static_cast<double>(R);
    double tv = 0.0;
    std::size_t occupied = 0;
    for (std::size_t b = 0; b < B; ++b) {
      tv += std::abs(hist[b] - ref[b]);
      occupied += hist[b] > 0.0 || ref[b] > 0.0;
    }
    tv *= 0.5;
    // Plug-in TV is biased upwards by about sqrt(bins / replicas).
    const double allowance = std::sqrt(static_cast<double>(occupied) / static_cast<double>(R));
    curve.values.push_back(std::clamp(tv - allowance, 0.0, 1.0));
    curve.band.push_back(band);
  }
  return curve;
}

}  // namespace detail

// Empirical P[tau1 > t] + P[tau2 > t] for the grand coupling of the bottom,
// top and a stationary sample; tau1 / tau2 are the meeting times of the
// stationary chain with the bottom / top chain. By monotonicity every other
// start is squeezed between the extremes, so this dominates d(t). Bands
// combine the two z=3 Wilson upper deviations.
inline DistanceCurve estimate_distance_upper(const ChainSpec& spec, std::span<const double> grid, const EstimatorOptions& o) {
  detail::check_grid(grid);
  detail::check_options(o);
  return dispatch_state_type(spec.model(), [&]<class S>(std::type_identity<S>) { return detail::upper_curve<S>(spec, grid, o); });
}

// Binned TV distance between the laws of Phi(X_t) from the bottom state and
// Phi under a stationary sample, minus a sqrt(occupied bins / replicas)
// allowance. TV contracts under Phi, so this is below d(t) up to noise. Bands
// are 3 sigma from the bounded-differences variance proxy.
inline DistanceCurve estimate_distance_lower(const ChainSpec& spec, std::span<const double> grid, const EstimatorOptions& o) {
  detail::check_grid(grid);
  detail::check_options(o);
  return dispatch_state_type(spec.model(), [&]<class S>(std::type_identity<S>) { return detail::lower_curve<S>(spec, grid, o); });
}

struct ProfileEstimate {
  std::vector<double> times;
  std::vector<std::vector<double>> density;  // [time][site - 1]
  std::vector<std::vector<double>> band;     // 3 standard errors
};

// Empirical P[xi_t(i) = 1] from the packed-left start at each requested time.
inline ProfileEstimate density_profile(const ChainSpec& spec, std::span<const double> times, const EstimatorOptions& o) {
  if (!is_exclusion_type(spec.model())) throw Error(ErrorKind::ModelUnsupported, "density profiles need an exclusion model");
  detail::check_grid(times);
  detail::check_options(o);
  const auto R = static_cast<std::size_t>(o.replicas);
  const std::size_t G = times.size();
  const auto n = static_cast<std::size_t>(spec.N());
  std::vector<std::vector<double>> counts(R);
  const std::vector<ObserverHook> hooks{
      ObserverHook{std::vector<double>(times.begin(), times.end()), Statistic::DensityProfile}};
  const auto start = ExclusionConfig::packed_left(spec.N(), spec.k());
  parallel_for(R, o.workers, [&](std::size_t r) {
    const auto res = simulate(spec, start, times.back(), derive_seed(derive_seed(o.seed, detail::kProfileStream), r), hooks);
    counts[r].resize(G * n);
    for (std::size_t g = 0; g < G; ++g) std::copy(res.observations[0][g].begin(), res.observations[0][g].end(), counts[r].begin() + g * n);
  });
  ProfileEstimate out;
  out.times.assign(times.begin(), times.end());
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> mean(n, 0.0), band(n, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t i = 0; i < n; ++i) mean[i] += counts[r][g * n + i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] /= static_cast<double>(R);
      band[i] = 3.0 * std::sqrt(mean[i] * (1.0 - mean[i]) / static_cast<double>(R));
    }
    out.density.push_back(std::move(mean));
    out.band.push_back(std::move(band));
  }
  return out;
}

inline std::vector<double> density_profile(const ChainSpec& spec, double t, const EstimatorOptions& o) {
  const double times[] = {t};
  return density_profile(spec, times, o).density.front();
}

// Indicator of the last k sites (the macroscopic fixed point of the biased
// chain).
inline std::vector<double> step_profile(int n, int k) {
  std::vector<double> s(n, 0.0);
  for (int i = n - k; i < n; ++i) s[i] = 1.0;
  return s;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "profiles of different length");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

// First time the curve falls to `level`, linearly interpolated between grid
// points; +inf if it never does.
inline double crossing_time(const DistanceCurve& curve, double level = 0.5) {
  for (std::size_t g = 0; g < curve.times.size(); ++g) {
    if (curve.values[g] <= level) {
      if (g == 0) return curve.times[0];
      const double v0 = curve.values[g - 1], v1 = curve.values[g];
      const double t0 = curve.times[g - 1], t1 = curve.times[g];
      return v0 == v1 ? t1 : t0 + (t1 - t0) * (v0 - level) / (v0 - v1);
    }
  }
  return kInf;
}

// Leading-order mixing time for each family:
//   symmetric exclusion / corner flip  N^2 log(min(k, N-k)) / pi^2
//   biased exclusion / corner flip     (sqrt(a) + sqrt(1-a))^2 N / (2p-1), a = k/N
//   biased interchange                 2N / (2p-1)
//   interchange, simplex               N^2 log N / pi^2
inline double theory_mixing_time(const ChainSpec& spec) {
  const double n = spec.N();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  switch (spec.model()) {
    case Model::SSEP:
    case Model::CornerFlip:
      return n * n * std::log(static_cast<double>(std::min(spec.k(), spec.N() - spec.k()))) / pi2;
    case Model::ASEP:
    case Model::BiasedCornerFlip: {
      const double a = spec.k() / n;
      const double c = std::sqrt(a) + std::sqrt(1.0 - a);
      return c * c * n / (2.0 * spec.p() - 1.0);
    }
    case Model::BiasedInterchange: return 2.0 * n / (2.0 * spec.p() - 1.0);
    case Model::Interchange:
    case Model::SimplexRW: return n * n * std::log(n) / pi2;
  }
  return 0.0;
}

struct CutoffRecord {
  int N = 0;
  int k = 0;
  double t_half_lower = std::numeric_limits<double>::quiet_NaN();
  double t_half_upper = std::numeric_limits<double>::quiet_NaN();
  double theory = 0.0;
  double exact_ratio = std::numeric_limits<double>::quiet_NaN();  // T_mix(eps_lo) / T_mix(eps_hi)
};

struct CutoffScanResult {
  Model model = Model::SSEP;
  double eps_lo = 0.25;
  double eps_hi = 0.75;
  std::vector<CutoffRecord> records;
};

struct CutoffOptions {
  EstimatorOptions estimator;
  double p = 0.5;
  double density = 0.5;  // k = round(density * N)
  bool estimate = true;
  int grid_points = 48;
  double lower_span = 1.5;  // estimator grids end at span * theory
  double upper_span = 3.0;
  std::size_t exact_limit = 20000;  // largest state space solved exactly
};

inline bool exactly_solvable(const ChainSpec& spec, std::size_t limit) {
  if (spec.model() == Model::SimplexRW || spec.p() >= 1.0) return false;
  try {
    StateIndex probe(spec, limit);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline CutoffScanResult cutoff_scan(Model model, std::span<const int> ns, std::pair<double, double> eps, std::uint64_t seed,
                                    const CutoffOptions& opts = {}) {
  if (ns.empty()) throw Error(ErrorKind::OutOfRange, "cutoff scan needs at least one N");
  if (!(eps.first > 0.0 && eps.first < eps.second && eps.second < 1.0)) {
    throw Error(ErrorKind::OutOfRange, "eps pair must satisfy 0 < eps_lo < eps_hi < 1");
  }
  CutoffScanResult result;
  result.model = model;
  result.eps_lo = eps.first;
  result.eps_hi = eps.second;
  for (int n : ns) {
    const int k = has_particle_count(model) ? std::clamp(static_cast<int>(std::lround(opts.density * n)), 1, n - 1) : 0;
    const ChainSpec spec = ChainSpec::make(model, n, k, opts.p);
    CutoffRecord rec;
    rec.N = n;
    rec.k = spec.k();
    rec.theory = theory_mixing_time(spec);
    if (exactly_solvable(spec, opts.exact_limit)) {
      const ExactChain chain(spec, opts.exact_limit);
      rec.exact_ratio = chain.mixing_time(eps.first, opts.estimator.workers) / chain.mixing_time(eps.second, opts.estimator.workers);
    }
    if (opts.estimate) {
      EstimatorOptions eo = opts.estimator;
      eo.seed = derive_seed(seed, static_cast<std::uint64_t>(n));
      const double scale = rec.theory > 0.0 ? rec.theory : static_cast<double>(n);
      rec.t_half_lower = crossing_time(estimate_distance_lower(spec, linspace(0.0, opts.lower_span * scale, opts.grid_points), eo));
      if (spec.model() != Model::SimplexRW) {
        rec.t_half_upper = crossing_time(estimate_distance_upper(spec, linspace(0.0, opts.upper_span * scale, opts.grid_points), eo));
      }
    }
    result.records.push_back(rec);
  }
  return result;
}

inline bool bracket_intersects(const CutoffRecord& rec, double lo, double hi) {
  const double a = std::isnan(rec.t_half_lower) ? 0.0 : rec.t_half_lower;
  const double b = std::isnan(rec.t_half_upper) ? kInf : rec.t_half_upper;
  return a <= hi && b >= lo;
}

}  // namespace mixlab

#endif
