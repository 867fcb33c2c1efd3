#ifndef MIXLAB_COUPLING_HPP
#define MIXLAB_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/dynamics.hpp"
#include "mixlab/states.hpp"

namespace mixlab {

enum class CouplingMode { Graphical, Refined };

inline const char* to_string(CouplingMode m) { return m == CouplingMode::Graphical ? "graphical" : "refined"; }

// Chains driven by one shared event stream.
template <ChainState State>
struct CoupledEnsemble {
  ChainSpec spec;
  std::vector<State> states;
};

struct CouplingReport {
  std::optional<double> tau;  // empty on timeout
  std::uint64_t events_used = 0;
  CouplingMode mode = CouplingMode::Graphical;
  double t_max = 0.0;

  bool censored() const noexcept { return !tau.has_value(); }
};

// Same (site, mark) for every member; each local update is monotone so
// pairwise orders survive.
template <ChainState State>
void coupled_step_graphical(CoupledEnsemble<State>& ensemble, const UpdateEvent& event) {
  for (auto& s : ensemble.states) apply_update(ensemble.spec, s, event.site, event.mark);
}

// Number of coordinates touched by an update at `site` on which a and b differ.
inline int diff_at(const LatticePath& a, const LatticePath& b, int site) noexcept { return a(site) != b(site); }

inline int diff_at(const ExclusionConfig& a, const ExclusionConfig& b, int site) noexcept {
  return (a.occupied(site) != b.occupied(site)) + (a.occupied(site + 1) != b.occupied(site + 1));
}

inline int diff_at(const Permutation& a, const Permutation& b, int site) noexcept {
  return (a(site) != b(site)) + (a(site + 1) != b(site + 1));
}

inline int diff_at(const SimplexPoint& a, const SimplexPoint& b, int site) noexcept { return a(site) != b(site); }

template <ChainState State>
int diff_total(const State& a, const State& b) {
  int d = 0;
  const int n = a.size();
  if constexpr (std::is_same_v<State, LatticePath> || std::is_same_v<State, SimplexPoint>) {
    for (int i = 1; i < n; ++i) d += a(i) != b(i);
  } else if constexpr (std::is_same_v<State, ExclusionConfig>) {
    for (int i = 1; i <= n; ++i) d += a.occupied(i) != b.occupied(i);
  } else {
    for (int i = 1; i <= n; ++i) d += a(i) != b(i);
  }
  return d;
}

// Tracks the number of differing coordinates between two members under
// shared updates; O(1) per event.
template <ChainState State>
class PairTracker {
 public:
  PairTracker(const State& a, const State& b) : diff_(diff_total(a, b)) {}

  int before(const State& a, const State& b, int site) const noexcept { return diff_at(a, b, site); }
  void after(const State& a, const State& b, int site, int before_diff) noexcept {
    diff_ += diff_at(a, b, site) - before_diff;
  }
  bool coalesced() const noexcept { return diff_ == 0; }
  int diff() const noexcept { return diff_; }

 private:
  int diff_;
};

// ---------------------------------------------------------------------------
// Refined (desynchronized) coupling on ordered paths lower <= upper.
//
// At site i the upper chain uses an independent mark whenever the pair
// differs at a neighbour i-1 or i+1; otherwise both use the shared mark. If
// upper(j) >= lower(j) + 2 for a neighbour j, then after any update
// lower(i) <= lower(j) + 1 <= upper(j) - 1 <= upper(i), so order is kept.
// The choice depends on the pre-event state only, so each chain's marks are
// i.i.d. uniform and both marginals are exact.

namespace detail {
inline bool refined_independent(const LatticePath& lower, const LatticePath& upper, int site) noexcept {
  return lower(site - 1) != upper(site - 1) || lower(site + 1) != upper(site + 1);
}
}  // namespace detail

inline void coupled_step_refined(const ChainSpec& spec, LatticePath& lower, LatticePath& upper, const UpdateEvent& event,
                                 double independent_mark) {
  if (!is_corner_flip_type(spec.model()) && !is_exclusion_type(spec.model())) {
    throw Error(ErrorKind::WrongModel, "refined coupling needs a corner-flip or exclusion model");
  }
  if (!partial_le(lower, upper)) throw Error(ErrorKind::NotOrdered, "refined coupling needs lower <= upper");
  const bool indep = detail::refined_independent(lower, upper, event.site);
  const double p = spec.p();
  lower.resolve_corner(event.site, event.mark >= 1.0 - p);
  upper.resolve_corner(event.site, (indep ? independent_mark : event.mark) >= 1.0 - p);
}

// A(t): total height gap between the ordered members.
inline long long gap_area(const LatticePath& lower, const LatticePath& upper) {
  long long a = 0;
  for (int i = 1; i < lower.size(); ++i) a += upper(i) - lower(i);
  return a;
}

// Order of magnitude above the mixing scale of each family.
inline double default_t_max(const ChainSpec& spec) {
  const double n = spec.N();
  if (spec.biased()) return 20.0 * n / spec.rho();
  return 20.0 * n * n * std::log(std::max(n, 2.0));
}

namespace detail {

template <ChainState State>
CouplingReport graphical_coupling_time(const ChainSpec& spec, State a, State b, std::uint64_t seed, double t_max) {
  CouplingReport report;
  report.mode = CouplingMode::Graphical;
  report.t_max = t_max;
  PairTracker<State> tracker(a, b);
  if (tracker.coalesced()) {
    report.tau = 0.0;
    return report;
  }
  EventStream stream(seed, spec.sites());
  while (true) {
    const UpdateEvent e = stream.next();
    if (e.time > t_max) break;
    const int before = tracker.before(a, b, e.site);
    apply_update(spec, a, e.site, e.mark);
    apply_update(spec, b, e.site, e.mark);
    tracker.after(a, b, e.site, before);
    ++report.events_used;
    if (tracker.coalesced()) {
      report.tau = e.time;
      break;
    }
  }
  return report;
}

inline CouplingReport refined_coupling_time(const ChainSpec& spec, LatticePath lower, LatticePath upper,
                                            std::uint64_t seed, double t_max) {
  CouplingReport report;
  report.mode = CouplingMode::Refined;
  report.t_max = t_max;
  PairTracker<LatticePath> tracker(lower, upper);
  if (tracker.coalesced()) {
    report.tau = 0.0;
    return report;
  }
  EventStream stream(seed, spec.sites());
  Rng independent(derive_seed(seed, 0x5eed));
  const double threshold = 1.0 - spec.p();
  while (true) {
    const UpdateEvent e = stream.next();
    if (e.time > t_max) break;
    const int i = e.site;
    const int before = lower(i) != upper(i);
    const bool indep = refined_independent(lower, upper, i);
    lower.resolve_corner(i, e.mark >= threshold);
    upper.resolve_corner(i, (indep ? to_unit(independent()) : e.mark) >= threshold);
    tracker.after(lower, upper, i, before);
    ++report.events_used;
    if (tracker.coalesced()) {
      report.tau = e.time;
      break;
    }
  }
  return report;
}

}  // namespace detail

// First time the two coupled trajectories coincide, or a censored report at t_max.
template <ChainState State>
CouplingReport coupling_time(const ChainSpec& spec, const State& init1, const State& init2, std::uint64_t seed,
                             double t_max, CouplingMode mode = CouplingMode::Graphical) {
  check_state(spec, init1);
  check_state(spec, init2);
  if (mode == CouplingMode::Graphical) return detail::graphical_coupling_time(spec, init1, init2, seed, t_max);

  if constexpr (std::is_same_v<State, LatticePath> || std::is_same_v<State, ExclusionConfig>) {
    LatticePath a = [&] {
      if constexpr (std::is_same_v<State, LatticePath>) return init1; else return height_map(init1);
    }();
    LatticePath b = [&] {
      if constexpr (std::is_same_v<State, LatticePath>) return init2; else return height_map(init2);
    }();
    if (!partial_le(a, b)) {
      if (!partial_le(b, a)) throw Error(ErrorKind::Incomparable, "refined coupling needs comparable initial states");
      std::swap(a, b);
    }
    return detail::refined_coupling_time(spec, std::move(a), std::move(b), seed, t_max);
  } else {
    throw Error(ErrorKind::WrongModel, "refined coupling needs a corner-flip or exclusion model");
  }
}

// ---------------------------------------------------------------------------
// Monotone coupling from the past.

struct CftpOptions {
  double initial_lookback = 1.0;
  double max_lookback = 0.0;  // 0: 8 * default_t_max(spec)
};

namespace detail {
struct BackwardEvent {
  double mark;
  int site;
};
}  // namespace detail

// Exact stationary sample. The randomness is a single backward event stream
// (offsets s > 0 from time 0); a lookback T uses the events with s <= T,
// applied from the oldest. Lookbacks double until the bottom and top
// trajectories meet at time 0, so the output does not depend on the schedule
// once coalescence is reached.
template <ChainState State>
State cftp_sample(const ChainSpec& spec, std::uint64_t seed, CftpOptions opts = {}) {
  if constexpr (std::is_same_v<State, SimplexPoint>) {
    throw Error(ErrorKind::ModelUnsupported, "CFTP needs a discrete model");
  } else {
    if (!state_matches<State>(spec.model())) throw Error(ErrorKind::WrongModel, "state type does not match model");
    const double max_lookback = opts.max_lookback > 0.0 ? opts.max_lookback : 8.0 * default_t_max(spec);
    double lookback = std::max(opts.initial_lookback, 1e-9);
    EventStream stream(seed, spec.sites());
    std::vector<detail::BackwardEvent> events;
    UpdateEvent pending = stream.next();
    const State bottom0 = bottom_state<State>(spec);
    const State top0 = top_state<State>(spec);
    while (true) {
      const double horizon = std::min(lookback, max_lookback);
      while (pending.time <= horizon) {
        events.push_back({pending.mark, pending.site});
        pending = stream.next();
      }
      State bottom = bottom0;
      State top = top0;
      for (auto it = events.rbegin(); it != events.rend(); ++it) {
        apply_update(spec, bottom, it->site, it->mark);
        apply_update(spec, top, it->site, it->mark);
      }
      if (bottom == top) return top;
      if (horizon >= max_lookback) throw Error(ErrorKind::Timeout, "CFTP did not coalesce within the maximal lookback");
      lookback = horizon * 2.0;
    }
  }
}

// Stationary sample: direct for symmetric models, CFTP for biased ones.
template <ChainState State>
State stationary_sample(const ChainSpec& spec, std::uint64_t seed) {
  if (!spec.biased()) return sample_stationary_direct<State>(spec, seed);
  return cftp_sample<State>(spec, seed);
}

}  // namespace mixlab

#endif
