#ifndef MIXLAB_DYNAMICS_HPP
#define MIXLAB_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/states.hpp"

namespace mixlab {

using Rng = std::mt19937_64;

template <class T>
concept ChainState = std::is_same_v<T, Permutation> || std::is_same_v<T, ExclusionConfig> ||
                     std::is_same_v<T, LatticePath> || std::is_same_v<T, SimplexPoint>;

using AnyState = std::variant<Permutation, ExclusionConfig, LatticePath, SimplexPoint>;

template <ChainState State>
constexpr bool state_matches(Model m) {
  if constexpr (std::is_same_v<State, Permutation>) return is_interchange_type(m);
  if constexpr (std::is_same_v<State, ExclusionConfig>) return is_exclusion_type(m);
  if constexpr (std::is_same_v<State, LatticePath>) return is_corner_flip_type(m);
  if constexpr (std::is_same_v<State, SimplexPoint>) return m == Model::SimplexRW;
  return false;
}

// Throws unless `state` is a valid element of the state space of `spec`.
template <ChainState State>
void check_state(const ChainSpec& spec, const State& state) {
  if (!state_matches<State>(spec.model())) {
    throw Error(ErrorKind::WrongModel, "state type does not match model " + std::string(model_code(spec.model())));
  }
  if (state.size() != spec.N()) throw Error(ErrorKind::ShapeMismatch, "state size differs from N");
  if constexpr (std::is_same_v<State, ExclusionConfig> || std::is_same_v<State, LatticePath>) {
    if (state.particles() != spec.k()) throw Error(ErrorKind::ShapeMismatch, "particle count differs from k");
  }
}

// Lowest and highest states of the coordinate order.
template <ChainState State>
State bottom_state(const ChainSpec& spec) {
  if (!state_matches<State>(spec.model())) throw Error(ErrorKind::WrongModel, "state type does not match model");
  if constexpr (std::is_same_v<State, Permutation>) return Permutation::reversal(spec.N());
  if constexpr (std::is_same_v<State, ExclusionConfig>) return ExclusionConfig::packed_left(spec.N(), spec.k());
  if constexpr (std::is_same_v<State, LatticePath>) return extremal_paths(spec.N(), spec.k()).second;
  if constexpr (std::is_same_v<State, SimplexPoint>) return SimplexPoint::constant(spec.N(), 0.0);
}

template <ChainState State>
State top_state(const ChainSpec& spec) {
  if (!state_matches<State>(spec.model())) throw Error(ErrorKind::WrongModel, "state type does not match model");
  if constexpr (std::is_same_v<State, Permutation>) return Permutation::identity(spec.N());
  if constexpr (std::is_same_v<State, ExclusionConfig>) return ExclusionConfig::packed_right(spec.N(), spec.k());
  if constexpr (std::is_same_v<State, LatticePath>) return extremal_paths(spec.N(), spec.k()).first;
  if constexpr (std::is_same_v<State, SimplexPoint>) return SimplexPoint::constant(spec.N(), static_cast<double>(spec.N()));
}

// Calls f with a default-typed tag for the state type of spec.model().
template <class F>
decltype(auto) dispatch_state_type(Model m, F&& f) {
  if (is_interchange_type(m)) return f(std::type_identity<Permutation>{});
  if (is_exclusion_type(m)) return f(std::type_identity<ExclusionConfig>{});
  if (is_corner_flip_type(m)) return f(std::type_identity<LatticePath>{});
  return f(std::type_identity<SimplexPoint>{});
}

// ---------------------------------------------------------------------------
// Events

struct UpdateEvent {
  double time = 0.0;
  int site = 1;
  double mark = 0.0;

  friend bool operator==(const UpdateEvent&, const UpdateEvent&) = default;
};

// Superposition of the N-1 rate-1 site clocks: a rate-(N-1) clock with a
// uniformly chosen site and an independent uniform mark per event.
class EventStream {
 public:
  EventStream(std::uint64_t seed, int sites) : rng_(seed), sites_(static_cast<std::uint64_t>(sites)), rate_(sites) {}

  UpdateEvent next() {
    time_ += -std::log(to_unit_open_zero(rng_())) / rate_;
    // High word of x * sites is a uniform site; low word is uniform on [0,1) given the site.
    const unsigned __int128 prod = static_cast<unsigned __int128>(rng_()) * sites_;
    UpdateEvent e;
    e.time = time_;
    e.site = static_cast<int>(prod >> 64) + 1;
    e.mark = to_unit(static_cast<std::uint64_t>(prod));
    return e;
  }

  double time() const noexcept { return time_; }

 private:
  Rng rng_;
  std::uint64_t sites_;
  double rate_;
  double time_ = 0.0;
};

// ---------------------------------------------------------------------------
// Local updates. mark >= 1 - p selects the "+" resolution (higher in the
// coordinate order): corner up, particle right, pair ascending.

inline void apply_update(const ChainSpec& spec, LatticePath& zeta, int site, double mark) noexcept {
  zeta.resolve_corner(site, mark >= 1.0 - spec.p());
}

inline void apply_update(const ChainSpec& spec, ExclusionConfig& xi, int site, double mark) noexcept {
  xi.resolve_pair(site, mark >= 1.0 - spec.p());
}

inline void apply_update(const ChainSpec& spec, Permutation& sigma, int site, double mark) noexcept {
  sigma.order_pair(site, mark >= 1.0 - spec.p());
}

inline void apply_update(const ChainSpec&, SimplexPoint& x, int site, double mark) noexcept {
  x.resample(site, mark);
}

template <ChainState State>
State local_update(const ChainSpec& spec, State state, int site, double mark) {
  if (site < 1 || site > spec.N() - 1) throw Error(ErrorKind::OutOfRange, "site must lie in [1, N-1]");
  if (!(mark >= 0.0 && mark < 1.0)) throw Error(ErrorKind::OutOfRange, "mark must lie in [0, 1)");
  check_state(spec, state);
  apply_update(spec, state, site, mark);
  return state;
}

// ---------------------------------------------------------------------------
// Observables

enum class Statistic { HeightProfile, DensityProfile, Phi, W };

// Height profile on {0..N}. Permutations use the projection at level
// max(1, N/2); the simplex reports x_0..x_N.
template <ChainState State>
std::vector<double> height_profile(const State& s) {
  const int n = s.size();
  std::vector<double> h(n + 1, 0.0);
  if constexpr (std::is_same_v<State, LatticePath>) {
    for (int i = 0; i <= n; ++i) h[i] = s(i);
  } else if constexpr (std::is_same_v<State, ExclusionConfig>) {
    for (int x = 1; x <= n; ++x) h[x] = h[x - 1] + 1 - 2 * static_cast<int>(s.occupied(x));
  } else if constexpr (std::is_same_v<State, Permutation>) {
    const int k = std::max(1, n / 2);
    for (int x = 1; x <= n; ++x) h[x] = h[x - 1] + (s(x) > n - k ? -1 : 1);
  } else {
    for (int i = 0; i <= n; ++i) h[i] = s(i);
  }
  return h;
}

template <ChainState State>
std::vector<double> density_profile_of(const State& s) {
  const int n = s.size();
  std::vector<double> d(n, 0.0);
  if constexpr (std::is_same_v<State, ExclusionConfig>) {
    for (int i = 1; i <= n; ++i) d[i - 1] = s.occupied(i);
  } else if constexpr (std::is_same_v<State, LatticePath>) {
    for (int i = 1; i <= n; ++i) d[i - 1] = (1 + s(i - 1) - s(i)) / 2;
  } else if constexpr (std::is_same_v<State, Permutation>) {
    const int k = std::max(1, n / 2);
    for (int i = 1; i <= n; ++i) d[i - 1] = s(i) > n - k ? 1.0 : 0.0;
  } else {
    throw Error(ErrorKind::ModelUnsupported, "density profile needs a discrete model");
  }
  return d;
}

// Slowest-mode projection: sum_i sin(i pi / N) * height(i). The simplex uses
// the centred coordinates x_i - i.
class PhiStatistic {
 public:
  explicit PhiStatistic(int n) : n_(n), weights_(n + 1, 0.0) {
    for (int i = 1; i < n; ++i) weights_[i] = std::sin(i * std::numbers::pi / n);
  }

  template <ChainState State>
  double operator()(const State& s) const {
    double phi = 0.0;
    if constexpr (std::is_same_v<State, LatticePath>) {
      for (int i = 1; i < n_; ++i) phi += weights_[i] * s(i);
    } else if constexpr (std::is_same_v<State, ExclusionConfig>) {
      int h = 0;
      for (int i = 1; i < n_; ++i) {
        h += 1 - 2 * static_cast<int>(s.occupied(i));
        phi += weights_[i] * h;
      }
    } else if constexpr (std::is_same_v<State, SimplexPoint>) {
      for (int i = 1; i < n_; ++i) phi += weights_[i] * (s(i) - i);
    } else {
      const auto h = height_profile(s);
      for (int i = 1; i < n_; ++i) phi += weights_[i] * h[i];
    }
    return phi;
  }

 private:
  int n_;
  std::vector<double> weights_;
};

template <ChainState State>
std::vector<double> observe(const ChainSpec& spec, const State& s, Statistic stat) {
  switch (stat) {
    case Statistic::HeightProfile: return height_profile(s);
    case Statistic::DensityProfile: return density_profile_of(s);
    case Statistic::Phi: return {PhiStatistic(spec.N())(s)};
    case Statistic::W: {
      if constexpr (std::is_same_v<State, SimplexPoint>) {
        throw Error(ErrorKind::ModelUnsupported, "W statistic needs a discrete model");
      } else {
        const auto h = height_profile(s);
        const double lam = spec.biased() ? spec.lambda() : 1.0;
        double w = 0.0;
        for (int i = 1; i < spec.N(); ++i) w += std::pow(lam, 0.5 * h[i]);
        return {w};
      }
    }
  }
  return {};
}

struct ObserverHook {
  std::vector<double> times;  // sorted
  Statistic statistic = Statistic::Phi;
};

template <ChainState State>
struct SimulationResult {
  State final_state;
  // observations[h][j]: statistic of hook h at its j-th sample time.
  std::vector<std::vector<std::vector<double>>> observations;
  std::uint64_t events = 0;
};

// Runs the graphical construction up to t_end. Each sample time records the
// state left by the last event strictly before it.
template <ChainState State>
SimulationResult<State> simulate(const ChainSpec& spec, State init, double t_end, std::uint64_t seed,
                                 const std::vector<ObserverHook>& observers = {},
                                 std::vector<UpdateEvent>* record = nullptr) {
  if (!(t_end >= 0.0)) throw Error(ErrorKind::OutOfRange, "t_end must be nonnegative");
  check_state(spec, init);
  for (const auto& hook : observers) {
    if (!std::is_sorted(hook.times.begin(), hook.times.end())) throw Error(ErrorKind::OutOfRange, "sample times must be sorted");
    if (!hook.times.empty() && (hook.times.front() < 0.0 || hook.times.back() > t_end)) {
      throw Error(ErrorKind::OutOfRange, "sample times must lie in [0, t_end]");
    }
  }
  SimulationResult<State> result{std::move(init), {}, 0};
  result.observations.resize(observers.size());
  std::vector<std::size_t> cursor(observers.size(), 0);
  for (std::size_t h = 0; h < observers.size(); ++h) result.observations[h].reserve(observers[h].times.size());

  auto flush = [&](double before) {
    for (std::size_t h = 0; h < observers.size(); ++h) {
      const auto& times = observers[h].times;
      while (cursor[h] < times.size() && times[cursor[h]] < before) {
        result.observations[h].push_back(observe(spec, result.final_state, observers[h].statistic));
        ++cursor[h];
      }
    }
  };

  EventStream stream(seed, spec.sites());
  while (true) {
    const UpdateEvent e = stream.next();
    flush(e.time);
    if (e.time > t_end) break;
    apply_update(spec, result.final_state, e.site, e.mark);
    ++result.events;
    if (record) record->push_back(e);
  }
  return result;
}

// Re-applies a recorded event sequence.
template <ChainState State>
State replay(const ChainSpec& spec, State init, const std::vector<UpdateEvent>& events) {
  check_state(spec, init);
  for (const auto& e : events) {
    if (e.site < 1 || e.site > spec.sites()) throw Error(ErrorKind::OutOfRange, "event site out of range");
    apply_update(spec, init, e.site, e.mark);
  }
  return init;
}

// Trajectory dump: two comment lines (spec, initial state), a header, then
// one `time,site,mark` row per event with round-trip exact decimals.
template <ChainState State>
void write_trajectory(std::ostream& out, const ChainSpec& spec, const State& init,
                      const std::vector<UpdateEvent>& events) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# model=%s N=%d k=%d p=%.17g\n", std::string(model_code(spec.model())).c_str(),
                spec.N(), spec.k(), spec.p());
  out << buf;
  out << "# init=" << format_state(init) << "\n";
  out << "time,site,mark\n";
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g\n", e.time, e.site, e.mark);
    out << buf;
  }
}

struct Trajectory {
  std::string init;  // serialized initial state
  std::vector<UpdateEvent> events;
};

inline Trajectory read_trajectory(std::istream& in) {
  Trajectory t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# init=", 0) == 0) {
      t.init = line.substr(7);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "time,site,mark") throw Error(ErrorKind::ParseError, "missing trajectory header");
      header = true;
      continue;
    }
    std::istringstream row(line);
    UpdateEvent e;
    char c1 = 0, c2 = 0;
    if (!(row >> e.time >> c1 >> e.site >> c2 >> e.mark) || c1 != ',' || c2 != ',') {
      throw Error(ErrorKind::ParseError, "bad trajectory row '" + line + "'");
    }
    t.events.push_back(e);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact stationary samples for the symmetric models.

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  // Lemire's nearly divisionless method.
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

template <class T>
void fisher_yates(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

template <ChainState State>
State sample_stationary_direct(const ChainSpec& spec, Rng& rng) {
  if (spec.biased()) throw Error(ErrorKind::BiasedModel, "direct sampling needs a symmetric model; use cftp_sample");
  if (!state_matches<State>(spec.model())) throw Error(ErrorKind::WrongModel, "state type does not match model");
  const int n = spec.N();
  if constexpr (std::is_same_v<State, SimplexPoint>) {
    std::vector<double> x(n - 1);
    for (auto& v : x) v = n * to_unit(rng());
    std::sort(x.begin(), x.end());
    return SimplexPoint(n, x);
  } else if constexpr (std::is_same_v<State, Permutation>) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i + 1;
    fisher_yates(v, rng);
    return Permutation(std::move(v));
  } else {
    std::vector<int> occ(n, 0);
    for (int i = 0; i < spec.k(); ++i) occ[i] = 1;
    fisher_yates(occ, rng);
    ExclusionConfig xi(occ);
    if constexpr (std::is_same_v<State, LatticePath>) {
      return height_map(xi);
    } else {
      return xi;
    }
  }
}

template <ChainState State>
State sample_stationary_direct(const ChainSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return sample_stationary_direct<State>(spec, rng);
}

}  // namespace mixlab

#endif
