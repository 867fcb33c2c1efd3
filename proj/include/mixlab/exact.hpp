#ifndef MIXLAB_EXACT_HPP
#define MIXLAB_EXACT_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/dynamics.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/states.hpp"

// Brute-force ground truth on enumerable state spaces.

namespace mixlab {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Dense indices for the states of a discrete chain. Exclusion and corner-flip
// states are ordered colexicographically by occupation mask (bit i-1 <-> site
// i; corner-flip paths via the height bijection); permutations by Lehmer rank.
class StateIndex {
 public:
  static constexpr std::size_t kDefaultCap = 300000;

  explicit StateIndex(const ChainSpec& spec, std::size_t cap = kDefaultCap) : spec_(spec) {
    if (spec.model() == Model::SimplexRW) throw Error(ErrorKind::ModelUnsupported, "the simplex walk has no finite state space");
    const int n = spec.N();
    if (is_interchange_type(spec.model())) {
      double count = 1.0;
      for (int i = 2; i <= n; ++i) count *= i;
      if (count > static_cast<double>(cap)) throw Error(ErrorKind::TooLarge, "N! exceeds the state cap");
      size_ = static_cast<std::size_t>(count);
      factorials_.assign(n + 1, 1);
      for (int i = 1; i <= n; ++i) factorials_[i] = factorials_[i - 1] * static_cast<std::uint64_t>(i);
    } else {
      const int k = spec.k();
      double count = 1.0;
      for (int i = 1; i <= k; ++i) count = count * (n - k + i) / i;
      if (count > static_cast<double>(cap) || n > 63) throw Error(ErrorKind::TooLarge, "C(N,k) exceeds the state cap");
      std::uint64_t mask = (std::uint64_t{1} << k) - 1;
      const std::uint64_t limit = std::uint64_t{1} << n;
      while (mask < limit) {
        codes_.push_back(mask);
        // Gosper's hack: next integer with the same popcount.
        const std::uint64_t c = mask & (0 - mask);
        const std::uint64_t r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
      }
      size_ = codes_.size();
    }
  }

  const ChainSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return size_; }
  bool permutations() const noexcept { return is_interchange_type(spec_.model()); }

  // Occupation mask (exclusion / corner-flip) or Lehmer rank (permutations).
  std::uint64_t code(std::size_t idx) const noexcept { return permutations() ? idx : codes_[idx]; }

  std::size_t index_of_code(std::uint64_t code) const {
    if (permutations()) {
      if (code >= size_) throw Error(ErrorKind::OutOfRange, "rank out of range");
      return static_cast<std::size_t>(code);
    }
    const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code) throw Error(ErrorKind::OutOfRange, "mask is not a state of this space");
    return static_cast<std::size_t>(it - codes_.begin());
  }

  std::vector<int> permutation_values(std::size_t rank) const {
    const int n = spec_.N();
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 1);
    std::vector<int> v(n);
    std::uint64_t r = rank;
    for (int i = 0; i < n; ++i) {
      const std::uint64_t f = factorials_[n - 1 - i];
      const auto c = static_cast<std::size_t>(r / f);
      r %= f;
      v[i] = pool[c];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(c));
    }
    return v;
  }

  std::uint64_t lehmer_rank(std::span<const int> v) const {
    const int n = static_cast<int>(v.size());
    std::uint64_t r = 0;
    for (int i = 0; i < n; ++i) {
      std::uint64_t smaller = 0;
      for (int j = i + 1; j < n; ++j) smaller += v[j] < v[i];
      r += smaller * factorials_[n - 1 - i];
    }
    return r;
  }

  template <ChainState State>
  State state(std::size_t idx) const {
    if (!state_matches<State>(spec_.model())) throw Error(ErrorKind::WrongModel, "state type does not match model");
    if constexpr (std::is_same_v<State, Permutation>) {
      return Permutation(permutation_values(idx));
    } else if constexpr (std::is_same_v<State, ExclusionConfig>) {
      return ExclusionConfig::from_mask(spec_.N(), codes_[idx]);
    } else if constexpr (std::is_same_v<State, LatticePath>) {
      return height_map(ExclusionConfig::from_mask(spec_.N(), codes_[idx]));
    } else {
      throw Error(ErrorKind::ModelUnsupported, "no finite index for the simplex walk");
    }
  }

  template <ChainState State>
  std::size_t index_of(const State& s) const {
    check_state(spec_, s);
    if constexpr (std::is_same_v<State, Permutation>) {
      return static_cast<std::size_t>(lehmer_rank(s.values()));
    } else if constexpr (std::is_same_v<State, ExclusionConfig>) {
      return index_of_code(s.mask());
    } else if constexpr (std::is_same_v<State, LatticePath>) {
      return index_of_code(height_inverse(s).mask());
    } else {
      throw Error(ErrorKind::ModelUnsupported, "no finite index for the simplex walk");
    }
  }

  // Height profile on {0..N} (permutations: projection at level max(1, N/2)).
  std::vector<int> heights(std::size_t idx) const {
    const int n = spec_.N();
    std::vector<int> h(n + 1, 0);
    if (permutations()) {
      const auto v = permutation_values(idx);
      const int k = std::max(1, n / 2);
      for (int x = 1; x <= n; ++x) h[x] = h[x - 1] + (v[x - 1] > n - k ? -1 : 1);
    } else {
      const std::uint64_t m = codes_[idx];
      for (int x = 1; x <= n; ++x) h[x] = h[x - 1] + 1 - 2 * static_cast<int>((m >> (x - 1)) & 1U);
    }
    return h;
  }

  // Index of the "+" (plus = true) or "-" resolution at `site`.
  std::size_t resolved(std::size_t idx, int site, bool plus) const {
    if (permutations()) {
      auto v = permutation_values(idx);
      int& a = v[site - 1];
      int& b = v[site];
      if ((a < b) != plus) std::swap(a, b);
      return static_cast<std::size_t>(lehmer_rank(v));
    }
    const std::uint64_t m = codes_[idx];
    const std::uint64_t left = (m >> (site - 1)) & 1U;
    const std::uint64_t right = (m >> site) & 1U;
    if (left == right) return idx;
    // "+" puts the particle on the right.
    if ((right == 1) == plus) return idx;
    return index_of_code(m ^ (std::uint64_t{3} << (site - 1)));
  }

 private:
  ChainSpec spec_;
  std::size_t size_ = 0;
  std::vector<std::uint64_t> codes_;
  std::vector<std::uint64_t> factorials_;
};

inline StateIndex enumerate_states(const ChainSpec& spec, std::size_t cap = StateIndex::kDefaultCap) {
  return StateIndex(spec, cap);
}

// Sparse rate matrix: off-diagonal L(x,y) >= 0 is the total rate x -> y,
// diagonal is minus the row sum.
struct GeneratorMatrix {
  SparseRowMatrix L;
  double max_exit_rate = 0.0;
};

inline void require_exact_spec(const ChainSpec& spec) {
  if (spec.model() == Model::SimplexRW) throw Error(ErrorKind::ModelUnsupported, "the simplex walk has no finite state space");
  if (spec.p() >= 1.0) throw Error(ErrorKind::OutOfRange, "exact analysis needs p < 1 (irreducible chain)");
}

inline GeneratorMatrix build_generator(const StateIndex& index) {
  const ChainSpec& spec = index.spec();
  require_exact_spec(spec);
  const std::size_t m = index.size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(m * static_cast<std::size_t>(spec.sites() + 1));
  GeneratorMatrix g;
  for (std::size_t x = 0; x < m; ++x) {
    double exit = 0.0;
    for (int i = 1; i <= spec.sites(); ++i) {
      const std::size_t up = index.resolved(x, i, true);
      const std::size_t down = index.resolved(x, i, false);
      if (up != x) {
        triplets.emplace_back(static_cast<int>(x), static_cast<int>(up), spec.p());
        exit += spec.p();
      }
      if (down != x) {
        triplets.emplace_back(static_cast<int>(x), static_cast<int>(down), spec.q());
        exit += spec.q();
      }
    }
    triplets.emplace_back(static_cast<int>(x), static_cast<int>(x), -exit);
    g.max_exit_rate = std::max(g.max_exit_rate, exit);
  }
  g.L.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  g.L.setFromTriplets(triplets.begin(), triplets.end());
  g.L.makeCompressed();
  return g;
}

inline GeneratorMatrix build_generator(const ChainSpec& spec) { return build_generator(StateIndex(spec)); }

// Single strongly connected component of the positive-rate graph.
inline bool is_irreducible(const GeneratorMatrix& g) {
  const auto m = static_cast<std::size_t>(g.L.rows());
  if (m == 0) return false;
  auto reach = [&](const SparseRowMatrix& mat) {
    std::vector<char> seen(m, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (SparseRowMatrix::InnerIterator it(mat, static_cast<Eigen::Index>(x)); it; ++it) {
        const auto y = static_cast<std::size_t>(it.col());
        if (y != x && it.value() > 0.0 && !seen[y]) {
          seen[y] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == m;
  };
  const SparseRowMatrix transposed = g.L.transpose();
  return reach(g.L) && reach(transposed);
}

// Normalized weights lambda^(-A) (exclusion, corner-flip) or lambda^(-D)
// (interchange); uniform for symmetric models.
inline std::vector<double> closed_form_stationary(const StateIndex& index) {
  const ChainSpec& spec = index.spec();
  const std::size_t m = index.size();
  std::vector<double> log_w(m, 0.0);
  if (spec.biased()) {
    const double log_lam = std::log(spec.lambda());
    for (std::size_t x = 0; x < m; ++x) {
      long long energy = 0;
      if (index.permutations()) {
        energy = inversion_count(Permutation(index.permutation_values(x)));
      } else {
        energy = particle_area(ExclusionConfig::from_mask(spec.N(), index.code(x)));
      }
      log_w[x] = -log_lam * static_cast<double>(energy);
    }
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> pi(m);
  double z = 0.0;
  for (std::size_t x = 0; x < m; ++x) z += (pi[x] = std::exp(log_w[x] - top));
  for (auto& v : pi) v /= z;
  return pi;
}

// || pi L ||_inf
inline double invariance_residual(const GeneratorMatrix& g, std::span<const double> pi) {
  const Eigen::Map<const Eigen::RowVectorXd> row(pi.data(), static_cast<Eigen::Index>(pi.size()));
  const Eigen::RowVectorXd r = row * g.L;
  return r.cwiseAbs().maxCoeff();
}

// Solves pi L = 0, sum pi = 1 by sparse LU on L^T with one equation replaced
// by the normalization.
inline std::vector<double> solve_stationary(const GeneratorMatrix& g) {
  const Eigen::Index m = g.L.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(g.L.nonZeros() + m));
  for (Eigen::Index x = 0; x < m; ++x) {
    for (SparseRowMatrix::InnerIterator it(g.L, x); it; ++it) {
      if (it.col() != 0) triplets.emplace_back(static_cast<int>(it.col()), static_cast<int>(x), it.value());
    }
    triplets.emplace_back(0, static_cast<int>(x), 1.0);
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SolveFailure, "sparse LU factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(0) = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SolveFailure, "sparse LU solve failed");
  return std::vector<double>(pi.data(), pi.data() + m);
}

struct StationaryResult {
  std::vector<double> pi;      // closed form (source of truth)
  std::vector<double> solved;  // null-space solve (cross-check)
  double agreement = 0.0;      // max |pi - solved|
  double residual = 0.0;       // || pi L ||_inf
};

inline constexpr double kStationaryAgreement = 1e-12;

inline StationaryResult stationary_exact(const StateIndex& index, const GeneratorMatrix& g) {
  StationaryResult r;
  r.pi = closed_form_stationary(index);
  r.solved = solve_stationary(g);
  for (std::size_t x = 0; x < r.pi.size(); ++x) r.agreement = std::max(r.agreement, std::abs(r.pi[x] - r.solved[x]));
  r.residual = invariance_residual(g, r.pi);
  if (!(r.agreement < kStationaryAgreement)) {
    throw Error(ErrorKind::SolveFailure, "closed-form and solved stationary laws disagree by " + std::to_string(r.agreement));
  }
  return r;
}

inline StationaryResult stationary_exact(const ChainSpec& spec) {
  const StateIndex index(spec);
  return stationary_exact(index, build_generator(index));
}

// max_{x,y} |pi(x) L(x,y) - pi(y) L(y,x)|
inline double detailed_balance_residual(const GeneratorMatrix& g, std::span<const double> pi) {
  double r = 0.0;
  for (Eigen::Index x = 0; x < g.L.rows(); ++x) {
    for (SparseRowMatrix::InnerIterator it(g.L, x); it; ++it) {
      const Eigen::Index y = it.col();
      if (y == x) continue;
      r = std::max(r, std::abs(pi[x] * it.value() - pi[y] * g.L.coeff(y, x)));
    }
  }
  return r;
}

inline double detailed_balance_residual(const ChainSpec& spec) {
  const StateIndex index(spec);
  return detailed_balance_residual(build_generator(index), closed_form_stationary(index));
}

inline constexpr double kNormalizationTolerance = 1e-9;

// Half L1 distance between two probability vectors.
inline double tv_distance(std::span<const double> alpha, std::span<const double> beta) {
  if (alpha.size() != beta.size()) throw Error(ErrorKind::ShapeMismatch, "distributions of different support size");
  double sa = 0.0, sb = 0.0, d = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    sa += alpha[i];
    sb += beta[i];
    d += std::abs(alpha[i] - beta[i]);
  }
  if (std::abs(sa - 1.0) > kNormalizationTolerance || std::abs(sb - 1.0) > kNormalizationTolerance) {
    throw Error(ErrorKind::NotNormalized, "distributions must sum to 1");
  }
  return std::min(1.0, 0.5 * d);
}

enum class CurveKind { Exact, UpperEstimate, LowerEstimate };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Exact: return "exact";
    case CurveKind::UpperEstimate: return "upper_estimate";
    case CurveKind::LowerEstimate: return "lower_estimate";
  }
  return "?";
}

// t -> d(t), exact or estimated; band is a 3-sigma half-width (zero for exact curves).
struct DistanceCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> band;
  CurveKind kind = CurveKind::Exact;
};

// Everything needed for transient analysis of one chain.
class ExactChain {
 public:
  // Truncated Poisson mass per uniformization substep.
  static constexpr double kTruncation = 1e-16;
  static constexpr std::size_t kBlockRows = 128;

  explicit ExactChain(const ChainSpec& spec, std::size_t cap = StateIndex::kDefaultCap)
      : index_(spec, cap), generator_(build_generator(index_)), pi_(closed_form_stationary(index_)) {
    uniform_rate_ = std::max(generator_.max_exit_rate, 1e-300);
    // The symmetric interchange process is a random walk on S_N with uniform
    // pi: every start is at the same distance, so one start represents all.
    start_count_ = spec.model() == Model::Interchange ? 1 : size();
  }

  const ChainSpec& spec() const noexcept { return index_.spec(); }
  const StateIndex& states() const noexcept { return index_; }
  const GeneratorMatrix& generator() const noexcept { return generator_; }
  const std::vector<double>& stationary() const noexcept { return pi_; }
  std::size_t size() const noexcept { return index_.size(); }

  // rows * exp(L dt) by uniformization: K = I + L / Lambda and
  // exp(L h) = sum_n Poisson(Lambda h; n) K^n, in substeps with Lambda h <= 32.
  Eigen::MatrixXd propagate(const Eigen::MatrixXd& rows, double dt) const {
    if (!(dt >= 0.0)) throw Error(ErrorKind::OutOfRange, "propagation time must be nonnegative");
    if (dt == 0.0) return rows;
    const double total = uniform_rate_ * dt;
    const int substeps = std::max(1, static_cast<int>(std::ceil(total / 32.0)));
    const double a = total / substeps;
    Eigen::MatrixXd current = rows;
    for (int s = 0; s < substeps; ++s) {
      Eigen::MatrixXd term = current;
      double w = std::exp(-a);
      double cumulative = w;
      Eigen::MatrixXd acc = w * term;
      for (int n = 1;; ++n) {
        term += (term * generator_.L) / uniform_rate_;
        w *= a / n;
        cumulative += w;
        acc += w * term;
        if (n > a && (w < kTruncation || 1.0 - cumulative < kTruncation)) break;
      }
      current = std::move(acc);
    }
    return current;
  }

  Eigen::MatrixXd point_masses(std::size_t first, std::size_t count) const {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < count; ++i) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(first + i)) = 1.0;
    return r;
  }

  // TV distance of each row to pi.
  std::vector<double> row_distances(const Eigen::MatrixXd& rows) const {
    std::vector<double> d(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      double s = 0.0;
      for (Eigen::Index y = 0; y < rows.cols(); ++y) s += std::abs(rows(r, y) - pi_[static_cast<std::size_t>(y)]);
      d[static_cast<std::size_t>(r)] = std::min(1.0, 0.5 * s);
    }
    return d;
  }

  double max_row_distance(const Eigen::MatrixXd& rows) const {
    const auto d = row_distances(rows);
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
  }

  // Row x of exp(L t).
  std::vector<double> transition_row(std::size_t x, double t) const {
    const Eigen::MatrixXd r = propagate(point_masses(x, 1), t);
    return std::vector<double>(r.data(), r.data() + r.size());
  }

  // E[h_t(i)] from state x, i = 0..N.
  std::vector<double> expected_heights(std::size_t x, double t) const {
    const auto row = transition_row(x, t);
    std::vector<double> e(spec().N() + 1, 0.0);
    for (std::size_t y = 0; y < row.size(); ++y) {
      if (row[y] == 0.0) continue;
      const auto h = index_.heights(y);
      for (std::size_t i = 0; i < h.size(); ++i) e[i] += row[y] * h[i];
    }
    return e;
  }

  // TV distance to pi at time t from every point mass.
  std::vector<double> distances_by_start(double t, int workers = 1) const {
    std::vector<double> out(size());
    const std::size_t blocks = (start_count_ + kBlockRows - 1) / kBlockRows;
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t first = b * kBlockRows;
      const std::size_t count = std::min(kBlockRows, start_count_ - first);
      const auto d = row_distances(propagate(point_masses(first, count), t));
      std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
    });
    if (start_count_ < size()) std::fill(out.begin() + static_cast<std::ptrdiff_t>(start_count_), out.end(), out.front());
    return out;
  }

  // d(t) on a sorted grid; rows propagated incrementally along the grid.
  DistanceCurve distance_curve(std::span<const double> grid, int workers = 1) const {
    if (!std::is_sorted(grid.begin(), grid.end()) || (!grid.empty() && grid.front() < 0.0)) {
      throw Error(ErrorKind::OutOfRange, "time grid must be sorted and nonnegative");
    }
    const std::size_t blocks = (start_count_ + kBlockRows - 1) / kBlockRows;
    std::vector<std::vector<double>> per_block(blocks, std::vector<double>(grid.size(), 0.0));
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t first = b * kBlockRows;
      Eigen::MatrixXd rows = point_masses(first, std::min(kBlockRows, start_count_ - first));
      double t = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        rows = propagate(rows, grid[g] - t);
        t = grid[g];
        per_block[b][g] = max_row_distance(rows);
      }
    });
    DistanceCurve curve;
    curve.kind = CurveKind::Exact;
    curve.times.assign(grid.begin(), grid.end());
    curve.values.assign(grid.size(), 0.0);
    curve.band.assign(grid.size(), 0.0);
    for (const auto& blk : per_block) {
      for (std::size_t g = 0; g < grid.size(); ++g) curve.values[g] = std::max(curve.values[g], blk[g]);
    }
    return curve;
  }

  // inf{t : d(t) <= eps}; each block of starts is bracketed by doubling and
  // bisected (relative precision 1e-10). Per-start distances are
  // nonincreasing, so the answer is the maximum over blocks.
  double mixing_time(double eps, int workers = 1) const {
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::OutOfRange, "eps must lie in (0, 1)");
    const std::size_t blocks = (start_count_ + kBlockRows - 1) / kBlockRows;
    std::vector<double> per_block(blocks, 0.0);
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t first = b * kBlockRows;
      Eigen::MatrixXd lo_rows = point_masses(first, std::min(kBlockRows, start_count_ - first));
      if (max_row_distance(lo_rows) <= eps) return;
      double lo = 0.0;
      double hi = 1.0 / uniform_rate_;
      while (true) {
        Eigen::MatrixXd rows = propagate(lo_rows, hi - lo);
        if (max_row_distance(rows) <= eps) break;
        lo = hi;
        lo_rows = std::move(rows);
        hi *= 2.0;
      }
      while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        Eigen::MatrixXd rows = propagate(lo_rows, mid - lo);
        if (max_row_distance(rows) > eps) {
          lo = mid;
          lo_rows = std::move(rows);
        } else {
          hi = mid;
        }
      }
      per_block[b] = hi;
    });
    return *std::max_element(per_block.begin(), per_block.end());
  }

 private:
  StateIndex index_;
  GeneratorMatrix generator_;
  std::vector<double> pi_;
  double uniform_rate_ = 1.0;
  std::size_t start_count_ = 0;
};

inline DistanceCurve distance_curve_exact(const ChainSpec& spec, std::span<const double> grid, int workers = 1) {
  return ExactChain(spec).distance_curve(grid, workers);
}

inline double mixing_time_exact(const ChainSpec& spec, double eps, int workers = 1) {
  return ExactChain(spec).mixing_time(eps, workers);
}

}  // namespace mixlab

#endif
