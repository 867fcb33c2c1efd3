#ifndef MIXLAB_STATES_HPP
#define MIXLAB_STATES_HPP

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixlab/core.hpp"

// State representations of the five chains. All public indices are 1-based
// (sites 1..N, path coordinates 0..N); storage is 0-based.

namespace mixlab {

// One-line notation of a permutation of {1..N}.
class Permutation {
 public:
  explicit Permutation(std::vector<int> one_line) : sigma_(std::move(one_line)) {
    const int n = size();
    if (n < 1) throw Error(ErrorKind::InvalidState, "empty permutation");
    std::vector<char> seen(n + 1, 0);
    for (int v : sigma_) {
      if (v < 1 || v > n || seen[v]) throw Error(ErrorKind::InvalidState, "not a bijection of [1, N]");
      seen[v] = 1;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i + 1;
    return Permutation(std::move(v), Trusted{});
  }

  static Permutation reversal(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = n - i;
    return Permutation(std::move(v), Trusted{});
  }

  int size() const noexcept { return static_cast<int>(sigma_.size()); }
  int operator()(int i) const noexcept { return sigma_[i - 1]; }
  std::span<const int> values() const noexcept { return sigma_; }

  // Puts positions i, i+1 in increasing (ascending = true) or decreasing order.
  void order_pair(int i, bool ascending) noexcept {
    int& a = sigma_[i - 1];
    int& b = sigma_[i];
    if ((a < b) != ascending) std::swap(a, b);
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  struct Trusted {};
  Permutation(std::vector<int> v, Trusted) : sigma_(std::move(v)) {}

  std::vector<int> sigma_;
};

// Particle configuration on {1..N}, bit-packed in 64-bit words.
class ExclusionConfig {
 public:
  explicit ExclusionConfig(const std::vector<int>& occupation)
      : n_(static_cast<int>(occupation.size())), words_((occupation.size() + 63) / 64, 0) {
    if (n_ < 1) throw Error(ErrorKind::InvalidState, "empty configuration");
    for (int i = 0; i < n_; ++i) {
      const int b = occupation[i];
      if (b != 0 && b != 1) throw Error(ErrorKind::InvalidState, "occupation values must be 0 or 1");
      if (b) words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    k_ = count_prefix(n_);
  }

  // Particles on the k rightmost sites.
  static ExclusionConfig packed_right(int n, int k) {
    std::vector<int> occ(n, 0);
    for (int i = n - k; i < n; ++i) occ[i] = 1;
    return ExclusionConfig(occ);
  }

  // Particles on the k leftmost sites.
  static ExclusionConfig packed_left(int n, int k) {
    std::vector<int> occ(n, 0);
    for (int i = 0; i < k; ++i) occ[i] = 1;
    return ExclusionConfig(occ);
  }

  // Configuration from a bit mask (bit i-1 <-> site i), N <= 64.
  static ExclusionConfig from_mask(int n, std::uint64_t mask) {
    std::vector<int> occ(n);
    for (int i = 0; i < n; ++i) occ[i] = static_cast<int>((mask >> i) & 1U);
    return ExclusionConfig(occ);
  }

  int size() const noexcept { return n_; }
  int particles() const noexcept { return k_; }

  bool occupied(int i) const noexcept {
    const int b = i - 1;
    return (words_[b >> 6] >> (b & 63)) & 1U;
  }

  // Number of particles on sites 1..x.
  int count_prefix(int x) const noexcept {
    int c = 0;
    const int full = x >> 6;
    for (int w = 0; w < full; ++w) c += std::popcount(words_[w]);
    const int rem = x & 63;
    if (rem) c += std::popcount(words_[full] & ((std::uint64_t{1} << rem) - 1));
    return c;
  }

  // Low 64 sites as a mask; exact for N <= 64.
  std::uint64_t mask() const noexcept { return words_[0]; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  // If sites i, i+1 hold exactly one particle, put it on the right
  // (particle_right = true) or on the left.
  void resolve_pair(int i, bool particle_right) noexcept {
    const bool a = occupied(i);
    const bool b = occupied(i + 1);
    if (a == b || b == particle_right) return;
    flip_bit(i - 1);
    flip_bit(i);
  }

  friend bool operator==(const ExclusionConfig&, const ExclusionConfig&) = default;

 private:
  void flip_bit(int b) noexcept { words_[b >> 6] ^= std::uint64_t{1} << (b & 63); }

  int n_;
  int k_ = 0;
  std::vector<std::uint64_t> words_;
};

// Nearest-neighbour path zeta on {0..N} with zeta(0) = 0, zeta(N) = N - 2k.
class LatticePath {
 public:
  explicit LatticePath(std::vector<int> heights) : h_(std::move(heights)) {
    if (h_.size() < 2) throw Error(ErrorKind::InvalidState, "path needs at least two points");
    if (h_[0] != 0) throw Error(ErrorKind::InvalidState, "path must start at height 0");
    for (std::size_t i = 0; i + 1 < h_.size(); ++i) {
      const int d = h_[i + 1] - h_[i];
      if (d != 1 && d != -1) throw Error(ErrorKind::InvalidState, "path increments must be +-1");
    }
  }

  int size() const noexcept { return static_cast<int>(h_.size()) - 1; }
  int particles() const noexcept { return (size() - h_.back()) / 2; }
  int operator()(int i) const noexcept { return h_[i]; }
  std::span<const int> heights() const noexcept { return h_; }

  // Corner at i (equal neighbours) set to the up (h+1) or down resolution.
  void resolve_corner(int i, bool up) noexcept {
    const int left = h_[i - 1];
    if (left == h_[i + 1]) h_[i] = up ? left + 1 : left - 1;
  }

  friend bool operator==(const LatticePath&, const LatticePath&) = default;

 private:
  std::vector<int> h_;
};

// Point 0 <= x_1 <= ... <= x_{N-1} <= N of the simplex.
class SimplexPoint {
 public:
  SimplexPoint(int n, const std::vector<double>& x) : x_(n + 1) {
    if (n < 2 || static_cast<int>(x.size()) != n - 1) {
      throw Error(ErrorKind::ShapeMismatch, "simplex point needs N-1 coordinates");
    }
    x_[0] = 0.0;
    x_[n] = n;
    for (int i = 1; i < n; ++i) x_[i] = x[i - 1];
    for (int i = 0; i < n; ++i) {
      if (!(x_[i] <= x_[i + 1])) throw Error(ErrorKind::InvalidState, "simplex coordinates must be sorted in [0, N]");
    }
  }

  static SimplexPoint constant(int n, double value) {
    return SimplexPoint(n, std::vector<double>(n - 1, value));
  }

  int size() const noexcept { return static_cast<int>(x_.size()) - 1; }
  double operator()(int i) const noexcept { return x_[i]; }
  // x_1 .. x_{N-1}
  std::span<const double> coords() const noexcept { return std::span<const double>(x_).subspan(1, x_.size() - 2); }

  // Resample x_i uniformly in [x_{i-1}, x_{i+1}] using the mark u.
  void resample(int i, double u) noexcept { x_[i] = u * x_[i + 1] + (1.0 - u) * x_[i - 1]; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> x_;
};

// ---------------------------------------------------------------------------
// Statistics

// Number of pairs i < j with sigma(i) > sigma(j).
inline long long inversion_count(const Permutation& sigma) {
  const auto v = sigma.values();
  long long d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) d += v[i] > v[j];
  }
  return d;
}

// Minimal number of particle moves to the packed-right configuration.
inline long long particle_area(const ExclusionConfig& xi) {
  const long long n = xi.size();
  const long long k = xi.particles();
  long long s = 0;
  for (int i = 1; i <= xi.size(); ++i) {
    if (xi.occupied(i)) s += n - i;
  }
  return s - k * (k - 1) / 2;
}

// Highest and lowest paths of Xi_{N,k}.
inline std::pair<LatticePath, LatticePath> extremal_paths(int n, int k) {
  if (n < 2 || k < 1 || k > n - 1) throw Error(ErrorKind::OutOfRange, "extremal paths need 1 <= k <= N-1");
  std::vector<int> top(n + 1), bottom(n + 1);
  for (int i = 0; i <= n; ++i) {
    top[i] = std::min(i, 2 * (n - k) - i);
    bottom[i] = std::max(-i, i - 2 * k);
  }
  return {LatticePath(std::move(top)), LatticePath(std::move(bottom))};
}

// Half the area between zeta and the highest path.
inline long long path_area(const LatticePath& zeta) {
  const int n = zeta.size();
  const int k = zeta.particles();
  long long twice = 0;
  for (int i = 1; i < n; ++i) twice += std::min(i, 2 * (n - k) - i) - zeta(i);
  return twice / 2;
}

// ---------------------------------------------------------------------------
// Correspondences

inline LatticePath height_map(const ExclusionConfig& xi) {
  const int n = xi.size();
  std::vector<int> h(n + 1, 0);
  for (int x = 1; x <= n; ++x) h[x] = h[x - 1] + 1 - 2 * static_cast<int>(xi.occupied(x));
  return LatticePath(std::move(h));
}

inline ExclusionConfig height_inverse(const LatticePath& zeta) {
  const int n = zeta.size();
  std::vector<int> occ(n);
  for (int x = 1; x <= n; ++x) occ[x - 1] = (1 + zeta(x - 1) - zeta(x)) / 2;
  return ExclusionConfig(occ);
}

namespace detail {
inline ExclusionConfig threshold_projection(const Permutation& sigma, int k) {
  const int n = sigma.size();
  std::vector<int> occ(n);
  for (int i = 1; i <= n; ++i) occ[i - 1] = sigma(i) > n - k ? 1 : 0;
  return ExclusionConfig(occ);
}
}  // namespace detail

// xi(i) = 1 iff sigma(i) > N - k.
inline ExclusionConfig project_to_exclusion(const Permutation& sigma, int k) {
  if (k < 1 || k > sigma.size() - 1) throw Error(ErrorKind::OutOfRange, "projection level must lie in [1, N-1]");
  return detail::threshold_projection(sigma, k);
}

// All projection levels k = 0..N (levels 0 and N are the empty and full configurations).
inline std::vector<ExclusionConfig> projection_levels(const Permutation& sigma) {
  std::vector<ExclusionConfig> levels;
  levels.reserve(sigma.size() + 1);
  for (int k = 0; k <= sigma.size(); ++k) levels.push_back(detail::threshold_projection(sigma, k));
  return levels;
}

// Inverse of projection_levels: sigma(i) = N - k + 1 where site i first becomes occupied at level k.
inline Permutation reconstruct_permutation(std::span<const ExclusionConfig> levels) {
  if (levels.empty()) throw Error(ErrorKind::InconsistentLevels, "no levels given");
  const int n = levels[0].size();
  if (static_cast<int>(levels.size()) != n + 1) throw Error(ErrorKind::InconsistentLevels, "expected N+1 levels (k = 0..N)");
  std::vector<int> sigma(n, 0);
  for (int k = 0; k <= n; ++k) {
    const auto& cur = levels[k];
    if (cur.size() != n || cur.particles() != k) throw Error(ErrorKind::InconsistentLevels, "level k must hold k particles");
    if (k == 0) continue;
    const auto& prev = levels[k - 1];
    int added = 0;
    for (int i = 1; i <= n; ++i) {
      const bool now = cur.occupied(i);
      const bool before = prev.occupied(i);
      if (before && !now) throw Error(ErrorKind::InconsistentLevels, "levels are not monotone in k");
      if (now && !before) {
        sigma[i - 1] = n - k + 1;
        ++added;
      }
    }
    if (added != 1) throw Error(ErrorKind::InconsistentLevels, "consecutive levels must differ by one particle");
  }
  return Permutation(std::move(sigma));
}

// ---------------------------------------------------------------------------
// Partial orders (coordinate-wise on heights)

inline bool partial_le(const LatticePath& a, const LatticePath& b) {
  if (a.size() != b.size() || a.particles() != b.particles()) throw Error(ErrorKind::ShapeMismatch, "paths of different spaces");
  for (int i = 1; i < a.size(); ++i) {
    if (a(i) > b(i)) return false;
  }
  return true;
}

// Through the height map: more particles on every prefix means lower.
inline bool partial_le(const ExclusionConfig& a, const ExclusionConfig& b) {
  if (a.size() != b.size() || a.particles() != b.particles()) throw Error(ErrorKind::ShapeMismatch, "configurations of different spaces");
  int ca = 0, cb = 0;
  for (int x = 1; x < a.size(); ++x) {
    ca += a.occupied(x);
    cb += b.occupied(x);
    if (ca < cb) return false;
  }
  return true;
}

inline bool partial_le(const SimplexPoint& a, const SimplexPoint& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "simplex points of different dimension");
  for (int i = 1; i < a.size(); ++i) {
    if (a(i) > b(i)) return false;
  }
  return true;
}

// Order of all projected paths simultaneously.
inline bool partial_le(const Permutation& a, const Permutation& b) {
  const int n = a.size();
  if (b.size() != n) throw Error(ErrorKind::ShapeMismatch, "permutations of different size");
  std::vector<int> ca(n + 2, 0), cb(n + 2, 0);  // ca[v]: count of values >= v seen so far
  for (int x = 1; x < n; ++x) {
    for (int v = a(x); v >= 1; --v) ++ca[v];
    for (int v = b(x); v >= 1; --v) ++cb[v];
    for (int v = 2; v <= n; ++v) {
      if (ca[v] < cb[v]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Textual serialization

namespace detail {
inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    auto tok = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    out.push_back(tok);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<int> parse_ints(std::string_view s) {
  std::vector<int> out;
  for (auto tok : split_commas(s)) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw Error(ErrorKind::ParseError, "bad integer '" + std::string(tok) + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline std::string join_ints(std::span<const int> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}
}  // namespace detail

inline std::string format_state(const Permutation& sigma) { return detail::join_ints(sigma.values()); }
inline std::string format_state(const LatticePath& zeta) { return detail::join_ints(zeta.heights()); }

inline std::string format_state(const ExclusionConfig& xi) {
  std::string s(xi.size(), '0');
  for (int i = 1; i <= xi.size(); ++i) {
    if (xi.occupied(i)) s[i - 1] = '1';
  }
  return s;
}

inline std::string format_state(const SimplexPoint& x) {
  std::string s;
  char buf[32];
  const auto c = x.coords();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ',';
    std::snprintf(buf, sizeof buf, "%.17g", c[i]);
    s += buf;
  }
  return s;
}

inline Permutation parse_permutation(std::string_view s) { return Permutation(detail::parse_ints(s)); }
inline LatticePath parse_path(std::string_view s) { return LatticePath(detail::parse_ints(s)); }

inline ExclusionConfig parse_exclusion(std::string_view s) {
  std::vector<int> occ;
  occ.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw Error(ErrorKind::ParseError, "exclusion config must be a 0/1 string");
    occ.push_back(c - '0');
  }
  return ExclusionConfig(occ);
}

inline SimplexPoint parse_simplex(std::string_view s) {
  std::vector<double> x;
  for (auto tok : detail::split_commas(s)) {
    try {
      std::size_t used = 0;
      const std::string t(tok);
      x.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad decimal '" + std::string(tok) + "'");
    }
  }
  return SimplexPoint(static_cast<int>(x.size()) + 1, x);
}

}  // namespace mixlab

#endif
