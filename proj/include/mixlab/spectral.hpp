#ifndef MIXLAB_SPECTRAL_HPP
#define MIXLAB_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/states.hpp"

namespace mixlab {

// Eigenpairs of the zero-boundary Dirichlet Laplacian on {1..N-1}:
// mode j is i -> sin(i j pi / N) with eigenvalue -2 gamma_j.
class DirichletSpectrum {
 public:
  explicit DirichletSpectrum(int n) : n_(n), gammas_(n - 1), sines_(2 * n) {
    for (int j = 1; j < n; ++j) {
      const double s = std::sin(j * std::numbers::pi / (2.0 * n));
      gammas_[j - 1] = 2.0 * s * s;  // 1 - cos(j pi / N) without cancellation
    }
    for (int m = 0; m < 2 * n; ++m) sines_[m] = std::sin(m * std::numbers::pi / n);
  }

  int N() const noexcept { return n_; }
  double gamma(int j) const noexcept { return gammas_[j - 1]; }
  std::span<const double> gammas() const noexcept { return gammas_; }

  // sin(i j pi / N) from the table (exact periodicity in i*j mod 2N).
  double mode(int j, int i) const noexcept { return sines_[(static_cast<long long>(i) * j) % (2 * n_)]; }

  std::vector<double> mode_vector(int j) const {
    std::vector<double> v(n_ - 1);
    for (int i = 1; i < n_; ++i) v[i - 1] = mode(j, i);
    return v;
  }

 private:
  int n_;
  std::vector<double> gammas_;
  std::vector<double> sines_;
};

inline DirichletSpectrum dirichlet_spectrum(int n) {
  if (n < 2) throw Error(ErrorKind::OutOfRange, "spectrum needs N >= 2");
  return DirichletSpectrum(n);
}

// Delta_D f(i) = f(i+1) + f(i-1) - 2 f(i) on the interior values, with the
// given boundary values at 0 and N.
inline std::vector<double> dirichlet_laplacian(std::span<const double> interior, double left = 0.0, double right = 0.0) {
  const std::size_t m = interior.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double l = i == 0 ? left : interior[i - 1];
    const double r = i + 1 == m ? right : interior[i + 1];
    out[i] = l + r - 2.0 * interior[i];
  }
  return out;
}

// max_i |Delta mode_j + 2 gamma_j mode_j|
inline double eigen_residual(const DirichletSpectrum& spec, int j) {
  const auto v = spec.mode_vector(j);
  const auto lap = dirichlet_laplacian(v);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(lap[i] + 2.0 * spec.gamma(j) * v[i]));
  return r;
}

// Real field on {0..N} whose boundary values are fixed at construction.
class HeightField {
 public:
  explicit HeightField(std::vector<double> values) : u_(std::move(values)) {
    if (u_.size() < 2) throw Error(ErrorKind::ShapeMismatch, "height field needs N >= 1");
  }

  static HeightField from_path(const LatticePath& zeta) {
    std::vector<double> u(zeta.size() + 1);
    for (int i = 0; i <= zeta.size(); ++i) u[i] = zeta(i);
    return HeightField(std::move(u));
  }

  // Linear interpolation between two boundary values.
  static HeightField harmonic(int n, double left, double right) {
    std::vector<double> u(n + 1);
    for (int i = 0; i <= n; ++i) u[i] = left + (right - left) * i / n;
    return HeightField(std::move(u));
  }

  int N() const noexcept { return static_cast<int>(u_.size()) - 1; }
  double operator()(int i) const noexcept { return u_[i]; }
  std::span<const double> values() const noexcept { return u_; }
  std::span<const double> interior() const noexcept { return std::span<const double>(u_).subspan(1, u_.size() - 2); }
  double left() const noexcept { return u_.front(); }
  double right() const noexcept { return u_.back(); }

 private:
  std::vector<double> u_;
};

// Solves d/dt u = c Delta_D u with the boundary of u0 held fixed: the
// harmonic profile is subtracted and each sine mode decays by exp(-2 c gamma_j t).
inline HeightField heat_solve(const HeightField& u0, double t, double c) {
  if (!(t >= 0.0)) throw Error(ErrorKind::OutOfRange, "heat_solve needs t >= 0");
  const int n = u0.N();
  if (n < 2 || t == 0.0) return u0;
  const DirichletSpectrum spec(n);
  const HeightField base = HeightField::harmonic(n, u0.left(), u0.right());
  std::vector<double> w(n - 1);
  for (int i = 1; i < n; ++i) w[i - 1] = u0(i) - base(i);
  std::vector<double> coef(n - 1, 0.0);
  for (int j = 1; j < n; ++j) {
    double s = 0.0;
    for (int i = 1; i < n; ++i) s += w[i - 1] * spec.mode(j, i);
    coef[j - 1] = (2.0 / n) * s * std::exp(-2.0 * c * spec.gamma(j) * t);
  }
  std::vector<double> u(n + 1);
  u[0] = u0.left();
  u[n] = u0.right();
  for (int i = 1; i < n; ++i) {
    double s = base(i);
    for (int j = 1; j < n; ++j) s += coef[j - 1] * spec.mode(j, i);
    u[i] = s;
  }
  return HeightField(std::move(u));
}

// V(i) = base^(zeta(i)/2) for i in 1..N-1.
inline std::vector<double> cole_hopf(const LatticePath& zeta, double base) {
  if (!(base > 0.0)) throw Error(ErrorKind::OutOfRange, "Cole-Hopf base must be positive");
  const double half_log = 0.5 * std::log(base);
  std::vector<double> v(zeta.size() - 1);
  for (int i = 1; i < zeta.size(); ++i) v[i - 1] = std::exp(half_log * zeta(i));
  return v;
}

// W(zeta) = sum_i base^(zeta(i)/2)
inline double cole_hopf_sum(const LatticePath& zeta, double base) {
  double w = 0.0;
  for (double v : cole_hopf(zeta, base)) w += v;
  return w;
}

// Residual of the generator identities, evaluated by summing the exact
// generator over every site and both resolutions.
//
// Symmetric: L zeta(i) = 1/2 Delta_D zeta(i), boundary 0 and N-2k; returns
// the max absolute residual.
//
// Biased: with V(i) = lambda^(-zeta(i)/2) (boundary 1 and lambda^(k-N/2)),
// L V(i) = sqrt(pq) Delta_D V(i) - rho V(i). The exponent sign is the one
// for which "+" (up) moves carry rate p. Returns max_i |residual_i| / V(i).
inline double generator_identity_residual(const ChainSpec& spec, const LatticePath& zeta) {
  if (!is_corner_flip_type(spec.model()) && !is_exclusion_type(spec.model())) {
    throw Error(ErrorKind::WrongModel, "generator identity needs a corner-flip or exclusion model");
  }
  const int n = zeta.size();
  if (n != spec.N() || zeta.particles() != spec.k()) throw Error(ErrorKind::ShapeMismatch, "path outside Xi_{N,k}");
  const double p = spec.p();
  const double q = spec.q();
  const bool biased = spec.biased();
  const double base = biased ? 1.0 / spec.lambda() : 1.0;

  auto observable = [&](const LatticePath& z) {
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = biased ? std::pow(base, 0.5 * z(i)) : static_cast<double>(z(i));
    return f;
  };

  const std::vector<double> f0 = observable(zeta);
  std::vector<double> lhs(n + 1, 0.0);
  for (int j = 1; j < n; ++j) {
    LatticePath up = zeta;
    up.resolve_corner(j, true);
    LatticePath down = zeta;
    down.resolve_corner(j, false);
    const auto fu = observable(up);
    const auto fd = observable(down);
    for (int i = 1; i < n; ++i) lhs[i] += p * (fu[i] - f0[i]) + q * (fd[i] - f0[i]);
  }

  const auto lap = dirichlet_laplacian(std::span<const double>(f0).subspan(1, n - 1), f0[0], f0[n]);
  double r = 0.0;
  for (int i = 1; i < n; ++i) {
    if (biased) {
      const double rhs = std::sqrt(p * q) * lap[i - 1] - spec.rho() * f0[i];
      r = std::max(r, std::abs(lhs[i] - rhs) / f0[i]);
    } else {
      r = std::max(r, std::abs(lhs[i] - 0.5 * lap[i - 1]));
    }
  }
  return r;
}

// Decay factor of the squared l2 norm for d/dt u = c Delta_D^(0) u - rho0 u.
inline double contraction_envelope(int n, double c, double rho0, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::OutOfRange, "contraction envelope needs t >= 0");
  const DirichletSpectrum spec(n);
  return std::exp(-2.0 * (2.0 * c * spec.gamma(1) + rho0) * t);
}

struct TailBound {
  double log_raw = 0.0;
  double raw = 0.0;      // may be +inf when the prefactor overflows
  double clamped = 0.0;  // min(raw, 1)
};

// Prefactor and rate of the coupling-time tail P[tau > t] <= A exp(-r t) for
// two ordered chains. Exclusion and corner-flip: A = k(N-1) (times
// lambda^(N/2-1) when biased). Interchange: A = (N-1)^3 (same lambda factor).
inline TailBound coupling_tail_bound(const ChainSpec& spec, double t) {
  if (spec.model() == Model::SimplexRW) throw Error(ErrorKind::WrongModel, "no coupling tail bound for the simplex walk");
  const double n = spec.N();
  const double count = is_interchange_type(spec.model()) ? (n - 1) * (n - 1) * (n - 1) : spec.k() * (n - 1);
  TailBound b;
  if (spec.biased()) {
    b.log_raw = std::log(count) + (n / 2.0 - 1.0) * std::log(spec.lambda()) - spec.rho() * t;
  } else {
    b.log_raw = std::log(count) - DirichletSpectrum(spec.N()).gamma(1) * t;
  }
  b.raw = b.log_raw > std::log(std::numeric_limits<double>::max()) ? std::numeric_limits<double>::infinity()
                                                                      : std::exp(b.log_raw);
  b.clamped = b.log_raw >= 0.0 ? 1.0 : b.raw;
  return b;
}

// Constants of the biased tail bound for W(zeta) = sum_i lambda^(-zeta(i)/2),
// which decreases along the order. delta_min is the smallest positive W gap
// of an ordered pair; k * delta_max bounds the single-site V gap. Heights lie
// in [-k, N-k], so delta_max / delta_min = lambda^(N/2-1).
inline double delta_min(const ChainSpec& spec) {
  const double lam = spec.lambda();
  return (lam - 1.0) * std::pow(lam, -(spec.N() - spec.k()) / 2.0);
}

inline double delta_max(const ChainSpec& spec) {
  const double lam = spec.lambda();
  return (lam - 1.0) * std::pow(lam, spec.k() / 2.0 - 1.0);
}

// Coupling-based mixing time upper bounds for exclusion / corner-flip:
//   symmetric: log(2k(N-1)/eps) / gamma_1
//   biased:    [(N/2 - 1) log lambda + log(2k(N-1)/eps)] / rho
// Both exceed the true asymptotics by a constant factor (4 in the symmetric
// case at positive density).
inline double mixing_upper_bound(const ChainSpec& spec, double eps) {
  if (!is_exclusion_type(spec.model()) && !is_corner_flip_type(spec.model())) {
    throw Error(ErrorKind::WrongModel, "mixing upper bound needs an exclusion or corner-flip model");
  }
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::OutOfRange, "eps must lie in (0, 1)");
  const double n = spec.N();
  const double log_term = std::log(2.0 * spec.k() * (n - 1) / eps);
  if (spec.biased()) return ((n / 2.0 - 1.0) * std::log(spec.lambda()) + log_term) / spec.rho();
  return log_term / DirichletSpectrum(spec.N()).gamma(1);
}

}  // namespace mixlab

#endif
