#ifndef MIXLAB_CORE_HPP
#define MIXLAB_CORE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mixlab {

enum class ErrorKind {
  OutOfRange,
  ShapeMismatch,
  InconsistentLevels,
  InvalidState,
  BiasedModel,
  WrongModel,
  ModelUnsupported,
  NotOrdered,
  Incomparable,
  Timeout,
  TooLarge,
  SolveFailure,
  NotNormalized,
  ConfigError,
  ResourceError,
  ParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InconsistentLevels: return "InconsistentLevels";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::BiasedModel: return "BiasedModel";
    case ErrorKind::WrongModel: return "WrongModel";
    case ErrorKind::ModelUnsupported: return "ModelUnsupported";
    case ErrorKind::NotOrdered: return "NotOrdered";
    case ErrorKind::Incomparable: return "Incomparable";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ResourceError: return "ResourceError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class Model {
  Interchange,
  BiasedInterchange,
  SSEP,
  ASEP,
  CornerFlip,
  BiasedCornerFlip,
  SimplexRW,
};

inline std::string_view model_code(Model m) {
  switch (m) {
    case Model::Interchange: return "ip";
    case Model::BiasedInterchange: return "bip";
    case Model::SSEP: return "ssep";
    case Model::ASEP: return "asep";
    case Model::CornerFlip: return "cf";
    case Model::BiasedCornerFlip: return "acf";
    case Model::SimplexRW: return "simplex";
  }
  return "?";
}

inline std::optional<Model> parse_model(std::string_view code) {
  for (Model m : {Model::Interchange, Model::BiasedInterchange, Model::SSEP, Model::ASEP,
                  Model::CornerFlip, Model::BiasedCornerFlip, Model::SimplexRW}) {
    if (model_code(m) == code) return m;
  }
  return std::nullopt;
}

inline bool is_biased(Model m) {
  return m == Model::BiasedInterchange || m == Model::ASEP || m == Model::BiasedCornerFlip;
}

inline bool is_exclusion_type(Model m) {
  return m == Model::SSEP || m == Model::ASEP;
}

inline bool is_corner_flip_type(Model m) {
  return m == Model::CornerFlip || m == Model::BiasedCornerFlip;
}

inline bool is_interchange_type(Model m) {
  return m == Model::Interchange || m == Model::BiasedInterchange;
}

inline bool has_particle_count(Model m) {
  return is_exclusion_type(m) || is_corner_flip_type(m);
}

// Model family, size N, particle count k (exclusion and corner-flip only) and
// bias p. Symmetric variants carry p = 1/2 exactly.
class ChainSpec {
 public:
  static ChainSpec make(Model model, int n, int k = 0, double p = 0.5) {
    if (n < 2) throw Error(ErrorKind::OutOfRange, "N must be at least 2");
    if (has_particle_count(model)) {
      if (k < 1 || k > n - 1) {
        throw Error(ErrorKind::OutOfRange, "k must lie in [1, N-1] (got k=" + std::to_string(k) + ")");
      }
    } else {
      k = 0;
    }
    if (is_biased(model)) {
      if (!(p > 0.5 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "biased models need p in (1/2, 1]");
    } else {
      if (p != 0.5) throw Error(ErrorKind::OutOfRange, "symmetric models need p = 1/2");
    }
    return ChainSpec(model, n, k, p);
  }

  Model model() const noexcept { return model_; }
  int N() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return 1.0 - p_; }
  int sites() const noexcept { return n_ - 1; }

  // p / q; infinite for the totally asymmetric case p = 1.
  double lambda() const noexcept { return p_ / (1.0 - p_); }

  // (sqrt p - sqrt q)^2 == 1 - 2 sqrt(pq)
  double rho() const noexcept { return 1.0 - 2.0 * std::sqrt(p_ * (1.0 - p_)); }

  bool biased() const noexcept { return is_biased(model_); }

  friend bool operator==(const ChainSpec&, const ChainSpec&) = default;

 private:
  ChainSpec(Model model, int n, int k, double p) : model_(model), n_(n), k_(k), p_(p) {}

  Model model_;
  int n_;
  int k_;
  double p_;
};

// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed for replica r: independent, replayable streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) noexcept {
  return mix64(seed ^ mix64(r + 0x632be59bd9b4e019ULL));
}

// Uniform on [0, 1) with 53 bits.
inline double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
inline double to_unit_open_zero(std::uint64_t x) noexcept {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

}  // namespace mixlab

#endif
