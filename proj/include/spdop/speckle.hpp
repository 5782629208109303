#pragma once

// Fully developed speckle generation: N independent Jones vectors drawn from
// the circular complex Gaussian law with a prescribed coherency matrix, plus
// the derived per-sample intensity records.
//
// Randomness contract: SplitMix64 run in counter mode, so the j-th variate of
// a stream is mix64(key + (j+1) * 2^64/phi) and (seed, stream_id, sample
// index) fully determines every draw regardless of worker count. Normal
// variates come from the polar Box-Muller transform: one standard circular
// complex Gaussian z = sqrt(-ln u1) * exp(2*pi*i*u2) per pair of uniforms,
// giving <|z|^2> = 1 and <z^2> = 0.

#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spdop/polcore.hpp"
#include "spdop/textfmt.hpp"

namespace spdop {

/// Identifies one reproducible random stream. Identical (seed, stream_id)
/// yields a bit-identical sample sequence.
struct SamplerConfig {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
  return mix64(mix64(seed + kGolden) ^ mix64(~stream_id));
}

/// Counter-mode SplitMix64 stream of uniforms and circular Gaussians.
class CounterStream {
 public:
  explicit CounterStream(SamplerConfig cfg) : key_(stream_key(cfg.seed, cfg.stream_id)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log() argument.
  double next_unit_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard circular complex Gaussian: <|z|^2> = 1, <z^2> = 0, each real
  /// component N(0, 1/2). Consumes exactly two uniforms.
  Complex next_circular_gaussian() {
    const double u1 = next_unit_pos();
    const double u2 = next_unit();
    const double r = std::sqrt(-std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phase), r * std::sin(phase)};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rng

/// One draw of the Jones vector (A_X, A_Y).
struct JonesVector {
  Complex x;
  Complex y;

  friend bool operator==(const JonesVector&, const JonesVector&) = default;
};

using JonesEnsemble = std::vector<JonesVector>;

/// Lower-triangular factor L with gamma = L * L^H, L11 >= 0, L22 >= 0.
/// Rank-1 matrices land on the L22 = 0 branch instead of being rejected.
struct CholeskyFactor {
  double l11;
  Complex l21;
  double l22;
};

inline CholeskyFactor cholesky_factor(const CoherencyMatrix& gamma) {
  const double a1 = gamma.a1();
  const double a4 = gamma.a4();
  const double slack = CoherencyMatrix::kPsdSlack * gamma.trace() * gamma.trace();
  if (a1 == 0.0) {
    // PSD forces a2 = 0 here (up to the construction slack).
    return {0.0, Complex(0.0, 0.0), std::sqrt(a4)};
  }
  const double l11 = std::sqrt(a1);
  const Complex l21 = std::conj(gamma.a2()) / l11;
  double rem = a4 - std::norm(gamma.a2()) / a1;
  if (rem < 0.0) {
    if (a1 * rem < -2.0 * slack) throw std::domain_error("indefinite coherency matrix");
    rem = 0.0;  // rank-1 boundary
  }
  return {l11, l21, std::sqrt(rem)};
}

/// Draws n independent Jones vectors with covariance gamma by coloring
/// standard circular Gaussians with the Cholesky factor: A = L z. Each sample
/// consumes a fixed four uniforms, so the sequence is reproducible from cfg
/// alone.
inline JonesEnsemble sample_jones(const CoherencyMatrix& gamma, std::size_t n,
                                  SamplerConfig cfg) {
  if (n < 1) throw std::domain_error("ensemble size must be at least 1");
  const CholeskyFactor l = cholesky_factor(gamma);
  rng::CounterStream stream(cfg);
  JonesEnsemble out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex z1 = stream.next_circular_gaussian();
    const Complex z2 = stream.next_circular_gaussian();
    out.push_back({l.l11 * z1, l.l21 * z1 + l.l22 * z2});
  }
  return out;
}

/// Per-sample intensity measurements. `cross` carries A_X * conj(A_Y) and is
/// present only when the four-image acquisition is simulated.
struct IntensityRecord {
  double i1;
  double i2;
  std::optional<Complex> cross;

  friend bool operator==(const IntensityRecord&, const IntensityRecord&) = default;
};

inline std::vector<IntensityRecord> to_intensity_records(const JonesEnsemble& ensemble,
                                                         bool keep_cross) {
  std::vector<IntensityRecord> out;
  out.reserve(ensemble.size());
  for (const JonesVector& a : ensemble) {
    IntensityRecord rec{std::norm(a.x), std::norm(a.y), std::nullopt};
    if (keep_cross) rec.cross = a.x * std::conj(a.y);
    out.push_back(rec);
  }
  return out;
}

// Text dump format for cross-implementation golden testing: a header line
// "N <n>" followed by one line per sample, "AX.re AX.im AY.re AY.im", with
// shortest round-trip-exact decimals.

inline void write_ensemble(std::ostream& os, const JonesEnsemble& ensemble) {
  os << "N " << ensemble.size() << '\n';
  for (const JonesVector& a : ensemble) {
    os << shortest_decimal(a.x.real()) << ' ' << shortest_decimal(a.x.imag()) << ' '
       << shortest_decimal(a.y.real()) << ' ' << shortest_decimal(a.y.imag()) << '\n';
  }
}

inline JonesEnsemble read_ensemble(std::istream& is) {
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "N")
    throw std::runtime_error("ensemble dump: malformed header, expected 'N <n>'");
  JonesEnsemble out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double xr, xi, yr, yi;
    if (!(is >> xr >> xi >> yr >> yi))
      throw std::runtime_error("ensemble dump: truncated at sample " + std::to_string(i));
    out.push_back({Complex(xr, xi), Complex(yr, yi)});
  }
  return out;
}

}  // namespace spdop
