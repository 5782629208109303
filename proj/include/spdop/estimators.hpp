#pragma once

// The three region-level estimators of the squared degree of polarization:
//
//   FourImage      - |a2|^2 from the complex cross term (needs four images)
//   Osci           - a2 assumed zero (two uncorrelated images)
//   CorrelatedPair - |a2|^2 from the centered intensity correlation
//                    <I1 I2> - <I1><I2> (two correlated images)
//
// All spatial averages use 1/N normalization, matching the estimator
// definitions; the CorrelatedPair |a2|^2 estimate may be negative and is
// propagated unclamped so downstream statistics stay unbiased. p2_hat is
// likewise reported raw (it can leave [0,1] at small N).

#include <cstddef>
#include <span>
#include <utility>

#include "spdop/speckle.hpp"

namespace spdop {

enum class EstimatorKind { FourImage, Osci, CorrelatedPair };

/// Short label matching the result-table column suffixes.
inline const char* estimator_label(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::FourImage: return "A";
    case EstimatorKind::Osci: return "OSCI";
    case EstimatorKind::CorrelatedPair: return "I";
  }
  return "?";
}

/// Config/file-name token for an estimator.
inline const char* estimator_token(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::FourImage: return "four_image";
    case EstimatorKind::Osci: return "osci";
    case EstimatorKind::CorrelatedPair: return "correlated_pair";
  }
  return "?";
}

struct EstimationResult {
  EstimatorKind kind;
  double a1_hat;
  double a4_hat;
  double a2_sq_hat;  // negative allowed for CorrelatedPair, 0 for Osci
  double p2_hat;     // unclamped
  std::size_t n;
};

namespace detail {

// Sufficient statistics for every estimator, accumulated in index order so
// results are deterministic and window-based callers can reproduce the
// record-based path bit for bit.
struct IntensitySums {
  std::size_t n = 0;
  double sum_i1 = 0.0;
  double sum_i2 = 0.0;
  double sum_i1i2 = 0.0;
  Complex sum_cross{0.0, 0.0};
  bool cross_complete = true;

  void add(const IntensityRecord& rec) {
    ++n;
    sum_i1 += rec.i1;
    sum_i2 += rec.i2;
    sum_i1i2 += rec.i1 * rec.i2;
    if (rec.cross)
      sum_cross += *rec.cross;
    else
      cross_complete = false;
  }
};

inline IntensitySums accumulate(std::span<const IntensityRecord> records) {
  IntensitySums sums;
  for (const IntensityRecord& rec : records) sums.add(rec);
  return sums;
}

inline std::pair<double, double> diagonal_from_sums(const IntensitySums& s) {
  if (s.n == 0) throw std::domain_error("cannot estimate from an empty record sequence");
  const double inv_n = 1.0 / static_cast<double>(s.n);
  return {s.sum_i1 * inv_n, s.sum_i2 * inv_n};
}

inline double a2sq_four_image_from_sums(const IntensitySums& s) {
  if (s.n == 0) throw std::domain_error("cannot estimate from an empty record sequence");
  if (!s.cross_complete)
    throw std::invalid_argument("four-image estimator requires the cross term on every record");
  return std::norm(s.sum_cross / static_cast<double>(s.n));
}

inline double a2sq_correlated_pair_from_sums(const IntensitySums& s) {
  if (s.n < 2)
    throw std::domain_error("correlated-pair estimator needs at least 2 records");
  const double inv_n = 1.0 / static_cast<double>(s.n);
  return s.sum_i1i2 * inv_n - (s.sum_i1 * inv_n) * (s.sum_i2 * inv_n);
}

inline double p2_from_estimates(double a1_hat, double a4_hat, double a2_sq_hat) {
  const double total = a1_hat + a4_hat;
  if (!(total > 0.0)) throw std::domain_error("dark region (zero mean intensity)");
  return 1.0 - 4.0 * (a1_hat * a4_hat - a2_sq_hat) / (total * total);
}

inline EstimationResult estimate_from_sums(const IntensitySums& s, EstimatorKind kind) {
  const auto [a1_hat, a4_hat] = diagonal_from_sums(s);
  double a2_sq_hat = 0.0;
  switch (kind) {
    case EstimatorKind::FourImage: a2_sq_hat = a2sq_four_image_from_sums(s); break;
    case EstimatorKind::Osci: a2_sq_hat = 0.0; break;
    case EstimatorKind::CorrelatedPair: a2_sq_hat = a2sq_correlated_pair_from_sums(s); break;
  }
  return {kind, a1_hat, a4_hat, a2_sq_hat, p2_from_estimates(a1_hat, a4_hat, a2_sq_hat), s.n};
}

}  // namespace detail

/// Spatial averages (a1_hat, a4_hat) = ((1/N) sum I1, (1/N) sum I2).
inline std::pair<double, double> estimate_diagonal(std::span<const IntensityRecord> records) {
  return detail::diagonal_from_sums(detail::accumulate(records));
}

/// Four-image |a2|^2 estimate: |(1/N) sum A_X A_Y*|^2. Nonnegative by
/// construction.
inline double estimate_a2sq_four_image(std::span<const IntensityRecord> records) {
  return detail::a2sq_four_image_from_sums(detail::accumulate(records));
}

/// Two-image |a2|^2 estimate from the centered intensity correlation:
/// (1/N) sum I1 I2 - ((1/N) sum I1)((1/N) sum I2). May be negative.
inline double estimate_a2sq_correlated_pair(std::span<const IntensityRecord> records) {
  return detail::a2sq_correlated_pair_from_sums(detail::accumulate(records));
}

/// Assembles the per-kind parameter estimates into
/// p2_hat = 1 - 4 (a1_hat a4_hat - a2_sq_hat) / (a1_hat + a4_hat)^2.
/// For Osci this reduces algebraically to ((a1_hat - a4_hat)/(a1_hat + a4_hat))^2.
inline EstimationResult estimate_p2(std::span<const IntensityRecord> records,
                                    EstimatorKind kind) {
  return detail::estimate_from_sums(detail::accumulate(records), kind);
}

/// Display-only clamp of a raw estimate to the physical range [0, 1]. Never
/// applied inside the statistics paths: clamping would bias campaign means.
inline double clamp_p2_for_display(double p2_hat) {
  if (p2_hat < 0.0) return 0.0;
  if (p2_hat > 1.0) return 1.0;
  return p2_hat;
}

}  // namespace spdop
