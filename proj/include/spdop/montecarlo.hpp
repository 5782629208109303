#pragma once

// Monte Carlo campaigns over (matrix, N, estimator) grids: R independent
// realizations per cell, paired across estimators (every estimator sees the
// same ensemble within a realization), with statistics reproducing the
// benchmark datasets. Reports are deterministic functions of the spec,
// independent of worker count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spdop/estimators.hpp"
#include "spdop/parallel.hpp"

namespace spdop {

struct CampaignSpec {
  struct NamedMatrix {
    std::string name;
    CoherencyMatrix matrix;

    friend bool operator==(const NamedMatrix&, const NamedMatrix&) = default;
  };

  std::vector<NamedMatrix> matrices;
  std::vector<std::size_t> n_values;
  std::size_t realizations = 0;
  std::uint64_t master_seed = 0;
  std::vector<EstimatorKind> estimators;

  friend bool operator==(const CampaignSpec&, const CampaignSpec&) = default;
};

inline void validate(const CampaignSpec& spec) {
  if (spec.matrices.empty()) throw std::invalid_argument("campaign needs at least one matrix");
  if (spec.n_values.empty()) throw std::invalid_argument("campaign needs at least one sample count");
  for (std::size_t n : spec.n_values)
    if (n < 2) throw std::invalid_argument("campaign sample counts must be at least 2");
  if (spec.realizations < 2)
    throw std::invalid_argument("campaign needs at least 2 realizations");
  if (spec.estimators.empty()) throw std::invalid_argument("campaign needs at least one estimator");
  for (std::size_t i = 0; i < spec.matrices.size(); ++i)
    for (std::size_t j = i + 1; j < spec.matrices.size(); ++j)
      if (spec.matrices[i].name == spec.matrices[j].name)
        throw std::invalid_argument("duplicate matrix name '" + spec.matrices[i].name + "'");
}

/// Stream derivation for grid cell (matrix mi, sample-count ni, realization
/// ri): chained SplitMix64 mixing. Fixed for all time so that adding a matrix
/// or sample count to a spec never perturbs the draws of existing cells.
inline std::uint64_t cell_stream(std::size_t mi, std::size_t ni, std::size_t ri) {
  std::uint64_t h = rng::mix64(0xA0761D6478BD642Full + mi);
  h = rng::mix64(h + ni);
  return rng::mix64(h + ri);
}

struct VarianceStats {
  double mean;
  double variance;          // unbiased, 1/(R-1)
  double n_times_variance;
};

/// Mean, unbiased sample variance, and N * variance of a set of per-
/// realization estimates.
inline VarianceStats variance_statistics(std::span<const double> p2_samples, std::size_t n) {
  const std::size_t r = p2_samples.size();
  if (r < 2) throw std::domain_error("variance statistics need at least 2 samples");
  double sum = 0.0;
  for (double v : p2_samples) sum += v;
  const double mean = sum / static_cast<double>(r);
  double ss = 0.0;
  for (double v : p2_samples) ss += (v - mean) * (v - mean);
  const double variance = ss / static_cast<double>(r - 1);
  return {mean, variance, static_cast<double>(n) * variance};
}

struct CampaignCell {
  std::string matrix_name;
  std::size_t matrix_index = 0;
  std::size_t n = 0;
  EstimatorKind kind = EstimatorKind::FourImage;
  double true_p2 = 0.0;
  double mean_p2 = std::numeric_limits<double>::quiet_NaN();
  double var_p2 = std::numeric_limits<double>::quiet_NaN();
  double n_times_var = std::numeric_limits<double>::quiet_NaN();
  std::size_t realization_count = 0;  // successful realizations
  std::size_t failure_count = 0;
  std::string diagnostic;             // first failure message, if any
  std::vector<double> p2_samples;     // per-realization estimates, realization order

  bool ok() const { return realization_count >= 2 && failure_count == 0; }
};

struct CampaignReport {
  CampaignSpec spec;
  std::vector<CampaignCell> cells;  // ordered (matrix, n, estimator)

  const CampaignCell* find(const std::string& matrix_name, std::size_t n,
                           EstimatorKind kind) const {
    for (const CampaignCell& c : cells)
      if (c.matrix_name == matrix_name && c.n == n && c.kind == kind) return &c;
    return nullptr;
  }
};

/// Runs the full campaign grid. Within a realization all estimators consume
/// the same records, so estimator differences are noise-paired. Failed
/// realizations (e.g. a dark region) are excluded from the statistics and
/// counted per cell; a cell with fewer than two surviving realizations
/// carries NaN statistics and its diagnostic.
inline CampaignReport run_campaign(const CampaignSpec& spec, unsigned workers = 0) {
  validate(spec);
  const std::size_t n_m = spec.matrices.size();
  const std::size_t n_n = spec.n_values.size();
  const std::size_t n_e = spec.estimators.size();
  const std::size_t reals = spec.realizations;

  bool want_cross = false;
  for (EstimatorKind k : spec.estimators)
    if (k == EstimatorKind::FourImage) want_cross = true;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  // per (matrix, n): estimator-major buffer of per-realization p2 values
  std::vector<std::vector<double>> p2_buf(n_m * n_n, std::vector<double>(n_e * reals, nan));
  std::vector<std::vector<std::string>> fail_buf(n_m * n_n, std::vector<std::string>(reals));

  parallel_for(n_m * n_n * reals, workers, [&](std::size_t task) {
    const std::size_t ri = task % reals;
    const std::size_t ni = (task / reals) % n_n;
    const std::size_t mi = task / (reals * n_n);
    const std::size_t n = spec.n_values[ni];

    const SamplerConfig cfg{spec.master_seed, cell_stream(mi, ni, ri)};
    const JonesEnsemble ensemble = sample_jones(spec.matrices[mi].matrix, n, cfg);
    const std::vector<IntensityRecord> records = to_intensity_records(ensemble, want_cross);

    for (std::size_t ei = 0; ei < n_e; ++ei) {
      try {
        p2_buf[mi * n_n + ni][ei * reals + ri] =
            estimate_p2(records, spec.estimators[ei]).p2_hat;
      } catch (const std::exception& e) {
        fail_buf[mi * n_n + ni][ri] = e.what();
      }
    }
  });

  CampaignReport report{spec, {}};
  report.cells.reserve(n_m * n_n * n_e);
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    double truth = nan;
    try {
      truth = degree_of_polarization_squared(spec.matrices[mi].matrix);
    } catch (const std::domain_error&) {
      // degenerate matrix: the cell keeps NaN truth and its realization
      // failures carry the diagnostic
    }
    for (std::size_t ni = 0; ni < n_n; ++ni) {
      for (std::size_t ei = 0; ei < n_e; ++ei) {
        CampaignCell cell;
        cell.matrix_name = spec.matrices[mi].name;
        cell.matrix_index = mi;
        cell.n = spec.n_values[ni];
        cell.kind = spec.estimators[ei];
        cell.true_p2 = truth;
        for (std::size_t ri = 0; ri < reals; ++ri) {
          const double v = p2_buf[mi * n_n + ni][ei * reals + ri];
          if (std::isnan(v)) {
            ++cell.failure_count;
            if (cell.diagnostic.empty()) cell.diagnostic = fail_buf[mi * n_n + ni][ri];
          } else {
            cell.p2_samples.push_back(v);
          }
        }
        cell.realization_count = cell.p2_samples.size();
        if (cell.realization_count >= 2) {
          const VarianceStats st = variance_statistics(cell.p2_samples, cell.n);
          cell.mean_p2 = st.mean;
          cell.var_p2 = st.variance;
          cell.n_times_var = st.n_times_variance;
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

}  // namespace spdop
