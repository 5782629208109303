#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spdop/estimators.hpp"

#include "../support/oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using spdop::Complex;
using spdop::EstimatorKind;
using spdop::IntensityRecord;

namespace {

std::vector<IntensityRecord> plain(std::initializer_list<std::pair<double, double>> values) {
  std::vector<IntensityRecord> out;
  for (const auto& [i1, i2] : values) out.push_back({i1, i2, std::nullopt});
  return out;
}

// standard error of a full-sample estimate, measured from disjoint blocks
template <typename Est>
double block_standard_error(const std::vector<IntensityRecord>& records, std::size_t blocks,
                            Est est) {
  const std::size_t block_size = records.size() / blocks;
  std::vector<double> values;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::span<const IntensityRecord> view(records.data() + b * block_size, block_size);
    values.push_back(est(view));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double block_sd = std::sqrt(ss / static_cast<double>(blocks - 1));
  return block_sd / std::sqrt(static_cast<double>(blocks));
}

std::vector<IntensityRecord> draw_records(const spdop::CoherencyMatrix& g, std::size_t n,
                                          std::uint64_t stream) {
  return spdop::to_intensity_records(spdop::sample_jones(g, n, {2718, stream}), true);
}

}  // namespace

TEST_CASE("diagonal estimates are plain means") {
  const auto two = plain({{2.0, 4.0}, {4.0, 2.0}});
  const auto [a1, a4] = spdop::estimate_diagonal(two);
  CHECK(a1 == 3.0);
  CHECK(a4 == 3.0);

  const auto one = plain({{5.0, 7.0}});
  const auto [b1, b4] = spdop::estimate_diagonal(one);
  CHECK(b1 == 5.0);
  CHECK(b4 == 7.0);

  CHECK_THROWS_AS(spdop::estimate_diagonal(std::vector<IntensityRecord>{}), std::domain_error);
}

TEST_CASE("diagonal estimates converge on simulated speckle") {
  const spdop::CoherencyMatrix g6{1.25, {0.0, 5.5}, 26.0};
  const auto recs = draw_records(g6, 1000000, 60);
  const auto [a1, a4] = spdop::estimate_diagonal(recs);
  const double se1 = 1.25 / 1000.0;  // exponential intensity: sd = mean, n = 1e6
  const double se4 = 26.0 / 1000.0;
  CHECK_THAT(a1, WithinAbs(1.25, 5.0 * se1));
  CHECK_THAT(a4, WithinAbs(26.0, 5.0 * se4));
}

TEST_CASE("four-image cross estimate") {
  std::vector<IntensityRecord> ones{{1.0, 1.0, Complex(1.0, 0.0)}, {1.0, 1.0, Complex(1.0, 0.0)}};
  CHECK(spdop::estimate_a2sq_four_image(ones) == 1.0);

  std::vector<IntensityRecord> alternating{{1.0, 1.0, Complex(1.0, 0.0)},
                                           {1.0, 1.0, Complex(-1.0, 0.0)},
                                           {1.0, 1.0, Complex(1.0, 0.0)},
                                           {1.0, 1.0, Complex(-1.0, 0.0)}};
  CHECK(spdop::estimate_a2sq_four_image(alternating) == 0.0);

  CHECK_THROWS_AS(spdop::estimate_a2sq_four_image(plain({{1.0, 1.0}})), std::invalid_argument);

  std::vector<IntensityRecord> partial{{1.0, 1.0, Complex(1.0, 0.0)}, {1.0, 1.0, std::nullopt}};
  CHECK_THROWS_AS(spdop::estimate_a2sq_four_image(partial), std::invalid_argument);
}

TEST_CASE("four-image estimate converges to |a2|^2") {
  const spdop::CoherencyMatrix g4{18.0, {7.0, 8.0}, 11.0};
  const auto recs = draw_records(g4, 1000000, 61);
  const double est = spdop::estimate_a2sq_four_image(recs);
  const double se = block_standard_error(recs, 100, [](auto view) {
    return spdop::estimate_a2sq_four_image(view);
  });
  CHECK_THAT(est, WithinAbs(113.0, 5.0 * se));
}

TEST_CASE("correlated-pair estimate") {
  const auto constant = plain({{3.0, 5.0}, {3.0, 5.0}, {3.0, 5.0}});
  CHECK(spdop::estimate_a2sq_correlated_pair(constant) == 0.0);

  // two-point covariance with 1/N normalization: (2 + 12)/2 - 2*3 = 1
  const auto pair = plain({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(spdop::estimate_a2sq_correlated_pair(pair) == 1.0);

  // anti-correlated records produce a negative value, propagated unclamped
  const auto anti = plain({{1.0, 2.0}, {2.0, 1.0}});
  CHECK(spdop::estimate_a2sq_correlated_pair(anti) == -0.25);

  CHECK_THROWS_AS(spdop::estimate_a2sq_correlated_pair(plain({{1.0, 1.0}})), std::domain_error);
}

TEST_CASE("correlated-pair estimate converges to |a2|^2") {
  const spdop::CoherencyMatrix g5{30.0, {16.0, -8.0}, 14.0};
  const auto recs = draw_records(g5, 1000000, 62);
  const double est = spdop::estimate_a2sq_correlated_pair(recs);
  const double se = block_standard_error(recs, 100, [](auto view) {
    return spdop::estimate_a2sq_correlated_pair(view);
  });
  CHECK_THAT(est, WithinAbs(320.0, 5.0 * se));
}

TEST_CASE("p2 assembly per estimator kind") {
  std::vector<IntensityRecord> recs{{2.0, 4.0, Complex(1.0, 1.0)}, {4.0, 2.0, Complex(1.0, -1.0)}};

  const auto osci = spdop::estimate_p2(recs, EstimatorKind::Osci);
  CHECK(osci.kind == EstimatorKind::Osci);
  CHECK(osci.a1_hat == 3.0);
  CHECK(osci.a4_hat == 3.0);
  CHECK(osci.a2_sq_hat == 0.0);
  CHECK(osci.p2_hat == 0.0);  // equal means, zero assumed correlation
  CHECK(osci.n == 2);

  const auto four = spdop::estimate_p2(recs, EstimatorKind::FourImage);
  CHECK(four.a2_sq_hat == 1.0);  // mean cross = (1, 0)
  CHECK_THAT(four.p2_hat, WithinAbs(1.0 - 4.0 * (9.0 - 1.0) / 36.0, 1e-15));

  const auto corr = spdop::estimate_p2(recs, EstimatorKind::CorrelatedPair);
  CHECK(corr.a2_sq_hat == -1.0);  // (8 + 8)/2 - 9
  CHECK_THAT(corr.p2_hat, WithinAbs(1.0 - 4.0 * (9.0 + 1.0) / 36.0, 1e-15));

  // the reported p2 always equals the assembly formula applied to the parts
  for (const auto& r : {osci, four, corr}) {
    const double total = r.a1_hat + r.a4_hat;
    REQUIRE(r.p2_hat == 1.0 - 4.0 * (r.a1_hat * r.a4_hat - r.a2_sq_hat) / (total * total));
  }
}

TEST_CASE("dark region is a domain error") {
  const auto dark = plain({{0.0, 0.0}, {0.0, 0.0}});
  for (EstimatorKind kind :
       {EstimatorKind::Osci, EstimatorKind::CorrelatedPair}) {
    CHECK_THROWS_MATCHES(spdop::estimate_p2(dark, kind), std::domain_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("dark region")));
  }
}

TEST_CASE("contrast estimator reduces to the squared relative difference") {
  oracles::MatrixGen gen(1212);
  for (int i = 0; i < 50; ++i) {
    const auto recs = draw_records(gen.positive_definite(), 800, 100 + i);
    const auto r = spdop::estimate_p2(recs, EstimatorKind::Osci);
    const double eta = (r.a1_hat - r.a4_hat) / (r.a1_hat + r.a4_hat);
    REQUIRE_THAT(r.p2_hat, WithinAbs(eta * eta, 1e-12));
  }
}

TEST_CASE("estimator difference equals the correlation correction term") {
  oracles::MatrixGen gen(999);
  for (int i = 0; i < 50; ++i) {
    const auto recs = draw_records(gen.positive_definite(), 500, 200 + i);
    const auto corr = spdop::estimate_p2(recs, EstimatorKind::CorrelatedPair);
    const auto osci = spdop::estimate_p2(recs, EstimatorKind::Osci);
    const double total = corr.a1_hat + corr.a4_hat;
    REQUIRE_THAT(corr.p2_hat - osci.p2_hat,
                 WithinAbs(4.0 * corr.a2_sq_hat / (total * total), 1e-12));
  }
}

TEST_CASE("estimates are invariant under intensity rescaling") {
  oracles::MatrixGen gen(3131);
  const auto recs = draw_records(gen.positive_definite(), 600, 300);
  for (double k : {1e-4, 3.7, 1e5}) {
    std::vector<IntensityRecord> scaled;
    for (const auto& r : recs) scaled.push_back({k * r.i1, k * r.i2, k * *r.cross});
    for (EstimatorKind kind :
         {EstimatorKind::FourImage, EstimatorKind::Osci, EstimatorKind::CorrelatedPair}) {
      const double original = spdop::estimate_p2(recs, kind).p2_hat;
      const double rescaled = spdop::estimate_p2(scaled, kind).p2_hat;
      REQUIRE_THAT(rescaled, WithinAbs(original, 1e-12 * std::max(1.0, std::fabs(original))));
    }
  }
}

TEST_CASE("four-image estimate is nonnegative, correlated-pair keeps its sign") {
  oracles::MatrixGen gen(727);
  int negatives = 0;
  for (int i = 0; i < 100; ++i) {
    // small N makes negative covariance estimates likely on weakly
    // correlated matrices
    const auto recs = draw_records({1.0, {0.05, 0.0}, 1.0}, 8, 400 + i);
    REQUIRE(spdop::estimate_a2sq_four_image(recs) >= 0.0);
    if (spdop::estimate_a2sq_correlated_pair(recs) < 0.0) ++negatives;
  }
  CHECK(negatives > 10);
}

TEST_CASE("display clamp is separate from the raw estimates") {
  CHECK(spdop::clamp_p2_for_display(-0.08) == 0.0);
  CHECK(spdop::clamp_p2_for_display(1.3) == 1.0);
  CHECK(spdop::clamp_p2_for_display(0.42) == 0.42);

  // raw estimates can leave [0, 1] at small N and must be reported that way
  const auto anti = plain({{1.0, 2.0}, {2.0, 1.0}});
  const auto r = spdop::estimate_p2(anti, spdop::EstimatorKind::CorrelatedPair);
  CHECK(r.p2_hat < 0.0);
  CHECK(spdop::clamp_p2_for_display(r.p2_hat) == 0.0);
}

TEST_CASE("estimators agree exactly when the empirical covariance vanishes") {
  const auto recs = plain({{2.0, 1.0}, {0.0, 1.0}});  // <I1 I2> = 1 = <I1><I2>
  REQUIRE(spdop::estimate_a2sq_correlated_pair(recs) == 0.0);
  const auto corr = spdop::estimate_p2(recs, EstimatorKind::CorrelatedPair);
  const auto osci = spdop::estimate_p2(recs, EstimatorKind::Osci);
  CHECK(corr.p2_hat == osci.p2_hat);
}
