#pragma once

// Closed-form polarimetric math for the 2x2 coherency (covariance) matrix of
// a Jones vector: degree of polarization, eigenvalues, inversion, and the
// exact intensity-correlation identities that make two-image estimation work.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace spdop {

using Complex = std::complex<double>;

namespace detail {

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace detail

/// Hermitian 2x2 covariance of the Jones vector,
///
///     [ a1   a2 ]
///     [ a2*  a4 ]
///
/// with a1 = <|A_X|^2>, a4 = <|A_Y|^2>, a2 = <A_X A_Y*>. Only the upper
/// triangle is stored; Hermitian symmetry is structural. Construction
/// enforces positive semidefiniteness up to a floating-point slack of
/// 1e-12 * trace^2; a determinant inside that slack is treated as the
/// rank-1 (fully polarized) boundary.
class CoherencyMatrix {
 public:
  CoherencyMatrix(double a1, Complex a2, double a4) : a1_(a1), a2_(a2), a4_(a4) {
    if (!detail::is_finite(a1) || !detail::is_finite(a2) || !detail::is_finite(a4))
      throw std::invalid_argument("coherency matrix entries must be finite");
    if (a1 < 0.0 || a4 < 0.0)
      throw std::domain_error("coherency matrix is not positive semidefinite (negative diagonal)");
    const double raw = raw_det();
    if (raw < -kPsdSlack * trace() * trace())
      throw std::domain_error("coherency matrix is not positive semidefinite (negative determinant)");
  }

  double a1() const { return a1_; }
  Complex a2() const { return a2_; }
  double a4() const { return a4_; }

  double trace() const { return a1_ + a4_; }

  // Determinant clamped at the PSD boundary: slightly negative values that
  // passed the construction slack read as exactly singular.
  double det() const { return std::max(raw_det(), 0.0); }
  double raw_det() const { return a1_ * a4_ - std::norm(a2_); }

  static constexpr double kPsdSlack = 1e-12;

  friend bool operator==(const CoherencyMatrix&, const CoherencyMatrix&) = default;

 private:
  double a1_;
  Complex a2_;
  double a4_;
};

/// Coefficients of the inverse coherency matrix,
///
///     Gamma^-1 = [ c1   c2 ]
///                [ c2*  c4 ]
///
/// Only defined for strictly positive definite Gamma, so c1 > 0, c4 > 0 and
/// c1*c4 - |c2|^2 > 0 always hold here.
class InverseCoefficients {
 public:
  InverseCoefficients(double c1, Complex c2, double c4) : c1_(c1), c2_(c2), c4_(c4) {
    if (!detail::is_finite(c1) || !detail::is_finite(c2) || !detail::is_finite(c4))
      throw std::invalid_argument("inverse coefficients must be finite");
    if (!(c1 > 0.0) || !(c4 > 0.0) || !(c1 * c4 - std::norm(c2) > 0.0))
      throw std::domain_error("inverse coefficients are not positive definite");
  }

  double c1() const { return c1_; }
  Complex c2() const { return c2_; }
  double c4() const { return c4_; }

  double det() const { return c1_ * c4_ - std::norm(c2_); }

  friend bool operator==(const InverseCoefficients&, const InverseCoefficients&) = default;

 private:
  double c1_;
  Complex c2_;
  double c4_;
};

/// Squared degree of polarization,
///
///     P^2 = 1 - 4 (a1 a4 - |a2|^2) / (a1 + a4)^2,
///
/// equal to ((mu1 - mu2)/(mu1 + mu2))^2 over the eigenvalues. The result is
/// clamped to [0,1] only against epsilon-scale overshoot (< 1e-12), never
/// against model error.
inline double degree_of_polarization_squared(const CoherencyMatrix& gamma) {
  const double tr = gamma.trace();
  if (!(tr > 0.0)) throw std::domain_error("degenerate coherency matrix (zero trace)");
  double p2 = 1.0 - 4.0 * gamma.det() / (tr * tr);
  if (p2 < 0.0 && p2 > -1e-12) p2 = 0.0;
  if (p2 > 1.0 && p2 < 1.0 + 1e-12) p2 = 1.0;
  return p2;
}

/// Eigenvalues of the Hermitian matrix, ordered mu1 >= mu2 >= 0. Uses the
/// discriminant form (a1-a4)^2 + 4|a2|^2 which cannot go negative; mu2 is
/// clamped to 0 inside the construction slack.
inline std::pair<double, double> eigenvalues(const CoherencyMatrix& gamma) {
  const double tr = gamma.trace();
  const double diff = gamma.a1() - gamma.a4();
  const double disc = std::sqrt(diff * diff + 4.0 * std::norm(gamma.a2()));
  double mu1 = 0.5 * (tr + disc);
  double mu2 = 0.5 * (tr - disc);
  if (mu2 < 0.0 && mu2 > -1e-11 * tr) mu2 = 0.0;  // PSD slack from construction
  return {mu1, mu2};
}

/// Inverse of a strictly positive definite coherency matrix:
/// (c1, c2, c4) = (a4, -a2, a1) / det.
inline InverseCoefficients invert(const CoherencyMatrix& gamma) {
  const double det = gamma.raw_det();
  const double tr = gamma.trace();
  if (det <= 1e-14 * tr * tr) throw std::domain_error("singular coherency matrix");
  return InverseCoefficients(gamma.a4() / det, -gamma.a2() / det, gamma.a1() / det);
}

/// Inverse mapping back to the coherency matrix; invert(invert(g)) == g up
/// to roundoff.
inline CoherencyMatrix invert(const InverseCoefficients& inv) {
  const double det = inv.det();
  return CoherencyMatrix(inv.c4() / det, -inv.c2() / det, inv.c1() / det);
}

struct IntensityCorrelation {
  double delta12;          // <I1 I2>
  double delta12_centered;  // <I1 I2> - <I1><I2> = |a2|^2
};

/// Theoretical intensity correlation for fully developed speckle. delta12 is
/// evaluated through two independent routes and cross-checked:
///   (i)  the c-parameterized closed form
///        delta12 = (1 + q) / (det(Gamma) c1^2 c4^2 (1 - q)^3), q = |c2|^2/(c1 c4)
///   (ii) the Gaussian moment identity <I1 I2> = a1 a4 + |a2|^2.
inline IntensityCorrelation theoretical_intensity_correlation(const CoherencyMatrix& gamma) {
  const InverseCoefficients inv = invert(gamma);  // throws on singular input
  const double det = gamma.raw_det();
  const double q = std::norm(inv.c2()) / (inv.c1() * inv.c4());
  const double one_minus_q = 1.0 - q;
  const double c_form = (1.0 + q) /
      (det * inv.c1() * inv.c1() * inv.c4() * inv.c4() * one_minus_q * one_minus_q * one_minus_q);
  const double moment_form = gamma.a1() * gamma.a4() + std::norm(gamma.a2());
  if (std::fabs(c_form - moment_form) > 1e-10 * moment_form)
    throw std::logic_error("intensity-correlation routes disagree beyond 1e-10");
  return {moment_form, moment_form - gamma.a1() * gamma.a4()};
}

/// Corrects a squared orthogonal-state contrast for cross-channel
/// correlation:  P^2 = eta^2 + 4 Delta12 / (<I1> + <I2>)^2.
inline double osci_correction(double eta_squared, double delta12_centered,
                              double mean_i1, double mean_i2) {
  const double total = mean_i1 + mean_i2;
  if (!(total > 0.0)) throw std::domain_error("zero total intensity");
  return eta_squared + 4.0 * delta12_centered / (total * total);
}

}  // namespace spdop
