#pragma once

// Scalar special functions backing the Gamma / noncentral-chi machinery.
// Self-contained double precision implementations; no external math
// library. All functions are pure and thread-safe. Domain violations
// throw std::domain_error.

namespace noisefit::specfun {

// log Gamma(x) for x > 0. Lanczos approximation, relative error
// ~1e-14 away from the zeros at x = 1, 2.
double ln_gamma(double x);

// psi(x) = d/dx log Gamma(x), x > 0.
double digamma(double x);

// psi(x) - log(x) evaluated without forming the difference of the two
// near-equal terms. The maximum-likelihood sigma equation is a root of
// this quantity, and plain digamma(x) - log(x) carries too much
// rounding noise to drive Newton below 1e-13 steps.
double digamma_minus_log(double x);

// psi'(x), x > 0.
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double reg_inc_gamma_p(double a, double x);

// Q(a, x) = 1 - P(a, x).
double reg_inc_gamma_q(double a, double x);

// Inverse of P in x: returns x with P(a, x) = p, for p in (0, 1).
// Wilson-Hilferty start refined by bracketed Newton.
double inv_reg_inc_gamma_p(double a, double p);

// Modified Bessel function of the first kind I_nu(z), nu >= -1, z >= 0.
double bessel_i(double nu, double z);

// exp(-z) I_nu(z); finite for all representable z.
double bessel_i_scaled(double nu, double z);

// log I_nu(z) for z > 0.
double log_bessel_i(double nu, double z);

// Kummer's confluent hypergeometric function 1F1(a; b; x), b > 0.
// Direct ascending series for x >= 0; the Kummer transform
// 1F1(a,b,x) = exp(x) 1F1(b-a,b,-x) for x < 0, which keeps every series
// term positive for the a < 0 < b cases used here.
double kummer_1f1(double a, double b, double x);

} // namespace noisefit::specfun
