#pragma once

// Complex elementary and special functions on the plane cut along the
// non-positive imaginary axis, arg(z) in [-pi/2, 3pi/2).

#include <complex>
#include <cstdint>
#include <span>

namespace itpl {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Value with an estimated absolute error.
struct EvalResult {
    Complex value{};
    double err_abs = 0.0;
    long terms_used = 0;
};

/// Argument in [-pi/2, 3pi/2).
double cut_arg(Complex z);

/// ln|z| + i cut_arg(z). Throws DomainError for z = 0.
Complex branch_log(Complex z);

/// exp(s * branch_log(z)). z = 0 gives 0 for Re s > 0 and a DomainError otherwise.
Complex branch_pow(Complex z, Complex s);

/// z^n by repeated multiplication (no branch involved).
Complex int_pow(Complex z, long n);

/// (-1)^s with arg(-1) = pi.
inline Complex minus_one_pow(Complex s) { return branch_pow(Complex(-1.0, 0.0), s); }

/// Gamma function. Throws PoleError at non-positive integers.
Complex gamma_complex(Complex s);

/// log Gamma for Re s >= 1/2 (principal branch of the Lanczos form).
Complex log_gamma_right(Complex s);

/// 1/Gamma(s), entire; exactly zero at non-positive integers.
Complex reciprocal_gamma(Complex s);

/// Gamma(s, x) for real x > 0. Throws AccuracyError if the expansion does not settle.
Complex upper_incomplete_gamma(Complex s, double x);

/// (-1)^n Gamma(s) Gamma(alpha_2) ... Gamma(alpha_n) with n = 1 + alphas.size().
Complex gamma_factor(Complex s, std::span<const int> alphas);

/// 1 / gamma_factor(s, alphas), finite at the poles of Gamma(s).
Complex reciprocal_gamma_factor(Complex s, std::span<const int> alphas);

/// x(x-1)...(x-j+1)/j!.
Complex binomial_complex(Complex x, int j);

/// Exact integer binomial coefficient; n may be negative. Throws on overflow.
std::int64_t binomial_int(std::int64_t n, int j);

/// Rising factorial s(s+1)...(s+n-1).
Complex pochhammer(Complex s, int n);

/// True if s is (numerically exactly) a non-positive integer.
bool is_nonpositive_integer(Complex s);

}  // namespace itpl
