#pragma once

// Exact integer power series used to build q-expansions.

#include <boost/multiprecision/cpp_int.hpp>
#include <utility>
#include <vector>

namespace itpl {

using BigInt = boost::multiprecision::int256_t;

/// Coefficients a_0, a_1, ... of a truncated power series in q.
using IntSeries = std::vector<BigInt>;

/// prod_{n>=1} (1 - q^n) to `count` terms (Euler pentagonal theorem).
IntSeries euler_product(std::size_t count);

/// P^k for a series with P_0 = 1, via the power recurrence
/// n g_n = sum_j ((k+1) j - n) p_j g_{n-j}.
IntSeries series_power(const IntSeries& p, int k, std::size_t count);

/// Product truncated to `count` terms.
IntSeries series_multiply(const IntSeries& a, const IntSeries& b, std::size_t count);

/// Substitute q -> q^d.
IntSeries series_dilate(const IntSeries& a, int d, std::size_t count);

/// Multiply by q^shift (shift >= 0), truncated.
IntSeries series_shift(const IntSeries& a, int shift, std::size_t count);

/// Sum of k-th powers of the divisors of n.
BigInt divisor_sigma(long n, int k);

/// Normalised Eisenstein series E_4 = 1 + 240 sum sigma_3(n) q^n and
/// E_6 = 1 - 504 sum sigma_5(n) q^n.
IntSeries eisenstein_series(int weight, std::size_t count);

/// q^{sum d r_d / 24} prod_d prod_n (1 - q^{dn})^{r_d}: the eta quotient
/// prod eta(d z)^{r_d}. The q-exponent shift must be a non-negative integer.
/// Returns a_0..a_{count-1} of the full series including the leading q-power.
IntSeries eta_quotient(const std::vector<std::pair<int, int>>& factors, std::size_t count);

}  // namespace itpl
