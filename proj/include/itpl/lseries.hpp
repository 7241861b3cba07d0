#pragma once

// Multiple Hecke L-functions: truncated Dirichlet series in the region of
// absolute convergence, Mellin-integral continuation elsewhere.

#include <span>
#include <vector>

#include "itpl/forms.hpp"
#include "itpl/iterated.hpp"

namespace itpl {

/// L(s, alpha_2, ..., alpha_n; f_1, ..., f_n).
struct LArgument {
    Complex s;
    std::vector<int> alphas;  // alpha_2 .. alpha_n
    std::vector<QExpansion> forms;

    /// Throws DomainError unless forms.size() == alphas.size() + 1 and every alpha >= 1.
    void validate() const;
};

/// M + 1 with M = sum of the growth exponents + (n - 1).
double convergence_bound(std::span<const QExpansion> forms);

/// Chain sums A(m) for m = 1..count:
///   A(m_1) = sum_{m_1 > m_2 > ... > m_n > 0} c1(m_1-m_2) ... cn(m_n) / (m_2^a_2 ... m_n^a_n),
/// by the nested convolution S_n(m) = cn(m)/m^a_n, S_r(m) = m^-a_r sum_{m'<m} cr(m-m') S_{r+1}(m').
/// Every form must hold at least `count` coefficients.
std::vector<Complex> chain_sums(std::span<const QExpansion> forms, std::span<const int> alphas, std::size_t count);

/// (-2 pi i)^{-(s + alpha_2 + ... + alpha_n)}.
Complex l_normalisation(Complex s, std::span<const int> alphas);

/// Truncated l-sum. `tol` is relative: the tail bound is pushed below tol * |value|.
/// Throws RegionError for Re s <= convergence_bound and AccuracyError when the
/// stored coefficients run out first.
EvalResult multiple_L_series(const LArgument& arg, double tol);

/// n = 1 only: (-2 pi i)^{-s} sum c_m m^{-s} for every s, by the smoothed series
///   sum c_m [(2 pi m)^{-s} Gamma(s, 2 pi m y0) + eps i^k N^{k/2-s} (2 pi m)^{s-k} Gamma(k-s, 2 pi m y0)]
/// with y0 = 1/sqrt(N), scaled by (2 pi)^s / Gamma(s). Needs level 1 or a Fricke sign eps.
/// Independent of the quadrature routines; `tol` is relative.
EvalResult classical_L(const QExpansion& f, Complex s, double tol);

/// L(s) = (1 / Gamma^{(s, alpha)}) * int_{i inf}^0 Ftilde(z) z^{s-1} dz, entire in s.
EvalResult multiple_L_continued(const LArgument& arg, const VerticalPathSpec& path);

}  // namespace itpl
