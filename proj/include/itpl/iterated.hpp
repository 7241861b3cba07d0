#pragma once

// Iterated integrals I, Itilde, Ftilde along vertical/horizontal paths, their
// Fourier expansions at i-infinity and Mellin transforms along the imaginary axis.

#include <optional>
#include <span>
#include <vector>

#include "itpl/forms.hpp"

namespace itpl {

/// Truncation of the imaginary axis: i-infinity is replaced by iT, the cusp 0 by i*eps.
/// `tol` is the relative accuracy target of the nested quadrature.
struct VerticalPathSpec {
    double T = 12;
    double eps = 0.05;
    double tol = 1e-10;

    /// Throws DomainError unless 0 < eps < 1 < T and tol > 0.
    void validate() const;
};

/// Endpoint or base point of an iterated integral.
struct Endpoint {
    enum class Kind { Infinity, Zero, Point };
    Kind kind = Kind::Infinity;
    Complex z;

    static Endpoint infinity() { return {Kind::Infinity, {}}; }
    static Endpoint zero() { return {Kind::Zero, {}}; }
    /// Throws DomainError unless Im z > 0.
    static Endpoint point(Complex z);
    /// The fixed point i/sqrt(N) of the Fricke involution.
    static Endpoint fricke_fixed(int N);
    bool operator==(const Endpoint& o) const { return kind == o.kind && (kind != Kind::Point || z == o.z); }
};

/// Base point, exponents and forms of an iterated integral. For I the first
/// exponent is s_1 (complex), the rest alpha_r; for Itilde all are positive integers.
struct IteratedSpec {
    Endpoint base;
    std::vector<Complex> exponents;
    std::vector<CuspFunction> forms;
};

/// Largest n accepted by the nested-quadrature routines.
inline constexpr std::size_t kMaxDepth = 3;
/// Largest word length alpha_1 + ... + alpha_n for the alternative expression.
inline constexpr int kMaxWordLength = 6;

/// I^z_a(s_1..s_n; f_1..f_n) = int_a^z f_1(z_1) z_1^{s_1-1} int_a^{z_1} ... dz_n dz_1.
EvalResult iterated_I_direct(const IteratedSpec& spec, Endpoint z, const VerticalPathSpec& path);

/// Itilde^z_a(alpha_1..alpha_n; f_1..f_n) with kernels (z_r - z_{r-1})^{alpha_r - 1}, z_0 = z.
EvalResult tilde_I_direct(const IteratedSpec& spec, Endpoint z, const VerticalPathSpec& path);

/// Ftilde^z_a(-, alpha_2..alpha_n; f_1..f_n) = f_1(z) Itilde^z_a(alpha_2..; f_2..).
/// Here spec.exponents holds alpha_2..alpha_n (one fewer than forms).
EvalResult tilde_F_eval(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path);

/// F^z_a(-, alpha_2..alpha_n; f_1..f_n) = f_1(z) I^z_a(alpha_2..; f_2..).
EvalResult F_eval(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path);

/// Itilde^z_a through the word (dz)^{alpha_1-1} (f_1 dz) ... (dz)^{alpha_n-1} (f_n dz),
/// times (-1)^{sum alpha} Gamma^{(alpha)}. Base point and z must lie in H.
EvalResult alternative_iterated_I(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path);

/// prefactor * sum_{m>=1} a_m q^m with |a_m| <= growth_constant m^growth_exponent.
struct FourierSeries {
    std::vector<Complex> coefficients;  // a_1, a_2, ...
    Complex prefactor{1.0, 0.0};
    double growth_constant = 0;
    double growth_exponent = 0;
    /// True when the series is a polynomial in q (no coefficients beyond those stored).
    bool finite = false;
    /// Bound for |g(it)| near 0 (including the prefactor), when known.
    std::optional<CuspDecay> decay;

    /// Fits growth_constant for the given exponent.
    void fit_growth(double exponent);
};

enum class TildeKind { I_tilde, F_tilde };

/// Fourier expansion at i-infinity. For I_tilde, exponents = alpha_1..alpha_n;
/// for F_tilde, exponents = alpha_2..alpha_n.
FourierSeries tilde_fourier_coeffs(TildeKind kind, std::span<const int> exponents, std::span<const QExpansion> forms,
                                   std::size_t count);

/// prefactor * sum a_m q^m, truncated by the growth bound; throws EvaluationRegionError
/// when the stored coefficients are insufficient at this height.
EvalResult evaluate_fourier(const FourierSeries& g, Complex z, double tol);

/// int_{i inf}^0 g(z) z^{s-1} dz split at t = 1 and t = eps:
/// termwise incomplete gamma on [1, inf), adaptive quadrature on [eps, 1], bound on (0, eps).
EvalResult mellin_vertical(const FourierSeries& g, Complex s, const VerticalPathSpec& path);

/// Same transform for a function known only pointwise, with decay data at both cusps.
EvalResult mellin_vertical(const CuspFunction& g, Complex s, const VerticalPathSpec& path);

/// int_{i inf}^0 Ftilde^z_{i inf}(-, alpha_2..; f) z^{s-1} dz. The Fourier series of Ftilde
/// is used on [1, inf); on [eps, 1] Ftilde = f_1(z) Itilde(z), with f_1 evaluated through
/// modular transformations and Itilde by its Fourier series.
EvalResult mellin_tilde_F(std::span<const int> alphas, std::span<const QExpansion> forms, Complex s,
                          const VerticalPathSpec& path);

/// Lambda(s, g) = int_{i inf}^0 g(z) z^{s-1} dz for g = Itilde^z_b(alpha_1..alpha_n; f), b on the
/// imaginary axis. g tends to polynomials of degree alpha_1 - 1 at both cusps, so the transform
/// is defined by subtracting them at the split point c (default b) and adding their
/// continued transforms. Simple poles at s = 0, -1, ..., 1 - alpha_1.
struct RegularizedMellin {
    std::optional<EvalResult> lambda;  // Lambda(s); empty at a pole
    EvalResult lambda_entire;          // (s)_{alpha_1} Lambda(s), entire in s
};
RegularizedMellin regularized_tilde_mellin(std::span<const int> alphas, std::span<const CuspFunction> forms,
                                           Complex base, Complex s, const VerticalPathSpec& path,
                                           std::optional<Complex> split = std::nullopt);

}  // namespace itpl
