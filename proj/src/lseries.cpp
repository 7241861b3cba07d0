#include "itpl/lseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "itpl/error.hpp"

namespace itpl {

namespace {

// Largest truncation point tried by multiple_L_series.
constexpr std::size_t kMaxTerms = 1 << 15;

}  // namespace

void LArgument::validate() const {
    if (forms.empty()) throw DomainError("L-argument: at least one form is required");
    if (forms.size() != alphas.size() + 1) throw DomainError("L-argument: need exactly one alpha per form after the first");
    for (int a : alphas) {
        if (a < 1) throw DomainError("L-argument: alphas must be positive integers");
    }
}

double convergence_bound(std::span<const QExpansion> forms) {
    if (forms.empty()) throw DomainError("convergence_bound: no forms");
    double M = double(forms.size()) - 1;
    for (const QExpansion& f : forms) M += f.growth_exponent();
    return M + 1;
}

std::vector<Complex> chain_sums(std::span<const QExpansion> forms, std::span<const int> alphas, std::size_t count) {
    if (forms.size() != alphas.size() + 1) throw DomainError("chain_sums: need one alpha per inner form");
    for (const QExpansion& f : forms) {
        if (f.size() < count) {
            throw AccuracyError("chain_sums: form '" + f.label() + "' has " + std::to_string(f.size()) +
                                    " coefficients, " + std::to_string(count) + " needed",
                                {}, std::numeric_limits<double>::infinity());
        }
    }
    const std::size_t n = forms.size();
    // S[m-1] = S_r(m), starting from the innermost form.
    std::vector<Complex> S(count);
    for (std::size_t m = 1; m <= count; ++m) S[m - 1] = forms[n - 1].coefficient(m);
    for (std::size_t r = n - 1; r >= 1; --r) {
        // Divide by m^alpha_{r+1} (alphas is indexed from alpha_2), then convolve with c^{(r)}.
        const int a = alphas[r - 1];
        for (std::size_t m = 1; m <= count; ++m) S[m - 1] /= std::pow(double(m), a);
        std::span<const Complex> c = forms[r - 1].coefficients();
        std::vector<Complex> next(count, 0.0);
        for (std::size_t m = 2; m <= count; ++m) {
            Complex acc = 0;
            for (std::size_t mp = 1; mp < m; ++mp) acc += c[m - mp - 1] * S[mp - 1];
            next[m - 1] = acc;
        }
        S = std::move(next);
    }
    return S;
}

Complex l_normalisation(Complex s, std::span<const int> alphas) {
    Complex w = s;
    for (int a : alphas) w += double(a);
    return branch_pow(Complex(0.0, -kTwoPi), -w);
}

EvalResult multiple_L_series(const LArgument& arg, double tol) {
    arg.validate();
    if (!(tol > 0)) throw DomainError("multiple_L_series: tol must be positive");
    const double bound = convergence_bound(arg.forms);
    const double sigma = arg.s.real();
    if (!(sigma > bound)) {
        throw RegionError("multiple_L_series: Re s = " + std::to_string(sigma) +
                          " is not above the convergence bound " + std::to_string(bound) +
                          "; use the continued evaluation");
    }
    const double P = bound - 1;  // |A(m)| = O(m^P)
    std::size_t available = kMaxTerms;
    for (const QExpansion& f : arg.forms) available = std::min(available, f.size());
    const Complex norm = l_normalisation(arg.s, arg.alphas);

    std::size_t L = std::min<std::size_t>(256, available);
    Complex value;
    double err = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<Complex> A = chain_sums(arg.forms, arg.alphas, L);
        Complex sum = 0;
        double mass = 0;
        for (std::size_t m = 1; m <= L; ++m) {
            Complex t = A[m - 1] * std::exp(-arg.s * std::log(double(m)));
            sum += t;
            mass += std::abs(t);
        }
        // Tail: |A(m)| <= C m^P for m > L with C fitted on the upper half of the range,
        // then sum_{m > L} m^{P - sigma} <= L^{1 + P - sigma} / (sigma - P - 1).
        double C = 0;
        for (std::size_t m = L / 2; m <= L; ++m) {
            if (m == 0) continue;
            C = std::max(C, std::abs(A[m - 1]) / std::pow(double(m), P));
        }
        double tail = C * std::pow(double(L), 1 + P - sigma) / (sigma - P - 1);
        value = norm * sum;
        err = std::abs(norm) * (tail + 1e-15 * mass);
        if (err <= tol * std::abs(value) || err == 0) return {value, err, long(L)};
        if (L >= available) break;
        L = std::min(2 * L, available);
    }
    throw AccuracyError("multiple_L_series: tolerance not reached with " + std::to_string(L) + " terms", value, err);
}

EvalResult classical_L(const QExpansion& f, Complex s, double tol) {
    if (!(tol > 0)) throw DomainError("classical_L: tol must be positive");
    if (f.level() != 1 && !f.fricke()) throw DomainError("classical_L: needs level 1 or a Fricke sign");
    const double N = f.level(), k = f.weight();
    const double y0 = 1.0 / std::sqrt(N);
    const Complex dual = double(f.fricke().value_or(1)) * branch_pow(Complex(0.0, 1.0), k) *
                         std::exp((0.5 * k - s) * std::log(N));
    Complex sum = 0;
    double mass = 0;
    for (std::size_t m = 1; m <= f.size(); ++m) {
        const double x = kTwoPi * double(m);
        Complex t = std::exp(-s * std::log(x)) * upper_incomplete_gamma(s, x * y0) +
                    dual * std::exp((s - k) * std::log(x)) * upper_incomplete_gamma(k - s, x * y0);
        t *= f.coefficient(m);
        sum += t;
        mass += std::abs(t);
        // Both terms decay like e^{-2 pi m y0}; stop once the geometric tail is negligible.
        const double decay = std::exp(-x * y0);
        const double tail = f.growth_constant() * std::pow(double(m), f.growth_exponent()) * decay /
                            (1 - std::exp(-kTwoPi * y0)) *
                            (std::pow(x * y0, std::abs(s.real()) + 1) + std::pow(x * y0, std::abs(k - s.real()) + 1));
        if (m > 8 && tail <= tol * std::abs(sum) * 1e-2) {
            // (-2 pi i)^{-s} (2 pi)^s / Gamma(s) = i^s / Gamma(s), entire via 1/Gamma.
            Complex scale = branch_pow(Complex(0.0, 1.0), s) * reciprocal_gamma(s);
            return {scale * sum, std::abs(scale) * (tail + 1e-15 * mass), long(m)};
        }
    }
    throw AccuracyError("classical_L: coefficients exhausted before the tail bound was met", {},
                        std::numeric_limits<double>::infinity());
}

EvalResult multiple_L_continued(const LArgument& arg, const VerticalPathSpec& path) {
    arg.validate();
    EvalResult m = mellin_tilde_F(arg.alphas, arg.forms, arg.s, path);
    Complex r = reciprocal_gamma_factor(arg.s, arg.alphas);
    return {m.value * r, m.err_abs * std::abs(r), m.terms_used};
}

}  // namespace itpl
