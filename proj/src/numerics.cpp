#include "itpl/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "itpl/error.hpp"

namespace itpl {

namespace {

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

const double kHalfLogTwoPi = 0.5 * std::log(kTwoPi);

}  // namespace

double cut_arg(Complex z) {
    double a = std::atan2(z.imag(), z.real());  // (-pi, pi]
    if (a < -kPi / 2) a += kTwoPi;
    return a;
}

Complex branch_log(Complex z) {
    if (z == Complex(0.0, 0.0)) throw DomainError("branch_log: z = 0");
    return {std::log(std::abs(z)), cut_arg(z)};
}

Complex branch_pow(Complex z, Complex s) {
    if (z == Complex(0.0, 0.0)) {
        if (s.real() > 0) return {0.0, 0.0};
        throw DomainError("branch_pow: 0 raised to a power with Re s <= 0");
    }
    return std::exp(s * branch_log(z));
}

Complex int_pow(Complex z, long n) {
    if (n < 0) return Complex(1.0) / int_pow(z, -n);
    Complex r(1.0, 0.0);
    Complex b = z;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

bool is_nonpositive_integer(Complex s) {
    return s.imag() == 0.0 && s.real() <= 0.0 && std::floor(s.real()) == s.real();
}

Complex log_gamma_right(Complex s) {
    Complex z = s - 1.0;
    Complex x = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) x += kLanczos[i] / (z + double(i));
    Complex t = z + kLanczosG + 0.5;
    return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(x);
}

Complex gamma_complex(Complex s) {
    if (is_nonpositive_integer(s)) throw PoleError("gamma_complex: pole at non-positive integer");
    if (s.imag() == 0.0 && s.real() > 0 && s.real() <= 20 && std::floor(s.real()) == s.real()) {
        double f = 1.0;
        for (int k = 2; k < int(s.real()); ++k) f *= k;
        return {f, 0.0};
    }
    if (s.real() < 0.5) {
        return kPi / (std::sin(kPi * s) * std::exp(log_gamma_right(1.0 - s)));
    }
    return std::exp(log_gamma_right(s));
}

Complex reciprocal_gamma(Complex s) {
    if (is_nonpositive_integer(s)) return {0.0, 0.0};
    if (s.real() < 0.5) return std::sin(kPi * s) * std::exp(log_gamma_right(1.0 - s)) / kPi;
    return 1.0 / gamma_complex(s);
}

namespace {

constexpr double kIgEps = 1e-16;
constexpr int kIgMaxIter = 20000;

// x^s e^{-x} sum x^n / (s (s+1) ... (s+n)) = lower incomplete gamma.
Complex lower_series(Complex s, double x) {
    Complex term = 1.0 / s;
    Complex sum = term;
    for (int n = 1; n < kIgMaxIter; ++n) {
        term *= x / (s + double(n));
        sum += term;
        if (std::abs(term) < kIgEps * std::abs(sum)) {
            return sum * std::exp(s * std::log(x) - x);
        }
    }
    throw AccuracyError("upper_incomplete_gamma: series did not converge",
                        sum * std::exp(s * std::log(x) - x), std::abs(term));
}

// Modified Lentz evaluation of the Legendre continued fraction.
Complex upper_cf(Complex s, double x) {
    constexpr double tiny = 1e-300;
    Complex b = x + 1.0 - s;
    Complex c = 1.0 / tiny;
    Complex d = 1.0 / b;
    Complex h = d;
    for (int i = 1; i < kIgMaxIter; ++i) {
        Complex an = -double(i) * (double(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        Complex del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kIgEps) return std::exp(s * std::log(x) - x) * h;
    }
    throw AccuracyError("upper_incomplete_gamma: continued fraction did not converge",
                        std::exp(s * std::log(x) - x) * h, std::abs(h));
}

}  // namespace

Complex upper_incomplete_gamma(Complex s, double x) {
    if (!(x > 0)) throw DomainError("upper_incomplete_gamma: x must be positive");
    if (x >= 1.0) {
        if (x < s.real() + 1.0) return gamma_complex(s) - lower_series(s, x);
        return upper_cf(s, x);
    }
    // Small x: series at a shifted argument with Re >= 1, then
    // Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a downwards.
    int shift = s.real() >= 1.0 ? 0 : int(std::ceil(1.0 - s.real()));
    Complex a = s + double(shift);
    Complex g = gamma_complex(a) - lower_series(a, x);
    for (int k = shift - 1; k >= 0; --k) {
        Complex ak = s + double(k);
        if (std::abs(ak) == 0.0) throw PoleError("upper_incomplete_gamma: recurrence through s = 0");
        g = (g - std::exp(ak * std::log(x) - x)) / ak;
    }
    return g;
}

Complex gamma_factor(Complex s, std::span<const int> alphas) {
    Complex g = gamma_complex(s);
    for (int a : alphas) {
        if (a < 1) throw DomainError("gamma_factor: alpha must be >= 1");
        g *= gamma_complex(double(a));
    }
    return (alphas.size() % 2 == 0) ? -g : g;
}

Complex reciprocal_gamma_factor(Complex s, std::span<const int> alphas) {
    Complex g = reciprocal_gamma(s);
    for (int a : alphas) {
        if (a < 1) throw DomainError("gamma_factor: alpha must be >= 1");
        g /= gamma_complex(double(a));
    }
    return (alphas.size() % 2 == 0) ? -g : g;
}

Complex binomial_complex(Complex x, int j) {
    if (j < 0) throw DomainError("binomial_complex: j must be >= 0");
    Complex r(1.0, 0.0);
    for (int i = 0; i < j; ++i) r *= (x - double(i)) / double(i + 1);
    return r;
}

std::int64_t binomial_int(std::int64_t n, int j) {
    if (j < 0) throw DomainError("binomial_int: j must be >= 0");
    if (n < 0) {
        std::int64_t b = binomial_int(j - n - 1, j);
        return (j % 2 == 0) ? b : -b;
    }
    if (j > n) return 0;
    if (j > n - j) j = int(n - j);
    __int128 r = 1;
    for (int i = 0; i < j; ++i) {
        r = r * (n - i) / (i + 1);
        if (r > std::numeric_limits<std::int64_t>::max()) throw DomainError("binomial_int: overflow");
    }
    return std::int64_t(r);
}

Complex pochhammer(Complex s, int n) {
    Complex r(1.0, 0.0);
    for (int i = 0; i < n; ++i) r *= s + double(i);
    return r;
}

}  // namespace itpl
