#pragma once

// Cusp forms given by q-expansions: built-in level-1 forms, coefficient-file
// ingestion, pointwise evaluation on the upper half-plane, twists and slashes.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itpl/int_series.hpp"
#include "itpl/numerics.hpp"

namespace itpl {

/// Below this height evaluation goes through a modular transformation.
inline constexpr double kFlipThreshold = 0.2;

/// Upper bounds on |g(it)| near the two cusps of the imaginary axis:
///   |g(it)| <= inf_const * exp(-inf_rate * t)                 for t >= inf_valid_from,
///   |g(it)| <= zero_const * t^{-weight} * exp(-zero_rate / t) for t <= zero_valid_below.
struct CuspDecay {
    double weight = 0;
    double inf_rate = kTwoPi;
    double inf_const = 0;
    double inf_valid_from = 1;
    bool has_zero = false;
    double zero_rate = kTwoPi;
    double zero_const = 0;
    double zero_valid_below = 1;

    /// Bound on the integral over t in [T, inf) of |g(it)| (t + offset)^power.
    double inf_tail(double T, double power, double offset = 0) const;
    /// Bound on the integral over t in (0, eps] of |g(it)| t^power.
    /// Throws AccuracyError when no decay data at 0 is available.
    double zero_tail(double eps, double power) const;
};

/// Cusp-form-like function given by its Fourier coefficients c_1, c_2, ...
/// Immutable; copies share the coefficient storage.
class QExpansion {
  public:
    /// Validates the data and fits the growth constant C with |c_m| <= C m^M.
    /// When growth_exponent is empty, M is fitted by least squares on log|c_m|
    /// and inflated by 0.25.
    static QExpansion create(std::string label, int weight, int level, std::vector<Complex> coefficients,
                             std::optional<int> fricke = std::nullopt,
                             std::optional<double> growth_exponent = std::nullopt);

    const std::string& label() const { return label_; }
    int weight() const { return weight_; }
    int level() const { return level_; }
    std::optional<int> fricke() const { return fricke_; }
    double growth_exponent() const { return growth_exponent_; }
    double growth_constant() const { return growth_constant_; }
    std::size_t size() const { return coeffs_->size(); }
    /// c_m for m >= 1; zero beyond the stored range.
    Complex coefficient(std::size_t m) const { return (m >= 1 && m <= size()) ? (*coeffs_)[m - 1] : Complex{}; }
    /// c_1 .. c_size, index 0 is c_1.
    std::span<const Complex> coefficients() const { return *coeffs_; }

    /// Same data with every coefficient multiplied by `factor`.
    QExpansion scaled(Complex factor) const;

    /// Decay bounds at i-infinity and, when the transformation data allow it, at 0.
    CuspDecay decay() const;

  private:
    QExpansion() = default;
    std::string label_;
    int weight_ = 0;
    int level_ = 1;
    std::optional<int> fricke_;
    double growth_exponent_ = 0;
    double growth_constant_ = 0;
    std::shared_ptr<const std::vector<Complex>> coeffs_;
};

enum class BuiltinForm { Delta, DeltaE4, DeltaE6 };

/// Parses "delta", "delta_e4", "delta_e6". Throws ConfigurationError otherwise.
BuiltinForm parse_builtin(const std::string& name);
std::string builtin_name(BuiltinForm f);

/// Exact integer coefficients c_1..c_count of a built-in level-1 form.
IntSeries builtin_integer_coefficients(BuiltinForm f, std::size_t count);

/// Level 1, Fricke sign +1, growth exponent k/2 + 1/4.
QExpansion builtin_form(BuiltinForm f, std::size_t count);

/// Reads a coefficient file (JSON object with label, weight, level, optional
/// fricke, coefficients). Throws ParseError / ValidationError.
QExpansion load_coefficients(const std::string& path);
QExpansion parse_coefficients(const std::string& text);

/// Serialises to the coefficient-file format (integers stay integers).
std::string coefficients_to_json(const QExpansion& f);

/// sum_{m >= 1} coeffs[m-1] q^m, truncated once C sum_{m > m0} m^M e^{-2 pi y m} < tol.
/// Throws EvaluationRegionError if the stored coefficients do not reach that far.
EvalResult evaluate_series(std::span<const Complex> coeffs, double growth_constant, double growth_exponent,
                           Complex z, double tol);

/// C sum_{m > m0} m^M e^{-x m}; +infinity when the terms are not yet decreasing.
double power_exp_tail(double C, double M, double x, std::size_t m0);

/// f(z) for Im z > 0. Points with Im z < kFlipThreshold are first moved up by
/// SL2(Z) (level 1), by Gamma_0(N) and the Fricke involution (prime level with a
/// Fricke sign) or by a single Fricke flip (other levels with a Fricke sign).
EvalResult evaluate_form(const QExpansion& f, Complex z, double tol);

/// Integer 2x2 matrix in SL2(Z) or rational matrix in GL2+(Q) (stored as doubles).
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;
    double det() const { return a * d - b * c; }
    Complex apply(Complex z) const { return (a * z + b) / (c * z + d); }
    Mat2 inverse() const {
        double D = det();
        return {d / D, -b / D, -c / D, a / D};
    }
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    static Mat2 S() { return {0, -1, 1, 0}; }
    static Mat2 fricke(int N) { return {0, -1, double(N), 0}; }
};

/// Dirichlet character given by its values on residues 0..modulus-1.
struct DirichletCharacter {
    int modulus = 1;
    std::vector<Complex> values{Complex(1.0)};

    Complex operator()(long m) const {
        long r = m % modulus;
        if (r < 0) r += modulus;
        return values[std::size_t(r)];
    }
    DirichletCharacter conj() const;
    static DirichletCharacter trivial() { return {}; }
    /// Legendre symbol (m / p) for an odd prime p.
    static DirichletCharacter legendre(int p);
    /// Character of order dividing p-1 sending the generator g to exp(2 pi i r/(p-1)).
    static DirichletCharacter power_residue(int p, int r);
};

/// sum_{m=1}^{M} chi(m) f((z+m)/M).
EvalResult twist_pointwise(const QExpansion& f, const DirichletCharacter& chi, Complex z, double tol);

/// A holomorphic function on H with cusp-decay data, as consumed by the
/// iterated-integral machinery.
struct CuspFunction {
    std::string label;
    double weight = 0;
    std::function<EvalResult(Complex)> eval;
    CuspDecay decay;
};

CuspFunction as_cusp_function(const QExpansion& f, double tol);
CuspFunction twisted_cusp_function(const QExpansion& f, const DirichletCharacter& chi, double tol);
/// The constant function 1 (decay data empty); used for dz letters.
CuspFunction unit_function();

/// (g|_k gamma)(z) = det^{k/2} (cz+d)^{-k} g(gamma z); powers via branch_pow.
EvalResult slash_action(const std::function<EvalResult(Complex)>& g, double k, const Mat2& gamma, Complex z);

/// g|_k gamma as a CuspFunction. Decay data carry over when gamma is in SL2(Z)
/// and g has level 1 (g|gamma = g); otherwise only the i-infinity data is dropped
/// and must not be needed.
CuspFunction slashed(const CuspFunction& g, double k, const Mat2& gamma, bool level_one_invariant);

}  // namespace itpl
