#include "itpl/forms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "itpl/error.hpp"

namespace itpl {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fitted_growth_constant(std::span<const Complex> c, double M) {
    double C = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        C = std::max(C, std::abs(c[i]) / std::pow(double(i + 1), M));
    }
    // Relative slack so that the exact check |c_m| <= C m^M survives rounding.
    return C * (1 + 1e-12);
}

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

long long mod_inverse(long long a, long long n) {
    long long t = 0, nt = 1, r = n, nr = ((a % n) + n) % n;
    while (nr != 0) {
        long long q = r / nr;
        std::tie(t, nt) = std::make_pair(nt, t - q * nt);
        std::tie(r, nr) = std::make_pair(nr, r - q * nr);
    }
    if (r != 1) throw DomainError("mod_inverse: not invertible");
    return (t % n + n) % n;
}

// f(z) = factor * f(point).
struct Reduction {
    Complex point;
    Complex factor{1.0, 0.0};
};

Reduction reduce_point(const QExpansion& f, Complex z) {
    if (z.imag() >= kFlipThreshold) return {z};
    const int N = f.level();
    const int k = f.weight();
    if (N == 1 || (f.fricke() && is_prime(N))) {
        long long a = 1, b = 0, c = 0, d = 1;  // w = M z
        Complex w = z;
        for (int it = 0; it < 100000; ++it) {
            long long n = std::llround(w.real());
            w -= double(n);
            a -= n * c;
            b -= n * d;
            if (std::norm(w) < 1.0 - 1e-14) {
                w = -1.0 / w;
                long long na = -c, nb = -d;
                c = a;
                d = b;
                a = na;
                b = nb;
            } else {
                break;
            }
            if (std::llabs(a) > (1LL << 50) || std::llabs(c) > (1LL << 50)) {
                throw EvaluationRegionError("evaluate_form: reduction matrix overflow");
            }
        }
        // z = M^{-1} w with M^{-1} = [[A, B], [C, D]].
        long long A = d, B = -b, C = -c, D = a;
        if (C % N == 0) return {w, int_pow(double(C) * w + double(D), k)};
        long long j = ((D % N + N) % N) * mod_inverse(C, N) % N;
        long long dc = C * j - D, dd = C;  // bottom row of delta = M^{-1} (S T^j)^{-1}
        (void)A;
        (void)B;
        Complex u = w + double(j);
        Complex up = -1.0 / u;
        Complex factor = int_pow(double(dc) * up + double(dd), k) * double(*f.fricke()) *
                         std::pow(double(N), -0.5 * k) * int_pow(u, k);
        return {u / double(N), factor};
    }
    if (f.fricke()) {
        Complex zt = z - double(std::llround(z.real()));
        Complex w = -1.0 / (double(N) * zt);
        if (w.imag() > z.imag()) {
            return {w, double(*f.fricke()) * std::pow(double(N), -0.5 * k) * int_pow(zt, -k)};
        }
        return {z};
    }
    throw EvaluationRegionError("evaluate_form: Im z below the flip threshold for a level-" + std::to_string(N) +
                                " form without Fricke data");
}

Complex parse_coefficient(const json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        std::size_t pos = 0;
        double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
        return {x, 0.0};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw std::invalid_argument("coefficient must be a number, a decimal string or [re, im]");
}

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

// Line on which the n-th element of the "coefficients" array starts (best effort).
int line_of_coefficient(const std::string& text, std::size_t index) {
    std::size_t p = text.find("\"coefficients\"");
    if (p == std::string::npos) return 1;
    p = text.find('[', p);
    if (p == std::string::npos) return line_of_offset(text, text.size());
    int depth = 0;
    std::size_t seen = 0;
    bool expecting = true;
    for (std::size_t i = p + 1; i < text.size(); ++i) {
        char ch = text[i];
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (depth == 0 && expecting) {
            if (seen == index) return line_of_offset(text, i);
            expecting = false;
        }
        if (ch == '[') ++depth;
        if (ch == ']') {
            if (depth == 0) break;
            --depth;
        }
        if (ch == ',' && depth == 0) {
            ++seen;
            expecting = true;
        }
    }
    return line_of_offset(text, p);
}

}  // namespace

double CuspDecay::inf_tail(double T, double power, double offset) const {
    if (T < inf_valid_from) throw AccuracyError("cusp decay: truncation height below the bound's range", {}, kInf);
    double base = T + offset;
    double rate = inf_rate;
    if (power > 0) rate -= power / base;
    if (rate <= 0) return kInf;
    return inf_const * std::pow(base, power) * std::exp(-inf_rate * T) / rate;
}

double CuspDecay::zero_tail(double eps, double power) const {
    if (!has_zero) throw AccuracyError("cusp decay: no decay data at the cusp 0; the (0, eps) piece is unbounded", {}, kInf);
    if (eps > zero_valid_below) throw AccuracyError("cusp decay: eps above the range of the bound at 0", {}, kInf);
    double e = power - weight;  // integrand t^e exp(-rate/t)
    double tmax = eps;
    if (e < 0) tmax = std::min(eps, zero_rate / (-e));
    return eps * zero_const * std::pow(tmax, e) * std::exp(-zero_rate / tmax);
}

QExpansion QExpansion::create(std::string label, int weight, int level, std::vector<Complex> coefficients,
                              std::optional<int> fricke, std::optional<double> growth_exponent) {
    if (coefficients.empty()) throw ValidationError("coefficient list is empty");
    if (weight < 1) throw ValidationError("weight must be a positive integer");
    if (level < 1) throw ValidationError("level must be a positive integer");
    if (fricke && *fricke != 1 && *fricke != -1) throw ValidationError("fricke eigenvalue must be +1 or -1");
    for (const Complex& c : coefficients) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw ValidationError("non-finite coefficient");
    }
    QExpansion q;
    q.label_ = std::move(label);
    q.weight_ = weight;
    q.level_ = level;
    q.fricke_ = fricke;
    if (growth_exponent) {
        q.growth_exponent_ = *growth_exponent;
    } else {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::size_t i = 0; i < coefficients.size(); ++i) {
            double a = std::abs(coefficients[i]);
            if (a == 0) continue;
            double x = std::log(double(i + 1)), y = std::log(a);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        double slope = 0;
        if (n >= 2 && n * sxx - sx * sx > 0) slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        q.growth_exponent_ = std::max(slope, 0.0) + 0.25;
    }
    q.growth_constant_ = fitted_growth_constant(coefficients, q.growth_exponent_);
    q.coeffs_ = std::make_shared<const std::vector<Complex>>(std::move(coefficients));
    return q;
}

QExpansion QExpansion::scaled(Complex factor) const {
    QExpansion q = *this;
    auto c = std::make_shared<std::vector<Complex>>(*coeffs_);
    for (Complex& x : *c) x *= factor;
    q.coeffs_ = std::move(c);
    q.growth_constant_ = growth_constant_ * std::abs(factor);
    return q;
}

CuspDecay QExpansion::decay() const {
    CuspDecay d;
    d.weight = weight_;
    d.inf_rate = kTwoPi;
    double K = 0;
    for (std::size_t m = 1; m <= size(); ++m) K += std::abs(coefficient(m)) * std::exp(-kTwoPi * double(m - 1));
    K += growth_constant_ * std::exp(kTwoPi) * power_exp_tail(1.0, growth_exponent_, kTwoPi, size());
    d.inf_const = K;
    d.inf_valid_from = 1;
    if (level_ == 1 || fricke_) {
        d.has_zero = true;
        d.zero_rate = kTwoPi / level_;
        d.zero_const = std::pow(double(level_), -0.5 * weight_) * K;
        d.zero_valid_below = 1.0 / level_;
    }
    return d;
}

BuiltinForm parse_builtin(const std::string& name) {
    if (name == "delta") return BuiltinForm::Delta;
    if (name == "delta_e4") return BuiltinForm::DeltaE4;
    if (name == "delta_e6") return BuiltinForm::DeltaE6;
    throw ConfigurationError("unknown built-in form '" + name + "' (expected delta, delta_e4, delta_e6)");
}

std::string builtin_name(BuiltinForm f) {
    switch (f) {
        case BuiltinForm::Delta: return "delta";
        case BuiltinForm::DeltaE4: return "delta_e4";
        case BuiltinForm::DeltaE6: return "delta_e6";
    }
    return "?";
}

IntSeries builtin_integer_coefficients(BuiltinForm f, std::size_t count) {
    // Series indices 0..count; index m holds c_m.
    const std::size_t len = count + 1;
    IntSeries delta = series_shift(series_power(euler_product(len), 24, len), 1, len);
    IntSeries full;
    switch (f) {
        case BuiltinForm::Delta: full = delta; break;
        case BuiltinForm::DeltaE4: full = series_multiply(delta, eisenstein_series(4, len), len); break;
        case BuiltinForm::DeltaE6: full = series_multiply(delta, eisenstein_series(6, len), len); break;
    }
    return IntSeries(full.begin() + 1, full.end());
}

QExpansion builtin_form(BuiltinForm f, std::size_t count) {
    if (count < 1) throw DomainError("builtin_form: count must be >= 1");
    IntSeries c = builtin_integer_coefficients(f, count);
    std::vector<Complex> values;
    values.reserve(count);
    for (const BigInt& x : c) values.emplace_back(x.convert_to<double>(), 0.0);
    int weight = f == BuiltinForm::Delta ? 12 : (f == BuiltinForm::DeltaE4 ? 16 : 18);
    return QExpansion::create(builtin_name(f), weight, 1, std::move(values), 1, weight / 2.0 + 0.25);
}

QExpansion parse_coefficients(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!doc.is_object()) throw ParseError("top level must be an object", 1);
    auto require = [&](const char* key) -> const json& {
        if (!doc.contains(key)) throw ParseError(std::string("missing field '") + key + "'", 1);
        return doc.at(key);
    };
    const json& w = require("weight");
    const json& l = require("level");
    const json& cs = require("coefficients");
    if (!w.is_number_integer()) throw ParseError("weight must be an integer", 1);
    if (!l.is_number_integer()) throw ParseError("level must be an integer", 1);
    if (!cs.is_array()) throw ParseError("coefficients must be an array", line_of_coefficient(text, 0));
    std::string label = doc.value("label", std::string("form"));
    std::optional<int> fricke;
    if (doc.contains("fricke") && !doc.at("fricke").is_null()) {
        if (!doc.at("fricke").is_number_integer()) throw ParseError("fricke must be +1 or -1", 1);
        fricke = doc.at("fricke").get<int>();
    }
    if (doc.contains("constant_term")) {
        Complex c0;
        try {
            c0 = parse_coefficient(doc.at("constant_term"));
        } catch (const std::exception& e) {
            throw ParseError(std::string("constant_term: ") + e.what(), 1);
        }
        if (c0 != Complex(0.0)) throw ValidationError("constant term c_0 must vanish (cusp condition)");
    }
    std::vector<Complex> values;
    values.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        try {
            values.push_back(parse_coefficient(cs[i]));
        } catch (const std::exception& e) {
            throw ParseError("coefficient " + std::to_string(i + 1) + ": " + e.what(), line_of_coefficient(text, i));
        }
    }
    std::optional<double> growth;
    if (doc.contains("growth_exponent")) growth = doc.at("growth_exponent").get<double>();
    return QExpansion::create(label, w.get<int>(), l.get<int>(), std::move(values), fricke, growth);
}

QExpansion load_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_coefficients(ss.str());
}

std::string coefficients_to_json(const QExpansion& f) {
    json doc;
    doc["label"] = f.label();
    doc["weight"] = f.weight();
    doc["level"] = f.level();
    if (f.fricke()) doc["fricke"] = *f.fricke();
    json arr = json::array();
    for (const Complex& c : f.coefficients()) {
        if (c.imag() == 0 && std::floor(c.real()) == c.real() && std::abs(c.real()) < 9.0e15) {
            arr.push_back(static_cast<long long>(c.real()));
        } else if (c.imag() == 0) {
            arr.push_back(c.real());
        } else {
            arr.push_back(json::array({c.real(), c.imag()}));
        }
    }
    doc["coefficients"] = arr;
    return doc.dump();
}

double power_exp_tail(double C, double M, double x, std::size_t m0) {
    double m = double(m0) + 1;
    if (m * x <= M) return kInf;
    double ratio = std::pow((m + 1) / m, M) * std::exp(-x);
    if (ratio >= 1) return kInf;
    return C * std::exp(M * std::log(m) - x * m) / (1 - ratio);
}

EvalResult evaluate_series(std::span<const Complex> coeffs, double growth_constant, double growth_exponent,
                           Complex z, double tol) {
    const double y = z.imag();
    if (!(y > 0)) throw DomainError("evaluate_series: Im z must be positive");
    const double x = kTwoPi * y;
    const Complex q = std::exp(Complex(0.0, kTwoPi) * z);
    Complex sum = 0, qm = 1;
    double abs_sum = 0;
    for (std::size_t m = 1; m <= coeffs.size(); ++m) {
        qm *= q;
        Complex t = coeffs[m - 1] * qm;
        sum += t;
        abs_sum += std::abs(t);
        double tail = power_exp_tail(growth_constant, growth_exponent, x, m);
        if (tail < tol) {
            return {sum, tail + 4e-16 * abs_sum, long(m)};
        }
    }
    double tail = power_exp_tail(growth_constant, growth_exponent, x, coeffs.size());
    throw EvaluationRegionError("evaluate_series: " + std::to_string(coeffs.size()) +
                                " coefficients do not reach tolerance at Im z = " + std::to_string(y) +
                                " (tail bound " + std::to_string(tail) + ")");
}

EvalResult evaluate_form(const QExpansion& f, Complex z, double tol) {
    if (!(z.imag() > 0)) throw DomainError("evaluate_form: Im z must be positive");
    if (!(tol > 0)) throw DomainError("evaluate_form: tol must be positive");
    Reduction r = reduce_point(f, z);
    double scale = std::abs(r.factor);
    if (scale == 0 || !std::isfinite(scale)) return {0.0, 0.0, 0};
    EvalResult e = evaluate_series(f.coefficients(), f.growth_constant(), f.growth_exponent(), r.point, tol / scale);
    return {r.factor * e.value, scale * e.err_abs, e.terms_used};
}

DirichletCharacter DirichletCharacter::conj() const {
    DirichletCharacter c = *this;
    for (Complex& v : c.values) v = std::conj(v);
    return c;
}

DirichletCharacter DirichletCharacter::legendre(int p) {
    if (!is_prime(p) || p == 2) throw DomainError("legendre: modulus must be an odd prime");
    DirichletCharacter chi;
    chi.modulus = p;
    chi.values.assign(std::size_t(p), Complex(-1.0));
    chi.values[0] = 0.0;
    for (long a = 1; a < p; ++a) chi.values[std::size_t(a * a % p)] = 1.0;
    return chi;
}

DirichletCharacter DirichletCharacter::power_residue(int p, int r) {
    if (!is_prime(p)) throw DomainError("power_residue: modulus must be prime");
    int g = 2;
    for (; g < p; ++g) {
        long x = 1;
        int order = 0;
        do {
            x = x * g % p;
            ++order;
        } while (x != 1);
        if (order == p - 1) break;
    }
    if (p == 2) g = 1;
    DirichletCharacter chi;
    chi.modulus = p;
    chi.values.assign(std::size_t(p), Complex(0.0));
    long x = 1;
    for (int e = 0; e < p - 1; ++e) {
        chi.values[std::size_t(x)] = std::exp(Complex(0.0, kTwoPi * double(r) * e / double(p - 1)));
        x = x * g % p;
    }
    return chi;
}

EvalResult twist_pointwise(const QExpansion& f, const DirichletCharacter& chi, Complex z, double tol) {
    if (!(z.imag() > 0)) throw DomainError("twist_pointwise: Im z must be positive");
    const int M = chi.modulus;
    EvalResult out;
    for (int m = 1; m <= M; ++m) {
        Complex c = chi(m);
        if (c == Complex(0.0)) continue;
        EvalResult e = evaluate_form(f, (z + double(m)) / double(M), tol / M);
        out.value += c * e.value;
        out.err_abs += std::abs(c) * e.err_abs;
        out.terms_used += e.terms_used;
    }
    return out;
}

CuspFunction as_cusp_function(const QExpansion& f, double tol) {
    CuspFunction g;
    g.label = f.label();
    g.weight = f.weight();
    g.decay = f.decay();
    g.eval = [f, tol](Complex z) { return evaluate_form(f, z, tol); };
    return g;
}

CuspFunction twisted_cusp_function(const QExpansion& f, const DirichletCharacter& chi, double tol) {
    CuspFunction g;
    g.label = f.label() + "^chi";
    g.weight = f.weight();
    const CuspDecay base = f.decay();
    const double M = chi.modulus;
    double chi_mass = 0;
    for (int m = 1; m <= chi.modulus; ++m) chi_mass += std::abs(chi(m));
    CuspDecay d;
    d.weight = f.weight();
    d.inf_rate = kTwoPi / M;
    d.inf_const = base.inf_const * chi_mass;
    d.inf_valid_from = M;
    // Near 0 the twist behaves like (it)^{-k} times the conjugate twist at i/t.
    d.has_zero = true;
    d.zero_rate = kTwoPi / M;
    d.zero_const = base.inf_const * chi_mass;
    d.zero_valid_below = 1.0 / M;
    g.decay = d;
    g.eval = [f, chi, tol](Complex z) { return twist_pointwise(f, chi, z, tol); };
    return g;
}

CuspFunction unit_function() {
    CuspFunction g;
    g.label = "1";
    g.weight = 0;
    g.eval = [](Complex) { return EvalResult{Complex(1.0), 0.0, 0}; };
    return g;
}

EvalResult slash_action(const std::function<EvalResult(Complex)>& g, double k, const Mat2& gamma, Complex z) {
    const double det = gamma.det();
    if (!(det > 0)) throw DomainError("slash_action: determinant must be positive");
    Complex j = gamma.c * z + gamma.d;
    if (j == Complex(0.0)) throw DomainError("slash_action: cz + d = 0");
    Complex w = gamma.apply(z);
    if (!(w.imag() > 0)) throw DomainError("slash_action: gamma z outside the upper half-plane");
    Complex factor = std::pow(det, k / 2) * branch_pow(j, -k);
    EvalResult e = g(w);
    return {factor * e.value, std::abs(factor) * e.err_abs, e.terms_used};
}

CuspFunction slashed(const CuspFunction& g, double k, const Mat2& gamma, bool level_one_invariant) {
    CuspFunction h;
    h.label = g.label + "|" + std::to_string(int(k));
    h.weight = g.weight;
    if (level_one_invariant) {
        h.decay = g.decay;
    } else {
        h.decay.weight = g.weight;
        h.decay.inf_const = kInf;
    }
    auto inner = g.eval;
    h.eval = [inner, k, gamma](Complex z) { return slash_action(inner, k, gamma, z); };
    return h;
}

}  // namespace itpl
