#include "suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "itpl/error.hpp"
#include "itpl/identities.hpp"

namespace itpl::suites {

namespace {

const Complex I(0.0, 1.0);

const QExpansion& delta_q() {
    static const QExpansion d = builtin_form(BuiltinForm::Delta, 4000);
    return d;
}
const QExpansion& delta_e4_q() {
    static const QExpansion d = builtin_form(BuiltinForm::DeltaE4, 4000);
    return d;
}
const CuspFunction& delta() {
    static const CuspFunction d = as_cusp_function(delta_q(), 1e-30);
    return d;
}
const CuspFunction& delta_e4() {
    static const CuspFunction d = as_cusp_function(delta_e4_q(), 1e-30);
    return d;
}

class Recorder {
  public:
    Recorder(Outcome& out, const Options& opt) : out_(out), opt_(opt) {}

    double limit(double pinned) const { return opt_.threshold.value_or(pinned); }

    // |value - reference| / |reference| against the pinned threshold.
    void relative(std::string label, const EvalResult& value, const EvalResult& reference, double pinned) {
        const double r = std::abs(value.value - reference.value) / std::abs(reference.value);
        push({std::move(label), value.value, reference.value, value.err_abs + reference.err_abs, r, limit(pinned),
              false});
    }
    // |residual| / scale.
    void residual(std::string label, const EvalResult& res, double scale, double pinned) {
        push({std::move(label), res.value, scale, res.err_abs, std::abs(res.value) / scale, limit(pinned), false});
    }
    // Bound holds iff residual <= threshold; used for err_abs and error-bar comparisons.
    void bound(std::string label, Complex value, double residual, double threshold) {
        push({std::move(label), value, 0.0, 0.0, residual, threshold, false});
    }
    void exact(std::string label, bool ok) {
        push({std::move(label), ok ? 1.0 : 0.0, 1.0, 0.0, ok ? 0.0 : 1.0, 0.0, false});
    }
    void failure(std::string label, const std::exception& e) {
        push({std::move(label) + ": " + e.what(), 0.0, 0.0, 0.0, INFINITY, 0.0, false});
    }

  private:
    void push(Check c) {
        c.pass = std::isfinite(c.residual) && c.residual <= c.threshold;
        out_.checks.push_back(std::move(c));
    }
    Outcome& out_;
    const Options& opt_;
};

std::string fmt(Complex s) {
    char buf[64];
    if (s.imag() == 0) {
        std::snprintf(buf, sizeof buf, "%g", s.real());
    } else {
        std::snprintf(buf, sizeof buf, "%g%+gi", s.real(), s.imag());
    }
    return buf;
}

std::string fmt(std::span<const int> a) {
    std::string s = "(";
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
    return s + ")";
}

// All alpha vectors of length 1..max_len with entries >= 1 and sum <= total.
std::vector<std::vector<int>> alpha_vectors(int total, std::size_t max_len) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int left) {
        if (!cur.empty()) out.push_back(cur);
        if (cur.size() == max_len) return;
        for (int a = 1; a <= left; ++a) {
            cur.push_back(a);
            rec(left - a);
            cur.pop_back();
        }
    };
    rec(total);
    return out;
}

std::vector<QExpansion> dd() { return {delta_q(), delta_q()}; }

// Near the convergence bound (Re s = 15) the series needs a few thousand terms.
std::vector<QExpansion> dd_long() {
    static const QExpansion d = builtin_form(BuiltinForm::Delta, 16384);
    return {d, d};
}
std::vector<CuspFunction> DD() { return {delta(), delta()}; }

ShiftedEvaluator series_evaluator(std::vector<QExpansion> forms, double tol) {
    return [forms, tol](Complex s, std::span<const int> al) {
        return multiple_L_series(LArgument{s, {al.begin(), al.end()}, forms}, tol);
    };
}

// 1: classical Mellin transform.
void mellin(Recorder& rec, const Options& opt) {
    for (double s : {6.0, 8.5, 11.0}) {
        IteratedSpec spec{Endpoint::infinity(), {s}, {delta()}};
        EvalResult quad = iterated_I_direct(spec, Endpoint::zero(), opt.path);
        EvalResult L = classical_L(delta_q(), s, 1e-15);
        const Complex g = -gamma_complex(s);
        rec.relative("s=" + fmt(s), quad, {g * L.value, std::abs(g) * L.err_abs}, 1e-9);
    }
}

// 2: direction (i) with L-values from the Dirichlet series.
void theorem_i(Recorder& rec, Outcome& out, const Options& opt) {
    auto L = series_evaluator(dd_long(), 1e-11);
    auto P = period_evaluator(DD(), opt.path);
    for (int a2 : {1, 2, 3}) {
        for (double s : {15.0, 16.0, 18.0}) {
            const std::vector<int> al{a2};
            const std::string tag = "alpha2=" + std::to_string(a2) + " s=" + fmt(s);
            const auto start = std::chrono::steady_clock::now();
            rec.relative(tag, theorem1_rhs(TheoremDirection::i, s, al, L), P(s, al), 1e-6);
            out.slowest_instance = std::max(
                out.slowest_instance, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        }
    }
}

// 3: direction (ii) with periods from nested quadrature.
void theorem_ii(Recorder& rec, const Options& opt) {
    auto P = period_evaluator(DD(), opt.path);
    for (int a2 : {1, 2, 3}) {
        const std::vector<int> al{a2};
        for (double s : {15.0, 16.0, 18.0}) {
            rec.relative("series alpha2=" + std::to_string(a2) + " s=" + fmt(s),
                         theorem1_rhs(TheoremDirection::ii, s, al, P),
                         multiple_L_series(LArgument{s, al, dd_long()}, 1e-11), 1e-6);
        }
        rec.relative("continued alpha2=" + std::to_string(a2) + " s=2.5",
                     theorem1_rhs(TheoremDirection::ii, 2.5, al, P),
                     multiple_L_continued(LArgument{2.5, al, dd()}, opt.path), 1e-5);
    }
}

// 4: the corollary at alpha_1 = 12.
void corollary(Recorder& rec, const Options& opt) {
    auto L = l_value_evaluator(dd(), opt.path);
    auto P = period_evaluator(DD(), opt.path);
    for (int a2 : {1, 2, 3}) {
        const std::vector<int> a{12, a2}, inner{a2};
        rec.relative("(i) alpha=" + fmt(a), corollary_combination(TheoremDirection::i, a, L), P(12.0, inner), 1e-6);
        rec.relative("(ii) alpha=" + fmt(a), corollary_combination(TheoremDirection::ii, a, P), L(12.0, inner), 1e-6);
    }
}

// 5: FF1 / FF2 at random points and the exact inversion check.
void prop32(Recorder& rec, const Options& opt) {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> re(-0.5, 0.5), im(0.5, 1.5);
    for (int trial = 0; trial < 10; ++trial) {
        const Complex z(re(rng), im(rng)), a(re(rng), im(rng));
        const std::vector<int> al{1 + trial % 3};
        IteratedSpec spec{Endpoint::point(a), {double(al[0])}, DD()};
        const std::string tag = "alpha2=" + std::to_string(al[0]) + " z=" + fmt(z) + " a=" + fmt(a);
        rec.relative("FF1 " + tag, prop_ff_combination(FFDirection::FF1, z, Endpoint::point(a), al, DD(), opt.path),
                     F_eval(spec, z, opt.path), 1e-9);
        rec.relative("FF2 " + tag, prop_ff_combination(FFDirection::FF2, z, Endpoint::point(a), al, DD(), opt.path),
                     tilde_F_eval(spec, z, opt.path), 1e-9);
    }
    std::size_t count = 0;
    bool ok = true;
    for (const auto& a : alpha_vectors(8, 8)) {
        // Inner vectors alpha_2..alpha_n with sum <= 8 cover every full vector with sum <= 8.
        const std::span<const int> inner(a);
        FormalCombination id{{{a, 0}, 1}};
        ok = ok && compose_ff(FFDirection::FF1, FFDirection::FF2, inner) == id &&
             compose_ff(FFDirection::FF2, FFDirection::FF1, inner) == id;
        ++count;
    }
    rec.exact("integer inversion, " + std::to_string(count) + " alpha-vectors with sum <= 8", ok);
}

// 6: Fourier expansions against nested quadrature.
void prop33(Recorder& rec, const Options& opt) {
    std::mt19937_64 rng(opt.seed + 1);
    std::uniform_real_distribution<double> re(-1.0, 1.0), im(0.5, 1.5);
    const std::vector<QExpansion> q{delta_q(), delta_e4_q()};
    const std::vector<int> a1{11}, a2{1, 2}, f2{2};
    FourierSeries e1 = tilde_fourier_coeffs(TildeKind::I_tilde, a1, std::span(q).first(1), 120);
    FourierSeries it = tilde_fourier_coeffs(TildeKind::I_tilde, a2, q, 120);
    FourierSeries ft = tilde_fourier_coeffs(TildeKind::F_tilde, f2, q, 120);
    IteratedSpec s1{Endpoint::infinity(), {11.0}, {delta()}};
    IteratedSpec s2{Endpoint::infinity(), {1.0, 2.0}, {delta(), delta_e4()}};
    IteratedSpec sf{Endpoint::infinity(), {2.0}, {delta(), delta_e4()}};
    for (int trial = 0; trial < 20; ++trial) {
        const Complex z(re(rng), im(rng));
        const std::string tag = " z=" + fmt(z);
        rec.relative("Itilde n=1" + tag, evaluate_fourier(e1, z, 1e-40), tilde_I_direct(s1, Endpoint::point(z), opt.path),
                     1e-9);
        rec.relative("Itilde n=2" + tag, evaluate_fourier(it, z, 1e-40), tilde_I_direct(s2, Endpoint::point(z), opt.path),
                     1e-9);
        EvalResult F = tilde_F_eval(sf, z, opt.path);
        rec.relative("Ftilde n=2" + tag, evaluate_fourier(ft, z, 1e-40), F, 1e-9);
        EvalResult F1 = tilde_F_eval(sf, z + 1.0, opt.path);
        rec.bound("period |Ftilde(z+1)-Ftilde(z)| <= err" + tag, F1.value - F.value, std::abs(F1.value - F.value),
                  F1.err_abs + F.err_abs);
    }
}

// 7: continuation outside the convergence region.
void prop34(Recorder& rec, const Options& opt) {
    for (int a2 : {1, 2}) {
        const std::vector<int> al{a2};
        for (double s : {16.0, 2.5, 0.5, -1.5}) {
            EvalResult c = multiple_L_continued(LArgument{s, al, dd()}, opt.path);
            const std::string tag = "alpha2=" + std::to_string(a2) + " s=" + fmt(s);
            const bool finite = std::isfinite(c.value.real()) && std::isfinite(c.value.imag());
            rec.bound("err_abs " + tag, c.value, finite ? c.err_abs : INFINITY, rec.limit(1e-5));
            if (s == 16.0) rec.relative("overlap " + tag, c, multiple_L_series(LArgument{s, al, dd()}, 1e-12), 1e-8);
        }
    }
}

// 8: Gamma-binomial lemma.
void gamma_lemma(Recorder& rec, const Options& opt) {
    std::mt19937_64 rng(opt.seed + 2);
    std::uniform_real_distribution<double> re(0.5, 6.0), im(-3.0, 3.0);
    const auto vectors = alpha_vectors(8, 8);
    for (int trial = 0; trial < 5; ++trial) {
        const Complex s(re(rng), im(rng));
        double worst = 0;
        std::size_t terms = 0;
        for (const auto& a : vectors) {
            if (a.size() < 2) continue;
            const std::span<const int> inner = std::span<const int>(a).subspan(1);
            for (const JIndexSet& j : enumerate_j_indices(inner, JMode::chained)) {
                double coef = 1;
                for (std::size_t r = 0; r < j.j.size(); ++r) {
                    const int next = r + 1 < j.j.size() ? j.j[r + 1] : 0;
                    coef *= double(binomial_int(inner[r] + next - 1, j.j[r]));
                }
                const double lhs = coef * std::abs(gamma_factor(s + double(j.j[0]), shifted_alphas(inner, j.j)));
                worst = std::max(worst, std::abs(gamma_binomial_identity_residual(s, inner, j)) / lhs);
                ++terms;
            }
        }
        rec.bound("s=" + fmt(s) + ", " + std::to_string(terms) + " index tuples (worst relative)", s, worst,
                  rec.limit(1e-11));
    }
}

// 9: alternative expression as a word of one-forms.
void prop41(Recorder& rec, const Options& opt) {
    const Endpoint base = Endpoint::point(Complex(0.2, 1.5));
    const Complex z(-0.3, 0.8);
    for (const auto& a : alpha_vectors(4, 3)) {
        std::vector<CuspFunction> f;
        for (std::size_t r = 0; r < a.size(); ++r) f.push_back(r % 2 ? delta_e4() : delta());
        IteratedSpec spec{base, {a.begin(), a.end()}, f};
        rec.relative("alpha=" + fmt(a), alternative_iterated_I(spec, z, opt.path),
                     tilde_I_direct(spec, Endpoint::point(z), opt.path), 1e-8);
    }
}

// 10: modularity under S on weight-matched instances.
void modularity(Recorder& rec, const Options& opt) {
    struct Instance {
        std::vector<int> alphas;
        std::vector<CuspFunction> forms;
        Endpoint a;
        Complex z;
    };
    const Endpoint p = Endpoint::point(Complex(0.2, 1.3));
    const std::vector<Instance> cases{
        {{11}, {delta()}, Endpoint::infinity(), 2.0 * I},
        {{11}, {delta()}, p, Complex(-0.3, 0.8)},
        {{1, 11}, DD(), Endpoint::infinity(), Complex(0.1, 1.1)},
        {{1, 11}, DD(), p, Complex(-0.3, 0.8)},
        {{5, 11}, {delta_e4(), delta()}, p, Complex(-0.3, 0.8)},
    };
    const Mat2 S = Mat2::S();
    for (const Instance& c : cases) {
        // With f_r | S = f_r the right-hand side is the integral from S^{-1} a with the same forms.
        const Endpoint b = c.a.kind == Endpoint::Kind::Infinity ? Endpoint::zero()
                                                                : Endpoint::point(S.inverse().apply(c.a.z));
        const std::string tag = "alpha=" + fmt(c.alphas) + " a=" + (c.a.kind == Endpoint::Kind::Infinity ? "i inf" : fmt(c.a.z)) +
                                " z=" + fmt(c.z);
        EvalResult rI = modularity_residual(ModularityKind::I_n, S, c.a, c.z, c.alphas, c.forms, true, opt.path);
        std::vector<Complex> ex(c.alphas.begin(), c.alphas.end());
        const double sI = std::abs(tilde_I_direct({b, ex, c.forms}, Endpoint::point(c.z), opt.path).value);
        rec.residual("I_n " + tag, rI, sI, 1e-6);
        EvalResult rF = modularity_residual(ModularityKind::F_n, S, c.a, c.z, c.alphas, c.forms, true, opt.path);
        ex.erase(ex.begin());
        const double sF = std::abs(tilde_F_eval({b, ex, c.forms}, c.z, opt.path).value);
        rec.residual("F_n " + tag, rF, sF, 1e-6);
    }
}

// 11: Fricke functional equation, n = 1, level 1.
void functional_eq(Recorder& rec, const Options& opt) {
    const std::vector<int> a{11};
    const std::vector<QExpansion> f{delta_q()};
    const std::vector<CuspFunction> g{delta()};
    for (double s : {2.0, 3.0, 5.0}) {
        RegularizedMellin scale = regularized_tilde_mellin(a, g, I, s, opt.path);
        rec.residual("s=" + fmt(s), functional_equation_residual(a, f, 1, s, opt.path), std::abs(scale.lambda->value),
                     1e-7);
    }
    RegularizedMellin centre = regularized_tilde_mellin(a, g, I, -5.0, opt.path);
    rec.exact("s=-5 is a pole of Lambda", !centre.lambda.has_value());
    rec.residual("symmetry centre s=-5, entire normalisation", functional_equation_residual(a, f, 1, -5.0, opt.path),
                 std::abs(centre.lambda_entire.value), 1e-7);
}

// 12: twisted functional equation on level-11 data.
void twisted(Recorder& rec, Outcome& out, const Options& opt) {
    const std::string file = opt.twisted_file.value_or(opt.data_dir + "/level11_eta.json");
    if (!std::filesystem::exists(file)) {
        out.skipped = true;
        out.note = "data file absent: " + file;
        return;
    }
    if (!opt.base_point) throw ConfigurationError("twisted: the base point must be given");
    const QExpansion f = load_coefficients(file);
    const std::vector<QExpansion> forms{f};
    const std::vector<int> a{f.weight() - 1};
    const std::vector<DirichletCharacter> chi{DirichletCharacter::power_residue(11, 1)};
    const double s = 1.5;
    out.note = "base point " + fmt(*opt.base_point) + ", character of order 10 mod 11";
    EvalResult r = twisted_residual(a, forms, chi, s, opt.base_point, opt.path);
    VerticalPathSpec p = opt.path;
    p.T *= 11;
    p.eps /= 11;
    const std::vector<CuspFunction> g{twisted_cusp_function(f, chi[0], 1e-30)};
    RegularizedMellin scale = regularized_tilde_mellin(a, g, *opt.base_point, s, p);
    rec.residual("s=" + fmt(s), r, std::abs(scale.lambda->value), 1e-4);
}

const char* title(int k) {
    static const char* t[] = {"",
                              "classical Mellin transform",
                              "periods from L-values, n = 2",
                              "L-values from periods, n = 2",
                              "corollary at alpha_1 = 12",
                              "FF1/FF2 expansions",
                              "Fourier expansions of Itilde, Ftilde",
                              "analytic continuation",
                              "Gamma-binomial lemma",
                              "alternative expression",
                              "modularity under S",
                              "Fricke functional equation",
                              "twisted functional equation"};
    return t[k];
}

}  // namespace

bool Outcome::pass() const {
    if (skipped) return true;
    if (checks.empty()) return false;
    if (time_limit > 0 && seconds > time_limit) return false;
    if (instance_limit > 0 && slowest_instance > instance_limit) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Outcome run_criterion(int k, const Options& opt) {
    if (k < 1 || k > kCriteria) throw ConfigurationError("unknown criterion " + std::to_string(k));
    Outcome out;
    out.criterion = k;
    out.title = title(k);
    Recorder rec(out, opt);
    const auto start = std::chrono::steady_clock::now();
    try {
        switch (k) {
            case 1: out.time_limit = 5; mellin(rec, opt); break;
            case 2: out.instance_limit = 120; theorem_i(rec, out, opt); break;
            case 3: theorem_ii(rec, opt); break;
            case 4: corollary(rec, opt); break;
            case 5: out.time_limit = 60; prop32(rec, opt); break;
            case 6: prop33(rec, opt); break;
            case 7: prop34(rec, opt); break;
            case 8: gamma_lemma(rec, opt); break;
            case 9: out.time_limit = 120; prop41(rec, opt); break;
            case 10: modularity(rec, opt); break;
            case 11: functional_eq(rec, opt); break;
            case 12: twisted(rec, out, opt); break;
        }
    } catch (const ConfigurationError&) {
        throw;
    } catch (const std::exception& e) {
        rec.failure("error", e);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "mellin") return {1};
    if (suite == "theorem1") return {2, 3, 8};
    if (suite == "corollary") return {4};
    if (suite == "prop32") return {5};
    if (suite == "prop33") return {6};
    if (suite == "prop34") return {7};
    if (suite == "prop41") return {9};
    if (suite == "modularity") return {10};
    if (suite == "functional_eq") return {11};
    if (suite == "twisted") return {12};
    if (suite == "all") {
        std::vector<int> v(kCriteria);
        for (int i = 0; i < kCriteria; ++i) v[i] = i + 1;
        return v;
    }
    throw ConfigurationError("unknown suite '" + suite + "'");
}

}  // namespace itpl::suites
