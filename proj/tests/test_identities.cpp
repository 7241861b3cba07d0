#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "itpl/error.hpp"
#include "itpl/identities.hpp"

using namespace itpl;

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

std::vector<std::vector<int>> tuples(const std::vector<JIndexSet>& v) {
    std::vector<std::vector<int>> out;
    for (const JIndexSet& j : v) out.push_back(j.j);
    return out;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

// All alpha vectors of length n with entries >= 1 and sum <= total.
void alpha_vectors(std::size_t n, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (cur.size() == n) {
        out.push_back(cur);
        return;
    }
    int used = 0;
    for (int a : cur) used += a;
    for (int a = 1; used + a + int(n - cur.size() - 1) <= total; ++a) {
        cur.push_back(a);
        alpha_vectors(n, total, cur, out);
        cur.pop_back();
    }
}

}  // namespace

TEST_CASE("index enumeration") {
    using V = std::vector<std::vector<int>>;
    CHECK(tuples(enumerate_j_indices(std::vector<int>{2}, JMode::chained)) == V{{0}, {1}});
    CHECK(tuples(enumerate_j_indices(std::vector<int>{1, 2}, JMode::chained)) == V{{0, 0}, {0, 1}, {1, 1}});
    CHECK(enumerate_j_indices(std::vector<int>{2, 3}, JMode::plain).size() == 6);
    CHECK(tuples(enumerate_j_indices(std::vector<int>{}, JMode::plain)) == V{{}});
    for (int a = 1; a <= 6; ++a) CHECK(enumerate_j_indices(std::vector<int>{a}, JMode::chained).size() == std::size_t(a));
    // Every chained tuple satisfies its constraint and the list is sorted.
    auto all = enumerate_j_indices(std::vector<int>{2, 1, 3}, JMode::chained);
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& j = all[i].j;
        CHECK(j[2] < 3);
        CHECK(j[1] < 1 + j[2]);
        CHECK(j[0] < 2 + j[1]);
        if (i > 0) CHECK(all[i - 1].j < j);
    }
    CHECK_THROWS_AS(enumerate_j_indices(std::vector<int>{0}, JMode::plain), DomainError);
}

TEST_CASE("weight link and its inverse") {
    CHECK(weight_link(std::vector<int>{11}).weights == std::vector<int>{12});
    CHECK(weight_link(std::vector<int>{11, 11}).weights == std::vector<int>{22, 12});
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<std::vector<int>> vs;
        std::vector<int> cur;
        alpha_vectors(n, 5 * int(n), cur, vs);
        for (const auto& a : vs) {
            if (*std::max_element(a.begin(), a.end()) > 5) continue;
            REQUIRE(alphas_from_weights(weight_link(a).weights) == a);
        }
    }
}

TEST_CASE("Gamma-binomial identity") {
    const Complex s(3.7, 0.4);
    CHECK(std::abs(gamma_binomial_identity_residual(s, std::vector<int>{2}, {{1}, JMode::chained})) <=
          1e-12 * std::abs(gamma_complex(s + 1.0)));
    CHECK(gamma_binomial_identity_residual(s, std::vector<int>{2, 3}, {{0, 0}, JMode::chained}) == Complex(0.0));
    CHECK(std::abs(gamma_binomial_identity_residual(5.0, std::vector<int>{2, 2}, {{1, 1}, JMode::chained})) <=
          1e-12 * std::abs(gamma_complex(6.0)));
    CHECK_THROWS_AS(gamma_binomial_identity_residual(-2.0, std::vector<int>{2}, {{0}, JMode::chained}), PoleError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> re(0.5, 6.0), im(-3.0, 3.0);
    for (std::size_t n = 1; n <= 3; ++n) {
        std::vector<std::vector<int>> vs;
        std::vector<int> cur;
        alpha_vectors(n, 7, cur, vs);  // alpha_1 >= 1 leaves sum(alpha_2..) <= 7
        for (const auto& a : vs) {
            for (int trial = 0; trial < 5; ++trial) {
                const Complex s(re(rng), im(rng));
                for (const JIndexSet& j : enumerate_j_indices(a, JMode::chained)) {
                    Complex scale = gamma_factor(s + double(j.j[0]), shifted_alphas(a, j.j));
                    REQUIRE(std::abs(gamma_binomial_identity_residual(s, a, j)) <= 1e-11 * std::abs(scale) * 64);
                }
            }
        }
    }
}

TEST_CASE("FF expansions are mutually inverse integer maps") {
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<std::vector<int>> vs;
        std::vector<int> cur;
        alpha_vectors(n, 7, cur, vs);
        for (const auto& a : vs) {
            FormalCombination id{{{a, 0}, 1}};
            REQUIRE(compose_ff(FFDirection::FF1, FFDirection::FF2, a) == id);
            REQUIRE(compose_ff(FFDirection::FF2, FFDirection::FF1, a) == id);
        }
    }
    // n = 2, alpha_2 = 2: F(2) = Ftilde(2) + z Ftilde(1).
    auto t = ff_expansion(FFDirection::FF1, std::vector<int>{2});
    REQUIRE(t.size() == 2);
    CHECK((t[0].alphas == std::vector<int>{2} && t[0].power == 0 && t[0].coefficient == 1));
    CHECK((t[1].alphas == std::vector<int>{1} && t[1].power == 1 && t[1].coefficient == 1));
}

TEST_CASE("binomial expansion of the kernel") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Complex z(u(rng), u(rng)), z2(u(rng), u(rng));
        for (int a2 : {1, 2, 4}) {
            for (int j3 : {0, 1, 3}) {
                const int e = a2 + j3 - 1;
                Complex sum = 0;
                double mass = 0;
                for (int j2 = 0; j2 <= e; ++j2) {
                    Complex t = double(binomial_int(e, j2)) * int_pow(z2 - z, e - j2) * int_pow(z, j2);
                    sum += t;
                    mass += std::abs(t);
                }
                REQUIRE(std::abs(sum - int_pow(z2, e)) <= 1e-13 * std::max(1.0, mass));
            }
        }
    }
}

TEST_CASE("FF combinations against direct quadrature") {
    VerticalPathSpec path;
    std::vector<CuspFunction> one{delta()}, two{delta(), delta()};
    const Complex z = I;
    const Endpoint a = Endpoint::point(2.0 * I);
    EvalResult f1 = prop_ff_combination(FFDirection::FF1, z, a, std::vector<int>{}, one, path);
    EvalResult f2 = prop_ff_combination(FFDirection::FF2, z, a, std::vector<int>{}, one, path);
    Complex dz = delta().eval(z).value;
    CHECK(std::abs(f1.value - dz) <= 1e-15 * std::abs(dz));
    CHECK(std::abs(f2.value - dz) <= 1e-15 * std::abs(dz));

    const std::vector<int> al{2};
    IteratedSpec spec{a, {2.0}, two};
    EvalResult F = F_eval(spec, z, path), Ft = tilde_F_eval(spec, z, path);
    EvalResult c1 = prop_ff_combination(FFDirection::FF1, z, a, al, two, path);
    EvalResult c2 = prop_ff_combination(FFDirection::FF2, z, a, al, two, path);
    CHECK(rel(c1.value, F.value) <= 1e-9);
    CHECK(rel(c2.value, Ft.value) <= 1e-9);

    // n = 3 from i infinity at a point off the axis.
    std::vector<CuspFunction> three{delta(), delta_e4(), delta()};
    const Complex w(0.3, 0.9);
    IteratedSpec s3{Endpoint::infinity(), {1.0, 2.0}, three};
    EvalResult F3 = F_eval(s3, w, path);
    EvalResult c3 = prop_ff_combination(FFDirection::FF1, w, Endpoint::infinity(), std::vector<int>{1, 2}, three, path);
    CHECK(std::abs(c3.value - F3.value) <= 1e-8 * std::abs(F3.value) + c3.err_abs + F3.err_abs);
}

TEST_CASE("period identities: direction (i)") {
    VerticalPathSpec path;
    std::vector<QExpansion> q2{delta_q(), delta_q()};
    std::vector<CuspFunction> f2{delta(), delta()};
    auto L = l_value_evaluator(q2, path);
    auto P = period_evaluator(f2, path);

    // n = 1: I^0(s; f) = -Gamma(s) L(f, s).
    std::vector<QExpansion> q1{delta_q()};
    std::vector<CuspFunction> f1{delta()};
    for (Complex s : {Complex(6.0), Complex(8.5, 1.0)}) {
        EvalResult r = theorem1_rhs(TheoremDirection::i, s, std::vector<int>{}, l_value_evaluator(q1, path));
        EvalResult direct = period_evaluator(f1, path)(s, std::vector<int>{});
        Complex classic = -gamma_complex(s) * classical_L(delta_q(), s, 1e-14).value;
        CHECK(rel(r.value, classic) <= 1e-9);
        CHECK(rel(direct.value, classic) <= 1e-9);
    }

    // alpha_2 = 1 has the single term Gamma^{(s,1)} L(s, 1).
    int calls = 0;
    ShiftedEvaluator counting = [&](Complex, std::span<const int> al) {
        ++calls;
        CHECK(al[0] == 1);
        return EvalResult{1.0, 0.0, 0};
    };
    EvalResult one = theorem1_rhs(TheoremDirection::i, 16.0, std::vector<int>{1}, counting);
    CHECK(calls == 1);
    CHECK(rel(one.value, gamma_factor(16.0, std::vector<int>{1})) <= 1e-15);

    for (int a2 : {2, 3}) {
        const std::vector<int> al{a2};
        EvalResult rhs = theorem1_rhs(TheoremDirection::i, 16.0, al, L);
        EvalResult lhs = P(16.0, al);
        CHECK(rel(rhs.value, lhs.value) <= 1e-6);
        CHECK(std::abs(rhs.value - lhs.value) <= rhs.err_abs + lhs.err_abs);
    }
}

TEST_CASE("period identities: direction (ii) and the corollary") {
    VerticalPathSpec path;
    std::vector<QExpansion> q2{delta_q(), delta_q()};
    std::vector<CuspFunction> f2{delta(), delta()};
    auto L = l_value_evaluator(q2, path);
    auto P = period_evaluator(f2, path);
    for (int a2 : {1, 2, 3}) {
        const std::vector<int> al{a2};
        const Complex s(16.0, 0.5);
        EvalResult rhs = theorem1_rhs(TheoremDirection::ii, s, al, P);
        EvalResult series = multiple_L_series(LArgument{s, al, q2}, 1e-12);
        CHECK(rel(rhs.value, series.value) <= 1e-6);
        CHECK(std::abs(rhs.value - series.value) <= rhs.err_abs + series.err_abs);
    }
    // Corollary at (alpha_1, alpha_2) = (12, 1), both directions.
    const std::vector<int> a{12, 1};
    EvalResult Iv = P(12.0, std::vector<int>{1});
    EvalResult Lv = L(12.0, std::vector<int>{1});
    CHECK(rel(corollary_combination(TheoremDirection::i, a, L).value, Iv.value) <= 1e-6);
    CHECK(rel(corollary_combination(TheoremDirection::ii, a, P).value, Lv.value) <= 1e-6);
    // n = 1.
    std::vector<QExpansion> q1{delta_q()};
    EvalResult c = corollary_combination(TheoremDirection::i, std::vector<int>{11}, l_value_evaluator(q1, path));
    CHECK(rel(c.value, -gamma_complex(11.0) * classical_L(delta_q(), 11.0, 1e-14).value) <= 1e-9);
    CHECK_THROWS_AS(corollary_combination(TheoremDirection::i, std::vector<int>{}, L), DomainError);
}

TEST_CASE("composing the two directions is the identity on value vectors") {
    // Direction (i) applied to values produced by direction (ii) returns the input values.
    // With arbitrary I-values keyed by (s, alphas) this checks the coefficient algebra alone.
    auto fake_I = [](Complex s, std::span<const int> al) {
        Complex v = std::exp(0.1 * s);
        for (std::size_t r = 0; r < al.size(); ++r) v *= std::cos(1.0 + double(al[r]) * double(r + 2));
        return EvalResult{v, 0.0, 0};
    };
    ShiftedEvaluator fake_L = [&](Complex s, std::span<const int> al) {
        return theorem1_rhs(TheoremDirection::ii, s, al, fake_I);
    };
    for (const auto& al : {std::vector<int>{1}, std::vector<int>{3}, std::vector<int>{2, 2}, std::vector<int>{1, 3}}) {
        const Complex s(2.5, 0.7);
        EvalResult back = theorem1_rhs(TheoremDirection::i, s, al, fake_L);
        CHECK(rel(back.value, fake_I(s, al).value) <= 1e-12);
    }
}

TEST_CASE("slash action") {
    const CuspFunction& d = delta();
    const Complex z(0.23, 0.71);
    CHECK(slash_action(d.eval, 12, Mat2{}, z).value == d.eval(z).value);
    CHECK(rel(slash_action(d.eval, 12, Mat2::S(), I).value, d.eval(I).value) <= 1e-13);
    CHECK(rel(slash_action(d.eval, 12, Mat2::S(), z).value, d.eval(z).value) <= 1e-10);
    CHECK(rel(slash_action(d.eval, 12, Mat2{1, 1, 0, 1}, z).value, d.eval(z).value) <= 1e-10);
}

TEST_CASE("modularity of the tilde integrals") {
    VerticalPathSpec path;
    std::vector<CuspFunction> f1{delta()};
    // (F_1) holds by construction.
    EvalResult f = modularity_residual(ModularityKind::F_n, Mat2::S(), Endpoint::infinity(), 2.0 * I,
                                       std::vector<int>{11}, f1, true, path);
    CHECK(f.value == Complex(0.0));
    // (I_1) with a = i infinity, gamma = S: base point moves to 0.
    EvalResult r = modularity_residual(ModularityKind::I_n, Mat2::S(), Endpoint::infinity(), 2.0 * I,
                                       std::vector<int>{11}, f1, true, path);
    Complex scale = tilde_I_direct({Endpoint::infinity(), {11.0}, f1}, Endpoint::point(0.5 * I), path).value;
    CHECK(std::abs(r.value) <= 1e-7 * std::abs(scale));
    // Weight-matched n = 2: alpha = (5, 11) gives k = (16, 12).
    std::vector<CuspFunction> f2{delta_e4(), delta()};
    const std::vector<int> a2{5, 11};
    REQUIRE(weight_link(a2).weights == std::vector<int>{16, 12});
    const Endpoint base = Endpoint::point(Complex(0.2, 1.3));
    const Complex w(-0.3, 0.8);
    const Complex sI = tilde_I_direct({base, {5.0, 11.0}, f2}, Endpoint::point(w), path).value;
    const Complex sF = tilde_F_eval({base, {11.0}, f2}, w, path).value;
    EvalResult mI = modularity_residual(ModularityKind::I_n, Mat2::S(), base, w, a2, f2, true, path);
    EvalResult mF = modularity_residual(ModularityKind::F_n, Mat2::S(), base, w, a2, f2, true, path);
    CHECK(std::abs(mI.value) <= 1e-6 * std::abs(sI));
    CHECK(std::abs(mF.value) <= 1e-6 * std::abs(sF));
    // gamma = T keeps the base point at i infinity.
    EvalResult t = modularity_residual(ModularityKind::I_n, Mat2{1, 1, 0, 1}, Endpoint::infinity(), Complex(0.1, 0.7),
                                       std::vector<int>{1, 11}, std::vector<CuspFunction>{delta(), delta()}, true, path);
    CHECK(std::abs(t.value) <= 1e-12 + t.err_abs);
    CHECK_THROWS_AS(modularity_residual(ModularityKind::I_n, Mat2{1, 0, 1, 1}, Endpoint::infinity(), I,
                                        std::vector<int>{11}, f1, true, path),
                    DomainError);
}

TEST_CASE("Mellin transform of a black box") {
    VerticalPathSpec path;
    EvalResult l6 = lambda_transform(delta(), 6.0, path);
    CHECK(rel(l6.value, -gamma_complex(6.0) * classical_L(delta_q(), 6.0, 1e-14).value) <= 1e-9);
    CuspFunction zero{"0", 12, [](Complex) { return EvalResult{}; }, delta().decay};
    CHECK(lambda_transform(zero, 3.0, path).value == Complex(0.0));
    // Lambda(s, f|w_N) = (-1)^{s-alpha} N^{alpha/2-s} Lambda(alpha-s, f), level 1 and level 11.
    for (Complex s : {Complex(6.0), Complex(4.0, 1.5)}) {
        CuspFunction hat = slashed(delta(), 12, Mat2::S(), true);
        EvalResult lhs = lambda_transform(hat, s, path);
        EvalResult rhs = lambda_transform(delta(), 12.0 - s, path);
        Complex expect = minus_one_pow(s - 12.0) * rhs.value;
        CHECK(std::abs(lhs.value - expect) <= 1e-8 * std::abs(expect));
    }
    QExpansion f11 = load_coefficients(std::string(ITPL_DATA_DIR) + "/level11_eta.json");
    CuspFunction g = as_cusp_function(f11, 1e-20);
    CuspFunction hat = g;
    hat.eval = [g](Complex z) { return slash_action(g.eval, 2, Mat2::fricke(11), z); };
    // Decay at 0 is exp(-2 pi / (11 t)), so the cut-off near 0 shrinks with the level.
    VerticalPathSpec p11 = path;
    p11.eps = path.eps / 11;
    const Complex s(0.8, 0.4);
    EvalResult lhs = lambda_transform(hat, s, p11);
    EvalResult rhs = lambda_transform(g, 2.0 - s, p11);
    INFO(lhs.err_abs, " ", rhs.err_abs);
    Complex expect = minus_one_pow(s - 2.0) * std::exp((1.0 - s) * std::log(11.0)) * rhs.value;
    CHECK(std::abs(lhs.value - expect) <= 1e-8 * std::abs(expect));
}

TEST_CASE("Fricke functional equation") {
    VerticalPathSpec path;
    std::vector<QExpansion> f1{delta_q()};
    const std::vector<int> a{11};
    EvalResult r = functional_equation_residual(a, f1, 1, 3.0, path);
    RegularizedMellin ref = regularized_tilde_mellin(a, std::vector<CuspFunction>{delta()}, I, 3.0, path);
    CHECK(std::abs(r.value) <= 1e-7 * std::abs(ref.lambda->value));
    // Symmetry centre s = -5 is a pole of Lambda; the entire normalisation is compared.
    EvalResult c = functional_equation_residual(a, f1, 1, -5.0, path);
    CHECK(std::abs(c.value) <= c.err_abs + 1e-12);
    // Off the real axis.
    EvalResult z = functional_equation_residual(a, f1, 1, Complex(-2.0, 1.0), path);
    CHECK(std::abs(z.value) <= z.err_abs + 1e-9);
    // Level 11, weight 2: alpha_1 = 1.
    QExpansion f11 = load_coefficients(std::string(ITPL_DATA_DIR) + "/level11_eta.json");
    EvalResult l11 = functional_equation_residual(std::vector<int>{1}, std::vector<QExpansion>{f11}, 11, 1.5, path);
    CHECK(std::abs(l11.value) <= l11.err_abs + 1e-9);
    // Errors.
    QExpansion bare = QExpansion::create("x", 12, 1, {1.0, -24.0});
    CHECK_THROWS_AS(functional_equation_residual(a, std::vector<QExpansion>{bare}, 1, 3.0, path), ConfigurationError);
    CHECK_THROWS_AS(functional_equation_residual(std::vector<int>{10}, f1, 1, 3.0, path), DomainError);
    CHECK_THROWS_AS(functional_equation_residual(a, f1, 11, 3.0, path), ConfigurationError);
}

TEST_CASE("Fricke functional equation, n = 2") {
    VerticalPathSpec path;
    path.tol = 1e-6;
    std::vector<QExpansion> f{delta_q(), delta_q()};
    EvalResult r = functional_equation_residual(std::vector<int>{1, 11}, f, 1, 2.0, path);
    CHECK(std::abs(r.value) <= r.err_abs + 1e-9);
}

TEST_CASE("twisted functional equation") {
    VerticalPathSpec path;
    QExpansion f11 = load_coefficients(std::string(ITPL_DATA_DIR) + "/level11_eta.json");
    std::vector<QExpansion> f{f11};
    const std::vector<int> a{1};
    std::vector<DirichletCharacter> chi{DirichletCharacter::power_residue(11, 1)};
    CHECK_THROWS_AS(twisted_residual(a, f, chi, 1.5, std::nullopt, path), ConfigurationError);
    EvalResult r = twisted_residual(a, f, chi, 1.5, I, path);
    CHECK(std::abs(r.value) <= 1e-5);
    // Trivial character mod 1 on level 1: the plain functional equation with sigma = S.
    std::vector<DirichletCharacter> triv{DirichletCharacter::trivial()};
    EvalResult t = twisted_residual(std::vector<int>{11}, std::vector<QExpansion>{delta_q()}, triv, 3.0, I, path);
    EvalResult fe = functional_equation_residual(std::vector<int>{11}, std::vector<QExpansion>{delta_q()}, 1, 3.0, path);
    CHECK(std::abs(t.value - fe.value) <= t.err_abs + fe.err_abs);
}
