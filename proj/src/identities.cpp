#include "itpl/identities.hpp"

#include <algorithm>
#include <cmath>

#include "itpl/error.hpp"

namespace itpl {

namespace {

// Absolute tolerance for pointwise form values inside the quadratures.
constexpr double kFormTol = 1e-30;

void check_alphas(std::span<const int> alphas, const char* who) {
    for (int a : alphas) {
        if (a < 1) throw DomainError(std::string(who) + ": alphas must be positive integers");
    }
}

double sign_of(int j) { return (j % 2 == 0) ? 1.0 : -1.0; }

// Coefficient of the index tuple in the finite Fourier expansion FF1 / FF2.
std::int64_t ff_coefficient(FFDirection dir, std::span<const int> alphas, std::span<const int> j) {
    std::int64_t c = 1;
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (dir == FFDirection::FF1) {
            const int next = (r + 1 < j.size()) ? j[r + 1] : 0;
            c *= binomial_int(alphas[r] + next - 1, j[r]);
        } else {
            c *= binomial_int(alphas[r] - 1, j[r]) * ((j[r] % 2 == 0) ? 1 : -1);
        }
    }
    return c;
}

JMode ff_mode(FFDirection dir) { return dir == FFDirection::FF1 ? JMode::chained : JMode::plain; }

EvalResult scaled(const EvalResult& r, Complex factor) {
    return {r.value * factor, r.err_abs * std::abs(factor), r.terms_used};
}

void accumulate(EvalResult& acc, const EvalResult& term, Complex coef) {
    acc.value += coef * term.value;
    acc.err_abs += std::abs(coef) * term.err_abs;
    acc.terms_used += term.terms_used;
}

// gamma^{-1} applied to a cusp or point.
Endpoint pull_back(const Mat2& gamma, const Endpoint& a) {
    const Mat2 g = gamma.inverse();
    auto cusp = [](double num, double den) {
        if (den == 0) return Endpoint::infinity();
        if (num == 0) return Endpoint::zero();
        throw DomainError("modularity_residual: gamma^{-1} a is a cusp other than 0 and i infinity");
    };
    switch (a.kind) {
        case Endpoint::Kind::Infinity: return cusp(g.a, g.c);
        case Endpoint::Kind::Zero: return cusp(g.b, g.d);
        case Endpoint::Kind::Point: break;
    }
    return Endpoint::point(g.apply(a.z));
}

std::vector<Complex> as_exponents(std::span<const int> alphas) { return {alphas.begin(), alphas.end()}; }

}  // namespace

std::vector<JIndexSet> enumerate_j_indices(std::span<const int> alphas, JMode mode) {
    check_alphas(alphas, "enumerate_j_indices");
    const std::size_t n = alphas.size();
    std::vector<std::vector<int>> partial{{}};  // suffixes (j_r, ..., j_n)
    for (std::size_t r = n; r-- > 0;) {
        std::vector<std::vector<int>> next;
        for (const auto& suffix : partial) {
            const int above = suffix.empty() ? 0 : suffix.front();
            const int limit = alphas[r] + (mode == JMode::chained ? above : 0);
            for (int j = 0; j < limit; ++j) {
                std::vector<int> t{j};
                t.insert(t.end(), suffix.begin(), suffix.end());
                next.push_back(std::move(t));
            }
        }
        partial = std::move(next);
    }
    std::sort(partial.begin(), partial.end());
    std::vector<JIndexSet> out;
    out.reserve(partial.size());
    for (auto& t : partial) out.push_back({std::move(t), mode});
    return out;
}

std::vector<int> shifted_alphas(std::span<const int> alphas, std::span<const int> j) {
    if (alphas.size() != j.size()) throw DomainError("shifted_alphas: index length mismatch");
    std::vector<int> out(alphas.size());
    for (std::size_t r = 0; r < alphas.size(); ++r) {
        out[r] = alphas[r] - j[r] + ((r + 1 < j.size()) ? j[r + 1] : 0);
    }
    return out;
}

EvalResult theorem1_rhs(TheoremDirection dir, Complex s, std::span<const int> alphas,
                        const ShiftedEvaluator& evaluator) {
    check_alphas(alphas, "theorem1_rhs");
    EvalResult sum;
    const JMode mode = dir == TheoremDirection::i ? JMode::chained : JMode::plain;
    for (const JIndexSet& idx : enumerate_j_indices(alphas, mode)) {
        const std::vector<int>& j = idx.j;
        const int j2 = j.empty() ? 0 : j[0];
        Complex coef;
        if (dir == TheoremDirection::i) {
            coef = binomial_complex(s + double(j2) - 1.0, j2);
            for (std::size_t r = 1; r < j.size(); ++r) coef *= double(binomial_int(alphas[r - 1] + j[r] - 1, j[r]));
        } else {
            coef = 1.0;
            for (std::size_t r = 0; r < j.size(); ++r) coef *= sign_of(j[r]) * double(binomial_int(alphas[r] - 1, j[r]));
        }
        if (coef == Complex(0.0)) continue;
        std::vector<int> shifted = shifted_alphas(alphas, j);
        accumulate(sum, evaluator(s + double(j2), shifted), coef);
    }
    if (dir == TheoremDirection::i) return scaled(sum, gamma_factor(s, alphas));
    return scaled(sum, reciprocal_gamma_factor(s, alphas));
}

EvalResult corollary_combination(TheoremDirection dir, std::span<const int> alphas,
                                 const ShiftedEvaluator& evaluator) {
    if (alphas.empty()) throw DomainError("corollary_combination: alpha_1 is required");
    check_alphas(alphas, "corollary_combination");
    return theorem1_rhs(dir, double(alphas[0]), alphas.subspan(1), evaluator);
}

ShiftedEvaluator l_value_evaluator(std::span<const QExpansion> forms, const VerticalPathSpec& path) {
    std::vector<QExpansion> f(forms.begin(), forms.end());
    return [f, path](Complex s, std::span<const int> alphas) {
        LArgument arg{s, std::vector<int>(alphas.begin(), alphas.end()), f};
        return multiple_L_continued(arg, path);
    };
}

ShiftedEvaluator period_evaluator(std::span<const CuspFunction> forms, const VerticalPathSpec& path) {
    std::vector<CuspFunction> f(forms.begin(), forms.end());
    return [f, path](Complex s, std::span<const int> alphas) {
        IteratedSpec spec{Endpoint::infinity(), {s}, f};
        spec.exponents.insert(spec.exponents.end(), alphas.begin(), alphas.end());
        return iterated_I_direct(spec, Endpoint::zero(), path);
    };
}

std::vector<FormalTerm> ff_expansion(FFDirection dir, std::span<const int> alphas) {
    std::vector<FormalTerm> out;
    for (const JIndexSet& idx : enumerate_j_indices(alphas, ff_mode(dir))) {
        const std::int64_t c = ff_coefficient(dir, alphas, idx.j);
        if (c == 0) continue;
        out.push_back({shifted_alphas(alphas, idx.j), idx.j.empty() ? 0 : idx.j[0], c});
    }
    return out;
}

FormalCombination compose_ff(FFDirection first, FFDirection second, std::span<const int> alphas) {
    FormalCombination out;
    for (const FormalTerm& t : ff_expansion(first, alphas)) {
        for (const FormalTerm& u : ff_expansion(second, t.alphas)) {
            out[{u.alphas, t.power + u.power}] += t.coefficient * u.coefficient;
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
    return out;
}

EvalResult prop_ff_combination(FFDirection dir, Complex z, const Endpoint& a, std::span<const int> alphas,
                               std::span<const CuspFunction> forms, const VerticalPathSpec& path) {
    if (forms.size() != alphas.size() + 1) throw DomainError("prop_ff_combination: need one alpha per inner form");
    EvalResult sum;
    for (const FormalTerm& t : ff_expansion(dir, alphas)) {
        IteratedSpec spec{a, as_exponents(t.alphas), {forms.begin(), forms.end()}};
        EvalResult v = dir == FFDirection::FF1 ? tilde_F_eval(spec, z, path) : F_eval(spec, z, path);
        accumulate(sum, v, double(t.coefficient) * int_pow(z, t.power));
    }
    return sum;
}

Complex gamma_binomial_identity_residual(Complex s, std::span<const int> alphas, const JIndexSet& idx) {
    check_alphas(alphas, "gamma_binomial_identity_residual");
    const std::vector<int>& j = idx.j;
    if (j.size() != alphas.size()) throw DomainError("gamma_binomial_identity_residual: index length mismatch");
    if (alphas.empty()) return 0.0;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const int next = (r + 1 < j.size()) ? j[r + 1] : 0;
        if (j[r] < 0 || j[r] >= alphas[r] + next) {
            throw DomainError("gamma_binomial_identity_residual: index is not chained");
        }
    }
    const int j2 = j[0];
    Complex lhs = gamma_factor(s + double(j2), shifted_alphas(alphas, j));
    lhs *= double(ff_coefficient(FFDirection::FF1, alphas, j));
    Complex rhs = gamma_factor(s, alphas) * binomial_complex(s + double(j2) - 1.0, j2);
    for (std::size_t r = 1; r < j.size(); ++r) rhs *= double(binomial_int(alphas[r - 1] + j[r] - 1, j[r]));
    return lhs - rhs;
}

WeightLink weight_link(std::span<const int> alphas) {
    check_alphas(alphas, "weight_link");
    WeightLink w{{alphas.begin(), alphas.end()}, {}};
    for (std::size_t r = 0; r < alphas.size(); ++r) {
        w.weights.push_back(alphas[r] + (r + 1 < alphas.size() ? alphas[r + 1] : 1));
    }
    return w;
}

std::vector<int> alphas_from_weights(std::span<const int> weights) {
    const int n = int(weights.size());
    std::vector<int> out(n);
    for (int r = 0; r < n; ++r) {
        int a = ((n - r) % 2 == 0) ? 1 : -1;  // (-1)^{n-r+1} with 1-based r
        for (int j = r; j < n; ++j) a += ((j - r) % 2 == 0 ? 1 : -1) * weights[j];
        out[r] = a;
    }
    return out;
}

EvalResult modularity_residual(ModularityKind kind, const Mat2& gamma, const Endpoint& a, Complex z,
                               std::span<const int> alphas, std::span<const CuspFunction> forms, bool forms_invariant,
                               const VerticalPathSpec& path) {
    if (alphas.size() != forms.size()) throw DomainError("modularity_residual: one alpha per form");
    if (!(gamma.det() > 0)) throw DomainError("modularity_residual: determinant must be positive");
    if (!(z.imag() > 0)) throw DomainError("modularity_residual: z must lie in H");
    const WeightLink link = weight_link(alphas);
    const int a1 = alphas[0];
    const Complex gz = gamma.apply(z);
    const Complex j = gamma.c * z + gamma.d;

    std::vector<CuspFunction> moved;
    for (std::size_t r = 0; r < forms.size(); ++r) {
        moved.push_back(slashed(forms[r], link.weights[r], gamma, forms_invariant));
    }
    const Endpoint b = pull_back(gamma, a);
    std::vector<CuspFunction> original(forms.begin(), forms.end());

    EvalResult lhs, rhs;
    if (kind == ModularityKind::I_n) {
        const Complex factor = std::pow(gamma.det(), 0.5 * (1 - a1)) * int_pow(j, a1 - 1);
        lhs = scaled(tilde_I_direct({a, as_exponents(alphas), original}, Endpoint::point(gz), path), factor);
        rhs = tilde_I_direct({b, as_exponents(alphas), moved}, Endpoint::point(z), path);
    } else {
        const Complex factor = std::pow(gamma.det(), 0.5 * (a1 + 1)) * int_pow(j, -(a1 + 1));
        std::vector<Complex> inner = as_exponents(alphas.subspan(1));
        if (forms.size() == 1) {
            // f_1 |_{alpha_1+1} gamma against f_1 |_{k_1} gamma with k_1 = alpha_1 + 1.
            lhs = slash_action(forms[0].eval, a1 + 1, gamma, z);
            rhs = moved[0].eval(z);
        } else {
            lhs = scaled(tilde_F_eval({a, inner, original}, gz, path), factor);
            rhs = tilde_F_eval({b, inner, moved}, z, path);
        }
    }
    return {lhs.value - rhs.value, lhs.err_abs + rhs.err_abs, lhs.terms_used + rhs.terms_used};
}

EvalResult lambda_transform(const CuspFunction& g, Complex s, const VerticalPathSpec& path) {
    return mellin_vertical(g, s, path);
}

namespace {

// Lambda(s) - factor * Lambda(1 - A - s) for two regularised transforms, switching to the
// entire normalisation (s)_A Lambda(s) when either side sits on a pole.
EvalResult symmetric_residual(const std::function<RegularizedMellin(Complex)>& left,
                              const std::function<RegularizedMellin(Complex)>& right, int A, Complex s,
                              Complex factor) {
    RegularizedMellin x = left(s);
    RegularizedMellin y = right(1.0 - double(A) - s);
    if (x.lambda && y.lambda) {
        return {x.lambda->value - factor * y.lambda->value, x.lambda->err_abs + std::abs(factor) * y.lambda->err_abs,
                x.lambda->terms_used + y.lambda->terms_used};
    }
    const Complex f = factor * sign_of(A);
    return {x.lambda_entire.value - f * y.lambda_entire.value,
            x.lambda_entire.err_abs + std::abs(f) * y.lambda_entire.err_abs,
            x.lambda_entire.terms_used + y.lambda_entire.terms_used};
}

}  // namespace

EvalResult functional_equation_residual(std::span<const int> alphas, std::span<const QExpansion> forms, int N,
                                        Complex s, const VerticalPathSpec& path) {
    if (alphas.size() != forms.size() || forms.empty()) throw DomainError("functional_equation_residual: one alpha per form");
    if (forms.size() > 2) throw CostGuardError("functional_equation_residual: n <= 2 supported");
    if (N < 1) throw DomainError("functional_equation_residual: N must be positive");
    const WeightLink link = weight_link(alphas);
    double eps = 1;
    std::vector<CuspFunction> g;
    for (std::size_t r = 0; r < forms.size(); ++r) {
        const QExpansion& f = forms[r];
        if (!f.fricke()) throw ConfigurationError("functional_equation_residual: form '" + f.label() + "' has no Fricke sign");
        if (f.level() != N) throw ConfigurationError("functional_equation_residual: form '" + f.label() + "' is not of level N");
        if (f.weight() != link.weights[r]) {
            throw DomainError("functional_equation_residual: form '" + f.label() + "' has weight " +
                              std::to_string(f.weight()) + ", the weight link needs " + std::to_string(link.weights[r]));
        }
        eps *= *f.fricke();
        g.push_back(as_cusp_function(f, kFormTol));
    }
    const int A = alphas[0];
    const Complex c(0.0, 1.0 / std::sqrt(double(N)));
    auto transform = [&](Complex w) { return regularized_tilde_mellin(alphas, g, c, w, path); };
    const Complex factor = minus_one_pow(double(A - 1) + s) * std::exp((0.5 * (1 - A) - s) * std::log(double(N))) * eps;
    return symmetric_residual(transform, transform, A, s, factor);
}

EvalResult twisted_residual(std::span<const int> alphas, std::span<const QExpansion> forms,
                            std::span<const DirichletCharacter> chis, Complex s, std::optional<Complex> base_point,
                            const VerticalPathSpec& path) {
    if (!base_point) throw ConfigurationError("twisted_residual: the base point must be given explicitly");
    if (alphas.size() != forms.size() || forms.empty()) throw DomainError("twisted_residual: one alpha per form");
    if (chis.size() != forms.size()) throw DomainError("twisted_residual: one character per form");
    if (forms.size() > 2) throw CostGuardError("twisted_residual: n <= 2 supported");
    const WeightLink link = weight_link(alphas);
    int M = 1;
    Complex parity = 1;
    std::vector<CuspFunction> g, gbar;
    for (std::size_t r = 0; r < forms.size(); ++r) {
        if (forms[r].weight() != link.weights[r]) {
            throw DomainError("twisted_residual: form '" + forms[r].label() + "' does not match the weight link");
        }
        M = std::max(M, chis[r].modulus);
        parity *= chis[r](-1);
        g.push_back(twisted_cusp_function(forms[r], chis[r], kFormTol));
        gbar.push_back(twisted_cusp_function(forms[r], chis[r].conj(), kFormTol));
    }
    // The twists decay like exp(-2 pi t / M) at both cusps.
    VerticalPathSpec p = path;
    p.T = path.T * M;
    p.eps = path.eps / M;
    const int A = alphas[0];
    auto left = [&](Complex w) { return regularized_tilde_mellin(alphas, g, *base_point, w, p); };
    auto right = [&](Complex w) { return regularized_tilde_mellin(alphas, gbar, *base_point, w, p); };
    const Complex factor = minus_one_pow(double(A - 1) + s) * parity;
    return symmetric_residual(left, right, A, s, factor);
}

}  // namespace itpl
