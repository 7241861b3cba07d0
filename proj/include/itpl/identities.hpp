#pragma once

// Binomial index sets and numerical checks of the identities linking
// iterated integrals, multiple L-values and their modular behaviour.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "itpl/iterated.hpp"
#include "itpl/lseries.hpp"

namespace itpl {

/// chained: 0 <= j_r < alpha_r + j_{r+1}; plain: 0 <= j_r < alpha_r (j_{n+1} = 0).
enum class JMode { chained, plain };

/// Index tuple (j_2, ..., j_n).
struct JIndexSet {
    std::vector<int> j;
    JMode mode = JMode::chained;
};

/// All index tuples for alphas = (alpha_2..alpha_n) in lexicographic order.
/// Throws DomainError for alpha_r < 1.
std::vector<JIndexSet> enumerate_j_indices(std::span<const int> alphas, JMode mode);

/// (alpha_2 - j_2 + j_3, ..., alpha_n - j_n).
std::vector<int> shifted_alphas(std::span<const int> alphas, std::span<const int> j);

/// Value source for the shifted terms: L(s', alpha') or I^0_{i inf}(s', alpha').
using ShiftedEvaluator = std::function<EvalResult(Complex s, std::span<const int> alphas)>;

enum class TheoremDirection { i, ii };

/// (i):  Gamma^{(s,alpha)} sum_chained binom(s+j_2-1, j_2) prod_{l>=3} binom(alpha_{l-1}+j_l-1, j_l) L(s+j_2, alpha')
///       (the period I^0_{i inf}(s, alpha)).
/// (ii): Gamma^{(s,alpha)}^{-1} sum_plain prod_{l>=2} (-1)^{j_l} binom(alpha_l-1, j_l) I(s+j_2, alpha')
///       (the value L(s, alpha)).
/// `evaluator` supplies L-values for (i) and I-values for (ii).
EvalResult theorem1_rhs(TheoremDirection dir, Complex s, std::span<const int> alphas, const ShiftedEvaluator& evaluator);

/// theorem1_rhs at s = alpha_1; `alphas` = (alpha_1, ..., alpha_n).
EvalResult corollary_combination(TheoremDirection dir, std::span<const int> alphas, const ShiftedEvaluator& evaluator);

/// Evaluators built on the library: multiple_L_continued and iterated_I_direct (base i infinity, endpoint 0).
ShiftedEvaluator l_value_evaluator(std::span<const QExpansion> forms, const VerticalPathSpec& path);
ShiftedEvaluator period_evaluator(std::span<const CuspFunction> forms, const VerticalPathSpec& path);

enum class FFDirection { FF1, FF2 };

/// One term c * z^power * G(alphas') of a formal expansion; G is Ftilde for FF1 and F for FF2.
struct FormalTerm {
    std::vector<int> alphas;
    int power = 0;
    std::int64_t coefficient = 0;
};

/// FF1: F(alpha) = sum_chained prod binom(alpha_l + j_{l+1} - 1, j_l) z^{j_2} Ftilde(alpha').
/// FF2: Ftilde(alpha) = sum_plain prod (-1)^{j_l} binom(alpha_l - 1, j_l) z^{j_2} F(alpha').
std::vector<FormalTerm> ff_expansion(FFDirection dir, std::span<const int> alphas);

/// Key (alphas, power) of a formal linear combination.
using FormalCombination = std::map<std::pair<std::vector<int>, int>, std::int64_t>;

/// Applies `second` after `first` to the single basis element (alphas, z^0); zero coefficients dropped.
FormalCombination compose_ff(FFDirection first, FFDirection second, std::span<const int> alphas);

/// The FF1 (resp. FF2) combination evaluated at z with base point a. `alphas` = (alpha_2..alpha_n);
/// the result approximates F^z_a (resp. Ftilde^z_a).
EvalResult prop_ff_combination(FFDirection dir, Complex z, const Endpoint& a, std::span<const int> alphas,
                               std::span<const CuspFunction> forms, const VerticalPathSpec& path);

/// prod binom(alpha_l + j_{l+1} - 1, j_l) Gamma^{(s+j_2, alpha')}
///   - Gamma^{(s,alpha)} binom(s+j_2-1, j_2) prod_{l>=3} binom(alpha_{l-1}+j_l-1, j_l).
/// Throws PoleError when Gamma(s) has a pole.
Complex gamma_binomial_identity_residual(Complex s, std::span<const int> alphas, const JIndexSet& j);

/// k_r = alpha_r + alpha_{r+1} with alpha_{n+1} = 1.
struct WeightLink {
    std::vector<int> alphas;
    std::vector<int> weights;
};
WeightLink weight_link(std::span<const int> alphas);
/// alpha_r = (-1)^{n-r+1} + sum_{j=r}^n (-1)^{j-r} k_j.
std::vector<int> alphas_from_weights(std::span<const int> weights);

enum class ModularityKind { I_n, F_n };

/// LHS - RHS of
///   Itilde^._a(alpha; f) |_{1-alpha_1} gamma = Itilde^z_{gamma^{-1} a}(alpha; f_r |_{k_r} gamma)     (I_n)
///   Ftilde^._a(-, alpha_2..; f) |_{alpha_1+1} gamma = Ftilde^z_{gamma^{-1} a}(...; f_r |_{k_r} gamma) (F_n)
/// at z. `alphas` = (alpha_1..alpha_n), weights from weight_link. `forms_invariant` states that
/// f_r |_{k_r} gamma = f_r (level one, k_r = weight, gamma in SL2(Z)), so cusp data carry over.
/// a must be i infinity, 0 or a point of H; gamma^{-1} a must again be one of these.
EvalResult modularity_residual(ModularityKind kind, const Mat2& gamma, const Endpoint& a, Complex z,
                               std::span<const int> alphas, std::span<const CuspFunction> forms, bool forms_invariant,
                               const VerticalPathSpec& path);

/// Lambda(s, g) = int_{i inf}^0 g(z) z^{s-1} dz for a black-box g.
EvalResult lambda_transform(const CuspFunction& g, Complex s, const VerticalPathSpec& path);

/// Residual of the Fricke functional equation for g = Itilde^z_c(alpha; f), c = i/sqrt(N):
///   Lambda(s,g) - (-1)^{alpha_1-1+s} N^{(1-alpha_1)/2-s} eps Lambda(1-alpha_1-s, g).
/// At poles of Lambda the entire transform E(s) = (s)_{alpha_1} Lambda(s) is used:
///   E(s) - (-1)^{alpha_1} (same factor) E(1-alpha_1-s).
/// Throws ConfigurationError if a Fricke sign is missing or a level differs from N,
/// DomainError if weight(f_r) != k_r, CostGuardError for n > 2.
EvalResult functional_equation_residual(std::span<const int> alphas, std::span<const QExpansion> forms, int N,
                                        Complex s, const VerticalPathSpec& path);

/// Residual of the twisted functional equation for G_chi = Itilde^z_b(alpha; f_r^{chi_r}):
///   Lambda(s, G_chi) - (-1)^{alpha_1-1+s} prod chi_r(-1) Lambda(1-alpha_1-s, G_chibar).
/// The base point b must be given (ConfigurationError otherwise); the relation needs S b = b, i.e. b = i.
/// T and eps of `path` are scaled by the largest character modulus.
EvalResult twisted_residual(std::span<const int> alphas, std::span<const QExpansion> forms,
                            std::span<const DirichletCharacter> chis, Complex s, std::optional<Complex> base_point,
                            const VerticalPathSpec& path);

}  // namespace itpl
