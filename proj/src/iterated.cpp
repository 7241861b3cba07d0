#include "itpl/iterated.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "itpl/error.hpp"
#include "itpl/lseries.hpp"
#include "itpl/quadrature.hpp"

namespace itpl {

void VerticalPathSpec::validate() const {
    if (!(eps > 0 && eps < 1 && T > 1)) throw DomainError("path: need 0 < eps < 1 < T");
    if (!(tol > 0)) throw DomainError("path: tol must be positive");
}

Endpoint Endpoint::point(Complex z) {
    if (!(z.imag() > 0)) throw DomainError("endpoint must lie in the upper half-plane");
    return {Kind::Point, z};
}

Endpoint Endpoint::fricke_fixed(int N) {
    if (N < 1) throw DomainError("fricke_fixed: level must be positive");
    return point(Complex(0.0, 1.0 / std::sqrt(double(N))));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Highest panel density tried before giving up; density d means 8d panels per e-fold.
constexpr double kMaxDensity = 8;

bool is_positive_integer(Complex x) {
    return x.imag() == 0 && x.real() >= 1 && x.real() == std::floor(x.real()) && x.real() < 1e6;
}

std::vector<int> integer_exponents(std::span<const Complex> e, const char* who) {
    std::vector<int> out;
    for (Complex x : e) {
        if (!is_positive_integer(x)) {
            throw DomainError(std::string(who) + ": exponents must be positive integers "
                                                 "(otherwise the integral depends on the path)");
        }
        out.push_back(int(x.real()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Path grid: a polyline split into Gauss-Legendre panels.

struct Panel {
    Complex a, b;
    int first;
};

struct Grid {
    std::vector<Complex> vertices;
    std::vector<Endpoint::Kind> vertex_kind;  // Infinity / Zero for truncated cusps
    double T = 0, eps = 0;
    std::vector<Panel> panels;
    std::vector<int> vertex_panel;  // first panel after each vertex (panels.size() for the last)
    std::vector<Complex> u, w;
    std::vector<int> panel_of, local_of;
    double max_abs = 0;

    int cusp_vertex(Endpoint::Kind k) const {
        for (std::size_t v = 0; v < vertices.size(); ++v) {
            if (vertex_kind[v] == k) return int(v);
        }
        return -1;
    }
    // Panel adjacent to vertex v.
    int adjacent_panel(int v) const { return v == 0 ? 0 : int(panels.size()) - 1; }
};

std::vector<double> geometric_breaks(double lo, double hi, double density, double cap) {
    std::vector<double> t{lo};
    while (t.back() < hi) {
        double step = std::min(0.125 * t.back(), cap) / density;
        double next = t.back() + step;
        if (next >= hi - 0.3 * step) next = hi;
        t.push_back(next);
    }
    return t;
}

Grid build_grid(const std::vector<Complex>& vertices, const std::vector<Endpoint::Kind>& kinds, double density,
                double cap, const VerticalPathSpec& path) {
    Grid g;
    g.vertices = vertices;
    g.vertex_kind = kinds;
    g.T = path.T;
    g.eps = path.eps;
    const GaussRule& rule = gauss_legendre(kPanelOrder);
    for (std::size_t v = 0; v + 1 < vertices.size(); ++v) {
        g.vertex_panel.push_back(int(g.panels.size()));
        Complex A = vertices[v], B = vertices[v + 1];
        std::vector<Complex> pts;
        if (std::abs(A.real() - B.real()) <= 1e-15 * (1 + std::abs(A.real()))) {
            double lo = std::min(A.imag(), B.imag()), hi = std::max(A.imag(), B.imag());
            for (double t : geometric_breaks(lo, hi, density, cap)) pts.emplace_back(A.real(), t);
            pts.front() = A.imag() < B.imag() ? A : B;
            pts.back() = A.imag() < B.imag() ? B : A;
            if (A.imag() > B.imag()) std::reverse(pts.begin(), pts.end());
        } else {
            double h = std::min(A.imag(), B.imag());
            double width = std::min(0.25 * h, cap) / density;
            int n = std::max(1, int(std::ceil(std::abs(B - A) / width)));
            for (int i = 0; i <= n; ++i) pts.push_back(A + (B - A) * (double(i) / n));
            pts.back() = B;
        }
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            Panel p{pts[i], pts[i + 1], int(g.u.size())};
            Complex mid = 0.5 * (p.a + p.b), half = 0.5 * (p.b - p.a);
            for (int j = 0; j < kPanelOrder; ++j) {
                g.u.push_back(mid + half * rule.nodes[j]);
                g.w.push_back(half * rule.weights[j]);
                g.panel_of.push_back(int(g.panels.size()));
                g.local_of.push_back(j);
                g.max_abs = std::max(g.max_abs, std::abs(g.u.back()));
            }
            g.panels.push_back(p);
        }
    }
    g.vertex_panel.push_back(int(g.panels.size()));
    for (Complex v : vertices) g.max_abs = std::max(g.max_abs, std::abs(v));
    return g;
}

// Vertices of the path from a to z: vertical through each endpoint, joined
// horizontally at the larger height. Cusps are replaced by iT / i eps.
struct PathPlan {
    std::vector<Complex> vertices;
    std::vector<Endpoint::Kind> kinds;
};

PathPlan plan_path(const Endpoint& a, const Endpoint& z, const VerticalPathSpec& path) {
    if (z.kind == Endpoint::Kind::Infinity) throw DomainError("path: i-infinity is only supported as a base point");
    auto place = [&](const Endpoint& e, double x) -> Complex {
        switch (e.kind) {
            case Endpoint::Kind::Infinity: return {x, path.T};
            case Endpoint::Kind::Zero: return {0.0, path.eps};
            case Endpoint::Kind::Point:
                if (e.z.imag() >= path.T) throw DomainError("path: point above the truncation height T");
                return e.z;
        }
        return {};
    };
    double x = z.kind == Endpoint::Kind::Point ? z.z.real() : 0.0;
    Complex A = place(a, x), Z = place(z, x);
    PathPlan p;
    p.vertices.push_back(A);
    p.kinds.push_back(a.kind);
    if (A.real() != Z.real()) {
        double h = std::max(A.imag(), Z.imag());
        Complex c1(A.real(), h), c2(Z.real(), h);
        if (c1 != A) {
            p.vertices.push_back(c1);
            p.kinds.push_back(Endpoint::Kind::Point);
        }
        if (c2 != Z) {
            p.vertices.push_back(c2);
            p.kinds.push_back(Endpoint::Kind::Point);
        }
    }
    p.vertices.push_back(Z);
    p.kinds.push_back(z.kind);
    return p;
}

// ---------------------------------------------------------------------------
// Form values on the grid.

class FormValues {
  public:
    explicit FormValues(const Grid& g) : grid_(g) {}
    const std::vector<Complex>& of(const CuspFunction* f) { return load(f).values; }
    // Evaluation error bounds at the nodes.
    const std::vector<double>& err(const CuspFunction* f) { return load(f).err; }

  private:
    struct Entry {
        std::vector<Complex> values;
        std::vector<double> err;
    };
    const Entry& load(const CuspFunction* f) {
        auto it = cache_.find(f);
        if (it != cache_.end()) return it->second;
        Entry e{std::vector<Complex>(grid_.u.size(), Complex(1.0)), std::vector<double>(grid_.u.size(), 0.0)};
        if (f) {
            for (std::size_t j = 0; j < e.values.size(); ++j) {
                EvalResult r = f->eval(grid_.u[j]);
                e.values[j] = r.value;
                e.err[j] = r.err_abs;
            }
        }
        return cache_.emplace(f, std::move(e)).first->second;
    }

    const Grid& grid_;
    std::map<const CuspFunction*, Entry> cache_;
};

// ---------------------------------------------------------------------------
// Layers. A layer is w -> int_{base}^{w} f(u) K(u, w) G(u) du with G the next layer
// (or 1) and K either u^e (power) or (u - w)^d (difference).

struct Layer {
    const CuspFunction* f = nullptr;  // nullptr: the constant 1
    bool difference = false;
    Complex exponent;  // power kernel u^exponent
    int degree = 0;    // difference kernel (u - w)^degree
    int base = 0;      // vertex index of the lower limit
};

// |G(it)| <= K t^p e^{-rho t} near i-infinity, K t^p e^{-rho / t} near 0.
struct Envelope {
    double K = 1, p = 0, rho = 0;
};

struct LayerValues {
    std::vector<Complex> values;
    Envelope top, bottom;
    std::vector<double> err;  // error bound at each node (quadrature error excluded)
};

double top_tail(const Envelope& e, double T) {
    if (e.K == 0) return 0;
    double pp = std::max(e.p, 0.0);
    if (!(e.rho - pp / T > 0)) return kInf;
    return e.K * std::pow(T, e.p) * std::exp(-e.rho * T) / (e.rho - pp / T);
}

double bottom_tail(const Envelope& e, double eps) {
    if (e.K == 0) return 0;
    if (e.rho > 0) {
        double tmax = e.p < 0 ? std::min(eps, e.rho / (-e.p)) : eps;
        return e.K * eps * std::pow(tmax, e.p) * std::exp(-e.rho / tmax);
    }
    if (e.p > -1) return e.K * std::pow(eps, e.p + 1) / (e.p + 1);
    return kInf;
}

Envelope form_top(const CuspFunction* f, double T) {
    if (!f) return {1, 0, 0};
    const CuspDecay& d = f->decay;
    if (T < d.inf_valid_from || !std::isfinite(d.inf_const)) return {kInf, 0, 0};
    return {d.inf_const, 0, d.inf_rate};
}

Envelope form_bottom(const CuspFunction* f, double eps) {
    if (!f) return {1, 0, 0};
    const CuspDecay& d = f->decay;
    if (!d.has_zero || eps > d.zero_valid_below) return {kInf, 0, 0};
    return {d.zero_const, -d.weight, d.zero_rate};
}

Complex power_kernel(Complex u, Complex e) {
    if (e.imag() == 0 && e.real() == std::floor(e.real()) && std::abs(e.real()) < 64) return int_pow(u, long(e.real()));
    return branch_pow(u, e);
}

// Kernel bounds for u near the cusps; `wabs` bounds |w| for the difference kernel.
Envelope kernel_top(const Layer& L, double T, double wabs) {
    if (L.difference) return {std::pow(1 + wabs / T, L.degree), double(L.degree), 0};
    return {std::exp(kPi * std::abs(L.exponent.imag())) * std::pow(2.0, std::abs(L.exponent.real())), L.exponent.real(), 0};
}

Envelope kernel_bottom(const Layer& L, double eps, double wabs) {
    if (L.difference) return {std::pow(eps + wabs, L.degree), 0, 0};
    return {std::exp(0.5 * kPi * std::abs(L.exponent.imag())), L.exponent.real(), 0};
}

Envelope product(const Envelope& a, const Envelope& b, const Envelope& c) {
    double K = a.K * b.K * c.K;
    if (a.K == 0 || b.K == 0 || c.K == 0) K = 0;
    return {K, a.p + b.p + c.p, a.rho + b.rho + c.rho};
}

class LayerEngine {
  public:
    LayerEngine(const Grid& g, FormValues& fv) : g_(g), fv_(fv), rule_(gauss_legendre(kPanelOrder)) {}

    // f(u_j) G(u_j) at the nodes.
    std::vector<Complex> integrand(const Layer& L, const LayerValues* inner) {
        const std::vector<Complex>& f = fv_.of(L.f);
        std::vector<Complex> fi(f);
        if (inner) {
            for (std::size_t j = 0; j < fi.size(); ++j) fi[j] *= inner->values[j];
        }
        return fi;
    }

    LayerValues at_nodes(const Layer& L, const LayerValues* inner) {
        std::vector<Complex> fi = integrand(L, inner);
        std::vector<double> rho = error_density(L, inner);
        const std::size_t N = g_.u.size();
        const int base_panel = g_.vertex_panel[L.base];
        LayerValues out;
        out.values.assign(N, 0.0);
        out.err.assign(N, 0.0);
        std::vector<Complex> gk(N);
        if (!L.difference) {
            std::vector<double> rk(N);
            for (std::size_t j = 0; j < N; ++j) {
                Complex ker = power_kernel(g_.u[j], L.exponent);
                gk[j] = fi[j] * ker;
                rk[j] = rho[j] * std::abs(ker);
            }
            std::vector<Complex> cum = cumulative(gk);
            std::vector<double> ecum = cumulative_abs(rk);
            for (std::size_t k = 0; k < N; ++k) {
                const int p = g_.panel_of[k];
                out.values[k] = cum[p] - cum[base_panel] + partial(gk, k);
                out.err[k] = p >= base_panel ? ecum[p + 1] - ecum[base_panel] : ecum[base_panel] - ecum[p];
            }
        } else {
            for (std::size_t k = 0; k < N; ++k) {
                const Complex wk = g_.u[k];
                const int p = g_.panel_of[k];
                int lo = std::min(p, base_panel), hi = std::max(p, base_panel);
                Complex sum = 0;
                double esum = 0;
                for (int q = lo; q < hi; ++q) {
                    const int f0 = g_.panels[q].first;
                    for (int j = 0; j < kPanelOrder; ++j) {
                        Complex ker = int_pow(g_.u[f0 + j] - wk, L.degree);
                        sum += g_.w[f0 + j] * fi[f0 + j] * ker;
                        if (rho[f0 + j] != 0) esum += rho[f0 + j] * std::abs(ker);
                    }
                }
                if (p < base_panel) sum = -sum;
                const int f0 = g_.panels[p].first;
                for (int j = 0; j < kPanelOrder; ++j) {
                    Complex ker = int_pow(g_.u[f0 + j] - wk, L.degree);
                    gk[f0 + j] = fi[f0 + j] * ker;
                    if (p >= base_panel) esum += rho[f0 + j] * std::abs(ker);
                }
                out.values[k] = sum + partial(gk, k);
                out.err[k] = esum;
            }
        }
        bounds(L, inner, fi, out);
        return out;
    }

    struct Value {
        Complex value;
        double trunc = 0;
        double mass = 0;
    };

    // Outer layer evaluated at vertex v with kernel point w (for difference kernels).
    Value at_vertex(const Layer& L, const LayerValues* inner, int v, Complex w) {
        std::vector<Complex> fi = integrand(L, inner);
        std::vector<double> rho = error_density(L, inner);
        const int base_panel = g_.vertex_panel[L.base], end_panel = g_.vertex_panel[v];
        int lo = std::min(base_panel, end_panel), hi = std::max(base_panel, end_panel);
        Value out;
        for (int q = lo; q < hi; ++q) {
            const int f0 = g_.panels[q].first;
            for (int j = 0; j < kPanelOrder; ++j) {
                Complex ker = L.difference ? int_pow(g_.u[f0 + j] - w, L.degree) : power_kernel(g_.u[f0 + j], L.exponent);
                Complex t = g_.w[f0 + j] * fi[f0 + j] * ker;
                out.value += t;
                out.mass += std::abs(t);
                out.trunc += rho[f0 + j] * std::abs(ker);
            }
        }
        if (end_panel < base_panel) out.value = -out.value;
        // Truncated cusps at either limit.
        const double wabs = std::abs(w);
        const Envelope in_top = inner ? inner->top : Envelope{};
        const Envelope in_bot = inner ? inner->bottom : Envelope{};
        for (int end : {L.base, v}) {
            if (g_.vertex_kind[end] == Endpoint::Kind::Infinity) {
                out.trunc += top_tail(product(form_top(L.f, g_.T), kernel_top(L, g_.T, wabs), in_top), g_.T);
            } else if (g_.vertex_kind[end] == Endpoint::Kind::Zero) {
                out.trunc += bottom_tail(product(form_bottom(L.f, g_.eps), kernel_bottom(L, g_.eps, wabs), in_bot), g_.eps);
            }
        }
        return out;
    }

  private:
    std::vector<Complex> cumulative(const std::vector<Complex>& gk) const {
        std::vector<Complex> cum(g_.panels.size() + 1, 0.0);
        for (std::size_t q = 0; q < g_.panels.size(); ++q) {
            Complex s = 0;
            const int f0 = g_.panels[q].first;
            for (int j = 0; j < kPanelOrder; ++j) s += g_.w[f0 + j] * gk[f0 + j];
            cum[q + 1] = cum[q] + s;
        }
        return cum;
    }

    // int from the start of node k's panel to u_k of the interpolant of gk.
    Complex partial(const std::vector<Complex>& gk, std::size_t k) const {
        const Panel& p = g_.panels[g_.panel_of[k]];
        const Complex half = 0.5 * (p.b - p.a);
        const std::vector<double>& row = rule_.integration[g_.local_of[k]];
        Complex s = 0;
        for (int j = 0; j < kPanelOrder; ++j) s += row[j] * gk[p.first + j];
        return half * s;
    }

    std::vector<double> cumulative_abs(const std::vector<double>& r) const {
        std::vector<double> cum(g_.panels.size() + 1, 0.0);
        for (std::size_t q = 0; q < g_.panels.size(); ++q) {
            double t = 0;
            const int f0 = g_.panels[q].first;
            for (int j = 0; j < kPanelOrder; ++j) t += r[f0 + j];
            cum[q + 1] = cum[q] + t;
        }
        return cum;
    }

    // |w_j| (|df_j| |G_j| + |f_j| |dG_j|): per-node error density, before the kernel.
    std::vector<double> error_density(const Layer& L, const LayerValues* inner) const {
        const std::vector<Complex>& f = fv_.of(L.f);
        const std::vector<double>& e = fv_.err(L.f);
        std::vector<double> rho(f.size());
        for (std::size_t j = 0; j < f.size(); ++j) {
            double d = inner ? e[j] * std::abs(inner->values[j]) + std::abs(f[j]) * inner->err[j] : e[j];
            rho[j] = std::abs(g_.w[j]) * d;
        }
        return rho;
    }

    double max_on_panel(const std::vector<Complex>& v, int panel) const {
        double m = 0;
        const int f0 = g_.panels[panel].first;
        for (int j = 0; j < kPanelOrder; ++j) m = std::max(m, std::abs(v[f0 + j]));
        return m;
    }

    void bounds(const Layer& L, const LayerValues* inner, const std::vector<Complex>& fi, LayerValues& out) {
        const Envelope in_top = inner ? inner->top : Envelope{};
        const Envelope in_bot = inner ? inner->bottom : Envelope{};
        const double wabs = g_.max_abs;

        const int vinf = g_.cusp_vertex(Endpoint::Kind::Infinity);
        if (vinf >= 0) {
            Envelope I = product(form_top(L.f, g_.T), kernel_top(L, g_.T, wabs), in_top);
            double tail = top_tail(I, g_.T);
            if (L.base == vinf) {
                for (double& e : out.err) e += tail;
                double pp = std::max(I.p, 0.0);
                double denom = I.rho - pp / g_.T;
                out.top = {denom > 0 ? I.K / denom : kInf, I.p, I.rho};
                if (I.K == 0) out.top = {0, 0, 0};
            } else if (L.difference) {
                double K = 0;
                for (std::size_t j = 0; j < fi.size(); ++j) {
                    K += std::abs(g_.w[j] * fi[j]) * std::pow(1 + std::abs(g_.u[j]) / g_.T, L.degree);
                }
                Envelope fin = product(form_top(L.f, g_.T), Envelope{}, in_top);
                K += std::pow(2.0, L.degree) * top_tail(fin, g_.T);
                out.top = {K, double(L.degree), 0};
            } else {
                out.top = {2 * max_on_panel(out.values, g_.adjacent_panel(vinf)) + tail, 0, 0};
            }
        }
        const int vzero = g_.cusp_vertex(Endpoint::Kind::Zero);
        if (vzero >= 0) {
            Envelope I = product(form_bottom(L.f, g_.eps), kernel_bottom(L, g_.eps, wabs), in_bot);
            double tail = bottom_tail(I, g_.eps);
            if (L.base == vzero) {
                for (double& e : out.err) e += tail;
                out.bottom = {I.K, I.p + 1, I.rho};
            } else if (L.difference) {
                double K = 0;
                for (std::size_t j = 0; j < fi.size(); ++j) {
                    K += std::abs(g_.w[j] * fi[j]) * std::pow(std::abs(g_.u[j]) + g_.eps, L.degree);
                }
                Envelope fin = product(form_bottom(L.f, g_.eps), Envelope{}, in_bot);
                K += std::pow(g_.eps + wabs, L.degree) * bottom_tail(fin, g_.eps);
                out.bottom = {K, 0, 0};
            } else {
                out.bottom = {2 * max_on_panel(out.values, g_.adjacent_panel(vzero)) + tail, 0, 0};
            }
        }
    }

    const Grid& g_;
    FormValues& fv_;
    const GaussRule& rule_;
};

// Evaluates the stack (outer first) at every node and returns the layers innermost-first.
std::vector<LayerValues> evaluate_stack(LayerEngine& eng, const std::vector<Layer>& layers, std::size_t from) {
    std::vector<LayerValues> out;
    for (std::size_t r = layers.size(); r-- > from;) {
        out.push_back(eng.at_nodes(layers[r], out.empty() ? nullptr : &out.back()));
    }
    return out;
}

// Runs `compute` at increasing panel densities until consecutive results agree.
struct Outputs {
    std::vector<Complex> values;
    std::vector<double> trunc;
    std::vector<double> floor;
    long nodes = 0;
};

std::vector<EvalResult> refine(const std::function<Outputs(double)>& compute, double tol) {
    Outputs coarse = compute(1);
    for (double d = 2; d <= kMaxDensity; d *= 2) {
        Outputs fine = compute(d);
        bool ok = true;
        std::vector<EvalResult> res;
        for (std::size_t i = 0; i < fine.values.size(); ++i) {
            double diff = std::abs(fine.values[i] - coarse.values[i]);
            double floor = 1e-14 * fine.floor[i];
            if (diff > std::max(tol * std::abs(fine.values[i]), floor)) ok = false;
            res.push_back({fine.values[i], diff + fine.trunc[i] + floor, fine.nodes + coarse.nodes});
        }
        if (ok) {
            for (const EvalResult& r : res) {
                if (!std::isfinite(r.err_abs)) {
                    throw AccuracyError("iterated integral: truncation at a cusp cannot be bounded "
                                        "(missing or invalid decay data)",
                                        r.value, r.err_abs);
                }
            }
            return res;
        }
        if (d * 2 > kMaxDensity) {
            throw AccuracyError("iterated integral: quadrature did not settle at the highest panel density",
                                res.front().value, res.front().err_abs);
        }
        coarse = std::move(fine);
    }
    return {};
}

double panel_cap(std::span<const CuspFunction> forms) {
    double rate = kTwoPi;
    for (const CuspFunction& f : forms) {
        if (f.decay.inf_rate > 0 && std::isfinite(f.decay.inf_rate)) rate = std::min(rate, f.decay.inf_rate);
    }
    return 0.25 * kTwoPi / rate;
}

void check_depth(std::size_t n) {
    if (n == 0) throw DomainError("iterated integral: at least one form is required");
    if (n > kMaxDepth) {
        throw CostGuardError("iterated integral: depth " + std::to_string(n) + " exceeds the limit " +
                             std::to_string(kMaxDepth));
    }
}

// Kernel point for the outer difference layer: the true endpoint (0 for the cusp 0).
Complex endpoint_value(const Endpoint& z) { return z.kind == Endpoint::Kind::Point ? z.z : Complex(0.0); }

// Stack evaluation along the path a -> z; the outer layer is taken at z.
EvalResult run_path(const Endpoint& a, const Endpoint& z, std::vector<Layer> layers, std::span<const CuspFunction> forms,
                    const VerticalPathSpec& path) {
    if (a == z) return {};
    PathPlan plan = plan_path(a, z, path);
    const double cap = panel_cap(forms);
    auto compute = [&](double density) {
        Grid g = build_grid(plan.vertices, plan.kinds, density, cap, path);
        FormValues fv(g);
        LayerEngine eng(g, fv);
        std::vector<LayerValues> stack = evaluate_stack(eng, layers, 1);
        const int v = int(plan.vertices.size()) - 1;
        LayerEngine::Value val = eng.at_vertex(layers[0], stack.empty() ? nullptr : &stack.back(), v, endpoint_value(z));
        return Outputs{{val.value}, {val.trunc}, {val.mass}, long(g.u.size())};
    };
    return refine(compute, path.tol).front();
}

}  // namespace

EvalResult iterated_I_direct(const IteratedSpec& spec, Endpoint z, const VerticalPathSpec& path) {
    path.validate();
    check_depth(spec.forms.size());
    if (spec.exponents.size() != spec.forms.size()) throw DomainError("iterated_I_direct: one exponent per form");
    std::vector<Layer> layers;
    for (std::size_t r = 0; r < spec.forms.size(); ++r) {
        layers.push_back({&spec.forms[r], false, spec.exponents[r] - 1.0, 0, 0});
    }
    return run_path(spec.base, z, layers, spec.forms, path);
}

EvalResult tilde_I_direct(const IteratedSpec& spec, Endpoint z, const VerticalPathSpec& path) {
    path.validate();
    check_depth(spec.forms.size());
    if (spec.exponents.size() != spec.forms.size()) throw DomainError("tilde_I_direct: one exponent per form");
    std::vector<int> alphas = integer_exponents(spec.exponents, "tilde_I_direct");
    std::vector<Layer> layers;
    for (std::size_t r = 0; r < spec.forms.size(); ++r) {
        layers.push_back({&spec.forms[r], true, {}, alphas[r] - 1, 0});
    }
    return run_path(spec.base, z, layers, spec.forms, path);
}

namespace {

EvalResult times_form(const CuspFunction& f, Complex z, const EvalResult& inner) {
    EvalResult fz = f.eval(z);
    return {fz.value * inner.value, std::abs(fz.value) * inner.err_abs + fz.err_abs * std::abs(inner.value),
            fz.terms_used + inner.terms_used};
}

IteratedSpec inner_spec(const IteratedSpec& spec) {
    if (spec.forms.empty()) throw DomainError("F evaluation: at least one form is required");
    if (spec.exponents.size() + 1 != spec.forms.size()) {
        throw DomainError("F evaluation: exponents must hold alpha_2..alpha_n");
    }
    IteratedSpec in;
    in.base = spec.base;
    in.exponents = spec.exponents;
    in.forms.assign(spec.forms.begin() + 1, spec.forms.end());
    return in;
}

}  // namespace

EvalResult tilde_F_eval(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path) {
    IteratedSpec in = inner_spec(spec);
    if (in.forms.empty()) return spec.forms[0].eval(z);
    check_depth(spec.forms.size());
    return times_form(spec.forms[0], z, tilde_I_direct(in, Endpoint::point(z), path));
}

EvalResult F_eval(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path) {
    IteratedSpec in = inner_spec(spec);
    if (in.forms.empty()) return spec.forms[0].eval(z);
    check_depth(spec.forms.size());
    return times_form(spec.forms[0], z, iterated_I_direct(in, Endpoint::point(z), path));
}

EvalResult alternative_iterated_I(const IteratedSpec& spec, Complex z, const VerticalPathSpec& path) {
    path.validate();
    if (spec.forms.empty() || spec.exponents.size() != spec.forms.size()) {
        throw DomainError("alternative_iterated_I: one exponent per form");
    }
    std::vector<int> alphas = integer_exponents(spec.exponents, "alternative_iterated_I");
    int total = 0;
    for (int a : alphas) total += a;
    if (total > kMaxWordLength) {
        throw CostGuardError("alternative_iterated_I: word length " + std::to_string(total) + " exceeds " +
                             std::to_string(kMaxWordLength));
    }
    if (spec.base.kind != Endpoint::Kind::Point) {
        throw DomainError("alternative_iterated_I: the base point must lie in the upper half-plane");
    }
    std::vector<Layer> layers;
    for (std::size_t r = 0; r < spec.forms.size(); ++r) {
        for (int j = 1; j < alphas[r]; ++j) layers.push_back({nullptr, false, 0.0, 0, 0});
        layers.push_back({&spec.forms[r], false, 0.0, 0, 0});
    }
    EvalResult word = run_path(spec.base, Endpoint::point(z), layers, spec.forms, path);
    std::vector<int> rest(alphas.begin() + 1, alphas.end());
    Complex factor = gamma_factor(double(alphas[0]), rest) * ((total % 2 == 0) ? 1.0 : -1.0);
    return {factor * word.value, std::abs(factor) * word.err_abs, word.terms_used};
}

// ---------------------------------------------------------------------------
// Fourier series.

void FourierSeries::fit_growth(double exponent) {
    growth_exponent = exponent;
    double C = 0;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        C = std::max(C, std::abs(coefficients[i]) / std::pow(double(i + 1), exponent));
    }
    growth_constant = C * (1 + 1e-12);
}

namespace {

// int_0^inf |f(iu)| u^{a-1} du from the decay data (level 1: fully covered by the two
// bounds; otherwise the middle range is sampled).
double axis_moment_bound(const QExpansion& f, int a) {
    CuspDecay d = f.decay();
    const double lo = d.has_zero ? d.zero_valid_below : 0.0;
    if (!d.has_zero) return kInf;
    double near0 = integrate_adaptive(
                       [&](double u) {
                           return Complex(d.zero_const * std::pow(u, a - 1 - d.weight) * std::exp(-d.zero_rate / u));
                       },
                       0.0, lo, 1e-30 + 1e-12 * d.zero_const)
                       .value.real();
    double middle = 0;
    if (lo < 1) {
        double m = 0;
        for (int i = 0; i <= 64; ++i) {
            double u = lo + (1 - lo) * i / 64.0;
            m = std::max(m, std::abs(evaluate_form(f, Complex(0.0, u), 1e-20).value) * std::pow(u, a - 1));
        }
        middle = 1.5 * m * (1 - lo);
    }
    double far = d.inf_const * upper_incomplete_gamma(double(a), kTwoPi).real() / std::pow(kTwoPi, a);
    return std::abs(near0) + middle + far;
}

}  // namespace

FourierSeries tilde_fourier_coeffs(TildeKind kind, std::span<const int> exponents, std::span<const QExpansion> forms,
                                   std::size_t count) {
    if (count < 1) throw DomainError("tilde_fourier_coeffs: count must be >= 1");
    for (int a : exponents) {
        if (a < 1) throw DomainError("tilde_fourier_coeffs: exponents must be positive integers");
    }
    FourierSeries fs;
    const double P = convergence_bound(forms) - 1;
    if (kind == TildeKind::I_tilde) {
        if (exponents.size() != forms.size()) throw DomainError("tilde_fourier_coeffs: one exponent per form");
        std::vector<Complex> A = chain_sums(forms, exponents.subspan(1), count);
        for (std::size_t m = 1; m <= count; ++m) A[m - 1] /= std::pow(double(m), exponents[0]);
        fs.coefficients = std::move(A);
        std::vector<int> rest(exponents.begin() + 1, exponents.end());
        fs.prefactor = gamma_factor(double(exponents[0]), rest) * l_normalisation(0.0, exponents);
        fs.fit_growth(std::max(P - exponents[0], 0.0));
    } else {
        if (exponents.size() + 1 != forms.size()) throw DomainError("tilde_fourier_coeffs: exponents are alpha_2..alpha_n");
        fs.coefficients = chain_sums(forms, exponents, count);
        if (!exponents.empty()) {
            std::vector<int> rest(exponents.begin() + 1, exponents.end());
            fs.prefactor = gamma_factor(double(exponents[0]), rest) * l_normalisation(0.0, exponents);
        }
        fs.fit_growth(P);
        // |Ftilde(it)| <= |f_1(it)| prod_r int_0^inf |f_r(iu)| u^{alpha_r - 1} du.
        CuspDecay d = forms[0].decay();
        if (d.has_zero) {
            double B = 1;
            for (std::size_t r = 1; r < forms.size(); ++r) B *= axis_moment_bound(forms[r], exponents[r - 1]);
            d.zero_const *= B;
            d.inf_const = kInf;
            fs.decay = d;
        }
    }
    return fs;
}

EvalResult evaluate_fourier(const FourierSeries& g, Complex z, double tol) {
    if (!(tol > 0)) throw DomainError("evaluate_fourier: tol must be positive");
    double scale = std::abs(g.prefactor);
    if (scale == 0) return {};
    if (g.finite) {
        Complex q = std::exp(Complex(0.0, kTwoPi) * z), qm = 1, s = 0;
        double mass = 0;
        for (const Complex& a : g.coefficients) {
            qm *= q;
            s += a * qm;
            mass += std::abs(a * qm);
        }
        return {g.prefactor * s, scale * 4e-16 * mass, long(g.coefficients.size())};
    }
    EvalResult e = evaluate_series(g.coefficients, g.growth_constant, g.growth_exponent, z, tol / scale);
    return {g.prefactor * e.value, scale * e.err_abs, e.terms_used};
}

// ---------------------------------------------------------------------------
// Mellin transforms along the imaginary axis.

namespace {

// -i^s int_{t0}^{t1} g(it) t^{s-1} dt by adaptive quadrature with a relative target.
EvalResult axis_piece(const std::function<Complex(double)>& g, Complex s, double t0, double t1, double tol,
                      double scale_hint) {
    const Complex is = branch_pow(Complex(0.0, 1.0), s);
    auto integrand = [&](double t) { return g(t) * std::exp((s - 1.0) * std::log(t)); };
    // A coarse pass fixes the absolute tolerance.
    double mass = 0;
    const GaussRule& rule = gauss_legendre(kPanelOrder);
    for (int p = 0; p < 8; ++p) {
        double a = t0 * std::pow(t1 / t0, p / 8.0), b = t0 * std::pow(t1 / t0, (p + 1) / 8.0);
        for (int j = 0; j < kPanelOrder; ++j) {
            double t = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[j];
            mass += 0.5 * (b - a) * rule.weights[j] * std::abs(integrand(t));
        }
    }
    // The panel rounding floor is 1e-14 of the absolute mass; stay above it.
    double abs_tol = std::max(tol, 5e-14) * std::max(mass, scale_hint) + 1e-300;
    EvalResult r = integrate_adaptive(integrand, t0, t1, abs_tol, 20000);
    return {-is * r.value, std::abs(is) * r.err_abs, r.terms_used};
}

// -i^s sum_m prefactor a_m (2 pi m)^{-s} Gamma(s, 2 pi m), the t >= 1 piece.
EvalResult termwise_upper(const FourierSeries& g, Complex s, double tol) {
    const Complex is = branch_pow(Complex(0.0, 1.0), s);
    const double sigma = s.real();
    Complex sum = 0;
    double mass = 0;
    const std::size_t m_start = std::size_t(std::max(1.0, std::ceil((sigma - 1) / kPi)));
    for (std::size_t m = 1; m <= g.coefficients.size(); ++m) {
        const double x = kTwoPi * double(m);
        Complex term = g.coefficients[m - 1] * std::exp(-s * std::log(x)) * upper_incomplete_gamma(s, x);
        sum += term;
        mass += std::abs(term);
        if (g.finite) continue;
        if (m >= m_start) {
            // |term| <= 2 |a_m| e^{-2 pi m} / (2 pi m) for later m.
            double tail = power_exp_tail(g.growth_constant / kPi, g.growth_exponent - 1, kTwoPi, m);
            if (tail <= tol * std::abs(sum) || tail < 1e-300) {
                double f = std::abs(is * g.prefactor);
                return {-is * g.prefactor * sum, f * (tail + 1e-15 * mass), long(m)};
            }
        }
    }
    if (!g.finite) {
        throw AccuracyError("mellin_vertical: Fourier coefficients exhausted on [1, inf)", -is * g.prefactor * sum, kInf);
    }
    return {-is * g.prefactor * sum, std::abs(is * g.prefactor) * 1e-15 * mass, long(g.coefficients.size())};
}

void check_decay_for_zero_piece(const std::optional<CuspDecay>& d) {
    if (!d || !d->has_zero) {
        throw AccuracyError("mellin_vertical: no decay data at the cusp 0; the (0, eps) piece is unbounded", {}, kInf);
    }
}

}  // namespace

EvalResult mellin_vertical(const FourierSeries& g, Complex s, const VerticalPathSpec& path) {
    path.validate();
    const bool exact_lower = !(g.decay && g.decay->has_zero) && g.finite && s.real() > 0;
    if (!exact_lower) check_decay_for_zero_piece(g.decay);
    const double tol = path.tol;
    const double eps = path.eps;
    EvalResult upper = termwise_upper(g, s, tol * 1e-2);
    // Series evaluation on [eps, 1]; the sum is only good to rounding relative to its
    // absolute mass, so that is the target, and the largest pointwise error is kept.
    double worst = 0;
    auto gval = [&](double t) {
        double mass = 0;
        for (std::size_t m = 1; m <= g.coefficients.size(); ++m) {
            mass += std::abs(g.coefficients[m - 1]) * std::exp(-kTwoPi * t * double(m));
        }
        EvalResult r = evaluate_fourier(g, Complex(0.0, t), 1e-16 * mass * std::abs(g.prefactor) + 1e-300);
        worst = std::max(worst, r.err_abs * std::pow(t, s.real() - 1));
        return r.value;
    };
    EvalResult middle = axis_piece(gval, s, eps, 1.0, tol * 1e-2, std::abs(upper.value));
    const Complex is = branch_pow(Complex(0.0, 1.0), s);
    middle.err_abs += std::abs(is) * worst * (1 - eps);
    EvalResult lower;
    if (!exact_lower) {
        lower.err_abs = std::abs(is) * g.decay->zero_tail(eps, s.real() - 1);
    } else {
        // Polynomial in q: the (0, eps) piece is a finite sum of lower incomplete gammas.
        Complex sum = 0;
        for (std::size_t m = 1; m <= g.coefficients.size(); ++m) {
            double x = kTwoPi * double(m);
            Complex lower_gamma = gamma_complex(s) - upper_incomplete_gamma(s, x * eps);
            sum += g.coefficients[m - 1] * std::exp(-s * std::log(x)) * lower_gamma;
        }
        lower.value = -is * g.prefactor * sum;
        lower.err_abs = 1e-15 * std::abs(lower.value);
    }
    return {upper.value + middle.value + lower.value, upper.err_abs + middle.err_abs + lower.err_abs,
            upper.terms_used + middle.terms_used};
}

EvalResult mellin_vertical(const CuspFunction& g, Complex s, const VerticalPathSpec& path) {
    path.validate();
    const Complex is = branch_pow(Complex(0.0, 1.0), s);
    const double sigma = s.real();
    auto gval = [&](double t) { return g.eval(Complex(0.0, t)).value; };
    EvalResult top = axis_piece(gval, s, 1.0, path.T, path.tol * 1e-2, 0.0);
    EvalResult middle = axis_piece(gval, s, path.eps, 1.0, path.tol * 1e-2, std::abs(top.value));
    if (path.T < g.decay.inf_valid_from) throw AccuracyError("mellin_vertical: T below the decay bound's range", {}, kInf);
    double tail_top = std::abs(is) * g.decay.inf_tail(path.T, sigma - 1);
    double tail_zero = std::abs(is) * g.decay.zero_tail(path.eps, sigma - 1);
    return {top.value + middle.value, top.err_abs + middle.err_abs + tail_top + tail_zero,
            top.terms_used + middle.terms_used};
}

EvalResult mellin_tilde_F(std::span<const int> alphas, std::span<const QExpansion> forms, Complex s,
                          const VerticalPathSpec& path) {
    path.validate();
    if (forms.size() != alphas.size() + 1) throw DomainError("mellin_tilde_F: one alpha per form after the first");
    std::size_t available = forms[0].size();
    for (const QExpansion& f : forms) available = std::min(available, f.size());
    const std::size_t head = std::min<std::size_t>(available, 64);

    FourierSeries F = tilde_fourier_coeffs(TildeKind::F_tilde, alphas, forms, head);
    EvalResult upper = termwise_upper(F, s, path.tol * 1e-2);

    // Inner Itilde series, long enough for Im z = eps.
    std::optional<FourierSeries> inner;
    std::vector<QExpansion> inner_forms(forms.begin() + 1, forms.end());
    if (!inner_forms.empty()) {
        std::size_t count = std::min<std::size_t>(available, std::size_t(std::ceil(8.0 / path.eps)) + 32);
        while (true) {
            FourierSeries I = tilde_fourier_coeffs(TildeKind::I_tilde, alphas, inner_forms, count);
            double mass = 0;
            for (std::size_t m = 1; m <= count; ++m) mass += std::abs(I.coefficients[m - 1]) * std::exp(-kTwoPi * path.eps * m);
            double tail = power_exp_tail(I.growth_constant, I.growth_exponent, kTwoPi * path.eps, count);
            if (tail <= 1e-16 * mass) {
                // The stored terms suffice for every t >= eps; sum them all.
                I.finite = true;
                inner = std::move(I);
                break;
            }
            if (count >= available) {
                throw AccuracyError("mellin_tilde_F: not enough coefficients to evaluate the inner series at Im z = eps",
                                    {}, kInf);
            }
            count = std::min(available, 2 * count);
        }
    }
    auto fval = [&](double t) {
        Complex z(0.0, t);
        Complex f = evaluate_form(forms[0], z, 1e-40).value;
        if (!inner) return f;
        return f * evaluate_fourier(*inner, z, 1.0).value;
    };
    EvalResult middle = axis_piece(fval, s, path.eps, 1.0, path.tol * 1e-2, std::abs(upper.value));
    const Complex is = branch_pow(Complex(0.0, 1.0), s);
    if (!F.decay) check_decay_for_zero_piece(F.decay);
    double lower = std::abs(is) * F.decay->zero_tail(path.eps, s.real() - 1);
    return {upper.value + middle.value, upper.err_abs + middle.err_abs + lower, upper.terms_used + middle.terms_used};
}

// ---------------------------------------------------------------------------
// Regularised Mellin transform of Itilde^z_b.

RegularizedMellin regularized_tilde_mellin(std::span<const int> alphas, std::span<const CuspFunction> forms,
                                           Complex base, Complex s, const VerticalPathSpec& path,
                                           std::optional<Complex> split) {
    path.validate();
    check_depth(forms.size());
    if (alphas.size() != forms.size()) throw DomainError("regularized_tilde_mellin: one alpha per form");
    for (int a : alphas) {
        if (a < 1) throw DomainError("regularized_tilde_mellin: alphas must be positive integers");
    }
    const Complex c = split.value_or(base);
    for (Complex p : {base, c}) {
        if (p.real() != 0 || !(p.imag() > path.eps && p.imag() < path.T)) {
            throw DomainError("regularized_tilde_mellin: base and split points must lie on the imaginary axis within (eps, T)");
        }
    }
    const int A = alphas[0];

    // Vertices from the top: iT, then b and c in decreasing height, then i eps.
    std::vector<Complex> verts{Complex(0.0, path.T)};
    std::vector<Endpoint::Kind> kinds{Endpoint::Kind::Infinity};
    std::vector<Complex> mids{base, c};
    std::sort(mids.begin(), mids.end(), [](Complex x, Complex y) { return x.imag() > y.imag(); });
    for (Complex m : mids) {
        if (m != verts.back()) {
            verts.push_back(m);
            kinds.push_back(Endpoint::Kind::Point);
        }
    }
    verts.emplace_back(0.0, path.eps);
    kinds.push_back(Endpoint::Kind::Zero);
    auto index_of = [&](Complex p) { return int(std::find(verts.begin(), verts.end(), p) - verts.begin()); };
    const int vb = index_of(base), vc = index_of(c), vtop = 0, vend = int(verts.size()) - 1;

    // Outputs: M_inf, M_0, then P_inf_j and P_0_j for j = 0..A-1.
    const double cap = panel_cap(forms);
    auto compute = [&](double density) {
        Grid g = build_grid(verts, kinds, density, cap, path);
        FormValues fv(g);
        LayerEngine eng(g, fv);
        // Inner stack Itilde^u_b(alpha_2..; f_2..), innermost first.
        std::vector<Layer> inner_layers;
        for (std::size_t r = 1; r < forms.size(); ++r) inner_layers.push_back({&forms[r], true, {}, alphas[r] - 1, vb});
        std::vector<LayerValues> stack = evaluate_stack(eng, inner_layers, 0);
        const LayerValues* inner = stack.empty() ? nullptr : &stack.back();

        Layer d_inf{&forms[0], true, {}, A - 1, vtop};
        Layer d_zero{&forms[0], true, {}, A - 1, vend};
        LayerValues Dinf = eng.at_nodes(d_inf, inner);
        LayerValues Dzero = eng.at_nodes(d_zero, inner);
        Layer mel_inf{nullptr, false, s - 1.0, 0, vtop};
        Layer mel_zero{nullptr, false, s - 1.0, 0, vc};
        Outputs out;
        auto push = [&](const LayerEngine::Value& v) {
            out.values.push_back(v.value);
            out.trunc.push_back(v.trunc);
            out.floor.push_back(v.mass);
        };
        push(eng.at_vertex(mel_inf, &Dinf, vc, {}));
        push(eng.at_vertex(mel_zero, &Dzero, vend, {}));
        for (int j = 0; j < A; ++j) {
            Layer mom{&forms[0], false, double(A - 1 - j), 0, vc};
            push(eng.at_vertex(mom, inner, vtop, {}));
            push(eng.at_vertex(mom, inner, vend, {}));
        }
        out.nodes = long(g.u.size());
        return out;
    };
    std::vector<EvalResult> r = refine(compute, path.tol);

    // Lambda = M_inf + M_0 + sum_j (p_inf_j - p_0_j) c^{j+s} / (j+s),
    // p_j = binom(A-1, j) (-1)^j P_j.
    Complex direct = r[0].value + r[1].value;
    double direct_err = r[0].err_abs + r[1].err_abs;
    Complex poch = pochhammer(s, A);
    std::optional<int> pole;
    for (int j = 0; j < A; ++j) {
        if (s == Complex(-double(j), 0.0)) pole = j;
    }
    Complex lambda = direct, entire = poch * direct;
    double lambda_err = direct_err, entire_err = std::abs(poch) * direct_err;
    for (int j = 0; j < A; ++j) {
        const double b = double(binomial_int(A - 1, j)) * ((j % 2 == 0) ? 1.0 : -1.0);
        const Complex coef = b * (r[2 + 2 * j].value - r[3 + 2 * j].value);
        const double coef_err = std::abs(b) * (r[2 + 2 * j].err_abs + r[3 + 2 * j].err_abs);
        const Complex cpow = branch_pow(c, s + double(j));
        Complex others = 1;  // prod_{i != j} (s + i)
        for (int i = 0; i < A; ++i) {
            if (i != j) others *= s + double(i);
        }
        entire += coef * cpow * others;
        entire_err += coef_err * std::abs(cpow * others);
        if (!pole) {
            lambda += coef * cpow / (s + double(j));
            lambda_err += coef_err * std::abs(cpow / (s + double(j)));
        }
    }
    RegularizedMellin out;
    out.lambda_entire = {entire, entire_err, r[0].terms_used};
    if (!pole) out.lambda = EvalResult{lambda, lambda_err, r[0].terms_used};
    return out;
}

}  // namespace itpl
