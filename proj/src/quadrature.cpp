#include "itpl/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include "itpl/error.hpp"

namespace itpl {

namespace {

GaussRule make_rule(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Integration matrix: the Lagrange basis l_j restricted to [-1, x_k] is a
    // polynomial of degree n-1, integrated exactly by an n-point rule on that subinterval.
    r.integration.assign(n, std::vector<double>(n, 0.0));
    for (int k = 0; k < n; ++k) {
        double half = 0.5 * (r.nodes[k] + 1.0);
        for (int q = 0; q < n; ++q) {
            double y = -1.0 + half * (r.nodes[q] + 1.0);
            double wq = half * r.weights[q];
            for (int j = 0; j < n; ++j) {
                double l = 1.0;
                for (int m = 0; m < n; ++m) {
                    if (m != j) l *= (y - r.nodes[m]) / (r.nodes[j] - r.nodes[m]);
                }
                r.integration[k][j] += wq * l;
            }
        }
    }
    return r;
}

struct Panel {
    double a, b;
    Complex value;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

struct PanelSum {
    Complex value;
    double mass;  // sum of |w f|, scale of the rounding error
};

PanelSum gl_panel(const std::function<Complex(double)>& f, double a, double b) {
    const GaussRule& g = gauss_legendre(kPanelOrder);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    Complex s = 0;
    double mass = 0;
    for (int i = 0; i < kPanelOrder; ++i) {
        Complex v = g.weights[i] * f(mid + half * g.nodes[i]);
        s += v;
        mass += std::abs(v);
    }
    return {s * half, mass * std::abs(half)};
}

Panel make_panel(const std::function<Complex(double)>& f, double a, double b) {
    double m = 0.5 * (a + b);
    PanelSum whole = gl_panel(f, a, b);
    PanelSum left = gl_panel(f, a, m), right = gl_panel(f, m, b);
    Complex split = left.value + right.value;
    // Rounding floor keeps the estimate honest when both rules are exact.
    return {a, b, split, std::abs(whole.value - split) + 1e-14 * (left.mass + right.mass)};
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

EvalResult integrate_adaptive(const std::function<Complex(double)>& f, double a, double b,
                              double tol, int max_panels) {
    if (!(tol > 0)) throw DomainError("integrate_adaptive: tol must be positive");
    if (a == b) return {};
    std::priority_queue<Panel> heap;
    heap.push(make_panel(f, a, b));
    Complex total = heap.top().value;
    double err = heap.top().err;
    int panels = 1;
    while (err > tol) {
        if (panels >= max_panels) {
            throw AccuracyError("integrate_adaptive: panel cap exceeded", total, err);
        }
        Panel p = heap.top();
        heap.pop();
        double m = 0.5 * (p.a + p.b);
        Panel l = make_panel(f, p.a, m);
        Panel r = make_panel(f, m, p.b);
        total += l.value + r.value - p.value;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
        ++panels;
        // Re-sum to avoid drift in the running totals.
        if (panels % 64 == 0) {
            std::priority_queue<Panel> copy = heap;
            total = 0;
            err = 0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().err;
                copy.pop();
            }
        }
    }
    return {total, err, long(panels) * 3 * kPanelOrder};
}

}  // namespace itpl
