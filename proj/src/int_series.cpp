#include "itpl/int_series.hpp"

#include "itpl/error.hpp"

namespace itpl {

IntSeries euler_product(std::size_t count) {
    IntSeries e(count, 0);
    if (count == 0) return e;
    e[0] = 1;
    for (long m = 1;; ++m) {
        long p1 = m * (3 * m - 1) / 2;
        long p2 = m * (3 * m + 1) / 2;
        if (std::size_t(p1) >= count) break;
        int sign = (m % 2 == 0) ? 1 : -1;
        e[p1] += sign;
        if (std::size_t(p2) < count) e[p2] += sign;
    }
    return e;
}

IntSeries series_power(const IntSeries& p, int k, std::size_t count) {
    if (p.empty() || p[0] != 1) throw DomainError("series_power: leading coefficient must be 1");
    IntSeries g(count, 0);
    if (count == 0) return g;
    g[0] = 1;
    std::vector<std::size_t> support;
    for (std::size_t j = 1; j < p.size() && j < count; ++j) {
        if (p[j] != 0) support.push_back(j);
    }
    for (std::size_t n = 1; n < count; ++n) {
        BigInt acc = 0;
        for (std::size_t j : support) {
            if (j > n) break;
            acc += (BigInt(k + 1) * BigInt(j) - BigInt(n)) * p[j] * g[n - j];
        }
        g[n] = acc / BigInt(n);
    }
    return g;
}

IntSeries series_multiply(const IntSeries& a, const IntSeries& b, std::size_t count) {
    IntSeries c(count, 0);
    for (std::size_t i = 0; i < a.size() && i < count; ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size() && i + j < count; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

IntSeries series_dilate(const IntSeries& a, int d, std::size_t count) {
    IntSeries c(count, 0);
    for (std::size_t i = 0; i < a.size() && i * d < count; ++i) c[i * d] = a[i];
    return c;
}

IntSeries series_shift(const IntSeries& a, int shift, std::size_t count) {
    IntSeries c(count, 0);
    for (std::size_t i = 0; i < a.size() && i + shift < count; ++i) c[i + shift] = a[i];
    return c;
}

BigInt divisor_sigma(long n, int k) {
    BigInt s = 0;
    for (long d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        s += boost::multiprecision::pow(BigInt(d), k);
        long e = n / d;
        if (e != d) s += boost::multiprecision::pow(BigInt(e), k);
    }
    return s;
}

IntSeries eisenstein_series(int weight, std::size_t count) {
    long c;
    int k;
    if (weight == 4) {
        c = 240;
        k = 3;
    } else if (weight == 6) {
        c = -504;
        k = 5;
    } else {
        throw DomainError("eisenstein_series: weight must be 4 or 6");
    }
    IntSeries e(count, 0);
    if (count == 0) return e;
    e[0] = 1;
    for (std::size_t n = 1; n < count; ++n) e[n] = c * divisor_sigma(long(n), k);
    return e;
}

IntSeries eta_quotient(const std::vector<std::pair<int, int>>& factors, std::size_t count) {
    long weighted = 0;
    for (auto [d, r] : factors) {
        if (d < 1) throw DomainError("eta_quotient: level divisor must be positive");
        weighted += long(d) * r;
    }
    if (weighted % 24 != 0 || weighted < 0) {
        throw DomainError("eta_quotient: q-order sum d r_d / 24 must be a non-negative integer");
    }
    IntSeries base = euler_product(count);
    IntSeries acc(count, 0);
    if (count > 0) acc[0] = 1;
    for (auto [d, r] : factors) {
        IntSeries factor = series_power(series_dilate(base, d, count), r, count);
        acc = series_multiply(acc, factor, count);
    }
    return series_shift(acc, int(weighted / 24), count);
}

}  // namespace itpl
