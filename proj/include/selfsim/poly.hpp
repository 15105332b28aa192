#pragma once

// Polynomial functions F_p^n -> F_p in reduced form. Since x^p = x on F_p,
// every exponent e >= 1 is folded to ((e-1) mod (p-1)) + 1, which keeps the
// representation unique as a function while preserving the exponents 1..p-1
// needed by the height filtration.
//
// Exponent keys are stored little-endian: position 0 of the key is x_1.
// Trailing zero exponents are trimmed, so the constant term has an empty key.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/fp.hpp"

namespace selfsim {

class ReducedPoly {
public:
    using Key = std::vector<std::uint8_t>;

    explicit ReducedPoly(std::uint32_t p = 2) : p_(p) { require_prime(p); }

    static ReducedPoly zero(std::uint32_t p) { return ReducedPoly(p); }
    static ReducedPoly constant(std::uint32_t p, std::uint64_t c) {
        ReducedPoly f(p);
        f.add_term({}, c % p);
        return f;
    }
    // x_i, 1-based.
    static ReducedPoly variable(std::uint32_t p, std::size_t i) {
        if (i == 0) throw std::invalid_argument("variables are indexed from 1");
        ReducedPoly f(p);
        Key k(i, 0);
        k[i - 1] = 1;
        f.add_term(k, 1);
        return f;
    }

    std::uint32_t modulus() const { return p_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
    }
    std::size_t nvars() const {
        std::size_t n = 0;
        for (const auto& [k, c] : terms_) n = std::max(n, k.size());
        return n;
    }
    const std::map<Key, std::uint32_t>& terms() const { return terms_; }

    std::uint32_t coeff(Key k) const {
        trim(k);
        auto it = terms_.find(k);
        return it == terms_.end() ? 0 : it->second;
    }
    std::uint32_t constant_term() const { return coeff({}); }

    void add_term(Key k, std::uint64_t c) {
        trim(k);
        std::uint32_t v = static_cast<std::uint32_t>(((terms_.count(k) ? terms_[k] : 0) + c) % p_);
        if (v == 0)
            terms_.erase(k);
        else
            terms_[k] = v;
    }

    friend ReducedPoly operator+(const ReducedPoly& a, const ReducedPoly& b) {
        a.check(b);
        ReducedPoly r = a;
        for (const auto& [k, c] : b.terms_) r.add_term(k, c);
        return r;
    }
    friend ReducedPoly operator-(const ReducedPoly& a, const ReducedPoly& b) {
        a.check(b);
        ReducedPoly r = a;
        for (const auto& [k, c] : b.terms_) r.add_term(k, a.p_ - c);
        return r;
    }
    friend ReducedPoly operator*(const ReducedPoly& a, const ReducedPoly& b) {
        a.check(b);
        ReducedPoly r(a.p_);
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) {
                Key k(std::max(ka.size(), kb.size()), 0);
                for (std::size_t i = 0; i < k.size(); ++i) {
                    unsigned e = (i < ka.size() ? ka[i] : 0) + (i < kb.size() ? kb[i] : 0);
                    k[i] = reduce_exp(e, a.p_);
                }
                r.add_term(k, static_cast<std::uint64_t>(ca) * cb);
            }
        return r;
    }
    ReducedPoly scale(std::uint64_t c) const {
        ReducedPoly r(p_);
        for (const auto& [k, v] : terms_) r.add_term(k, static_cast<std::uint64_t>(v) * (c % p_));
        return r;
    }
    ReducedPoly pow(unsigned e) const {
        ReducedPoly acc = constant(p_, 1);
        for (unsigned i = 0; i < e; ++i) acc = acc * *this;
        return acc;
    }

    friend bool operator==(const ReducedPoly& a, const ReducedPoly& b) {
        return a.p_ == b.p_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const ReducedPoly& a, const ReducedPoly& b) { return !(a == b); }

    std::uint32_t eval(const std::vector<std::uint32_t>& point) const {
        std::uint64_t total = 0;
        for (const auto& [k, c] : terms_) {
            std::uint64_t term = c;
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (!k[i]) continue;
                if (i >= point.size())
                    throw std::invalid_argument("evaluation point has too few coordinates");
                term = term * Fp(point[i] % p_, p_).pow(k[i]).v % p_;
            }
            total = (total + term) % p_;
        }
        return static_cast<std::uint32_t>(total);
    }

    // Substitute args[i] for x_{i+1}; args must cover every variable that occurs.
    ReducedPoly substitute(const std::vector<ReducedPoly>& args) const {
        ReducedPoly r(p_);
        for (const auto& [k, c] : terms_) {
            ReducedPoly term = constant(p_, c);
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (!k[i]) continue;
                if (i >= args.size())
                    throw std::invalid_argument("substitution list has too few entries");
                term = term * args[i].pow(k[i]);
            }
            r = r + term;
        }
        return r;
    }

    // Coefficient of x_var^e (var 1-based), as a polynomial not involving x_var.
    ReducedPoly coeff_of(std::size_t var, unsigned e) const {
        if (var == 0) throw std::invalid_argument("variables are indexed from 1");
        ReducedPoly r(p_);
        for (const auto& [k, c] : terms_) {
            unsigned have = var - 1 < k.size() ? k[var - 1] : 0;
            if (have != e) continue;
            Key rest = k;
            if (var - 1 < rest.size()) rest[var - 1] = 0;
            r.add_term(rest, c);
        }
        return r;
    }

    unsigned degree_in(std::size_t var) const {
        unsigned d = 0;
        for (const auto& [k, c] : terms_)
            if (var - 1 < k.size()) d = std::max(d, static_cast<unsigned>(k[var - 1]));
        return d;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        // Sort by total degree, then by exponent key, so output is stable.
        std::vector<std::pair<Key, std::uint32_t>> order(terms_.begin(), terms_.end());
        std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            unsigned da = 0, db = 0;
            for (auto e : a.first) da += e;
            for (auto e : b.first) db += e;
            if (da != db) return da < db;
            return a.first < b.first;
        });
        std::ostringstream out;
        bool first = true;
        for (const auto& [k, c] : order) {
            if (!first) out << " + ";
            first = false;
            bool havevar = false;
            for (auto e : k) havevar |= (e != 0);
            if (c != 1 || !havevar) out << c;
            bool sep = (c != 1 || !havevar);
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (!k[i]) continue;
                if (sep) out << "*";
                sep = true;
                out << "x" << (i + 1);
                if (k[i] > 1) out << "^" << static_cast<unsigned>(k[i]);
            }
        }
        return out.str();
    }

    static std::uint8_t reduce_exp(unsigned e, std::uint32_t p) {
        if (e == 0) return 0;
        return static_cast<std::uint8_t>((e - 1) % (p - 1) + 1);
    }

private:
    void check(const ReducedPoly& b) const {
        if (p_ != b.p_) throw std::invalid_argument("mixed moduli in polynomial arithmetic");
    }
    static void trim(Key& k) {
        while (!k.empty() && k.back() == 0) k.pop_back();
    }

    std::uint32_t p_;
    std::map<Key, std::uint32_t> terms_;
};

// Indicator of the point a in F_p: 1 - (x - a)^(p-1), expanded and reduced.
inline ReducedPoly point_indicator(std::uint32_t p, std::size_t var, std::uint32_t a) {
    ReducedPoly x = ReducedPoly::variable(p, var);
    ReducedPoly shifted = x - ReducedPoly::constant(p, a);
    return ReducedPoly::constant(p, 1) - shifted.pow(p - 1);
}

// Unique reduced polynomial taking the given values on the full grid F_p^n.
// values[m] is the value at the point whose coordinates are the base-p digits
// of m, least significant digit = x_1. values.size() must be a power of p.
inline ReducedPoly reduced_interpolate(std::uint32_t p, const std::vector<std::uint32_t>& values) {
    require_prime(p);
    std::size_t n = 0, grid = 1;
    while (grid < values.size()) {
        grid *= p;
        ++n;
    }
    if (grid != values.size())
        throw std::invalid_argument("grid size is not a power of the modulus");
    ReducedPoly f(p);
    for (std::size_t m = 0; m < values.size(); ++m) {
        if (values[m] % p == 0) continue;
        ReducedPoly delta = ReducedPoly::constant(p, values[m] % p);
        std::size_t rest = m;
        for (std::size_t i = 1; i <= n; ++i, rest /= p)
            delta = delta * point_indicator(p, i, static_cast<std::uint32_t>(rest % p));
        f = f + delta;
    }
    return f;
}

}  // namespace selfsim
