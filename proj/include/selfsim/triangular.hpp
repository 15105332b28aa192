#pragma once

// The group of p-ary tree automorphisms whose portrait labels are powers of
// the full cycle sigma = (0 1 ... p-1). Elements are tableaux of reduced
// polynomials [f_0, f_1(x_1), f_2(x_1,x_2), ...]: letter k+1 of the image is
// x_{k+1} + f_k(x_1..x_k). This header implements the tableau calculus, the
// abelianization map alpha, the first diagonal of the level matrices, the
// principal columns, polynomial heights, uniseriality, and the Sylow order
// count.

#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/fp.hpp"
#include "selfsim/mealy.hpp"
#include "selfsim/poly.hpp"
#include "selfsim/recursion.hpp"

namespace selfsim {

inline void require_cycle_labels(const Element& g) {
    if (!is_in_Kp(g))
        throw std::domain_error("element's portrait labels are not powers of the cycle");
}

// ---------------------------------------------------------------------------
// Tableaux.

struct Tableau {
    std::uint32_t p = 2;
    std::vector<ReducedPoly> polys;  // polys[k] = f_k in variables x_1..x_k

    unsigned depth() const { return static_cast<unsigned>(polys.size()); }

    // Image of a word of length <= depth.
    Word apply(const Word& w) const {
        if (w.size() > polys.size())
            throw std::invalid_argument("word longer than tableau depth");
        Word out(w.size());
        std::vector<std::uint32_t> prefix;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] >= p) throw std::invalid_argument("letter out of range");
            out[k] = static_cast<std::uint8_t>((w[k] + polys[k].eval(prefix)) % p);
            prefix.push_back(w[k]);
        }
        return out;
    }

    friend bool operator==(const Tableau& a, const Tableau& b) {
        return a.p == b.p && a.polys == b.polys;
    }
};

inline Tableau identity_tableau(std::uint32_t p, unsigned n) {
    require_prime(p);
    Tableau t;
    t.p = p;
    t.polys.assign(n, ReducedPoly(p));
    return t;
}

namespace detail {
inline void tableau_walk(const Element& g, unsigned level, std::size_t index,
                         std::size_t stride, unsigned n,
                         std::vector<std::vector<std::uint32_t>>& values) {
    values[level][index] = g.root_perm()[0];
    if (level + 1 >= n) return;
    for (unsigned x = 0; x < g.alphabet(); ++x)
        tableau_walk(g.section(static_cast<std::uint8_t>(x)), level + 1,
                     index + x * stride, stride * g.alphabet(), n, values);
}
}  // namespace detail

// The tableau of g to depth n: f_k interpolates the sigma-exponent of the
// section of g over the level-k vertices (vertex index base-p, first letter =
// least significant digit).
inline Tableau tableau_of(const Element& g, unsigned n) {
    if (n < 1) throw std::invalid_argument("tableau depth must be at least 1");
    std::uint32_t p = g.alphabet();
    require_prime(p);
    require_cycle_labels(g);
    std::vector<std::vector<std::uint32_t>> values(n);
    std::size_t size = 1;
    for (unsigned k = 0; k < n; ++k, size *= p) values[k].assign(size, 0);
    detail::tableau_walk(g, 0, 0, 1, n, values);
    Tableau t;
    t.p = p;
    for (unsigned k = 0; k < n; ++k) t.polys.push_back(reduced_interpolate(p, values[k]));
    return t;
}

// Tableau of the composition "s after t": level-k entry is
// t_k(x) + s_k evaluated at the t-image of the prefix.
inline Tableau tableau_mul(const Tableau& s, const Tableau& t) {
    if (s.p != t.p || s.polys.size() != t.polys.size())
        throw std::invalid_argument("tableau depth or modulus mismatch");
    Tableau r;
    r.p = s.p;
    std::vector<ReducedPoly> shifted;  // x_i + t_{i-1}(x_1..x_{i-1})
    for (std::size_t k = 0; k < s.polys.size(); ++k) {
        r.polys.push_back(t.polys[k] + s.polys[k].substitute(shifted));
        shifted.push_back(ReducedPoly::variable(s.p, k + 1) + t.polys[k]);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Abelianization.

// Eventually periodic sequence over F_p in canonical form (minimal period,
// then minimal preperiod).
class AlphaSequence {
public:
    static AlphaSequence from_parts(std::uint32_t p, std::vector<std::uint32_t> pre,
                                    std::vector<std::uint32_t> per) {
        require_prime(p);
        if (per.empty()) throw std::invalid_argument("period must be nonempty");
        for (auto& v : pre) v %= p;
        for (auto& v : per) v %= p;
        // Minimal period.
        for (std::size_t len = 1; len <= per.size(); ++len) {
            if (per.size() % len) continue;
            bool ok = true;
            for (std::size_t i = len; i < per.size(); ++i) ok &= (per[i] == per[i % len]);
            if (ok) {
                per.resize(len);
                break;
            }
        }
        // Minimal preperiod: absorb matching tail into the cycle.
        while (!pre.empty() && pre.back() == per.back()) {
            pre.pop_back();
            per.insert(per.begin(), per.back());
            per.pop_back();
        }
        AlphaSequence a;
        a.p_ = p;
        a.pre_ = std::move(pre);
        a.per_ = std::move(per);
        return a;
    }

    std::uint32_t modulus() const { return p_; }
    const std::vector<std::uint32_t>& preperiod() const { return pre_; }
    const std::vector<std::uint32_t>& period() const { return per_; }

    std::uint32_t at(std::size_t k) const {
        if (k < pre_.size()) return pre_[k];
        return per_[(k - pre_.size()) % per_.size()];
    }

    bool is_zero() const {
        for (auto v : pre_)
            if (v) return false;
        for (auto v : per_)
            if (v) return false;
        return true;
    }

    friend AlphaSequence operator+(const AlphaSequence& a, const AlphaSequence& b) {
        if (a.p_ != b.p_) throw std::invalid_argument("mixed moduli");
        std::size_t L = std::max(a.pre_.size(), b.pre_.size());
        std::size_t P = std::lcm(a.per_.size(), b.per_.size());
        std::vector<std::uint32_t> pre(L), per(P);
        for (std::size_t k = 0; k < L; ++k) pre[k] = (a.at(k) + b.at(k)) % a.p_;
        for (std::size_t i = 0; i < P; ++i) per[i] = (a.at(L + i) + b.at(L + i)) % a.p_;
        return from_parts(a.p_, std::move(pre), std::move(per));
    }
    friend bool operator==(const AlphaSequence& a, const AlphaSequence& b) {
        return a.p_ == b.p_ && a.pre_ == b.pre_ && a.per_ == b.per_;
    }

    std::string str() const {
        auto list = [](const std::vector<std::uint32_t>& v) {
            std::string s = "[";
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (i ? "," : "") + std::to_string(v[i]);
            return s + "]";
        };
        return "pre=" + list(pre_) + " period=" + list(per_);
    }

private:
    std::uint32_t p_ = 2;
    std::vector<std::uint32_t> pre_, per_;
};

// alpha_k(g) = sum of the sigma-exponents over the level-k vertices of the
// portrait, i.e. over all sections at level k. Computed by iterating the
// state-counting vector c_{k+1}(q) = sum over transitions into q of c_k, with
// exact cycle detection on the c vectors.
inline AlphaSequence alpha(const Element& g) {
    std::uint32_t p = g.alphabet();
    require_prime(p);
    require_cycle_labels(g);
    Machine& m = *g.machine();
    auto states = m.reachable(g.canonical_state());
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
    std::vector<std::uint32_t> exps(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) exps[i] = m.out_perm(states[i])[0];

    std::vector<std::uint32_t> c(states.size(), 0);
    c[0] = 1;  // reachable() lists the root state first
    std::map<std::vector<std::uint32_t>, std::size_t> seen;
    std::vector<std::uint32_t> alphas;
    constexpr std::size_t kMaxSteps = 1 << 16;
    for (;;) {
        auto it = seen.find(c);
        if (it != seen.end()) {
            std::size_t start = it->second;
            std::vector<std::uint32_t> pre(alphas.begin(),
                                           alphas.begin() + static_cast<long>(start));
            std::vector<std::uint32_t> per(alphas.begin() + static_cast<long>(start),
                                           alphas.end());
            return AlphaSequence::from_parts(p, std::move(pre), std::move(per));
        }
        if (alphas.size() > kMaxSteps)
            throw std::runtime_error("abelianization cycle not found within 65536 levels");
        seen.emplace(c, alphas.size());
        std::uint64_t dot = 0;
        for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * exps[i];
        alphas.push_back(static_cast<std::uint32_t>(dot % p));
        std::vector<std::uint32_t> next(c.size(), 0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!c[i]) continue;
            for (unsigned x = 0; x < p; ++x) {
                std::size_t j = index.at(m.transition(states[i], x));
                next[j] = (next[j] + c[i]) % p;
            }
        }
        c = std::move(next);
    }
}

// ---------------------------------------------------------------------------
// First diagonal of the level matrices.

inline unsigned padic_valuation(std::size_t n, std::uint32_t p) {
    unsigned v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

// s_n = alpha_{v_p(n)}(g) for n = 1..L (the diagonal is 1-indexed: the
// returned [i] is s_{i+1}, the matrix entry (i, i+1)).
inline std::vector<std::uint32_t> first_diagonal(const Element& g, std::size_t L) {
    AlphaSequence a = alpha(g);
    std::vector<std::uint32_t> out(L);
    for (std::size_t n = 1; n <= L; ++n) out[n - 1] = a.at(padic_valuation(n, g.alphabet()));
    return out;
}

// Reads the same diagonal from the level matrix directly.
inline std::vector<std::uint32_t> first_diagonal_oracle(const Element& g, std::size_t L,
                                                        const MarkedBasis& basis) {
    std::uint32_t p = g.alphabet();
    unsigned n = 0;
    std::size_t size = 1;
    while (size < L + 1) {
        size *= p;
        ++n;
    }
    FpMatrix m = level_matrix(g, n, basis);
    std::vector<std::uint32_t> out(L);
    for (std::size_t i = 1; i <= L; ++i) out[i - 1] = m.at(i - 1, i);
    return out;
}

// ---------------------------------------------------------------------------
// Principal columns.

// Coefficients of f on the monomial products: slot j holds the coefficient of
// the monomial whose exponents are the base-p digits of j (x_1 = least
// significant digit). f must involve at most k variables.
inline std::vector<std::uint32_t> monomial_coeff_vector(const ReducedPoly& f, unsigned k) {
    std::uint32_t p = f.modulus();
    std::size_t size = 1;
    for (unsigned i = 0; i < k; ++i) size *= p;
    std::vector<std::uint32_t> out(size, 0);
    for (const auto& [key, c] : f.terms()) {
        if (key.size() > k)
            throw std::invalid_argument("polynomial involves more variables than expected");
        std::size_t idx = 0, mult = 1;
        for (std::size_t i = 0; i < key.size(); ++i, mult *= p) idx += key[i] * mult;
        out[idx] = c;
    }
    return out;
}

inline ReducedPoly poly_from_monomial_coeffs(const std::vector<std::uint32_t>& v,
                                             std::uint32_t p) {
    require_prime(p);
    std::size_t k = 0, size = 1;
    while (size < v.size()) {
        size *= p;
        ++k;
    }
    if (size != v.size())
        throw std::invalid_argument("coefficient vector length is not a power of p");
    ReducedPoly f(p);
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        if (v[idx] % p == 0) continue;
        ReducedPoly::Key key(k, 0);
        std::size_t rest = idx;
        for (std::size_t i = 0; i < k; ++i, rest /= p)
            key[i] = static_cast<std::uint8_t>(rest % p);
        f.add_term(key, v[idx]);
    }
    return f;
}

// Columns number p^0, p^1, ..., p^{n-1} of the level-n matrix in the monomial
// basis, truncated to their above-diagonal parts (lengths 1, p, ..., p^{n-1}).
// All remaining columns are products of these (see reconstruct_column).
inline std::vector<std::vector<std::uint32_t>> principal_columns(const Element& g,
                                                                 unsigned n) {
    if (n < 1) throw std::invalid_argument("need at least one level");
    std::uint32_t p = g.alphabet();
    require_prime(p);
    require_cycle_labels(g);
    FpMatrix m = level_matrix(g, n, MarkedBasis::monomial(p));
    std::vector<std::vector<std::uint32_t>> cols;
    std::size_t len = 1;
    for (unsigned k = 0; k < n; ++k, len *= p) {
        std::vector<std::uint32_t> col(len);
        for (std::size_t r = 0; r < len; ++r) col[r] = m.at(r, len);
        cols.push_back(std::move(col));
    }
    return cols;
}

// Column j of the same matrix, rebuilt from the principal columns only:
// with u_{k+1} the polynomial whose monomial coefficients are principal
// column k, column j is the coefficient vector of
//   prod_k (x_{k+1} + u_{k+1})^{r_{k+1}},   j = sum r_{k+1} p^k.
inline std::vector<std::uint32_t> reconstruct_column(
    const std::vector<std::vector<std::uint32_t>>& cols, std::size_t j, unsigned n,
    std::uint32_t p) {
    std::size_t size = 1;
    for (unsigned k = 0; k < n; ++k) size *= p;
    if (j >= size) throw std::invalid_argument("column index out of range");
    if (cols.size() < n) throw std::invalid_argument("need n principal columns");
    ReducedPoly prod = ReducedPoly::constant(p, 1);
    std::size_t rest = j;
    for (unsigned k = 0; k < n; ++k, rest /= p) {
        unsigned r = static_cast<unsigned>(rest % p);
        if (!r) continue;
        ReducedPoly factor =
            ReducedPoly::variable(p, k + 1) + poly_from_monomial_coeffs(cols[k], p);
        prod = prod * factor.pow(r);
    }
    return monomial_coeff_vector(prod, n);
}

// ---------------------------------------------------------------------------
// Heights. The height of a nonzero reduced polynomial is the largest "digit
// value" sum(k_i p^{i-1}) over its monomials x_1^{k_1} x_2^{k_2} ...; the
// height of 0 is -1 by convention. Four independent algorithms.

inline long long height_brute(const ReducedPoly& f) {
    if (f.is_zero()) return -1;
    std::uint32_t p = f.modulus();
    long long best = 0;
    for (const auto& [key, c] : f.terms()) {
        long long val = 0, mult = 1;
        for (std::size_t i = 0; i < key.size(); ++i, mult *= p) val += key[i] * mult;
        best = std::max(best, val);
    }
    return best;
}

namespace detail {
// Substitute a constant for one variable (1-based), keeping the others.
inline ReducedPoly pin_var(const ReducedPoly& f, std::size_t var, std::uint32_t value) {
    std::size_t n = std::max(f.nvars(), var);
    std::vector<ReducedPoly> args;
    for (std::size_t i = 1; i <= n; ++i)
        args.push_back(i == var ? ReducedPoly::constant(f.modulus(), value)
                                : ReducedPoly::variable(f.modulus(), i));
    return f.substitute(args);
}
// Substitute x_1 = value and rename x_{i+1} -> x_i.
inline ReducedPoly pin_first_and_shift(const ReducedPoly& f, std::uint32_t value) {
    std::vector<ReducedPoly> args{ReducedPoly::constant(f.modulus(), value)};
    for (std::size_t i = 2; i <= f.nvars(); ++i)
        args.push_back(ReducedPoly::variable(f.modulus(), i - 1));
    return f.substitute(args);
}
}  // namespace detail

// Strips the last variable: the j-th transform is
// R_j(f)(x_1..x_{n-1}) = sum_x C(x, p-1-j) f(x_1..x_{n-1}, x); the largest j
// with R_j nonzero is the top base-p digit of the height.
inline long long height_via_last_var(const ReducedPoly& f, unsigned nvars) {
    if (f.is_zero()) return -1;
    if (f.nvars() > nvars)
        throw std::invalid_argument("polynomial involves more variables than stated");
    if (nvars == 0) return 0;
    std::uint32_t p = f.modulus();
    for (unsigned j = p; j-- > 0;) {
        ReducedPoly r(p);
        for (std::uint32_t x = 0; x < p; ++x) {
            std::uint32_t c = binom_mod(x, p - 1 - j, p);
            if (c) r = r + detail::pin_var(f, nvars, x).scale(c);
        }
        if (!r.is_zero()) {
            long long high = 1;
            for (unsigned i = 1; i < nvars; ++i) high *= p;
            return height_via_last_var(r, nvars - 1) + static_cast<long long>(j) * high;
        }
    }
    throw std::logic_error("nonzero polynomial with all last-variable transforms zero");
}

// Strips the first variable: h_k = sum_x C(x, p-1-k) f(x, ...) (renamed down);
// the height is j_1 + p * max height where j_1 is the largest k attaining the
// maximal height among the h_k.
inline long long height_via_first_var(const ReducedPoly& f) {
    if (f.is_zero()) return -1;
    if (f.is_constant()) return 0;
    std::uint32_t p = f.modulus();
    long long best = -1;
    unsigned j1 = 0;
    for (unsigned k = 0; k < p; ++k) {
        ReducedPoly h(p);
        for (std::uint32_t x = 0; x < p; ++x) {
            std::uint32_t c = binom_mod(x, p - 1 - k, p);
            if (c) h = h + detail::pin_first_and_shift(f, x).scale(c);
        }
        long long gh = height_via_first_var(h);
        if (gh >= best) {
            best = gh;
            j1 = k;
        }
    }
    return j1 + static_cast<long long>(p) * best;
}

// p = 2 shortcut through the two cofactors f(0,...) and f(1,...).
inline long long height_p2(const ReducedPoly& f) {
    if (f.modulus() != 2) throw std::invalid_argument("this recursion is specific to p=2");
    if (f.is_zero()) return -1;
    if (f.is_constant()) return 0;
    long long g0 = height_p2(detail::pin_first_and_shift(f, 0));
    long long g1 = height_p2(detail::pin_first_and_shift(f, 1));
    return g0 == g1 ? 2 * g0 : 2 * std::max(g0, g1) + 1;
}

inline long long height(const ReducedPoly& f) { return height_brute(f); }

// ---------------------------------------------------------------------------
// Uniseriality.

struct UniserialReport {
    bool uniserial = false;
    std::size_t preperiod = 0, period = 1;
    // witness[k] = index of a generator with alpha_k != 0, or -1; length
    // preperiod + period (exactly the levels that decide the general case).
    std::vector<int> witness;
};

// The action is uniserial iff every level-k abelianization alpha_k is nonzero
// on some generator; decided exactly from the eventually periodic alphas.
inline UniserialReport is_uniserial(const std::vector<Element>& gens) {
    std::vector<AlphaSequence> alphas;
    std::size_t L = 0, P = 1;
    for (const auto& g : gens) {
        alphas.push_back(alpha(g));
        L = std::max(L, alphas.back().preperiod().size());
        P = std::lcm(P, alphas.back().period().size());
    }
    UniserialReport rep;
    rep.preperiod = L;
    rep.period = P;
    rep.uniserial = true;
    for (std::size_t k = 0; k < L + P; ++k) {
        int found = -1;
        for (std::size_t i = 0; i < alphas.size() && found < 0; ++i)
            if (alphas[i].at(k) != 0) found = static_cast<int>(i);
        rep.witness.push_back(found);
        if (found < 0) rep.uniserial = false;
    }
    return rep;
}

namespace detail {
// Rank of a list of F_p vectors via Gaussian elimination.
inline std::size_t rank_of(std::vector<std::vector<std::uint32_t>> rows, std::uint32_t p) {
    std::size_t rank = 0;
    if (rows.empty()) return 0;
    std::size_t width = rows[0].size();
    for (std::size_t col = 0; col < width && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        while (piv < rows.size() && rows[piv][col] == 0) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[rank]);
        std::uint32_t inv = Fp(rows[rank][col], p).inv().v;
        for (auto& v : rows[rank]) v = static_cast<std::uint32_t>(std::uint64_t(v) * inv % p);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r][col] == 0) continue;
            std::uint32_t f = rows[r][col];
            for (std::size_t c2 = col; c2 < width; ++c2)
                rows[r][c2] = static_cast<std::uint32_t>(
                    (rows[r][c2] + std::uint64_t(p - f) * rows[rank][c2]) % p);
        }
        ++rank;
    }
    return rank;
}
}  // namespace detail

// Brute-force uniseriality at level n: in the monomial-basis level matrices,
// the images (pi(g) - I) U_{k+1} taken over all generators must span U_k for
// every k < p^n - 1, where U_m is the span of the first m+1 basis vectors.
inline bool uniserial_direct(const std::vector<Element>& gens, unsigned n) {
    if (n == 0) return true;
    if (gens.empty()) return false;
    std::uint32_t p = gens[0].alphabet();
    require_prime(p);
    MarkedBasis basis = MarkedBasis::monomial(p);
    std::vector<FpMatrix> mats;
    std::size_t size = 1;
    for (unsigned k = 0; k < n; ++k) size *= p;
    for (const auto& g : gens) {
        require_cycle_labels(g);
        mats.push_back(level_matrix(g, n, basis) - FpMatrix::identity(size, p));
    }
    for (std::size_t k = 0; k + 1 < size; ++k) {
        // Candidate vectors: (pi(g)-I) e_j for j <= k+1; they live in U_k.
        std::vector<std::vector<std::uint32_t>> vecs;
        for (const auto& m : mats)
            for (std::size_t j = 0; j <= k + 1; ++j) {
                std::vector<std::uint32_t> v(k + 1);
                bool nonzero = false;
                for (std::size_t r = 0; r <= k; ++r) {
                    v[r] = m.at(r, j);
                    nonzero |= (v[r] != 0);
                }
                if (nonzero) vecs.push_back(std::move(v));
            }
        if (detail::rank_of(std::move(vecs), p) != k + 1) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Order of the level-n quotient: BFS closure of the rooted cycle generators
// at every vertex above level n, as permutations of X^n. Expected order is
// p^((p^n - 1)/(p - 1)).
inline std::uint64_t sylow_order_check(std::uint32_t p, unsigned n, std::uint64_t cap) {
    require_prime(p);
    std::size_t size = 1;
    for (unsigned k = 0; k < n; ++k) {
        size *= p;
        if (size > 65536) throw std::invalid_argument("level too large");
    }
    using P = std::vector<std::uint16_t>;
    // Generators: for each vertex v with |v| < n, add 1 (mod p) to the digit
    // at position |v| of every index whose low digits spell v.
    std::vector<P> gens;
    std::size_t stride = 1;
    for (unsigned lv = 0; lv < n; ++lv, stride *= p) {
        for (std::size_t v = 0; v < stride; ++v) {
            P perm(size);
            for (std::size_t w = 0; w < size; ++w) {
                if (w % stride == v) {
                    std::size_t digit = (w / stride) % p;
                    perm[w] = static_cast<std::uint16_t>(w - digit * stride +
                                                         ((digit + 1) % p) * stride);
                } else {
                    perm[w] = static_cast<std::uint16_t>(w);
                }
            }
            gens.push_back(std::move(perm));
        }
    }
    P id(size);
    for (std::size_t i = 0; i < size; ++i) id[i] = static_cast<std::uint16_t>(i);
    std::set<P> seen{id};
    std::vector<P> frontier{id};
    while (!frontier.empty()) {
        std::vector<P> next;
        for (const auto& cur : frontier)
            for (const auto& gperm : gens) {
                P prod(size);
                for (std::size_t i = 0; i < size; ++i) prod[i] = cur[gperm[i]];
                if (seen.insert(prod).second) {
                    if (seen.size() > cap) throw ClosureCapError(cap);
                    next.push_back(std::move(prod));
                }
            }
        frontier = std::move(next);
    }
    return seen.size();
}

}  // namespace selfsim
