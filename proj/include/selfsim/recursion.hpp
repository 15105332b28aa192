#pragma once

// Matrix recursion over the group ring F_p[G] for a self-similar group G, and
// the exact finite representation matrices it induces level by level.
//
// For g in G the recursion is Xi(g)[i][j] = g|_{x_j} if g(x_j) = x_i, else 0,
// extended linearly to F_p[G]; it is a homomorphism into d x d matrices over
// the ring. A change to another function basis on X conjugates Xi by the
// scalar transition matrix S whose column j lists the delta-coordinates of
// the j-th basis vector.
//
// Indexing everywhere: row/column n of a level-k matrix encodes the word
// x_1 x_2 ... x_k through the base-d digits of n, least significant first.
// With that ordering the level matrices interleave blocks with stride d
// (entry (i + d r, j + d c) comes from block (i, j) at position (r, c)),
// and the stencil/decimation map on infinite matrices is literally the
// block structure of the recursion.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "selfsim/fp.hpp"
#include "selfsim/mealy.hpp"

namespace selfsim {

// Key identifying a group element inside ring terms: the canonical minimized
// id when the closure fits the cap, otherwise the raw word. The fallback keeps
// linear operations (and hence level matrices) total; it only weakens term
// merging, never correctness of anything linear.
using TermKey = std::variant<int, std::vector<std::pair<int, int>>>;

inline TermKey term_key(const Element& g) {
    try {
        return TermKey(g.canonical_state());
    } catch (const ClosureCapError&) {
        return TermKey(g.word());
    }
}

class GroupRingElem {
public:
    GroupRingElem(std::uint32_t p, MachineRef machine)
        : p_(p), machine_(std::move(machine)) {
        require_prime(p);
    }
    static GroupRingElem zero(std::uint32_t p, MachineRef machine) {
        return GroupRingElem(p, std::move(machine));
    }
    static GroupRingElem one(std::uint32_t p, const MachineRef& machine) {
        return of(Element::identity(machine), p);
    }
    static GroupRingElem of(const Element& g, std::uint32_t p, std::uint64_t coeff = 1) {
        GroupRingElem a(p, g.machine());
        a.add_term(g, coeff);
        return a;
    }

    std::uint32_t modulus() const { return p_; }
    const MachineRef& machine() const { return machine_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const std::map<TermKey, std::pair<Element, std::uint32_t>>& terms() const {
        return terms_;
    }

    void add_term(const Element& g, std::uint64_t coeff) {
        std::uint32_t c = static_cast<std::uint32_t>(coeff % p_);
        if (c == 0) return;
        TermKey key = term_key(g);
        auto it = terms_.find(key);
        if (it == terms_.end()) {
            terms_.emplace(std::move(key), std::make_pair(g, c));
        } else {
            it->second.second = (it->second.second + c) % p_;
            if (it->second.second == 0) terms_.erase(it);
        }
    }

    friend GroupRingElem operator+(const GroupRingElem& a, const GroupRingElem& b) {
        a.check(b);
        GroupRingElem r = a;
        for (const auto& [k, t] : b.terms_) r.add_term(t.first, t.second);
        return r;
    }
    friend GroupRingElem operator-(const GroupRingElem& a, const GroupRingElem& b) {
        a.check(b);
        GroupRingElem r = a;
        for (const auto& [k, t] : b.terms_) r.add_term(t.first, a.p_ - t.second);
        return r;
    }
    // Group ring product: composes elements pairwise. Needs canonical keys to
    // merge correctly; with fallback keys products may fail to cancel.
    friend GroupRingElem operator*(const GroupRingElem& a, const GroupRingElem& b) {
        a.check(b);
        GroupRingElem r(a.p_, a.machine_);
        for (const auto& [ka, ta] : a.terms_)
            for (const auto& [kb, tb] : b.terms_)
                r.add_term(compose(ta.first, tb.first),
                           static_cast<std::uint64_t>(ta.second) * tb.second);
        return r;
    }
    GroupRingElem scale(std::uint64_t c) const {
        GroupRingElem r(p_, machine_);
        for (const auto& [k, t] : terms_)
            r.add_term(t.first, static_cast<std::uint64_t>(t.second) * (c % p_));
        return r;
    }

    // Sum of coefficients: the map induced on the level-0 (one point) tree.
    std::uint32_t augmentation() const {
        std::uint64_t s = 0;
        for (const auto& [k, t] : terms_) s += t.second;
        return static_cast<std::uint32_t>(s % p_);
    }

    friend bool operator==(const GroupRingElem& a, const GroupRingElem& b) {
        if (a.p_ != b.p_ || a.terms_.size() != b.terms_.size()) return false;
        auto ia = a.terms_.begin();
        for (auto ib = b.terms_.begin(); ib != b.terms_.end(); ++ia, ++ib)
            if (ia->first != ib->first || ia->second.second != ib->second.second)
                return false;
        return true;
    }
    friend bool operator!=(const GroupRingElem& a, const GroupRingElem& b) {
        return !(a == b);
    }

private:
    void check(const GroupRingElem& b) const {
        if (p_ != b.p_) throw std::invalid_argument("mixed moduli in group ring");
        if (machine_ != b.machine_)
            throw std::invalid_argument("group ring elements from different machines");
    }

    std::uint32_t p_;
    MachineRef machine_;
    std::map<TermKey, std::pair<Element, std::uint32_t>> terms_;
};

struct RingMatrix {
    RingMatrix(unsigned d, const GroupRingElem& zero)
        : d_(d), e_(static_cast<std::size_t>(d) * d, zero) {}

    unsigned dim() const { return d_; }
    GroupRingElem& at(unsigned i, unsigned j) { return e_[i * d_ + j]; }
    const GroupRingElem& at(unsigned i, unsigned j) const { return e_[i * d_ + j]; }

    friend RingMatrix operator*(const RingMatrix& a, const RingMatrix& b) {
        if (a.d_ != b.d_) throw std::invalid_argument("ring matrix size mismatch");
        RingMatrix r(a.d_, a.e_[0].scale(0));
        for (unsigned i = 0; i < a.d_; ++i)
            for (unsigned j = 0; j < a.d_; ++j)
                for (unsigned k = 0; k < a.d_; ++k)
                    r.at(i, j) = r.at(i, j) + a.at(i, k) * b.at(k, j);
        return r;
    }
    friend RingMatrix operator+(const RingMatrix& a, const RingMatrix& b) {
        if (a.d_ != b.d_) throw std::invalid_argument("ring matrix size mismatch");
        RingMatrix r = a;
        for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = r.e_[i] + b.e_[i];
        return r;
    }
    friend bool operator==(const RingMatrix& a, const RingMatrix& b) {
        return a.d_ == b.d_ && a.e_ == b.e_;
    }

private:
    unsigned d_;
    std::vector<GroupRingElem> e_;
};

// Xi in the delta basis: entry (i, j) is g|_{x_j} when g(x_j) = x_i, else 0.
inline RingMatrix xi(const Element& g, std::uint32_t p) {
    unsigned d = g.alphabet();
    RingMatrix m(d, GroupRingElem::zero(p, g.machine()));
    Perm perm = g.root_perm();
    for (unsigned j = 0; j < d; ++j)
        m.at(perm[j], j) = GroupRingElem::of(g.section(static_cast<std::uint8_t>(j)), p);
    return m;
}

inline RingMatrix xi(const GroupRingElem& a) {
    unsigned d = a.machine()->alphabet();
    RingMatrix m(d, GroupRingElem::zero(a.modulus(), a.machine()));
    for (const auto& [key, term] : a.terms()) {
        RingMatrix part = xi(term.first, a.modulus());
        for (unsigned i = 0; i < d; ++i)
            for (unsigned j = 0; j < d; ++j)
                m.at(i, j) = m.at(i, j) + part.at(i, j).scale(term.second);
    }
    return m;
}

// A basis of the function space F_p^X, stored as the transition matrix S with
// column j = the j-th basis vector in delta coordinates. "Marked" means the
// 0-th vector is the constant-one function; marked bases are the ones whose
// level matrices truncate the infinite recursion consistently.
struct MarkedBasis {
    std::uint32_t p = 2;
    FpMatrix S, Sinv;
    bool marked = false;
    std::string name;

    static MarkedBasis from_matrix(const FpMatrix& s, std::string name = "custom") {
        MarkedBasis b;
        b.p = s.modulus();
        if (s.rows() != s.cols() || s.rows() != b.p)
            throw std::invalid_argument("basis matrix must be p x p");
        b.S = s;
        b.Sinv = s.inverse();  // throws std::domain_error when singular
        b.marked = true;
        for (std::size_t i = 0; i < s.rows(); ++i) b.marked &= (s.at(i, 0) == 1);
        b.name = std::move(name);
        return b;
    }
    // Indicator functions delta_x. Not marked.
    static MarkedBasis delta(std::uint32_t p) {
        return from_matrix(FpMatrix::identity(p, p), "delta");
    }
    // Monomials e_j(x) = x^j (e_0 = 1). Marked.
    static MarkedBasis monomial(std::uint32_t p) {
        FpMatrix s(p, p, p);
        for (std::uint32_t i = 0; i < p; ++i)
            for (std::uint32_t j = 0; j < p; ++j)
                s.set(i, j, j == 0 ? 1 : Fp(i, p).pow(j).v);
        return from_matrix(s, "monomial");
    }
    // Binomial-coefficient basis b_j(x) = C(p-1-x, j); the basis in which the
    // adding machine becomes one infinite Jordan cell. Marked.
    static MarkedBasis binomial(std::uint32_t p) {
        return from_matrix(binomial_transition(p).first, "binomial");
    }
};

// Conjugated recursion Xi_B = S^{-1} Xi S.
inline RingMatrix xi_in_basis(const GroupRingElem& a, const MarkedBasis& basis) {
    unsigned d = a.machine()->alphabet();
    if (basis.p != a.modulus() || basis.S.rows() != d)
        throw std::invalid_argument("basis does not match alphabet/field");
    RingMatrix x = xi(a);
    RingMatrix r(d, GroupRingElem::zero(a.modulus(), a.machine()));
    for (unsigned i = 0; i < d; ++i)
        for (unsigned j = 0; j < d; ++j) {
            GroupRingElem acc = GroupRingElem::zero(a.modulus(), a.machine());
            for (unsigned k = 0; k < d; ++k)
                for (unsigned l = 0; l < d; ++l) {
                    std::uint64_t c =
                        static_cast<std::uint64_t>(basis.Sinv.at(i, k)) * basis.S.at(l, j);
                    if (c) acc = acc + x.at(k, l).scale(c);
                }
            r.at(i, j) = acc;
        }
    return r;
}

inline RingMatrix xi_in_basis(const Element& g, std::uint32_t p, const MarkedBasis& basis) {
    return xi_in_basis(GroupRingElem::of(g, p), basis);
}

// Exact matrix of pi_n(a) on F_p^(X^n) in the tensor-power basis, inverse-lex
// index order. Level 0 is the 1x1 augmentation.
inline FpMatrix level_matrix(const GroupRingElem& a, unsigned n, const MarkedBasis& basis) {
    const std::uint32_t p = a.modulus();
    const unsigned d = a.machine()->alphabet();
    if (basis.p != p || basis.S.rows() != d)
        throw std::invalid_argument("basis does not match alphabet/field");
    std::size_t size = 1;
    for (unsigned k = 0; k < n; ++k) {
        size *= d;
        if (size > 65536)
            throw std::invalid_argument("level matrix would exceed 65536 rows");
    }

    // Symbols needed at each level: the root's terms at level n, then entries
    // of the conjugated recursion one level down, repeatedly. Bounded depth,
    // so this terminates even for elements keyed by the syntactic fallback.
    std::vector<std::map<TermKey, Element>> syms(n + 1);
    for (const auto& [key, term] : a.terms()) syms[n].emplace(key, term.first);
    std::map<TermKey, RingMatrix> recursion;
    for (unsigned k = n; k >= 1; --k) {
        for (const auto& [key, g] : syms[k]) {
            auto it = recursion.find(key);
            if (it == recursion.end())
                it = recursion.emplace(key, xi_in_basis(g, p, basis)).first;
            for (unsigned i = 0; i < d; ++i)
                for (unsigned j = 0; j < d; ++j)
                    for (const auto& [hkey, hterm] : it->second.at(i, j).terms())
                        syms[k - 1].emplace(hkey, hterm.first);
        }
    }

    // Bottom-up assembly with stride-d interleaving.
    std::map<TermKey, FpMatrix> prev;
    for (const auto& [key, g] : syms[0]) {
        FpMatrix one(1, 1, p);
        one.set(0, 0, 1);
        prev.emplace(key, one);
    }
    std::size_t sz = 1;
    for (unsigned k = 1; k <= n; ++k) {
        sz *= d;
        std::map<TermKey, FpMatrix> cur;
        for (const auto& [key, g] : syms[k]) {
            FpMatrix m(sz, sz, p);
            const RingMatrix& x = recursion.at(key);
            for (unsigned i = 0; i < d; ++i)
                for (unsigned j = 0; j < d; ++j)
                    for (const auto& [hkey, hterm] : x.at(i, j).terms()) {
                        const FpMatrix& mh = prev.at(hkey);
                        std::uint64_t c = hterm.second;
                        for (std::size_t r = 0; r < sz / d; ++r)
                            for (std::size_t cc = 0; cc < sz / d; ++cc) {
                                std::uint64_t v = mh.at(r, cc);
                                if (v)
                                    m.set(i + d * r, j + d * cc,
                                          m.at(i + d * r, j + d * cc) + c * v);
                            }
                    }
            cur.emplace(key, std::move(m));
        }
        prev = std::move(cur);
    }

    FpMatrix out(size, size, p);
    for (const auto& [key, term] : a.terms()) {
        const FpMatrix& mg = prev.at(key);
        for (std::size_t r = 0; r < size; ++r)
            for (std::size_t c = 0; c < size; ++c) {
                std::uint64_t v = mg.at(r, c);
                if (v) out.set(r, c, out.at(r, c) + static_cast<std::uint64_t>(term.second) * v);
            }
    }
    return out;
}

inline FpMatrix level_matrix(const Element& g, unsigned n, const MarkedBasis& basis) {
    return level_matrix(GroupRingElem::of(g, basis.p), n, basis);
}

// n-fold Kronecker power; with identical factors the inverse-lex and direct
// orders give the same matrix, so this is the level-n transition matrix.
inline FpMatrix transition_tensor(const FpMatrix& t, unsigned n) {
    FpMatrix acc = FpMatrix::identity(1, t.modulus());
    for (unsigned k = 0; k < n; ++k) acc = kron(acc, t);
    return acc;
}
inline IntMatrix transition_tensor(const IntMatrix& t, unsigned n) {
    IntMatrix acc = IntMatrix::identity(1);
    for (unsigned k = 0; k < n; ++k) acc = kron(acc, t);
    return acc;
}

// Binomial-basis recursion in closed form for p = 2:
//   g = (g0, g1)       ->  [[g1, 0], [g0+g1, g0]]
//   g = sigma (g0, g1) ->  [[g0, g0], [g0+g1, g0]]
inline RingMatrix xi_binomial_p2(const Element& g0, const Element& g1, bool twisted) {
    if (g0.alphabet() != 2 || g1.alphabet() != 2)
        throw std::invalid_argument("closed-form binomial recursion requires p = 2");
    GroupRingElem e0 = GroupRingElem::of(g0, 2), e1 = GroupRingElem::of(g1, 2);
    RingMatrix m(2, GroupRingElem::zero(2, g0.machine()));
    if (twisted) {
        m.at(0, 0) = e0;
        m.at(0, 1) = e0;
        m.at(1, 0) = e0 + e1;
        m.at(1, 1) = e0;
    } else {
        m.at(0, 0) = e1;
        m.at(1, 0) = e0 + e1;
        m.at(1, 1) = e0;
    }
    return m;
}

}  // namespace selfsim
