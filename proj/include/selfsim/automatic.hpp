#pragma once

// Infinite automatic matrices: column-finite matrices over F_p whose d-ary
// decimations generate a finite symbol system. A symbol is an F_p-linear
// combination of atoms (u, g, v) with u, v finite words and g a tree
// automorphism; in delta coordinates the atom maps e_n to e_{u.g(k)} when the
// digit stream of n (least significant first) factors as v.k, and to zero
// otherwise. Group elements are (empty, g, empty), the creation/annihilation
// patterns E_x and E_x' are (x, 1, empty) and (empty, 1, x), and products of
// atoms stay atoms, so the span is closed under the matrix product.
//
// An AutoMatrix stores the decimation-closed symbol table together with the
// coordinate basis of its entries: decimating in basis B conjugates the delta
// stencil by the transition matrix S entrywise. Entry access walks base-d
// digits of (row, column) through the table, so it costs O(log max(m, n)).
//
// The same machinery drives the shift operators T_x attached to a basis, the
// operators L_psi of prefix-exchange homeomorphisms, and the partial-map
// closure test for synchronous automaticity.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "selfsim/fp.hpp"
#include "selfsim/io.hpp"
#include "selfsim/mealy.hpp"
#include "selfsim/recursion.hpp"

namespace selfsim {

namespace detail {

inline bool is_prefix(const Word& a, const Word& b) {
    return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

// Does g fix the all-zeros ray? Decides the delta-coordinate corner entry.
inline bool fixes_zero_ray(const Element& g) {
    MachineRef m = g.machine();
    Element cur = Element::of_state(m, g.canonical_state());
    std::set<int> seen;
    while (seen.insert(cur.canonical_state()).second) {
        if (cur.root_perm()[0] != 0) return false;
        cur = Element::of_state(m, cur.section(std::uint8_t(0)).canonical_state());
    }
    return true;
}

}  // namespace detail

// One banded building block of an automatic matrix. In delta coordinates it
// sends e_n to e_{u.g(k)} when the digits of n factor as v.k, else to zero.
struct StencilAtom {
    Word u;
    Element g;
    Word v;
};

// F_p-linear combination of atoms, merged under machine-independent keys so
// that equal combinations always serialize identically.
class StencilSymbol {
public:
    using Tag = std::tuple<Word, Word, std::vector<int>>;

    StencilSymbol(std::uint32_t p, unsigned d) : p_(p), d_(d) { require_prime(p); }

    std::uint32_t modulus() const { return p_; }
    unsigned arity() const { return d_; }
    bool is_zero() const { return atoms_.empty(); }
    const std::map<Tag, std::pair<StencilAtom, std::uint32_t>>& atoms() const {
        return atoms_;
    }

    void add_atom(const Word& u, const Element& g, const Word& v, std::uint64_t coeff) {
        std::uint32_t c = static_cast<std::uint32_t>(coeff % p_);
        if (c == 0) return;
        int q = g.canonical_state();  // throws ClosureCapError if not finite-state
        Tag tag{u, v, g.machine()->signature_of(q)};
        auto it = atoms_.find(tag);
        if (it == atoms_.end()) {
            atoms_.emplace(std::move(tag),
                           std::make_pair(StencilAtom{u, Element::of_state(g.machine(), q), v}, c));
        } else {
            it->second.second = (it->second.second + c) % p_;
            if (it->second.second == 0) atoms_.erase(it);
        }
    }

    StencilSymbol scale(std::uint64_t c) const {
        StencilSymbol r(p_, d_);
        for (const auto& [tag, at] : atoms_)
            r.add_atom(at.first.u, at.first.g, at.first.v,
                       static_cast<std::uint64_t>(at.second) * (c % p_));
        return r;
    }

    friend StencilSymbol operator+(const StencilSymbol& a, const StencilSymbol& b) {
        a.check(b);
        StencilSymbol r = a;
        for (const auto& [tag, at] : b.atoms_)
            r.add_atom(at.first.u, at.first.g, at.first.v, at.second);
        return r;
    }

    std::string key() const {
        std::string out;
        for (const auto& [tag, at] : atoms_) {
            out += std::to_string(at.second);
            out += 'x';
            for (auto c : std::get<0>(tag)) out += std::to_string(int(c)) + ".";
            out += '|';
            for (auto c : std::get<1>(tag)) out += std::to_string(int(c)) + ".";
            out += '|';
            for (int s : std::get<2>(tag)) out += std::to_string(s) + ".";
            out += ';';
        }
        return out;
    }

private:
    void check(const StencilSymbol& o) const {
        if (p_ != o.p_ || d_ != o.d_)
            throw std::invalid_argument("mixing symbols over different F_p or arity");
    }

    std::uint32_t p_;
    unsigned d_;
    std::map<Tag, std::pair<StencilAtom, std::uint32_t>> atoms_;
};

// Atom product: the right factor acts first. Nonzero only when one factor's
// consumed word is a prefix of the other's created word.
inline StencilSymbol symbol_mul(const StencilSymbol& a, const StencilSymbol& b) {
    if (a.modulus() != b.modulus() || a.arity() != b.arity())
        throw std::invalid_argument("mixing symbols over different F_p or arity");
    StencilSymbol r(a.modulus(), a.arity());
    for (const auto& [ta, pa] : a.atoms())
        for (const auto& [tb, pb] : b.atoms()) {
            const StencilAtom& x = pa.first;
            const StencilAtom& y = pb.first;
            std::uint64_t c = static_cast<std::uint64_t>(pa.second) * pb.second;
            if (detail::is_prefix(x.v, y.u)) {
                // y created everything x consumes: x.v . rest = y.u
                Word rest(y.u.begin() + static_cast<long>(x.v.size()), y.u.end());
                Word nu = x.u;
                Word img = x.g.act(rest);
                nu.insert(nu.end(), img.begin(), img.end());
                r.add_atom(nu, compose(x.g.section(rest), y.g), y.v, c);
            } else if (detail::is_prefix(y.u, x.v)) {
                // x consumes deeper than y created: x.v = y.u . rest
                Word rest(x.v.begin() + static_cast<long>(y.u.size()), x.v.end());
                Word pre = inverse(y.g).act(rest);
                Word nv = y.v;
                nv.insert(nv.end(), pre.begin(), pre.end());
                r.add_atom(x.u, compose(x.g, y.g.section(pre)), nv, c);
            }
        }
    return r;
}

// Finite decimation-closed description of an infinite matrix. The symbols are
// delta-coordinate combinations; `basis` fixes the coordinates of the entries
// (decimation conjugates the delta stencil by S at every level).
struct AutoMatrix {
    std::uint32_t p = 2;
    unsigned d = 2;
    MarkedBasis basis;
    std::vector<StencilSymbol> symbols;
    std::vector<std::vector<int>> dec;  // dec[s][i*d + j]
    std::vector<std::uint32_t> corner;
    int root = 0;

    std::size_t size() const { return symbols.size(); }
    std::string root_key() const { return symbols[static_cast<std::size_t>(root)].key(); }

    Fp entry(std::uint64_t m, std::uint64_t n) const {
        int id = root;
        while (m != 0 || n != 0) {
            id = dec[static_cast<std::size_t>(id)]
                    [static_cast<std::size_t>(m % d) * d + static_cast<std::size_t>(n % d)];
            m /= d;
            n /= d;
        }
        return Fp(corner[static_cast<std::size_t>(id)], p);
    }

    AutoMatrix with_root(int id) const {
        AutoMatrix c = *this;
        c.root = id;
        return c;
    }
};

inline Fp entry(const AutoMatrix& a, std::uint64_t m, std::uint64_t n) {
    return a.entry(m, n);
}

inline FpMatrix truncation(const AutoMatrix& a, std::size_t rows, std::size_t cols) {
    FpMatrix m(rows, cols, a.p);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m.set(i, j, a.entry(i, j).v);
    return m;
}

namespace detail {

inline FpMatrix block_trunc_rec(const AutoMatrix& a, int id, std::size_t n) {
    if (n == 1) {
        FpMatrix m(1, 1, a.p);
        m.set(0, 0, a.corner[static_cast<std::size_t>(id)]);
        return m;
    }
    if (n % a.d != 0)
        throw std::invalid_argument("block truncation size must be a power of the arity");
    FpMatrix out(n, n, a.p);
    std::size_t half = n / a.d;
    for (unsigned i = 0; i < a.d; ++i)
        for (unsigned j = 0; j < a.d; ++j) {
            FpMatrix sub =
                block_trunc_rec(a, a.dec[static_cast<std::size_t>(id)][i * a.d + j], half);
            for (std::size_t r = 0; r < half; ++r)
                for (std::size_t c = 0; c < half; ++c)
                    out.set(i + a.d * r, j + a.d * c, sub.at(r, c));
        }
    return out;
}

// Closure construction: intern symbols by canonical key, decimate until no
// new symbol appears. The only mutating phase; the frozen table is immutable.
struct AutoBuilder {
    std::uint32_t p;
    unsigned d;
    MarkedBasis basis;
    bool delta;
    std::size_t cap;
    std::vector<StencilSymbol> symbols;
    std::vector<std::vector<int>> dec;
    std::vector<std::uint32_t> corner;
    std::map<std::string, int> ids;

    AutoBuilder(const MarkedBasis& b, unsigned arity, std::size_t cap_)
        : p(b.p), d(arity), basis(b), cap(cap_) {
        if (b.S.rows() != arity)
            throw std::invalid_argument("basis does not match alphabet size");
        delta = (b.S == FpMatrix::identity(arity, p));
        if (!b.marked && !delta)
            throw std::invalid_argument(
                "corner entries need a marked basis or delta coordinates");
    }

    std::uint32_t corner_of(const StencilSymbol& s) const {
        std::uint64_t total = 0;
        for (const auto& [tag, at] : s.atoms()) {
            const StencilAtom& a = at.first;
            if (delta) {
                bool zero_words =
                    std::all_of(a.u.begin(), a.u.end(), [](std::uint8_t c) { return c == 0; }) &&
                    std::all_of(a.v.begin(), a.v.end(), [](std::uint8_t c) { return c == 0; });
                if (zero_words && fixes_zero_ray(a.g)) total += at.second;
            } else {
                // Marked basis: the all-ones column of the transition tensor
                // absorbs g and v except for a Sinv(0,0) factor per letter of
                // v not matched by u.
                std::uint64_t w = at.second;
                for (auto c : a.u) w = w * basis.Sinv.at(0, c) % p;
                for (std::size_t k = a.u.size(); k < a.v.size(); ++k)
                    w = w * basis.Sinv.at(0, 0) % p;
                total += w;
            }
        }
        return static_cast<std::uint32_t>(total % p);
    }

    int intern(const StencilSymbol& s) {
        std::string key = s.key();
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        if (symbols.size() >= cap) throw ClosureCapError(cap);
        int id = static_cast<int>(symbols.size());
        symbols.push_back(s);
        dec.emplace_back();
        corner.push_back(corner_of(s));
        ids.emplace(std::move(key), id);
        return id;
    }

    std::vector<StencilSymbol> decimate(const StencilSymbol& s) const {
        std::vector<StencilSymbol> cells(static_cast<std::size_t>(d) * d,
                                         StencilSymbol(p, d));
        for (const auto& [tag, at] : s.atoms()) {
            const StencilAtom& a = at.first;
            std::uint32_t c = at.second;
            if (!a.u.empty() && !a.v.empty()) {
                Word u2(a.u.begin() + 1, a.u.end());
                Word v2(a.v.begin() + 1, a.v.end());
                cells[a.u[0] * d + a.v[0]].add_atom(u2, a.g, v2, c);
            } else if (!a.u.empty()) {
                Word u2(a.u.begin() + 1, a.u.end());
                Perm rp = a.g.root_perm();
                for (unsigned j = 0; j < d; ++j) {
                    Word nu = u2;
                    nu.push_back(rp[j]);
                    cells[a.u[0] * d + j].add_atom(nu, a.g.section(std::uint8_t(j)), Word{}, c);
                }
            } else if (!a.v.empty()) {
                Word v2(a.v.begin() + 1, a.v.end());
                Perm rp = a.g.root_perm();
                for (unsigned y = 0; y < d; ++y) {
                    Word nv = v2;
                    nv.push_back(std::uint8_t(y));
                    cells[rp[y] * d + a.v[0]].add_atom(Word{}, a.g.section(std::uint8_t(y)), nv, c);
                }
            } else {
                Perm rp = a.g.root_perm();
                for (unsigned j = 0; j < d; ++j)
                    cells[rp[j] * d + j].add_atom(Word{}, a.g.section(std::uint8_t(j)), Word{}, c);
            }
        }
        if (delta) return cells;
        // Conjugate the delta stencil: out[i][j] = sum Sinv(i,k) cells[k][l] S(l,j).
        std::vector<StencilSymbol> out(static_cast<std::size_t>(d) * d, StencilSymbol(p, d));
        for (unsigned i = 0; i < d; ++i)
            for (unsigned j = 0; j < d; ++j) {
                StencilSymbol acc(p, d);
                for (unsigned k = 0; k < d; ++k)
                    for (unsigned l = 0; l < d; ++l) {
                        std::uint64_t c = static_cast<std::uint64_t>(basis.Sinv.at(i, k)) *
                                          basis.S.at(l, j) % p;
                        if (c) acc = acc + cells[k * d + l].scale(c);
                    }
                out[i * d + j] = acc;
            }
        return out;
    }

    AutoMatrix run(const StencilSymbol& rootsym) {
        int rootid = intern(rootsym);
        for (std::size_t at = 0; at < symbols.size(); ++at) {
            StencilSymbol s = symbols[at];  // symbols may grow below
            std::vector<StencilSymbol> cells = decimate(s);
            std::vector<int> row(cells.size());
            for (std::size_t k = 0; k < cells.size(); ++k) row[k] = intern(cells[k]);
            dec[at] = std::move(row);
        }
        return AutoMatrix{p, d, basis, std::move(symbols), std::move(dec),
                          std::move(corner), rootid};
    }
};

}  // namespace detail

inline FpMatrix block_truncation(const AutoMatrix& a, std::size_t n) {
    return detail::block_trunc_rec(a, a.root, n);
}

inline AutoMatrix from_group_ring(const GroupRingElem& a, const MarkedBasis& basis,
                                  std::size_t cap = 4096) {
    unsigned d = a.machine()->alphabet();
    if (basis.p != a.modulus())
        throw std::invalid_argument("basis does not match alphabet/field");
    StencilSymbol root(a.modulus(), d);
    for (const auto& [k, t] : a.terms()) root.add_atom(Word{}, t.first, Word{}, t.second);
    return detail::AutoBuilder(basis, d, cap).run(root);
}

inline AutoMatrix from_group_ring(const Element& g, std::uint32_t p,
                                  const MarkedBasis& basis, std::size_t cap = 4096) {
    return from_group_ring(GroupRingElem::of(g, p), basis, cap);
}

inline AutoMatrix zero_automatrix(std::uint32_t p, const MarkedBasis& basis) {
    unsigned d = static_cast<unsigned>(basis.S.rows());
    return detail::AutoBuilder(basis, d, 4).run(StencilSymbol(p, d));
}

inline AutoMatrix identity_automatrix(std::uint32_t p, const MarkedBasis& basis) {
    unsigned d = static_cast<unsigned>(basis.S.rows());
    auto mach = std::make_shared<Machine>(d);
    return from_group_ring(GroupRingElem::one(p, mach), basis, 16);
}

namespace detail {

inline void check_compatible(const AutoMatrix& a, const AutoMatrix& b) {
    if (a.p != b.p || a.d != b.d || !(a.basis.S == b.basis.S))
        throw std::invalid_argument("automatic matrices live in different coordinates");
}

}  // namespace detail

inline AutoMatrix add(const AutoMatrix& a, const AutoMatrix& b, std::size_t cap = 4096) {
    detail::check_compatible(a, b);
    return detail::AutoBuilder(a.basis, a.d, cap)
        .run(a.symbols[static_cast<std::size_t>(a.root)] +
             b.symbols[static_cast<std::size_t>(b.root)]);
}

inline AutoMatrix mul(const AutoMatrix& a, const AutoMatrix& b, std::size_t cap = 4096) {
    detail::check_compatible(a, b);
    return detail::AutoBuilder(a.basis, a.d, cap)
        .run(symbol_mul(a.symbols[static_cast<std::size_t>(a.root)],
                        b.symbols[static_cast<std::size_t>(b.root)]));
}

inline std::vector<std::vector<AutoMatrix>> decimations(const AutoMatrix& a) {
    std::vector<std::vector<AutoMatrix>> out(a.d, std::vector<AutoMatrix>(a.d, a));
    for (unsigned i = 0; i < a.d; ++i)
        for (unsigned j = 0; j < a.d; ++j)
            out[i][j].root = a.dec[static_cast<std::size_t>(a.root)][i * a.d + j];
    return out;
}

// Shift operators attached to a basis: T_i prepends the i-th basis vector,
// T_i' is its left inverse. Entries are reported in delta coordinates, where
// T_i is the column (S[0][i] .. S[d-1][i]) repeated down the block diagonal
// and T_i' the matching row pattern; for the delta basis these are the
// selection operators E_i with single entries at (d m + i, m).
inline std::pair<std::vector<AutoMatrix>, std::vector<AutoMatrix>> shift_operators(
    const MarkedBasis& basis, std::size_t cap = 256) {
    unsigned d = static_cast<unsigned>(basis.S.rows());
    auto mach = std::make_shared<Machine>(d);
    Element one = Element::identity(mach);
    MarkedBasis delta = MarkedBasis::delta(basis.p);
    std::vector<AutoMatrix> ts, tps;
    for (unsigned i = 0; i < d; ++i) {
        StencilSymbol s(basis.p, d), sp(basis.p, d);
        for (unsigned y = 0; y < d; ++y) {
            if (basis.S.at(y, i)) s.add_atom(Word{std::uint8_t(y)}, one, Word{}, basis.S.at(y, i));
            if (basis.Sinv.at(i, y))
                sp.add_atom(Word{}, one, Word{std::uint8_t(y)}, basis.Sinv.at(i, y));
        }
        ts.push_back(detail::AutoBuilder(delta, d, cap).run(s));
        tps.push_back(detail::AutoBuilder(delta, d, cap).run(sp));
    }
    return {std::move(ts), std::move(tps)};
}

// Exact Cuntz relations on truncations: with n = d*m, T_i' T_j = delta_{ij} I_m
// (shapes m x n times n x m) and sum_i T_i T_i' = I_n. Sizes that are not a
// multiple of the arity are rejected: the bands would be cut mid-block.
inline bool cuntz_relations_hold(const std::vector<AutoMatrix>& ts,
                                 const std::vector<AutoMatrix>& tps, std::size_t n) {
    if (ts.empty() || ts.size() != tps.size())
        throw std::invalid_argument("need matching lists of shift operators");
    unsigned d = ts[0].d;
    std::uint32_t p = ts[0].p;
    if (n == 0 || n % d != 0)
        throw std::invalid_argument("truncation size must be a positive multiple of the arity");
    std::size_t m = n / d;
    for (unsigned i = 0; i < d; ++i)
        for (unsigned j = 0; j < d; ++j) {
            FpMatrix prod = truncation(tps[i], m, n) * truncation(ts[j], n, m);
            FpMatrix want = i == j ? FpMatrix::identity(m, p) : FpMatrix(m, m, p);
            if (!(prod == want)) return false;
        }
    FpMatrix total(n, n, p);
    for (unsigned i = 0; i < d; ++i)
        total = total + truncation(ts[i], n, m) * truncation(tps[i], m, n);
    return total == FpMatrix::identity(n, p);
}

// ---------------------------------------------------------------------------
// Prefix-exchange homeomorphisms (Higman-Thompson elements) and their
// operators L_psi = sum_i T_{u_i} T_{v_i}'.

struct ThompsonElement {
    unsigned d = 2;
    std::vector<std::pair<Word, Word>> pairs;  // domain word v_i -> range word u_i

    friend bool operator==(const ThompsonElement& a, const ThompsonElement& b) {
        return a.d == b.d && a.pairs == b.pairs;
    }
};

namespace detail {

inline bool code_covers(const std::set<Word>& code, Word& prefix, unsigned d,
                        std::size_t maxlen) {
    if (code.count(prefix)) return true;
    if (prefix.size() >= maxlen) return false;
    for (unsigned x = 0; x < d; ++x) {
        prefix.push_back(std::uint8_t(x));
        bool ok = code_covers(code, prefix, d, maxlen);
        prefix.pop_back();
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

// A complete prefix code: pairwise prefix-free and covering all of X^inf.
inline bool is_complete_prefix_code(const std::vector<Word>& code, unsigned d) {
    if (code.empty()) return false;
    std::set<Word> s(code.begin(), code.end());
    if (s.size() != code.size()) return false;
    std::size_t maxlen = 0;
    for (const Word& w : s) {
        maxlen = std::max(maxlen, w.size());
        for (auto c : w)
            if (c >= d) return false;
    }
    const Word* prev = nullptr;
    for (const Word& w : s) {
        if (prev && detail::is_prefix(*prev, w)) return false;
        prev = &w;
    }
    Word scratch;
    return detail::code_covers(s, scratch, d, maxlen);
}

inline ThompsonElement thompson_element(unsigned d, std::vector<std::pair<Word, Word>> pairs) {
    std::vector<Word> dom, ran;
    dom.reserve(pairs.size());
    ran.reserve(pairs.size());
    for (const auto& [v, u] : pairs) {
        dom.push_back(v);
        ran.push_back(u);
    }
    if (!is_complete_prefix_code(dom, d) || !is_complete_prefix_code(ran, d))
        throw std::invalid_argument("invalid prefix code");
    std::sort(pairs.begin(), pairs.end());
    return ThompsonElement{d, std::move(pairs)};
}

inline ThompsonElement thompson_identity(unsigned d) {
    return thompson_element(d, {{Word{}, Word{}}});
}

// Merge complete sibling families (v.x -> u.x for every x) back into (v -> u).
inline ThompsonElement thompson_reduce(ThompsonElement t) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::pair<Word, Word>, unsigned> family;
        for (const auto& [v, u] : t.pairs) {
            if (v.empty() || u.empty() || v.back() != u.back()) continue;
            Word pv(v.begin(), v.end() - 1), pu(u.begin(), u.end() - 1);
            if (++family[{pv, pu}] == t.d) {
                std::vector<std::pair<Word, Word>> next;
                for (const auto& pr : t.pairs) {
                    bool child = pr.first.size() == pv.size() + 1 &&
                                 detail::is_prefix(pv, pr.first) &&
                                 pr.second.size() == pu.size() + 1 &&
                                 detail::is_prefix(pu, pr.second) &&
                                 pr.first.back() == pr.second.back();
                    if (!child) next.push_back(pr);
                }
                next.emplace_back(pv, pu);
                std::sort(next.begin(), next.end());
                t.pairs = std::move(next);
                changed = true;
                break;
            }
        }
    }
    return t;
}

inline ThompsonElement thompson_inverse(const ThompsonElement& t) {
    std::vector<std::pair<Word, Word>> pairs;
    pairs.reserve(t.pairs.size());
    for (const auto& [v, u] : t.pairs) pairs.emplace_back(u, v);
    return thompson_element(t.d, std::move(pairs));
}

// Composition s after t via common refinement of t's range with s's domain.
inline ThompsonElement thompson_compose(const ThompsonElement& s, const ThompsonElement& t) {
    if (s.d != t.d) throw std::invalid_argument("alphabet size mismatch");
    std::vector<std::pair<Word, Word>> out;
    for (const auto& [tv, tu] : t.pairs)
        for (const auto& [sv, su] : s.pairs) {
            if (detail::is_prefix(sv, tu)) {
                Word rest(tu.begin() + static_cast<long>(sv.size()), tu.end());
                Word nu = su;
                nu.insert(nu.end(), rest.begin(), rest.end());
                out.emplace_back(tv, std::move(nu));
            } else if (detail::is_prefix(tu, sv) && tu.size() < sv.size()) {
                Word rest(sv.begin() + static_cast<long>(tu.size()), sv.end());
                Word nv = tv;
                nv.insert(nv.end(), rest.begin(), rest.end());
                out.emplace_back(std::move(nv), su);
            }
        }
    return thompson_reduce(thompson_element(s.d, std::move(out)));
}

// Operator L_psi = sum_i T_{u_i} T_{v_i}' for the basis-indexed isometries,
// reported in delta coordinates like shift_operators.
inline AutoMatrix thompson_operator(const ThompsonElement& t, const MarkedBasis& basis,
                                    std::size_t cap = 4096) {
    unsigned d = t.d;
    if (basis.S.rows() != d)
        throw std::invalid_argument("basis does not match alphabet size");
    std::uint32_t p = basis.p;
    auto mach = std::make_shared<Machine>(d);
    Element one = Element::identity(mach);
    StencilSymbol sym(p, d);
    for (const auto& [v, u] : t.pairs) {
        if (u.size() > 24 || v.size() > 24)
            throw std::invalid_argument("prefix code too deep");
        std::uint64_t cu = 1, cv = 1;
        for (std::size_t k = 0; k < u.size(); ++k) cu *= d;
        for (std::size_t k = 0; k < v.size(); ++k) cv *= d;
        for (std::uint64_t a = 0; a < cu; ++a) {
            Word w(u.size());
            std::uint64_t tmp = a;
            std::uint64_t coeff = 1;
            for (std::size_t k = 0; k < u.size(); ++k, tmp /= d) {
                w[k] = static_cast<std::uint8_t>(tmp % d);
                coeff = coeff * basis.S.at(w[k], u[k]) % p;
            }
            if (!coeff) continue;
            for (std::uint64_t b = 0; b < cv; ++b) {
                Word wp(v.size());
                std::uint64_t t2 = b;
                std::uint64_t c2 = coeff;
                for (std::size_t k = 0; k < v.size(); ++k, t2 /= d) {
                    wp[k] = static_cast<std::uint8_t>(t2 % d);
                    c2 = c2 * basis.Sinv.at(v[k], wp[k]) % p;
                }
                if (c2) sym.add_atom(w, one, wp, c2);
            }
        }
    }
    return detail::AutoBuilder(MarkedBasis::delta(p), d, cap).run(sym);
}

// ---------------------------------------------------------------------------
// Partial prefix maps and the synchronous-automaticity closure.

// Germ (a, g, b): the partial map a.w -> b.g(w), defined on the cylinder
// a.X^inf. A PartialPrefixMap is a union of germs with disjoint domains.
struct PrefixGerm {
    Word a;
    Element g;
    Word b;
};

struct PartialPrefixMap {
    unsigned d = 2;
    std::vector<PrefixGerm> germs;

    bool is_empty_map() const { return germs.empty(); }

    std::string key() const {
        std::string out;
        for (const auto& g : germs) {
            for (auto c : g.a) out += std::to_string(int(c)) + ".";
            out += '>';
            for (auto c : g.b) out += std::to_string(int(c)) + ".";
            out += '@';
            for (int s : g.g.canonical_key()) out += std::to_string(s) + ".";
            out += ';';
        }
        return out;
    }

    friend bool operator==(const PartialPrefixMap& a, const PartialPrefixMap& b) {
        return a.d == b.d && a.key() == b.key();
    }
};

namespace detail {

// Canonical form: sort by domain prefix and merge complete sibling families
// (a.x, g_x, b.y_x) into (a, G, b) whenever the y_x form a permutation; G is
// materialized as a fresh machine state with root y and section g_x at x.
inline void canonicalize(PartialPrefixMap& m) {
    unsigned d = m.d;
    for (auto& g : m.germs)
        g.g = Element::of_state(g.g.machine(), g.g.canonical_state());
    bool changed = true;
    while (changed) {
        changed = false;
        std::sort(m.germs.begin(), m.germs.end(),
                  [](const PrefixGerm& x, const PrefixGerm& y) { return x.a < y.a; });
        std::map<Word, std::vector<std::size_t>> families;
        for (std::size_t i = 0; i < m.germs.size(); ++i) {
            if (m.germs[i].a.empty()) continue;
            Word parent(m.germs[i].a.begin(), m.germs[i].a.end() - 1);
            families[parent].push_back(i);
        }
        for (auto& [parent, idx] : families) {
            if (idx.size() != d) continue;
            // children sorted by a, so child k has last letter k
            bool ok = true;
            Word b;
            Perm rp(d);
            for (std::size_t k = 0; k < d && ok; ++k) {
                const PrefixGerm& ch = m.germs[idx[k]];
                if (ch.a.back() != k || ch.b.empty()) ok = false;
                else {
                    Word pb(ch.b.begin(), ch.b.end() - 1);
                    if (k == 0) b = pb;
                    else if (!(pb == b)) ok = false;
                    rp[k] = ch.b.back();
                }
            }
            if (ok && !is_perm(rp)) ok = false;
            if (!ok) continue;
            MachineRef mach = m.germs[idx[0]].g.machine();
            std::vector<int> secs(d);
            for (std::size_t k = 0; k < d; ++k) {
                Element gk = m.germs[idx[k]].g;
                if (!(gk.machine() == mach)) gk = compose(Element::identity(mach), gk);
                secs[k] = gk.canonical_state();
            }
            int q = mach->add_state("psi-merge", rp, secs);
            PrefixGerm merged{parent, Element::of_state(mach, q), b};
            std::vector<PrefixGerm> next;
            for (std::size_t i = 0; i < m.germs.size(); ++i)
                if (std::find(idx.begin(), idx.end(), i) == idx.end())
                    next.push_back(m.germs[i]);
            next.push_back(std::move(merged));
            m.germs = std::move(next);
            changed = true;
            break;
        }
    }
    std::sort(m.germs.begin(), m.germs.end(),
              [](const PrefixGerm& x, const PrefixGerm& y) { return x.a < y.a; });
}

}  // namespace detail

// Derivative of the map by one letter on each side: w -> m(x.w) minus the
// leading y, restricted to where that is defined.
inline PartialPrefixMap psi_derivative(const PartialPrefixMap& m, std::uint8_t x,
                                       std::uint8_t y) {
    PartialPrefixMap out{m.d, {}};
    for (const auto& germ : m.germs) {
        if (!germ.a.empty()) {
            if (germ.a[0] != x) continue;
            Word a2(germ.a.begin() + 1, germ.a.end());
            if (!germ.b.empty()) {
                if (germ.b[0] != y) continue;
                out.germs.push_back({a2, germ.g, Word(germ.b.begin() + 1, germ.b.end())});
            } else {
                std::uint8_t r = inverse_perm(germ.g.root_perm())[y];
                a2.push_back(r);
                out.germs.push_back({a2, germ.g.section(r), Word{}});
            }
        } else if (!germ.b.empty()) {
            if (germ.b[0] != y) continue;
            Word b2(germ.b.begin() + 1, germ.b.end());
            b2.push_back(germ.g.root_perm()[x]);
            out.germs.push_back({Word{}, germ.g.section(x), b2});
        } else {
            if (germ.g.root_perm()[x] != y) continue;
            out.germs.push_back({Word{}, germ.g.section(x), Word{}});
        }
    }
    detail::canonicalize(out);
    return out;
}

inline PartialPrefixMap psi_map_of(const Element& h) {
    PartialPrefixMap m{h.alphabet(), {PrefixGerm{Word{}, h, Word{}}}};
    detail::canonicalize(m);
    return m;
}

inline PartialPrefixMap psi_map_of(const ThompsonElement& t) {
    auto mach = std::make_shared<Machine>(t.d);
    Element one = Element::identity(mach);
    PartialPrefixMap m{t.d, {}};
    for (const auto& [v, u] : t.pairs) m.germs.push_back({v, one, u});
    detail::canonicalize(m);
    return m;
}

namespace detail {

inline std::vector<PartialPrefixMap> psi_closure_impl(PartialPrefixMap start,
                                                      std::size_t cap) {
    std::map<std::string, std::size_t> seen;
    std::vector<PartialPrefixMap> out;
    std::deque<std::size_t> queue;
    auto push = [&](PartialPrefixMap m) {
        std::string k = m.key();
        if (seen.count(k)) return;
        if (out.size() >= cap) throw ClosureCapError(cap);
        seen.emplace(std::move(k), out.size());
        queue.push_back(out.size());
        out.push_back(std::move(m));
    };
    push(std::move(start));
    unsigned d = out[0].d;
    while (!queue.empty()) {
        std::size_t at = queue.front();
        queue.pop_front();
        for (unsigned x = 0; x < d; ++x)
            for (unsigned y = 0; y < d; ++y) {
                PartialPrefixMap der =
                    psi_derivative(out[at], std::uint8_t(x), std::uint8_t(y));
                push(std::move(der));
            }
    }
    return out;
}

}  // namespace detail

// All side-by-side letter derivatives psi_{u,v} of the map, up to equality.
// Finite exactly when the map is synchronously automatic.
inline std::vector<PartialPrefixMap> psi_closure(const Element& h, std::size_t cap = 4096) {
    return detail::psi_closure_impl(psi_map_of(h), cap);
}

inline std::vector<PartialPrefixMap> psi_closure(const ThompsonElement& t,
                                                 std::size_t cap = 4096) {
    return detail::psi_closure_impl(psi_map_of(t), cap);
}

// ---------------------------------------------------------------------------
// Rendering: top-left N x N corner as a portable bitmap/graymap.

inline std::string render(const FpMatrix& m, std::size_t n) {
    if (n == 0) throw std::invalid_argument("render size must be positive");
    if (m.rows() < n || m.cols() < n)
        throw std::invalid_argument("render size exceeds matrix");
    FpMatrix top(n, n, m.modulus());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) top.set(i, j, m.at(i, j));
    return m.modulus() == 2 ? to_pbm(top) : to_pgm(top);
}

inline std::string render(const AutoMatrix& a, std::size_t n) {
    if (n == 0) throw std::invalid_argument("render size must be positive");
    FpMatrix top = truncation(a, n, n);
    return a.p == 2 ? to_pbm(top) : to_pgm(top);
}

}  // namespace selfsim
