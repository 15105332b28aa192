#pragma once

// Truncated power series over F_p and the (t,s) diagonal calculus: generating
// series of sequences and of matrix diagonals, decimation recomposition,
// verification of algebraic relations, the Grigorchuk diagonal recursion
// system with its closed forms, and multiplication of matrices presented by
// their diagonals.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/fp.hpp"
#include "selfsim/recursion.hpp"

namespace selfsim {

// A power series mod x^N. Every arithmetic operation insists on matching p
// and N: mixing truncation orders silently is the classic series bug, so it
// is an error here.
struct FpSeries {
    std::uint32_t p = 2;
    std::size_t N = 0;
    std::vector<std::uint32_t> coeffs;  // coefficient of x^0 .. x^{N-1}

    FpSeries() = default;
    FpSeries(std::uint32_t p_, std::size_t n) : p(p_), N(n), coeffs(n, 0) {
        require_prime(p_);
    }

    static FpSeries of_coeffs(std::uint32_t p, std::vector<std::uint32_t> c) {
        FpSeries s(p, c.size());
        for (std::size_t i = 0; i < c.size(); ++i) s.coeffs[i] = c[i] % p;
        return s;
    }

    std::uint32_t at(std::size_t k) const { return k < N ? coeffs[k] : 0; }
    bool is_zero() const {
        for (auto c : coeffs)
            if (c) return false;
        return true;
    }
    // Index of the first nonzero coefficient, or N.
    std::size_t valuation() const {
        for (std::size_t i = 0; i < N; ++i)
            if (coeffs[i]) return i;
        return N;
    }

    void check(const FpSeries& o) const {
        if (p != o.p) throw std::invalid_argument("mixed series moduli");
        if (N != o.N) throw std::invalid_argument("mixed truncation orders");
    }

    friend FpSeries operator+(const FpSeries& a, const FpSeries& b) {
        a.check(b);
        FpSeries r(a.p, a.N);
        for (std::size_t i = 0; i < a.N; ++i) r.coeffs[i] = (a.coeffs[i] + b.coeffs[i]) % a.p;
        return r;
    }
    friend FpSeries operator-(const FpSeries& a, const FpSeries& b) {
        a.check(b);
        FpSeries r(a.p, a.N);
        for (std::size_t i = 0; i < a.N; ++i)
            r.coeffs[i] = (a.coeffs[i] + a.p - b.coeffs[i]) % a.p;
        return r;
    }
    friend FpSeries operator*(const FpSeries& a, const FpSeries& b) {
        a.check(b);
        FpSeries r(a.p, a.N);
        for (std::size_t i = 0; i < a.N; ++i) {
            if (!a.coeffs[i]) continue;
            for (std::size_t j = 0; i + j < a.N; ++j)
                r.coeffs[i + j] = static_cast<std::uint32_t>(
                    (r.coeffs[i + j] + std::uint64_t(a.coeffs[i]) * b.coeffs[j]) % a.p);
        }
        return r;
    }
    FpSeries scale(std::uint32_t c) const {
        FpSeries r(p, N);
        for (std::size_t i = 0; i < N; ++i)
            r.coeffs[i] = static_cast<std::uint32_t>(std::uint64_t(coeffs[i]) * c % p);
        return r;
    }
    // Multiply by x^k (coefficients past the truncation fall off).
    FpSeries shift_up(std::size_t k) const {
        FpSeries r(p, N);
        for (std::size_t i = k; i < N; ++i) r.coeffs[i] = coeffs[i - k];
        return r;
    }
    // Drop the first k coefficients and reindex; the tail fills with zeros.
    FpSeries shift_down(std::size_t k) const {
        FpSeries r(p, N);
        for (std::size_t i = 0; i + k < N; ++i) r.coeffs[i] = coeffs[i + k];
        return r;
    }
    // Coefficientwise product.
    FpSeries hadamard(const FpSeries& o) const {
        check(o);
        FpSeries r(p, N);
        for (std::size_t i = 0; i < N; ++i)
            r.coeffs[i] =
                static_cast<std::uint32_t>(std::uint64_t(coeffs[i]) * o.coeffs[i] % p);
        return r;
    }
    FpSeries pow(unsigned e) const {
        FpSeries r(p, N);
        r.coeffs[0] = 1;
        for (unsigned i = 0; i < e; ++i) r = r * (*this);
        return r;
    }
    friend bool operator==(const FpSeries& a, const FpSeries& b) {
        return a.p == b.p && a.N == b.N && a.coeffs == b.coeffs;
    }

    std::string str() const {
        std::string out;
        for (std::size_t k = 0; k < N; ++k) {
            if (!coeffs[k]) continue;
            if (!out.empty()) out += " + ";
            if (k == 0)
                out += std::to_string(coeffs[k]);
            else {
                if (coeffs[k] != 1) out += std::to_string(coeffs[k]) + "*";
                out += k == 1 ? "s" : "s^" + std::to_string(k);
            }
        }
        return out.empty() ? "0" : out;
    }
};

inline FpSeries series_of_sequence(const std::vector<std::uint32_t>& prefix,
                                   std::uint32_t p) {
    return FpSeries::of_coeffs(p, prefix);
}

// Expansion of numer/denom mod x^N by long division; the denominator needs a
// unit constant term.
inline FpSeries rational(std::vector<std::uint32_t> numer, std::vector<std::uint32_t> denom,
                         std::uint32_t p, std::size_t N) {
    require_prime(p);
    for (auto& c : numer) c %= p;
    for (auto& c : denom) c %= p;
    if (denom.empty() || denom[0] == 0)
        throw std::domain_error("denominator vanishes at the origin");
    std::uint32_t d0inv = Fp(denom[0], p).inv().v;
    FpSeries q(p, N);
    for (std::size_t n = 0; n < N; ++n) {
        std::uint64_t acc = n < numer.size() ? numer[n] : 0;
        for (std::size_t k = 1; k <= n && k < denom.size(); ++k)
            acc += std::uint64_t(p - denom[k]) * q.coeffs[n - k] % p;
        q.coeffs[n] = static_cast<std::uint32_t>(acc % p * d0inv % p);
    }
    return q;
}

// G_w(x) = G_{w_0}(x^d) + x G_{w_1}(x^d) + ... for d decimation components.
inline FpSeries recompose(const std::vector<FpSeries>& parts) {
    if (parts.empty()) throw std::invalid_argument("nothing to recompose");
    for (const auto& s : parts) parts[0].check(s);
    std::size_t d = parts.size();
    FpSeries r(parts[0].p, parts[0].N);
    for (std::size_t n = 0; n < r.N; ++n) r.coeffs[n] = parts[n % d].coeffs[n / d];
    return r;
}

// Same series via Frobenius: f(x^p) = f(x)^p over F_p, so the recomposition
// can be written sum x^i (G_{w_i}(x))^p when d = p.
inline FpSeries frobenius_recompose(const std::vector<FpSeries>& parts) {
    if (parts.empty()) throw std::invalid_argument("nothing to recompose");
    if (parts.size() != parts[0].p)
        throw std::invalid_argument("Frobenius recomposition needs d = p");
    FpSeries r(parts[0].p, parts[0].N);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        parts[0].check(parts[i]);
        r = r + parts[i].pow(parts[0].p).shift_up(i);
    }
    return r;
}

// Checks sum_i relation[i] * G^i = 0 mod x^{N-guard}, where the guard is the
// degree of the relation in G: the input G is a truncation, and the guard
// leaves a margin so that the verdict does not hinge on the last few
// coefficients of its high powers.
inline bool verify_algebraic(const FpSeries& G, const std::vector<FpSeries>& relation) {
    if (G.N < 8) throw std::invalid_argument("truncation too short to be meaningful");
    std::size_t guard = 0;
    for (std::size_t i = 0; i < relation.size(); ++i) {
        G.check(relation[i]);
        if (!relation[i].is_zero()) guard = i;
    }
    FpSeries acc(G.p, G.N), gpow(G.p, G.N);
    gpow.coeffs[0] = 1;
    for (std::size_t i = 0; i < relation.size(); ++i) {
        acc = acc + relation[i] * gpow;
        gpow = gpow * G;
    }
    for (std::size_t k = 0; k + guard < G.N; ++k)
        if (acc.coeffs[k]) return false;
    return true;
}

// Generating series of the i-th diagonal (a_{0,i}, a_{1,i+1}, ...) of the
// level matrices of g in basis B, truncated to L terms.
inline FpSeries diagonal_series(const Element& g, unsigned i, std::size_t L,
                                const MarkedBasis& basis) {
    std::uint32_t p = g.alphabet();
    unsigned n = 0;
    std::size_t size = 1;
    while (size < L + i) {
        size *= p;
        ++n;
    }
    FpMatrix m = level_matrix(g, n, basis);
    FpSeries s(basis.p, L);
    for (std::size_t k = 0; k < L; ++k) s.coeffs[k] = m.at(k, k + i);
    return s;
}

// Where the k-th d-decimation of the n-th diagonal lands: writing
// k + n = d*q + r with 0 <= r < d, it is the q-th diagonal of the block
// (k, r) of the d-decimated matrix.
struct DiagonalBlock {
    unsigned row = 0, col = 0, q = 0;
};
inline DiagonalBlock diagonal_decimation_map(unsigned n, unsigned k, unsigned d) {
    if (d < 2 || k >= d || n < 1) throw std::invalid_argument("bad diagonal indices");
    DiagonalBlock b;
    b.row = k;
    b.q = (k + n) / d;
    b.col = (k + n) % d;
    return b;
}

// ---------------------------------------------------------------------------
// The Grigorchuk diagonal system over F_2. Tables of the diagonal series
// A_n, I_n, B_n, C_n, D_n of the generators' infinite matrices, computed from
// the coupled recursions
//   B_{2n} = C_n^2 + s A_n^2      B_{2n+1} = s (C_{n+1}^2 + A_{n+1}^2)
//   C_{2n} = D_n^2 + s A_n^2      C_{2n+1} = s (D_{n+1}^2 + A_{n+1}^2)
//   D_{2n} = B_n^2 + s I_n^2      D_{2n+1} = s (I_{n+1}^2 + B_{n+1}^2)
// with seeds A_0 = I_0 = 1/(1+s), A_1 = 1/(1+s^2), A_n = 0 (n>=2), I_n = 0
// (n>=1). The index-1 equations are mutually recursive; every right-hand side
// carries an s factor, so iteration from 0 contracts to their unique
// solution. The index-0 equations are also self-referential but have two
// solutions, so B_0 = C_0 = D_0 are seeded to 1/(1+s) directly (diagonal 0 of
// a unitriangular matrix is all ones) and the index-0 displays hold as a
// consistency property.
struct GrigorchukDiagonals {
    std::vector<FpSeries> A, I, B, C, D;  // index n = diagonal number
};

inline GrigorchukDiagonals grigorchuk_diagonal_system(unsigned n_max, std::size_t L) {
    if (L < 8) throw std::invalid_argument("truncation too short to be meaningful");
    auto one_plus_power = [&](std::size_t k) {
        std::vector<std::uint32_t> d(k + 1, 0);
        d[0] = d[k] = 1;
        return rational({1}, d, 2, L);
    };
    FpSeries zero(2, L);
    GrigorchukDiagonals t;
    t.A.assign(n_max + 1, zero);
    t.I.assign(n_max + 1, zero);
    t.B.assign(n_max + 1, zero);
    t.C.assign(n_max + 1, zero);
    t.D.assign(n_max + 1, zero);

    t.A[0] = t.I[0] = one_plus_power(1);
    if (n_max >= 1) t.A[1] = one_plus_power(2);
    t.B[0] = t.C[0] = t.D[0] = one_plus_power(1);

    if (n_max >= 1) {
        FpSeries B1 = zero, C1 = zero, D1 = zero;
        const FpSeries& A1 = t.A[1];
        for (std::size_t it = 0; it < L + 2; ++it) {
            FpSeries D1n = (B1 * B1).shift_up(1);
            FpSeries C1n = (D1 * D1 + A1 * A1).shift_up(1);
            FpSeries B1n = (C1 * C1 + A1 * A1).shift_up(1);
            if (B1n == B1 && C1n == C1 && D1n == D1) break;
            B1 = B1n;
            C1 = C1n;
            D1 = D1n;
        }
        t.B[1] = B1;
        t.C[1] = C1;
        t.D[1] = D1;
    }

    for (unsigned idx = 2; idx <= n_max; ++idx) {
        if (idx % 2 == 0) {
            unsigned n = idx / 2;
            t.B[idx] = t.C[n] * t.C[n] + (t.A[n] * t.A[n]).shift_up(1);
            t.C[idx] = t.D[n] * t.D[n] + (t.A[n] * t.A[n]).shift_up(1);
            t.D[idx] = t.B[n] * t.B[n] + (t.I[n] * t.I[n]).shift_up(1);
        } else {
            unsigned n = idx / 2;  // idx = 2n+1, n+1 <= idx-1 here
            t.B[idx] = (t.C[n + 1] * t.C[n + 1] + t.A[n + 1] * t.A[n + 1]).shift_up(1);
            t.C[idx] = (t.D[n + 1] * t.D[n + 1] + t.A[n + 1] * t.A[n + 1]).shift_up(1);
            t.D[idx] = (t.I[n + 1] * t.I[n + 1] + t.B[n + 1] * t.B[n + 1]).shift_up(1);
        }
    }
    return t;
}

// Fit F = p0(s)/(1+s^{2^k}) + p1(s) * B1^{2^l} with polynomial parts of
// degree < maxdeg, searching small k, l. Returns the witness if any choice is
// consistent on all N coefficients.
struct ClosedFormFit {
    bool ok = false;
    unsigned k = 0, l = 0;
    std::vector<std::uint32_t> p0, p1;
};

namespace detail {
// Solve the F_p linear system (columns | rhs); returns a solution with free
// variables set to 0, or nothing if inconsistent.
inline std::optional<std::vector<std::uint32_t>> solve_linear(
    std::vector<std::vector<std::uint32_t>> cols, const std::vector<std::uint32_t>& rhs,
    std::uint32_t p) {
    std::size_t rows = rhs.size(), ncols = cols.size();
    std::vector<std::vector<std::uint32_t>> m(rows, std::vector<std::uint32_t>(ncols + 1));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ncols; ++c) m[r][c] = cols[c][r] % p;
        m[r][ncols] = rhs[r] % p;
    }
    std::vector<std::size_t> pivot_col;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < ncols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[piv], m[rank]);
        std::uint32_t inv = Fp(m[rank][c], p).inv().v;
        for (auto& v : m[rank]) v = static_cast<std::uint32_t>(std::uint64_t(v) * inv % p);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || m[r][c] == 0) continue;
            std::uint32_t f = m[r][c];
            for (std::size_t c2 = c; c2 <= ncols; ++c2)
                m[r][c2] = static_cast<std::uint32_t>(
                    (m[r][c2] + std::uint64_t(p - f) * m[rank][c2]) % p);
        }
        pivot_col.push_back(c);
        ++rank;
    }
    for (std::size_t r = rank; r < rows; ++r)
        if (m[r][ncols]) return std::nullopt;
    std::vector<std::uint32_t> x(ncols, 0);
    for (std::size_t r = 0; r < rank; ++r) x[pivot_col[r]] = m[r][ncols];
    return x;
}
}  // namespace detail

inline ClosedFormFit closed_form_fit(const FpSeries& F, const FpSeries& B1, unsigned maxk,
                                     unsigned maxl, std::size_t maxdeg) {
    F.check(B1);
    std::uint32_t p = F.p;
    for (unsigned k = 0; k <= maxk; ++k) {
        std::vector<std::uint32_t> denom((std::size_t(1) << k) + 1, 0);
        denom[0] = denom[denom.size() - 1] = 1;
        FpSeries geom = rational({1}, denom, p, F.N);
        for (unsigned l = 0; l <= maxl; ++l) {
            FpSeries bpow = B1.pow(1u << l);
            std::vector<std::vector<std::uint32_t>> cols;
            for (std::size_t j = 0; j < maxdeg; ++j) cols.push_back(geom.shift_up(j).coeffs);
            for (std::size_t j = 0; j < maxdeg; ++j) cols.push_back(bpow.shift_up(j).coeffs);
            auto sol = detail::solve_linear(cols, F.coeffs, p);
            if (!sol) continue;
            ClosedFormFit fit;
            fit.ok = true;
            fit.k = k;
            fit.l = l;
            fit.p0.assign(sol->begin(), sol->begin() + static_cast<long>(maxdeg));
            fit.p1.assign(sol->begin() + static_cast<long>(maxdeg), sol->end());
            while (!fit.p0.empty() && fit.p0.back() == 0) fit.p0.pop_back();
            while (!fit.p1.empty() && fit.p1.back() == 0) fit.p1.pop_back();
            return fit;
        }
    }
    return ClosedFormFit{};
}

// ---------------------------------------------------------------------------
// The (t,s) presentation of an upper-triangular N x N matrix: sum M_i(s) t^i
// where the coefficient of s^m in M_i is the entry (m, m+i). Multiplication
// uses the twist t f(s) = shift(f)(s) t (shift drops the constant term), so
// the s-coefficients combine by Hadamard products of shifted series; the
// result is exactly the (t,s) form of the truncated matrix product.

struct TSPoly {
    std::uint32_t p = 2;
    std::size_t N = 0;
    std::vector<FpSeries> comps;  // comps[i] = M_i(s)
};

inline TSPoly ts_of_matrix(const FpMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix not square");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (m.at(i, j)) throw std::invalid_argument("matrix has entries below the diagonal");
    TSPoly t;
    t.p = m.modulus();
    t.N = m.rows();
    for (std::size_t k = 0; k < t.N; ++k) {
        FpSeries diag(t.p, t.N);
        for (std::size_t r = 0; r + k < t.N; ++r) diag.coeffs[r] = m.at(r, r + k);
        t.comps.push_back(std::move(diag));
    }
    while (t.comps.size() > 1 && t.comps.back().is_zero()) t.comps.pop_back();
    return t;
}

inline FpMatrix ts_matrix(const TSPoly& t) {
    FpMatrix m(t.N, t.N, t.p);
    for (std::size_t k = 0; k < t.comps.size() && k < t.N; ++k)
        for (std::size_t r = 0; r + k < t.N; ++r) m.set(r, r + k, t.comps[k].at(r));
    return m;
}

inline TSPoly ts_mul(const TSPoly& u, const TSPoly& v) {
    if (u.p != v.p || u.N != v.N) throw std::invalid_argument("mixed (t,s) contexts");
    TSPoly r;
    r.p = u.p;
    r.N = u.N;
    std::size_t deg = std::min(u.comps.size() + v.comps.size() - 1, r.N);
    r.comps.assign(deg, FpSeries(r.p, r.N));
    for (std::size_t i = 0; i < u.comps.size(); ++i)
        for (std::size_t j = 0; j < v.comps.size(); ++j) {
            if (i + j >= deg) continue;
            r.comps[i + j] = r.comps[i + j] + u.comps[i].hadamard(v.comps[j].shift_down(i));
        }
    // Stay inside the N x N window: diagonal k only has N-k entries.
    for (std::size_t k = 0; k < deg; ++k)
        for (std::size_t m = (k < r.N ? r.N - k : 0); m < r.N; ++m) r.comps[k].coeffs[m] = 0;
    while (r.comps.size() > 1 && r.comps.back().is_zero()) r.comps.pop_back();
    return r;
}

inline bool ts_equal(const TSPoly& a, const TSPoly& b) {
    if (a.p != b.p || a.N != b.N) return false;
    std::size_t deg = std::max(a.comps.size(), b.comps.size());
    FpSeries zero(a.p, a.N);
    for (std::size_t k = 0; k < deg; ++k) {
        const FpSeries& x = k < a.comps.size() ? a.comps[k] : zero;
        const FpSeries& y = k < b.comps.size() ? b.comps[k] : zero;
        if (!(x == y)) return false;
    }
    return true;
}

inline TSPoly ts_identity(std::uint32_t p, std::size_t N) {
    TSPoly t;
    t.p = p;
    t.N = N;
    FpSeries ones(p, N);
    for (auto& c : ones.coeffs) c = 1;
    t.comps.push_back(std::move(ones));
    return t;
}

// The shift matrix J: ones on the first diagonal.
inline TSPoly ts_shift(std::uint32_t p, std::size_t N) {
    TSPoly t;
    t.p = p;
    t.N = N;
    t.comps.emplace_back(p, N);
    FpSeries ones(p, N);
    for (std::size_t m = 0; m + 1 < N; ++m) ones.coeffs[m] = 1;
    t.comps.push_back(std::move(ones));
    return t;
}

}  // namespace selfsim
