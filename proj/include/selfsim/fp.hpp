#pragma once

// Exact arithmetic over the prime fields F_p (2 <= p <= 97), dense matrices,
// and the two structured matrix families the rest of the library consumes:
// binomial-coefficient transition matrices and Sylvester (Walsh) matrices.
//
// Index convention used across the whole library: a row or column index n of a
// level-k matrix encodes the word x_1 x_2 ... x_k through the base-p digits of
// n with the least significant digit first (x_1 is the fastest-varying digit).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace selfsim {

inline bool is_small_prime(std::uint32_t p) {
    if (p < 2 || p > 97) return false;
    for (std::uint32_t q = 2; q * q <= p; ++q)
        if (p % q == 0) return false;
    return true;
}

inline void require_prime(std::uint32_t p) {
    if (!is_small_prime(p))
        throw std::invalid_argument("modulus " + std::to_string(p) +
                                    " is not a prime in [2, 97]");
}

// Scalar in F_p. Operations between scalars of different moduli throw.
struct Fp {
    std::uint32_t v = 0;
    std::uint32_t p = 2;

    Fp() = default;
    Fp(std::uint64_t value, std::uint32_t modulus) : p(modulus) {
        require_prime(modulus);
        v = static_cast<std::uint32_t>(value % modulus);
    }
    static Fp from_int(long long value, std::uint32_t modulus) {
        require_prime(modulus);
        long long r = value % static_cast<long long>(modulus);
        if (r < 0) r += modulus;
        return Fp(static_cast<std::uint64_t>(r), modulus);
    }

    friend Fp operator+(Fp a, Fp b) { a.check(b); return Fp((a.v + b.v) % a.p, a.p); }
    friend Fp operator-(Fp a, Fp b) { a.check(b); return Fp((a.v + a.p - b.v) % a.p, a.p); }
    friend Fp operator*(Fp a, Fp b) {
        a.check(b);
        return Fp(static_cast<std::uint64_t>(a.v) * b.v % a.p, a.p);
    }
    Fp operator-() const { return Fp((p - v) % p, p); }
    Fp pow(std::uint64_t e) const {
        std::uint64_t base = v, acc = 1;
        while (e) {
            if (e & 1) acc = acc * base % p;
            base = base * base % p;
            e >>= 1;
        }
        return Fp(acc, p);
    }
    Fp inv() const {
        if (v == 0) throw std::domain_error("division by zero in F_p");
        return pow(p - 2);
    }
    friend Fp operator/(Fp a, Fp b) { a.check(b); return a * b.inv(); }
    friend bool operator==(Fp a, Fp b) { a.check(b); return a.v == b.v; }
    friend bool operator!=(Fp a, Fp b) { return !(a == b); }

    void check(const Fp& other) const {
        if (p != other.p)
            throw std::invalid_argument("mixed moduli " + std::to_string(p) +
                                        " and " + std::to_string(other.p));
    }
};

// Dense row-major matrix over F_p. Entries are stored as raw residues; the
// modulus is shared by the whole matrix.
class FpMatrix {
public:
    FpMatrix() = default;
    FpMatrix(std::size_t rows, std::size_t cols, std::uint32_t p)
        : rows_(rows), cols_(cols), p_(p), data_(rows * cols, 0) {
        require_prime(p);
    }

    static FpMatrix identity(std::size_t n, std::uint32_t p) {
        FpMatrix m(n, n, p);
        for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::uint32_t modulus() const { return p_; }

    std::uint32_t at(std::size_t i, std::size_t j) const {
        return data_[i * cols_ + j];
    }
    void set(std::size_t i, std::size_t j, std::uint64_t value) {
        data_[i * cols_ + j] = static_cast<std::uint32_t>(value % p_);
    }
    void set_signed(std::size_t i, std::size_t j, long long value) {
        long long r = value % static_cast<long long>(p_);
        if (r < 0) r += p_;
        data_[i * cols_ + j] = static_cast<std::uint32_t>(r);
    }

    friend FpMatrix operator+(const FpMatrix& a, const FpMatrix& b) {
        a.check_same_shape(b);
        FpMatrix r(a.rows_, a.cols_, a.p_);
        for (std::size_t i = 0; i < a.data_.size(); ++i)
            r.data_[i] = (a.data_[i] + b.data_[i]) % a.p_;
        return r;
    }
    friend FpMatrix operator-(const FpMatrix& a, const FpMatrix& b) {
        a.check_same_shape(b);
        FpMatrix r(a.rows_, a.cols_, a.p_);
        for (std::size_t i = 0; i < a.data_.size(); ++i)
            r.data_[i] = (a.data_[i] + a.p_ - b.data_[i]) % a.p_;
        return r;
    }
    friend FpMatrix operator*(const FpMatrix& a, const FpMatrix& b) {
        if (a.p_ != b.p_) throw std::invalid_argument("modulus mismatch in matrix product");
        if (a.cols_ != b.rows_) throw std::invalid_argument("shape mismatch in matrix product");
        if (a.p_ == 2 && a.cols_ >= 64) return mul_mod2(a, b);
        FpMatrix r(a.rows_, b.cols_, a.p_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                std::uint64_t aik = a.data_[i * a.cols_ + k];
                if (!aik) continue;
                const std::uint32_t* brow = &b.data_[k * b.cols_];
                std::uint32_t* rrow = &r.data_[i * b.cols_];
                for (std::size_t j = 0; j < b.cols_; ++j)
                    rrow[j] = static_cast<std::uint32_t>((rrow[j] + aik * brow[j]) % a.p_);
            }
        }
        return r;
    }

    FpMatrix scale(std::uint32_t c) const {
        FpMatrix r(rows_, cols_, p_);
        for (std::size_t i = 0; i < data_.size(); ++i)
            r.data_[i] = static_cast<std::uint32_t>(static_cast<std::uint64_t>(data_[i]) * c % p_);
        return r;
    }

    FpMatrix transpose() const {
        FpMatrix r(cols_, rows_, p_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                r.data_[j * rows_ + i] = data_[i * cols_ + j];
        return r;
    }

    // Gauss-Jordan over F_p; throws std::domain_error on singular input.
    FpMatrix inverse() const {
        if (rows_ != cols_) throw std::invalid_argument("inverse of non-square matrix");
        std::size_t n = rows_;
        FpMatrix a(*this), inv = identity(n, p_);
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            while (piv < n && a.at(piv, col) == 0) ++piv;
            if (piv == n) throw std::domain_error("singular matrix over F_p");
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            std::uint32_t d = Fp(a.at(col, col), p_).inv().v;
            a.scale_row(col, d);
            inv.scale_row(col, d);
            for (std::size_t i = 0; i < n; ++i) {
                if (i == col) continue;
                std::uint32_t f = a.at(i, col);
                if (!f) continue;
                a.addmul_row(i, col, p_ - f);
                inv.addmul_row(i, col, p_ - f);
            }
        }
        return inv;
    }

    FpMatrix pow(std::uint64_t e) const {
        if (rows_ != cols_) throw std::invalid_argument("power of non-square matrix");
        FpMatrix acc = identity(rows_, p_), base = *this;
        while (e) {
            if (e & 1) acc = acc * base;
            if (e >>= 1) base = base * base;
        }
        return acc;
    }

    FpMatrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
        FpMatrix out(r, c, p_);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out.data_[i * c + j] = at(i0 + i, j0 + j);
        return out;
    }

    // Decimation by residue classes: entries (s + d*i, t + d*j).
    FpMatrix decimation(std::uint32_t s, std::uint32_t t, std::uint32_t d) const {
        std::size_t r = (rows_ > s) ? (rows_ - s + d - 1) / d : 0;
        std::size_t c = (cols_ > t) ? (cols_ - t + d - 1) / d : 0;
        FpMatrix out(r, c, p_);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out.data_[i * c + j] = at(s + d * i, t + d * j);
        return out;
    }

    bool is_identity() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                if (at(i, j) != (i == j ? 1u : 0u)) return false;
        return true;
    }
    bool is_zero() const {
        for (std::uint32_t x : data_)
            if (x) return false;
        return true;
    }
    bool is_upper_unitriangular() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i) {
            if (at(i, i) != 1) return false;
            for (std::size_t j = 0; j < i; ++j)
                if (at(i, j) != 0) return false;
        }
        return true;
    }

    friend bool operator==(const FpMatrix& a, const FpMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.p_ == b.p_ &&
               a.data_ == b.data_;
    }
    friend bool operator!=(const FpMatrix& a, const FpMatrix& b) { return !(a == b); }

private:
    void check_same_shape(const FpMatrix& b) const {
        if (p_ != b.p_ || rows_ != b.rows_ || cols_ != b.cols_)
            throw std::invalid_argument("matrix shape or modulus mismatch");
    }
    void swap_rows(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < cols_; ++k)
            std::swap(data_[i * cols_ + k], data_[j * cols_ + k]);
    }
    void scale_row(std::size_t i, std::uint32_t c) {
        for (std::size_t k = 0; k < cols_; ++k)
            data_[i * cols_ + k] =
                static_cast<std::uint32_t>(static_cast<std::uint64_t>(data_[i * cols_ + k]) * c % p_);
    }
    void addmul_row(std::size_t dst, std::size_t src, std::uint32_t c) {
        for (std::size_t k = 0; k < cols_; ++k)
            data_[dst * cols_ + k] = static_cast<std::uint32_t>(
                (data_[dst * cols_ + k] +
                 static_cast<std::uint64_t>(data_[src * cols_ + k]) * c) % p_);
    }

    // Bit-packed product for p = 2; turns level-9+ squaring from seconds into
    // milliseconds.
    static FpMatrix mul_mod2(const FpMatrix& a, const FpMatrix& b) {
        const std::size_t words = (b.cols_ + 63) / 64;
        std::vector<std::uint64_t> packed(b.rows_ * words, 0);
        for (std::size_t k = 0; k < b.rows_; ++k)
            for (std::size_t j = 0; j < b.cols_; ++j)
                if (b.data_[k * b.cols_ + j])
                    packed[k * words + j / 64] |= std::uint64_t(1) << (j % 64);
        FpMatrix r(a.rows_, b.cols_, 2);
        std::vector<std::uint64_t> acc(words);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            std::fill(acc.begin(), acc.end(), 0);
            for (std::size_t k = 0; k < a.cols_; ++k)
                if (a.data_[i * a.cols_ + k])
                    for (std::size_t w = 0; w < words; ++w)
                        acc[w] ^= packed[k * words + w];
            for (std::size_t j = 0; j < b.cols_; ++j)
                r.data_[i * b.cols_ + j] =
                    static_cast<std::uint32_t>((acc[j / 64] >> (j % 64)) & 1);
        }
        return r;
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::uint32_t p_ = 2;
    std::vector<std::uint32_t> data_;
};

inline FpMatrix kron(const FpMatrix& a, const FpMatrix& b) {
    if (a.modulus() != b.modulus())
        throw std::invalid_argument("modulus mismatch in Kronecker product");
    FpMatrix r(a.rows() * b.rows(), a.cols() * b.cols(), a.modulus());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            std::uint64_t aij = a.at(i, j);
            if (!aij) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    r.set(i * b.rows() + k, j * b.cols() + l, aij * b.at(k, l));
        }
    return r;
}

// Exact integer matrix; only the +-1 Sylvester family and its Gram products
// live here, so 64-bit entries have huge headroom.
class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    static IntMatrix identity(std::size_t n) {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    long long at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    void set(std::size_t i, std::size_t j, long long v) { data_[i * cols_ + j] = v; }

    friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("shape mismatch");
        IntMatrix r(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                long long aik = a.at(i, k);
                if (!aik) continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    r.data_[i * b.cols_ + j] += aik * b.at(k, j);
            }
        return r;
    }
    IntMatrix transpose() const {
        IntMatrix r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                r.data_[j * rows_ + i] = at(i, j);
        return r;
    }
    friend bool operator==(const IntMatrix& a, const IntMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<long long> data_;
};

inline IntMatrix kron(const IntMatrix& a, const IntMatrix& b) {
    IntMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    r.set(i * b.rows() + k, j * b.cols() + l, a.at(i, j) * b.at(k, l));
    return r;
}

// H_0 = [1], H_n = [[H, H], [H, -H]]; rows are pairwise orthogonal.
inline IntMatrix sylvester(unsigned n) {
    if (n > 10)
        throw std::invalid_argument("sylvester: 2^n would exceed the supported size");
    IntMatrix h(1, 1);
    h.set(0, 0, 1);
    for (unsigned step = 0; step < n; ++step) {
        std::size_t m = h.rows();
        IntMatrix next(2 * m, 2 * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                long long v = h.at(i, j);
                next.set(i, j, v);
                next.set(i, j + m, v);
                next.set(i + m, j, v);
                next.set(i + m, j + m, -v);
            }
        h = next;
    }
    return h;
}

// Binomial coefficient mod p via Pascal's triangle (n, k <= 96).
inline std::uint32_t binom_mod(std::uint32_t n, std::uint32_t k, std::uint32_t p) {
    if (k > n) return 0;
    std::vector<std::uint32_t> row(n + 1, 0);
    row[0] = 1;
    for (std::uint32_t i = 1; i <= n; ++i)
        for (std::uint32_t j = i; j >= 1; --j)
            row[j] = (row[j] + row[j - 1]) % p;
    return row[k];
}

// Transition pair between the delta basis of F_p^X and the falling-binomial
// basis b_k(x) = (-1)^k C(x+k, k): T[i][j] = C(p-1-i, j) and Tinv is T
// transposed about the secondary diagonal, Tinv[i][j] = C(j, p-1-i).
inline std::pair<FpMatrix, FpMatrix> binomial_transition(std::uint32_t p) {
    require_prime(p);
    FpMatrix t(p, p, p), tinv(p, p, p);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < p; ++j) {
            t.set(i, j, binom_mod(p - 1 - i, j, p));
            tinv.set(i, j, binom_mod(j, p - 1 - i, p));
        }
    if (!(t * tinv).is_identity())
        throw std::logic_error("binomial transition pair failed self-check");
    return {t, tinv};
}

}  // namespace selfsim
