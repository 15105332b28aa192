#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "selfsim/mealy.hpp"
#include "selfsim/recursion.hpp"
#include "selfsim/sequences.hpp"
#include "selfsim/series.hpp"

using namespace selfsim;

namespace {

FpSeries one_plus_power_inv(std::uint32_t p, std::size_t k, std::size_t N) {
    std::vector<std::uint32_t> denom(k + 1, 0);
    denom[0] = denom[k] = 1;
    return rational({1}, denom, p, N);
}

FpSeries monomial(std::uint32_t p, std::size_t k, std::size_t N) {
    FpSeries s(p, N);
    if (k < N) s.coeffs[k] = 1;
    return s;
}

FpSeries random_series(std::uint32_t p, std::size_t N, std::mt19937& rng) {
    std::uniform_int_distribution<std::uint32_t> coef(0, p - 1);
    FpSeries s(p, N);
    for (auto& c : s.coeffs) c = coef(rng);
    return s;
}

}  // namespace

TEST_CASE("rational expansions") {
    FpSeries geo = rational({1}, {1, 1}, 2, 16);
    CHECK(geo.coeffs == std::vector<std::uint32_t>(16, 1));

    FpSeries f = rational({0, 1}, {1, 0, 0, 0, 1}, 2, 16);
    for (std::size_t k = 0; k < 16; ++k) CHECK(f.coeffs[k] == (k % 4 == 1 ? 1u : 0u));
    CHECK(f.str() == "s + s^5 + s^9 + s^13");

    // Denominators with a unit constant term only.
    CHECK_THROWS_AS(rational({1}, {0, 1}, 2, 8), std::domain_error);

    // p = 3: 1/(1-s) is the all-ones series; {1,2} encodes 1+2s = 1-s.
    FpSeries g3 = rational({1}, {1, 2}, 3, 10);
    CHECK(g3.coeffs == std::vector<std::uint32_t>(10, 1));

    SequenceSystem tm = thue_morse();
    FpSeries gtm = series_of_sequence(prefix_of(tm, 0, 16), 2);
    CHECK(gtm.coeffs[0] == 0);
    CHECK(gtm.coeffs[1] == 1);
    CHECK(gtm.coeffs[2] == 1);
    CHECK(gtm.coeffs[3] == 0);
}

TEST_CASE("series arithmetic basics") {
    FpSeries a = FpSeries::of_coeffs(2, {1, 1, 0, 1});
    FpSeries b = FpSeries::of_coeffs(2, {0, 1, 1, 0});
    CHECK((a + b).coeffs == (std::vector<std::uint32_t>{1, 0, 1, 1}));
    CHECK((a * b).coeffs == (std::vector<std::uint32_t>{0, 1, 0, 1}));
    CHECK(a.shift_up(1).coeffs == (std::vector<std::uint32_t>{0, 1, 1, 0}));
    CHECK(a.shift_down(1).coeffs == (std::vector<std::uint32_t>{1, 0, 1, 0}));
    CHECK(a.hadamard(b).coeffs == (std::vector<std::uint32_t>{0, 1, 0, 0}));
    CHECK(a.valuation() == 0);
    CHECK(b.valuation() == 1);
    CHECK(FpSeries(2, 4).valuation() == 4);
    CHECK_THROWS_AS(a + FpSeries(2, 5), std::invalid_argument);
    CHECK_THROWS_AS(a + FpSeries(3, 4), std::invalid_argument);
}

TEST_CASE("recomposition from decimations") {
    SequenceSystem tm = thue_morse();
    FpSeries whole = series_of_sequence(prefix_of(tm, 0, 64), 2);
    auto parts_prefixes = decimate(prefix_of(tm, 0, 128), 2);
    std::vector<FpSeries> parts{series_of_sequence(parts_prefixes[0], 2),
                                series_of_sequence(parts_prefixes[1], 2)};
    CHECK(recompose(parts) == whole);
    CHECK(frobenius_recompose(parts) == whole);

    std::vector<FpSeries> zeros{FpSeries(2, 32), FpSeries(2, 32)};
    CHECK(recompose(zeros).is_zero());

    // f(x) = 1+x over F2: f(x^2) = 1+x^2 = (1+x)^2.
    FpSeries fx = FpSeries::of_coeffs(2, {1, 1});
    fx.coeffs.resize(8, 0);
    fx.N = 8;
    std::vector<FpSeries> just_f{fx, FpSeries(2, 8)};
    CHECK(recompose(just_f) == fx * fx);
}

TEST_CASE("Frobenius identity on random series") {
    std::mt19937 rng(420);
    for (std::uint32_t p : {2u, 3u}) {
        for (int trial = 0; trial < 50; ++trial) {
            FpSeries f = random_series(p, 48, rng);
            // f(x^p) via recomposition with zero companions.
            std::vector<FpSeries> parts(p, FpSeries(p, 48));
            parts[0] = f;
            CHECK(f.pow(p) == recompose(parts));
        }
    }
}

TEST_CASE("algebraic relation of the Thue-Morse series") {
    std::size_t N = 64;
    SequenceSystem tm = thue_morse();
    FpSeries G = series_of_sequence(prefix_of(tm, 0, N), 2);
    FpSeries one_x = FpSeries::of_coeffs(2, {1, 1});
    one_x.coeffs.resize(N, 0);
    one_x.N = N;
    std::vector<FpSeries> rel{
        monomial(2, 1, N),      // + x
        one_x * one_x,          // (1+x)^2 G
        one_x * one_x * one_x,  // (1+x)^3 G^2
    };
    CHECK(verify_algebraic(G, rel));

    FpSeries bad = G;
    bad.coeffs[30] ^= 1;
    CHECK_FALSE(verify_algebraic(bad, rel));

    FpSeries tiny(2, 4);
    CHECK_THROWS_AS(verify_algebraic(tiny, {FpSeries(2, 4)}), std::invalid_argument);
}

TEST_CASE("diagonal series of the basic elements") {
    auto add = parse_group("p = 2\na = s (1, a)\n");
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    MarkedBasis bin = MarkedBasis::binomial(2);

    FpSeries d0 = diagonal_series(add.generator("a"), 0, 16, bin);
    CHECK(d0.coeffs == std::vector<std::uint32_t>(16, 1));
    FpSeries d1 = diagonal_series(add.generator("a"), 1, 16, bin);
    CHECK(d1.coeffs == std::vector<std::uint32_t>(16, 1));
    CHECK(diagonal_series(add.generator("a"), 2, 16, bin).is_zero());

    // Grigorchuk's a: first diagonal 1,0,1,0,... = 1/(1+s^2).
    CHECK(diagonal_series(grig.generator("a"), 1, 32, bin) ==
          one_plus_power_inv(2, 2, 32));
}

TEST_CASE("diagonal decimation index rule") {
    DiagonalBlock b = diagonal_decimation_map(1, 0, 2);
    CHECK((b.row == 0 && b.col == 1 && b.q == 0));
    b = diagonal_decimation_map(1, 1, 2);
    CHECK((b.row == 1 && b.col == 0 && b.q == 1));
    b = diagonal_decimation_map(3, 1, 2);
    CHECK((b.q == 2 && b.col == 0));
    CHECK_THROWS_AS(diagonal_decimation_map(0, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(diagonal_decimation_map(1, 2, 2), std::invalid_argument);

    // The rule against actual matrices: the k-th 2-decimation of diagonal n
    // equals diagonal q of the block (k, r).
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    MarkedBasis bin = MarkedBasis::binomial(2);
    for (const char* name : {"b", "c"}) {
        FpMatrix m = level_matrix(grig.generator(name), 6, bin);
        for (unsigned n = 1; n <= 3; ++n) {
            std::vector<std::uint32_t> diag;
            for (std::size_t r = 0; r + n < m.rows(); ++r) diag.push_back(m.at(r, r + n));
            for (unsigned k = 0; k < 2; ++k) {
                DiagonalBlock blk = diagonal_decimation_map(n, k, 2);
                FpMatrix sub = m.decimation(blk.row, blk.col, 2);
                for (std::size_t j = 0; k + 2 * j < diag.size() && j + blk.q < sub.rows();
                     ++j)
                    CHECK(diag[k + 2 * j] == sub.at(j, j + blk.q));
            }
        }
    }
}

TEST_CASE("the Grigorchuk diagonal system") {
    std::size_t N = 64;
    GrigorchukDiagonals tab = grigorchuk_diagonal_system(8, N);

    FpSeries ones = one_plus_power_inv(2, 1, N);
    CHECK(tab.A[0] == ones);
    CHECK(tab.I[0] == ones);
    CHECK(tab.B[0] == ones);
    CHECK(tab.A[1] == one_plus_power_inv(2, 2, N));
    for (unsigned n = 2; n <= 8; ++n) CHECK(tab.A[n].is_zero());
    for (unsigned n = 1; n <= 8; ++n) CHECK(tab.I[n].is_zero());

    // Index-0 displays hold for the seeded values.
    FpSeries s = monomial(2, 1, N);
    CHECK(tab.B[0] == tab.C[0] * tab.C[0] + s * tab.A[0] * tab.A[0]);
    CHECK(tab.C[0] == tab.D[0] * tab.D[0] + s * tab.A[0] * tab.A[0]);
    CHECK(tab.D[0] == tab.B[0] * tab.B[0] + s * tab.I[0] * tab.I[0]);

    // First diagonal of b starts 0,1,0,1,0,1,0,0.
    std::vector<std::uint32_t> head(tab.B[1].coeffs.begin(), tab.B[1].coeffs.begin() + 8);
    CHECK(head == (std::vector<std::uint32_t>{0, 1, 0, 1, 0, 1, 0, 0}));

    // The closed forms of the index-1 trio.
    CHECK(tab.D[1] == (tab.B[1] * tab.B[1]).shift_up(1));
    CHECK(tab.C[1] == tab.B[1].pow(4).shift_up(3) + rational({0, 1}, {1, 0, 0, 0, 1}, 2, N));

    CHECK_THROWS_AS(grigorchuk_diagonal_system(2, 4), std::invalid_argument);
}

TEST_CASE("system diagonals match the matrix diagonals") {
    std::size_t L = 32;
    GrigorchukDiagonals tab = grigorchuk_diagonal_system(5, L);
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    MarkedBasis bin = MarkedBasis::binomial(2);
    for (unsigned n = 0; n <= 5; ++n) {
        CHECK(tab.A[n] == diagonal_series(grig.generator("a"), n, L, bin));
        CHECK(tab.B[n] == diagonal_series(grig.generator("b"), n, L, bin));
        CHECK(tab.C[n] == diagonal_series(grig.generator("c"), n, L, bin));
        CHECK(tab.D[n] == diagonal_series(grig.generator("d"), n, L, bin));
        CHECK(tab.I[n] == diagonal_series(grig.identity(), n, L, bin));
    }
}

TEST_CASE("the three algebraic equations for the first diagonals") {
    std::size_t N = 64;
    GrigorchukDiagonals tab = grigorchuk_diagonal_system(1, N);
    FpSeries one(2, N);
    one.coeffs[0] = 1;
    FpSeries zero(2, N);
    auto shifted_inv = [&](std::size_t num_shift, std::size_t denom_pow) {
        return one_plus_power_inv(2, denom_pow, N).shift_up(num_shift);
    };
    std::vector<FpSeries> relB(9, zero), relC(9, zero), relD(9, zero);
    relB[0] = shifted_inv(3, 8) + shifted_inv(1, 4);
    relC[0] = shifted_inv(7, 16) + shifted_inv(1, 4);
    relD[0] = shifted_inv(7, 16) + shifted_inv(3, 8);
    relB[1] = relC[1] = relD[1] = one;
    relB[8] = relC[8] = relD[8] = monomial(2, 7, N);
    CHECK(verify_algebraic(tab.B[1], relB));
    CHECK(verify_algebraic(tab.C[1], relC));
    CHECK(verify_algebraic(tab.D[1], relD));
    // The relations are specific: B1 does not satisfy the C1 equation.
    CHECK_FALSE(verify_algebraic(tab.B[1], relC));
}

TEST_CASE("closed-form fitting") {
    std::size_t N = 64;
    GrigorchukDiagonals tab = grigorchuk_diagonal_system(4, N);
    const FpSeries& B1 = tab.B[1];

    ClosedFormFit fit = closed_form_fit(tab.C[1], B1, 5, 5, 24);
    REQUIRE(fit.ok);
    // Reconstruct and compare.
    std::vector<std::uint32_t> denom((std::size_t(1) << fit.k) + 1, 0);
    denom[0] = denom[denom.size() - 1] = 1;
    FpSeries rebuilt = rational(fit.p0, denom, 2, N);
    FpSeries bpow = B1.pow(1u << fit.l);
    for (std::size_t j = 0; j < fit.p1.size(); ++j)
        if (fit.p1[j]) rebuilt = rebuilt + bpow.shift_up(j).scale(fit.p1[j]);
    CHECK(rebuilt == tab.C[1]);

    for (unsigned n = 0; n <= 4; ++n) {
        CHECK(closed_form_fit(tab.B[n], B1, 5, 5, 24).ok);
        CHECK(closed_form_fit(tab.C[n], B1, 5, 5, 24).ok);
        CHECK(closed_form_fit(tab.D[n], B1, 5, 5, 24).ok);
    }

    std::mt19937 rng(421);
    FpSeries noise = random_series(2, N, rng);
    CHECK_FALSE(closed_form_fit(noise, B1, 3, 3, 12).ok);
}

TEST_CASE("(t,s) polynomials and matrix products") {
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    MarkedBasis bin = MarkedBasis::binomial(2);
    std::size_t N = 64;

    FpMatrix mb = level_matrix(grig.generator("b"), 6, bin);
    TSPoly tb = ts_of_matrix(mb);
    CHECK(tb.comps[0].coeffs == std::vector<std::uint32_t>(N, 1));
    CHECK(ts_matrix(tb) == mb);

    // b^2 = 1.
    CHECK(ts_equal(ts_mul(tb, tb), ts_identity(2, N)));

    // J^2 has the all-ones second diagonal inside the window.
    TSPoly j = ts_shift(2, N);
    TSPoly j2 = ts_mul(j, j);
    REQUIRE(j2.comps.size() == 3);
    for (std::size_t m = 0; m < N; ++m)
        CHECK(j2.comps[2].coeffs[m] == (m + 2 < N ? 1u : 0u));

    // t commutes with the all-ones series (shift-invariance).
    CHECK(ts_equal(ts_mul(j, ts_identity(2, N)), ts_mul(ts_identity(2, N), j)));

    CHECK_THROWS_AS(ts_of_matrix(FpMatrix(2, 3, 2)), std::invalid_argument);
    FpMatrix lower(2, 2, 2);
    lower.set(1, 0, 1);
    CHECK_THROWS_AS(ts_of_matrix(lower), std::invalid_argument);
    CHECK_THROWS_AS(ts_mul(tb, ts_identity(2, 32)), std::invalid_argument);
}

TEST_CASE("ts_mul agrees with matrix multiplication and is associative") {
    std::mt19937 rng(422);
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    MarkedBasis bin = MarkedBasis::binomial(2);
    std::size_t N = 64;

    std::vector<FpMatrix> pool;
    for (const char* name : {"a", "b", "c", "d"})
        pool.push_back(level_matrix(grig.generator(name), 6, bin));
    pool.push_back(ts_matrix(ts_shift(2, N)));
    pool.push_back(FpMatrix::identity(N, 2));

    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int trial = 0; trial < 12; ++trial) {
        const FpMatrix& A = pool[pick(rng)];
        const FpMatrix& B = pool[pick(rng)];
        const FpMatrix& C = pool[pick(rng)];
        TSPoly u = ts_of_matrix(A), v = ts_of_matrix(B), w = ts_of_matrix(C);
        CHECK(ts_equal(ts_mul(u, v), ts_of_matrix(A * B)));
        CHECK(ts_equal(ts_mul(ts_mul(u, v), w), ts_mul(u, ts_mul(v, w))));
    }
}
