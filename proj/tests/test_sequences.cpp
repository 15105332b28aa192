#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "selfsim/mealy.hpp"
#include "selfsim/sequences.hpp"
#include "selfsim/triangular.hpp"

using namespace selfsim;

namespace {

std::uint32_t digit_sum_mod2(std::uint64_t n) {
    std::uint32_t s = 0;
    while (n) {
        s ^= n & 1;
        n >>= 1;
    }
    return s;
}

// All words of the given length over {0..d-1}.
std::vector<Word> all_words(unsigned d, unsigned len) {
    std::vector<Word> out;
    Word w(len, 0);
    for (;;) {
        out.push_back(w);
        unsigned i = 0;
        while (i < len && ++w[i] == d) w[i++] = 0;
        if (i == len) break;
    }
    return out;
}

}  // namespace

TEST_CASE("Thue-Morse terms") {
    SequenceSystem tm = thue_morse();
    std::vector<std::uint32_t> first{0, 1, 1, 0, 1, 0, 0, 1};
    for (std::size_t n = 0; n < first.size(); ++n) CHECK(term(tm, n) == first[n]);
    CHECK(term(tm, std::uint64_t(1) << 10) == 1);
    for (std::uint64_t n = 0; n < 4096; ++n) CHECK(term(tm, n) == digit_sum_mod2(n));

    SequenceSystem zero = constant_system(2, 0);
    for (std::uint64_t n : {0ull, 5ull, 100000ull}) CHECK(term(zero, n) == 0);
}

TEST_CASE("decimation of prefixes") {
    std::vector<std::uint32_t> six{0, 1, 2, 3, 4, 5};
    auto parts = decimate(six, 2);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0] == (std::vector<std::uint32_t>{0, 2, 4}));
    CHECK(parts[1] == (std::vector<std::uint32_t>{1, 3, 5}));

    SequenceSystem tm = thue_morse();
    auto tparts = decimate(prefix_of(tm, 0, 128), 2);
    for (std::size_t k = 0; k < 64; ++k) {
        CHECK(tparts[0][k] == term(tm, k));
        CHECK(tparts[1][k] == 1 - term(tm, k));
    }

    auto cparts = decimate(std::vector<std::uint32_t>(30, 7), 3);
    for (const auto& c : cparts) CHECK(c == std::vector<std::uint32_t>(10, 7));

    CHECK_THROWS_AS(decimate({1}, 2), std::invalid_argument);
}

TEST_CASE("decimate and interleave invert each other") {
    std::mt19937 rng(310);
    std::uniform_int_distribution<std::uint32_t> letter(0, 4);
    for (unsigned d : {2u, 3u, 5u}) {
        for (std::size_t len : {std::size_t(d), std::size_t(12), std::size_t(100)}) {
            std::vector<std::uint32_t> prefix(len);
            for (auto& v : prefix) v = letter(rng);
            auto parts = decimate(prefix, d);
            auto back = interleave(parts);
            // interleave returns the prefix truncated to a multiple of d
            CHECK(back == std::vector<std::uint32_t>(prefix.begin(),
                                                     prefix.begin() + back.size()));
            CHECK(decimate(back, d) == parts);
        }
    }
    CHECK_THROWS_AS(interleave({{1, 2}, {1}}), std::invalid_argument);
}

TEST_CASE("kernel rebuilds the Thue-Morse system and predicts unseen terms") {
    SequenceSystem tm = thue_morse();
    auto oracle = [&](std::uint64_t n) { return term(tm, n); };
    SequenceSystem k = kernel(oracle, 2, 64, 10);
    CHECK(k.symbols.size() == 2);
    for (std::uint64_t n = 0; n < 512; ++n) CHECK(term(k, n) == term(tm, n));
    for (std::uint64_t n = (1 << 10); n <= (1 << 10) + 100; ++n)
        CHECK(term(k, n) == digit_sum_mod2(n));

    SequenceSystem kc = kernel([](std::uint64_t) { return 3u; }, 3, 16, 10);
    CHECK(kc.symbols.size() == 1);
    CHECK(kc.alphabet == 4);
}

TEST_CASE("kernel gives up on a sequence that is not automatic") {
    // Characteristic function of the perfect squares.
    auto squares = [](std::uint64_t n) {
        std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(double(n)) + 0.5);
        return r * r == n ? 1u : 0u;
    };
    CHECK_THROWS_AS(kernel(squares, 2, 256, 12), ClosureCapError);
}

TEST_CASE("kernel of the first diagonal of Grigorchuk's b") {
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    Element b = grig.generator("b");
    auto diag = first_diagonal(b, 1023);  // diag[i] = s_{i+1}
    auto oracle = [&](std::uint64_t n) { return n == 0 ? 0u : diag.at(n - 1); };
    SequenceSystem sys = kernel(oracle, 2, 64, 16);
    CHECK(sys.symbols.size() <= 6);
    for (std::uint64_t n = 1; n < 1024; ++n) CHECK(term(sys, n) == diag[n - 1]);
}

TEST_CASE("Toeplitz systems from abelianizations") {
    // Diagonal of Grigorchuk's a: 1,0,1,0,...
    SequenceSystem sa = toeplitz_from_alpha({1}, {0}, 2);
    for (std::uint64_t n = 1; n < 64; ++n) CHECK(term(sa, n) == (n % 2 ? 1u : 0u));
    CHECK_THROWS_AS(term(sa, 0), std::domain_error);

    // Diagonal of b: zero at valuation 0 mod 3, one otherwise.
    SequenceSystem sb = toeplitz_from_alpha({}, {0, 1, 1}, 2);
    for (std::uint64_t n = 1; n < 512; ++n) {
        unsigned v = padic_valuation(n, 2) % 3;
        CHECK(term(sb, n) == (v == 0 ? 0u : 1u));
    }

    SequenceSystem sz = toeplitz_from_alpha({}, {0}, 3);
    for (std::uint64_t n = 1; n < 64; ++n) CHECK(term(sz, n) == 0);

    CHECK_THROWS_AS(toeplitz_from_alpha({1}, {}, 2), std::invalid_argument);

    // Cross-check against the element-level diagonal.
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    for (const char* name : {"b", "c", "d"}) {
        SequenceSystem sys = toeplitz_from_alpha(alpha(grig.generator(name)));
        auto diag = first_diagonal(grig.generator(name), 255);
        for (std::uint64_t n = 1; n <= 255; ++n) CHECK(term(sys, n) == diag[n - 1]);
    }
}

TEST_CASE("term and step are consistent on the bundled systems") {
    auto both = [](const SequenceSystem& s1, std::uint64_t n1, const SequenceSystem& s2,
                   std::uint64_t n2) {
        bool def1 = true, def2 = true;
        std::uint32_t v1 = 0, v2 = 0;
        try {
            v1 = term(s1, n1);
        } catch (const std::domain_error&) {
            def1 = false;
        }
        try {
            v2 = term(s2, n2);
        } catch (const std::domain_error&) {
            def2 = false;
        }
        return def1 == def2 && (!def1 || v1 == v2);
    };
    std::vector<SequenceSystem> bundle{thue_morse(), constant_system(3, 1),
                                       toeplitz_from_alpha({1}, {0}, 2),
                                       toeplitz_from_alpha({0}, {1, 0, 1}, 2),
                                       toeplitz_from_alpha({}, {1, 2}, 3)};
    for (const auto& sys : bundle) {
        for (unsigned i = 0; i < sys.d; ++i) {
            SequenceSystem rerooted = with_root(sys, sys.step[sys.root][i]);
            for (std::uint64_t n = 0; n < 512; ++n)
                CHECK(both(sys, n * sys.d + i, rerooted, n));
        }
    }
    CHECK_THROWS_AS(with_root(thue_morse(), 5), std::invalid_argument);
}

TEST_CASE("Moore conversion of the adding machine") {
    auto add = parse_group("p = 2\na = s (1, a)\n");
    Element a = add.generator("a");
    MooreMachine moore = mealy_to_moore(a);
    CHECK(moore.states.size() == 5);  // 2 states x 2 letters + start
    for (unsigned len = 1; len <= 8; ++len)
        for (const Word& w : all_words(2, len)) CHECK(moore.apply(w) == act(a, w));
}

TEST_CASE("Moore conversion preserves the word function") {
    auto grig = parse_group("p=2; a = s; b=(a,c); c=(a,d); d=(1,b)");
    Element b = grig.generator("b");
    MooreMachine moore = mealy_to_moore(b);
    CHECK(moore.states.size() == 11);  // 5 reachable states x 2 letters + start
    for (unsigned len = 1; len <= 8; ++len)
        for (const Word& w : all_words(2, len)) CHECK(moore.apply(w) == act(b, w));

    auto gs = parse_group("p=3; a = s; b=(a, a', b)");
    Element gb = gs.generator("b");
    MooreMachine m3 = mealy_to_moore(gb);
    for (unsigned len = 1; len <= 5; ++len)
        for (const Word& w : all_words(3, len)) CHECK(m3.apply(w) == act(gb, w));

    // The trivial machine echoes its input.
    auto triv = parse_group("p = 2\n");
    MooreMachine echo = mealy_to_moore(triv.identity());
    CHECK(echo.states.size() == 3);
    for (const Word& w : all_words(2, 6)) CHECK(echo.apply(w) == w);
    CHECK_THROWS_AS(echo.apply(Word{2}), std::invalid_argument);
}
