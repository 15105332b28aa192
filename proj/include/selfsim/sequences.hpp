#pragma once

// d-automatic sequences presented by their kernel automata: a finite set of
// symbols (the repeated d-decimations of the sequence), a step map feeding
// one base-d digit at a time, and an output letter per symbol. Also the
// Mealy-to-Moore conversion and the Toeplitz systems arising as first
// diagonals.

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/mealy.hpp"
#include "selfsim/triangular.hpp"

namespace selfsim {

struct SequenceSystem {
    unsigned d = 2;                         // decimation arity
    std::vector<std::string> symbols;       // kernel states
    std::vector<std::vector<int>> step;     // step[s][digit] -> symbol
    std::vector<int> head;                  // output letter, -1 where undefined
    int root = 0;
    std::uint32_t alphabet = 2;             // outputs lie in {0..alphabet-1}
};

// The n-th letter: walk the base-d digits of n least-significant-first from
// the root and read the head of the final symbol. Sequences that are only
// defined from index 1 on (the Toeplitz diagonals) leave the head of their
// zero-digit states undefined, so term(0) raises for them.
inline std::uint32_t term(const SequenceSystem& sys, std::uint64_t n) {
    int s = sys.root;
    while (n) {
        s = sys.step[s][n % sys.d];
        n /= sys.d;
    }
    if (sys.head[s] < 0)
        throw std::domain_error("sequence letter undefined at this index");
    return static_cast<std::uint32_t>(sys.head[s]);
}

inline std::vector<std::uint32_t> prefix_of(const SequenceSystem& sys, std::uint64_t from,
                                            std::size_t len) {
    std::vector<std::uint32_t> out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = term(sys, from + i);
    return out;
}

inline SequenceSystem with_root(SequenceSystem sys, int root) {
    if (root < 0 || root >= static_cast<int>(sys.symbols.size()))
        throw std::invalid_argument("no such symbol");
    sys.root = root;
    return sys;
}

// The d decimations of a prefix: component i is (a_i, a_{i+d}, a_{i+2d}, ...),
// all truncated to the same length.
inline std::vector<std::vector<std::uint32_t>> decimate(
    const std::vector<std::uint32_t>& prefix, unsigned d) {
    if (d < 1 || prefix.size() < d)
        throw std::invalid_argument("prefix shorter than the decimation arity");
    std::size_t len = prefix.size() / d;
    std::vector<std::vector<std::uint32_t>> out(d, std::vector<std::uint32_t>(len));
    for (unsigned i = 0; i < d; ++i)
        for (std::size_t k = 0; k < len; ++k) out[i][k] = prefix[i + k * d];
    return out;
}

// Inverse of decimate on equal-length components.
inline std::vector<std::uint32_t> interleave(
    const std::vector<std::vector<std::uint32_t>>& comps) {
    if (comps.empty()) throw std::invalid_argument("nothing to interleave");
    std::size_t len = comps[0].size();
    for (const auto& c : comps)
        if (c.size() != len) throw std::invalid_argument("components of unequal length");
    std::vector<std::uint32_t> out(len * comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (std::size_t k = 0; k < len; ++k) out[i + k * comps.size()] = comps[i][k];
    return out;
}

// Breadth-first closure of the repeated d-decimations of an oracle sequence.
// Candidate decimations m -> a(r + m*d^k) are identified iff their
// length-prefix_len prefixes agree; this is sound exactly as far as the
// prefix separates, so callers should validate by re-predicting unseen terms.
inline SequenceSystem kernel(const std::function<std::uint32_t(std::uint64_t)>& oracle,
                             unsigned d, std::size_t prefix_len, std::size_t cap) {
    if (d < 2) throw std::invalid_argument("decimation arity must be at least 2");
    if (prefix_len < 1) throw std::invalid_argument("empty identification prefix");
    struct Candidate {
        std::uint64_t kpow, r;  // m -> a(r + m * kpow)
    };
    auto prefix_of_candidate = [&](const Candidate& c) {
        if (c.kpow > (std::uint64_t(1) << 55))
            throw std::invalid_argument("decimation indices overflow");
        std::vector<std::uint32_t> pre(prefix_len);
        for (std::size_t m = 0; m < prefix_len; ++m) pre[m] = oracle(c.r + m * c.kpow);
        return pre;
    };

    SequenceSystem sys;
    sys.d = d;
    std::map<std::vector<std::uint32_t>, int> known;
    std::vector<Candidate> reps;
    std::uint32_t maxletter = 0;
    auto intern = [&](const Candidate& c) {
        auto pre = prefix_of_candidate(c);
        auto it = known.find(pre);
        if (it != known.end()) return it->second;
        if (reps.size() + 1 > cap) throw ClosureCapError(cap);
        int id = static_cast<int>(reps.size());
        known.emplace(pre, id);
        reps.push_back(c);
        sys.symbols.push_back("a(" + std::to_string(c.kpow) + "m+" + std::to_string(c.r) +
                              ")");
        sys.head.push_back(static_cast<int>(pre[0]));
        for (auto v : pre) maxletter = std::max(maxletter, v);
        return id;
    };

    intern(Candidate{1, 0});
    for (std::size_t at = 0; at < reps.size(); ++at) {
        Candidate cur = reps[at];  // copy: reps may grow below
        std::vector<int> row(d);
        for (unsigned i = 0; i < d; ++i)
            row[i] = intern(Candidate{cur.kpow * d, cur.r + i * cur.kpow});
        sys.step.push_back(std::move(row));
    }
    sys.root = 0;
    sys.alphabet = maxletter + 1;
    return sys;
}

// ---------------------------------------------------------------------------
// Moore machines: outputs attached to states instead of transitions.

struct MooreMachine {
    unsigned d = 2;
    std::vector<std::string> states;
    std::vector<std::uint32_t> out;       // tau: state -> output letter
    std::vector<std::vector<int>> next;   // pi: state x letter -> state
    int initial = 0;

    // Image of a word: outputs collected after each consumed letter.
    Word apply(const Word& w) const {
        Word image(w.size());
        int q = initial;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] >= d) throw std::invalid_argument("letter out of range");
            q = next[q][w[i]];
            image[i] = static_cast<std::uint8_t>(out[q]);
        }
        return image;
    }
};

// Mealy-to-Moore conversion with states Q x X plus a fresh start state: the
// pair (q, x) remembers that the Mealy machine sat in q and consumed x, so
// its output tau(q, x) is a function of the new state alone.
inline MooreMachine mealy_to_moore(Machine& m, int initial) {
    auto states = m.reachable(initial);
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
    unsigned d = m.alphabet();

    MooreMachine moore;
    moore.d = d;
    auto pair_id = [&](int q, unsigned x) {
        return static_cast<int>(1 + index.at(q) * d + x);
    };
    moore.states.push_back("start");
    moore.out.push_back(0);  // never emitted: outputs follow transitions
    moore.next.push_back(std::vector<int>(d));
    for (unsigned x = 0; x < d; ++x) moore.next[0][x] = pair_id(initial, x);
    for (int q : states) {
        for (unsigned x = 0; x < d; ++x) {
            moore.states.push_back(m.state_name(q) + "|" + std::to_string(x));
            moore.out.push_back(m.output(q, x));
            std::vector<int> row(d);
            for (unsigned y = 0; y < d; ++y) row[y] = pair_id(m.transition(q, x), y);
            moore.next.push_back(std::move(row));
        }
    }
    moore.initial = 0;
    return moore;
}

inline MooreMachine mealy_to_moore(const Element& g) {
    return mealy_to_moore(*g.machine(), g.canonical_state());
}

// ---------------------------------------------------------------------------
// Bundled systems.

// The Toeplitz sequence term(n) = alpha[v_p(n)] for n >= 1 (the first
// diagonal of an element with the given abelianization). States V_k count the
// zero digits seen before the first nonzero digit, which fixes the output for
// good; term(0) is deliberately undefined since the diagonal is 1-indexed.
inline SequenceSystem toeplitz_from_alpha(const std::vector<std::uint32_t>& pre,
                                          const std::vector<std::uint32_t>& per,
                                          std::uint32_t p) {
    AlphaSequence a = AlphaSequence::from_parts(p, pre, per);  // rejects empty period
    std::size_t L = a.preperiod().size(), P = a.period().size();
    SequenceSystem sys;
    sys.d = p;
    sys.alphabet = p;
    int nv = static_cast<int>(L + P);
    for (int k = 0; k < nv; ++k) {
        sys.symbols.push_back("V" + std::to_string(k));
        sys.head.push_back(-1);
        std::vector<int> row(p);
        row[0] = (k + 1 < nv) ? k + 1 : static_cast<int>(L);
        for (std::uint32_t j = 1; j < p; ++j) row[j] = nv + static_cast<int>(a.at(k));
        sys.step.push_back(std::move(row));
    }
    for (std::uint32_t v = 0; v < p; ++v) {
        sys.symbols.push_back("D" + std::to_string(v));
        sys.head.push_back(static_cast<int>(v));
        sys.step.push_back(std::vector<int>(p, nv + static_cast<int>(v)));
    }
    sys.root = 0;
    return sys;
}

inline SequenceSystem toeplitz_from_alpha(const AlphaSequence& a) {
    return toeplitz_from_alpha(a.preperiod(), a.period(), a.modulus());
}

// Thue-Morse: sum of binary digits modulo 2.
inline SequenceSystem thue_morse() {
    SequenceSystem sys;
    sys.d = 2;
    sys.alphabet = 2;
    sys.symbols = {"t", "tbar"};
    sys.head = {0, 1};
    sys.step = {{0, 1}, {1, 0}};
    sys.root = 0;
    return sys;
}

inline SequenceSystem constant_system(unsigned d, std::uint32_t letter) {
    if (d < 2) throw std::invalid_argument("decimation arity must be at least 2");
    SequenceSystem sys;
    sys.d = d;
    sys.alphabet = letter + 1;
    sys.symbols = {"c"};
    sys.head = {static_cast<int>(letter)};
    sys.step = {std::vector<int>(d, 0)};
    sys.root = 0;
    return sys;
}

}  // namespace selfsim
