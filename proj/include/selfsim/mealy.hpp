#pragma once

// Finite invertible Mealy automata acting on the rooted tree X*, X = {0..d-1}.
//
// A Machine is an append-only universe of states. Each state carries an output
// permutation tau (its action on the first letter) and a transition pi per
// letter (its section at that letter). Group elements are words over states
// with +-1 exponents; they act and take sections lazily, without constructing
// any new state. Equality is decided by folding the word into a single product
// state (memoized, canonicalized after every step so intermediate closures
// stay near the group's real growth) and comparing minimized machines.
//
// Products and inverses of states are allocated with their outputs only; the
// transition fill is queued and processed in ascending id order, so a fill
// only ever reads states that are already complete. This makes mutually
// recursive definitions (b = (a, c), c = (a, d), ...) unproblematic.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "selfsim/fp.hpp"

namespace selfsim {

// An element could not be proven finite-state within the configured cap.
// Deliberately distinct from any "unequal"/"false" answer.
struct ClosureCapError : std::runtime_error {
    explicit ClosureCapError(std::size_t cap)
        : std::runtime_error("state closure exceeded the cap of " + std::to_string(cap)) {}
};

using Word = std::vector<std::uint8_t>;
using Perm = std::vector<std::uint8_t>;

inline Perm inverse_perm(const Perm& p) {
    Perm inv(p.size());
    for (std::size_t x = 0; x < p.size(); ++x) inv[p[x]] = x;
    return inv;
}

inline bool is_perm(const Perm& p) {
    std::vector<bool> seen(p.size(), false);
    for (auto y : p) {
        if (y >= p.size() || seen[y]) return false;
        seen[y] = true;
    }
    return true;
}

class Machine : public std::enable_shared_from_this<Machine> {
public:
    explicit Machine(unsigned d) : d_(d) {
        if (d < 2) throw std::invalid_argument("alphabet size must be at least 2");
        if (d > 255) throw std::invalid_argument("alphabet size above 255 is unsupported");
        Perm id(d);
        for (unsigned x = 0; x < d; ++x) id[x] = static_cast<std::uint8_t>(x);
        states_.push_back(State{"1", id, std::vector<int>(d, 0), Recipe{}});
        canon_reps_[signature_of(0)] = 0;
    }

    unsigned alphabet() const { return d_; }
    std::size_t state_count() const { return states_.size(); }
    std::size_t closure_cap() const { return cap_; }
    void set_closure_cap(std::size_t cap) {
        if (cap == 0) throw std::invalid_argument("closure cap must be positive");
        cap_ = cap;
    }

    // --- construction of named states (two-phase, for recursive definitions)

    int declare_state(std::string name, Perm root) {
        if (root.size() != d_ || !is_perm(root))
            throw std::invalid_argument("root action of '" + name + "' is not a permutation");
        states_.push_back(State{std::move(name), std::move(root),
                                std::vector<int>(d_, -1), Recipe{}});
        return static_cast<int>(states_.size() - 1);
    }
    void set_transition(int q, unsigned x, int target) {
        check_state(q);
        check_state(target);
        check_letter(x);
        states_[q].next[x] = target;
    }
    int add_state(std::string name, Perm root, const std::vector<int>& sections) {
        int q = declare_state(std::move(name), std::move(root));
        if (sections.size() != d_)
            throw std::invalid_argument("expected one section per letter");
        for (unsigned x = 0; x < d_; ++x) set_transition(q, x, sections[x]);
        return q;
    }

    // --- lazy composite states

    // State acting as a then b on the input side of function composition:
    // product(a, b) = a after b.
    int product_state(int a, int b) {
        check_state(a);
        check_state(b);
        if (a == 0) return b;
        if (b == 0) return a;
        auto key = std::make_pair(a, b);
        if (auto it = product_memo_.find(key); it != product_memo_.end()) return it->second;
        Perm out(d_);
        for (unsigned x = 0; x < d_; ++x) out[x] = states_[a].out[states_[b].out[x]];
        int id = allocate(std::move(out), Recipe{Recipe::Product, a, b});
        product_memo_.emplace(key, id);
        return id;
    }

    int inverse_state(int q) {
        check_state(q);
        if (q == 0) return 0;
        if (auto it = inverse_memo_.find(q); it != inverse_memo_.end()) return it->second;
        int id = allocate(inverse_perm(states_[q].out), Recipe{Recipe::Inverse, q, -1});
        inverse_memo_.emplace(q, id);
        inverse_memo_.emplace(id, q);
        return id;
    }

    // --- state access (drains any pending transition fills first)

    std::uint8_t output(int q, unsigned x) const {
        check_state(q);
        check_letter(x);
        return states_[q].out[x];
    }
    const Perm& out_perm(int q) const {
        check_state(q);
        return states_[q].out;
    }
    const std::string& state_name(int q) const {
        check_state(q);
        return states_[q].name;
    }
    int transition(int q, unsigned x) {
        check_state(q);
        check_letter(x);
        if (states_[q].next[x] < 0) drain();
        int t = states_[q].next[x];
        if (t < 0)
            throw std::invalid_argument("state '" + states_[q].name +
                                        "' has an undefined section");
        return t;
    }

    // Fill every queued composite state. Throws ClosureCapError if more than
    // closure_cap() new states get created by this call.
    void drain() {
        std::size_t created = 0;
        while (!pending_.empty()) {
            int q = pending_.front();
            pending_.pop_front();
            std::size_t before = states_.size();
            fill(q);
            created += states_.size() - before;
            if (created > cap_) throw ClosureCapError(cap_);
        }
    }

    // Set of states reachable from q through transitions, in BFS order
    // (q first, letters in increasing order).
    std::vector<int> reachable(int q, std::size_t cap) {
        check_state(q);
        std::vector<int> order{q};
        std::set<int> seen{q};
        for (std::size_t head = 0; head < order.size(); ++head) {
            for (unsigned x = 0; x < d_; ++x) {
                int t = transition(order[head], x);
                if (seen.insert(t).second) {
                    if (order.size() + 1 > cap) throw ClosureCapError(cap);
                    order.push_back(t);
                }
            }
        }
        return order;
    }
    std::vector<int> reachable(int q) { return reachable(q, cap_); }

    // Machine-independent key of the automorphism q defines: the minimized
    // reachable machine, classes numbered in BFS order from q's class.
    std::vector<int> signature_of(int q) {
        auto order = reachable(q);
        std::unordered_map<int, std::size_t> index;
        for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = i;

        // Partition refinement; initial classes keyed by output permutation.
        std::vector<int> cls(order.size());
        {
            std::map<Perm, int> first;
            for (std::size_t i = 0; i < order.size(); ++i) {
                auto [it, fresh] = first.emplace(states_[order[i]].out,
                                                 static_cast<int>(first.size()));
                (void)fresh;
                cls[i] = it->second;
            }
        }
        for (;;) {
            std::map<std::vector<int>, int> first;
            std::vector<int> next_cls(order.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                std::vector<int> sig{cls[i]};
                for (unsigned x = 0; x < d_; ++x)
                    sig.push_back(cls[index.at(transition(order[i], x))]);
                auto [it, fresh] = first.emplace(std::move(sig),
                                                 static_cast<int>(first.size()));
                (void)fresh;
                next_cls[i] = it->second;
            }
            bool stable = std::equal(cls.begin(), cls.end(), next_cls.begin());
            cls = std::move(next_cls);
            if (stable) break;
        }

        // Relabel classes in BFS order from q and serialize.
        int nclasses = *std::max_element(cls.begin(), cls.end()) + 1;
        std::vector<int> rep(nclasses, -1);
        for (std::size_t i = order.size(); i-- > 0;) rep[cls[i]] = static_cast<int>(i);
        std::vector<int> relabel(nclasses, -1), bfs{cls[0]};
        relabel[cls[0]] = 0;
        for (std::size_t head = 0; head < bfs.size(); ++head)
            for (unsigned x = 0; x < d_; ++x) {
                int c = cls[index.at(transition(order[rep[bfs[head]]], x))];
                if (relabel[c] < 0) {
                    relabel[c] = static_cast<int>(bfs.size());
                    bfs.push_back(c);
                }
            }
        std::vector<int> sig{static_cast<int>(d_), static_cast<int>(bfs.size())};
        for (int c : bfs) {
            const State& s = states_[order[rep[c]]];
            for (unsigned x = 0; x < d_; ++x) sig.push_back(s.out[x]);
            for (unsigned x = 0; x < d_; ++x)
                sig.push_back(relabel[cls[index.at(transition(order[rep[c]], x))]]);
        }
        return sig;
    }

    // Representative state per behaviour: the first state ever seen with this
    // signature. canonical_state(q) == 0 iff q acts trivially.
    int canonical_state(int q) {
        auto sig = signature_of(q);
        auto [it, fresh] = canon_reps_.emplace(std::move(sig), q);
        (void)fresh;
        return it->second;
    }

    // Disjoint union: copies the other machine's states (identity excepted)
    // into this one and returns the id translation table.
    std::vector<int> absorb(const Machine& other) {
        if (other.d_ != d_) throw std::invalid_argument("alphabet size mismatch");
        if (!other.pending_.empty())
            throw std::invalid_argument("cannot absorb a machine with pending fills");
        std::vector<int> map(other.states_.size());
        map[0] = 0;
        int base = static_cast<int>(states_.size());
        for (std::size_t q = 1; q < other.states_.size(); ++q)
            map[q] = base + static_cast<int>(q) - 1;
        for (std::size_t q = 1; q < other.states_.size(); ++q) {
            const State& s = other.states_[q];
            std::vector<int> next(d_);
            for (unsigned x = 0; x < d_; ++x) {
                if (s.next[x] < 0)
                    throw std::invalid_argument("cannot absorb an incomplete machine");
                next[x] = map[s.next[x]];
            }
            states_.push_back(State{s.name, s.out, std::move(next), Recipe{}});
        }
        return map;
    }

private:
    struct Recipe {
        enum Kind { None, Product, Inverse } kind = None;
        int a = -1, b = -1;
    };
    struct State {
        std::string name;
        Perm out;
        std::vector<int> next;  // -1 while a fill is pending
        Recipe recipe;
    };

    void check_state(int q) const {
        if (q < 0 || static_cast<std::size_t>(q) >= states_.size())
            throw std::invalid_argument("state id out of range");
    }
    void check_letter(unsigned x) const {
        if (x >= d_) throw std::invalid_argument("letter out of range");
    }

    int allocate(Perm out, Recipe recipe) {
        states_.push_back(State{"", std::move(out), std::vector<int>(d_, -1), recipe});
        int id = static_cast<int>(states_.size() - 1);
        pending_.push_back(id);
        return id;
    }

    // Constituents of a recipe always have smaller ids than the composite, and
    // the pending queue is processed in allocation = id order, so the reads
    // below never see an unfilled composite.
    void fill(int q) {
        Recipe r = states_[q].recipe;
        for (unsigned x = 0; x < d_; ++x) {
            if (states_[q].next[x] >= 0) continue;
            int t;
            if (r.kind == Recipe::Product) {
                int after_b = raw_next(r.b, x);
                t = product_state(raw_next(r.a, states_[r.b].out[x]), after_b);
            } else if (r.kind == Recipe::Inverse) {
                unsigned y = inverse_perm(states_[r.a].out)[x];
                t = inverse_state(raw_next(r.a, y));
            } else {
                throw std::invalid_argument("state '" + states_[q].name +
                                            "' has an undefined section");
            }
            states_[q].next[x] = t;
        }
    }
    int raw_next(int q, unsigned x) {
        int t = states_[q].next[x];
        if (t < 0)
            throw std::invalid_argument("state '" + states_[q].name +
                                        "' has an undefined section");
        return t;
    }

    unsigned d_;
    std::size_t cap_ = 10000;
    std::vector<State> states_;
    std::deque<int> pending_;
    std::map<std::pair<int, int>, int> product_memo_;
    std::map<int, int> inverse_memo_;
    std::map<std::vector<int>, int> canon_reps_;
};

using MachineRef = std::shared_ptr<Machine>;

// A tree automorphism: product of machine states and their inverses, leftmost
// factor applied last. Value-like; acting and sectioning never mutate the
// machine.
class Element {
public:
    Element() = default;
    Element(MachineRef m, std::vector<std::pair<int, int>> word)
        : machine_(std::move(m)), word_(std::move(word)) {
        for (auto& [q, e] : word_) {
            if (e != 1 && e != -1) throw std::invalid_argument("exponent must be +-1");
            if (q < 0 || static_cast<std::size_t>(q) >= machine_->state_count())
                throw std::invalid_argument("state id out of range");
        }
    }
    static Element identity(MachineRef m) { return Element(std::move(m), {}); }
    static Element of_state(MachineRef m, int q) {
        if (q == 0) return identity(std::move(m));
        return Element(std::move(m), {{q, 1}});
    }

    const MachineRef& machine() const { return machine_; }
    const std::vector<std::pair<int, int>>& word() const { return word_; }
    unsigned alphabet() const { return machine_->alphabet(); }

    Word act(const Word& w) const {
        auto factors = word_;
        Word out;
        out.reserve(w.size());
        for (auto x : w) out.push_back(step(factors, x));
        return out;
    }

    Element section(const Word& v) const {
        auto factors = word_;
        for (auto x : v) step(factors, x);
        return Element(machine_, std::move(factors));
    }
    Element section(std::uint8_t x) const { return section(Word{x}); }

    // Action on the first letter only.
    Perm root_perm() const {
        unsigned d = machine_->alphabet();
        Perm out(d);
        for (unsigned x = 0; x < d; ++x) {
            unsigned cur = x;
            for (auto it = word_.rbegin(); it != word_.rend(); ++it)
                cur = it->second > 0 ? machine_->output(it->first, cur)
                                     : inverse_perm(machine_->out_perm(it->first))[cur];
            out[x] = static_cast<std::uint8_t>(cur);
        }
        return out;
    }

    // Folds the word into one machine state, canonicalizing after each product
    // so intermediate closures stay small. Cached.
    int canonical_state() const {
        if (canon_) return *canon_;
        Machine& m = *machine_;
        int acc = 0;
        for (auto it = word_.rbegin(); it != word_.rend(); ++it) {
            int s = it->second > 0 ? it->first : m.inverse_state(it->first);
            acc = m.product_state(s, acc);
            acc = m.canonical_state(acc);
        }
        canon_ = acc;
        return acc;
    }
    std::vector<int> canonical_key() const {
        return machine_->signature_of(canonical_state());
    }
    bool is_identity() const { return canonical_state() == 0; }

private:
    // Feed letter x through the factors right to left, replacing each factor
    // by its section; returns the output letter.
    std::uint8_t step(std::vector<std::pair<int, int>>& factors, std::uint8_t x) const {
        Machine& m = *machine_;
        if (x >= m.alphabet()) throw std::invalid_argument("letter out of range");
        unsigned cur = x;
        for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
            auto& [q, e] = *it;
            if (e > 0) {
                unsigned y = m.output(q, cur);
                q = m.transition(q, cur);
                cur = y;
            } else {
                unsigned y = inverse_perm(m.out_perm(q))[cur];
                q = m.transition(q, y);
                cur = y;
            }
        }
        return static_cast<std::uint8_t>(cur);
    }

    MachineRef machine_;
    std::vector<std::pair<int, int>> word_;
    mutable std::optional<int> canon_;
};

inline Word act(const Element& g, const Word& w) { return g.act(w); }
inline Element section(const Element& g, const Word& v) { return g.section(v); }

inline Element compose(const Element& g, const Element& h) {
    if (g.machine() == h.machine()) {
        auto word = g.word();
        word.insert(word.end(), h.word().begin(), h.word().end());
        return Element(g.machine(), std::move(word));
    }
    if (g.alphabet() != h.alphabet())
        throw std::invalid_argument("alphabet size mismatch");
    auto map = g.machine()->absorb(*h.machine());
    auto word = g.word();
    for (auto [q, e] : h.word()) word.emplace_back(map[q], e);
    return Element(g.machine(), std::move(word));
}

inline Element inverse(const Element& g) {
    std::vector<std::pair<int, int>> word(g.word().rbegin(), g.word().rend());
    for (auto& [q, e] : word) e = -e;
    return Element(g.machine(), std::move(word));
}

inline Element power(const Element& g, long long e) {
    Element base = e >= 0 ? g : inverse(g);
    unsigned long long n = e >= 0 ? static_cast<unsigned long long>(e)
                                  : static_cast<unsigned long long>(-e);
    std::vector<std::pair<int, int>> word;
    for (unsigned long long i = 0; i < n; ++i)
        word.insert(word.end(), base.word().begin(), base.word().end());
    return Element(g.machine(), std::move(word));
}

inline bool equal(const Element& g, const Element& h) {
    if (g.machine() == h.machine()) return g.canonical_state() == h.canonical_state();
    if (g.alphabet() != h.alphabet()) return false;
    return g.canonical_key() == h.canonical_key();
}

inline std::vector<Element> states_closure(const Element& g, std::size_t cap = 10000) {
    if (cap < 1) throw std::invalid_argument("closure cap must be positive");
    Machine& m = *g.machine();
    auto reach = m.reachable(g.canonical_state(), cap);
    std::set<std::vector<int>> seen;
    std::vector<Element> out;
    for (int q : reach)
        if (seen.insert(m.signature_of(q)).second)
            out.push_back(Element::of_state(g.machine(), m.canonical_state(q)));
    return out;
}

struct Portrait {
    unsigned depth = 0;
    std::map<Word, Perm> labels;  // words of length < depth
};

inline void portrait_walk(const Element& g, unsigned n, Word& prefix, Portrait& out) {
    if (prefix.size() >= n) return;
    out.labels.emplace(prefix, g.root_perm());
    for (unsigned x = 0; x < g.alphabet(); ++x) {
        prefix.push_back(static_cast<std::uint8_t>(x));
        portrait_walk(g.section(static_cast<std::uint8_t>(x)), n, prefix, out);
        prefix.pop_back();
    }
}

inline Portrait portrait(const Element& g, unsigned n) {
    Portrait out;
    out.depth = n;
    Word prefix;
    portrait_walk(g, n, prefix, out);
    return out;
}

// True iff every reachable state acts on the first level by a power of the
// full cycle (0 1 ... d-1), i.e. the portrait labels lie in <sigma>.
inline bool is_in_Kp(const Element& g) {
    Machine& m = *g.machine();
    for (int q : m.reachable(g.canonical_state())) {
        const Perm& t = m.out_perm(q);
        unsigned d = m.alphabet();
        for (unsigned x = 0; x < d; ++x)
            if (t[x] != (x + t[0]) % d) return false;
    }
    return true;
}

inline std::pair<Perm, std::vector<Element>> wreath_decompose(const Element& g) {
    std::vector<Element> sections;
    for (unsigned x = 0; x < g.alphabet(); ++x)
        sections.push_back(g.section(static_cast<std::uint8_t>(x)));
    return {g.root_perm(), std::move(sections)};
}

// ---------------------------------------------------------------------------
// Group files.
//
//   p = <int>                       alphabet size (first, required)
//   field                           optional; demands that p be prime
//   name = [perm] ( w0, ..., w_{d-1} )
//
// perm is `s` (the cycle 0->1->...->d-1->0), `s^k`, an image list
// `[i0 i1 ...]`, or absent for the identity. Each w_i is a product of defined
// names (longest match wins, no separator needed), `1`, and postfix `'` for
// the inverse. The section list may be omitted entirely. `#` starts a
// comment; statements are separated by newlines or `;`.

struct ParsedGroup {
    MachineRef machine;
    unsigned d = 0;
    bool field = false;
    std::vector<std::pair<std::string, Element>> generators;

    Element generator(const std::string& name) const {
        for (const auto& [n, g] : generators)
            if (n == name) return g;
        throw std::invalid_argument("no generator named '" + name + "'");
    }
    Element identity() const { return Element::identity(machine); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return s != "p" && s != "s" && s != "field";
}

inline std::vector<std::pair<int, int>> parse_word(const std::string& w,
                                                   const std::map<std::string, int>& names) {
    std::vector<std::pair<int, int>> factors;
    std::size_t i = 0;
    while (i < w.size()) {
        char c = w[i];
        if (c == ' ' || c == '\t') {
            ++i;
        } else if (c == '1') {
            factors.emplace_back(0, 1);
            ++i;
        } else if (c == '\'') {
            if (factors.empty())
                throw std::invalid_argument("dangling inverse mark in '" + w + "'");
            factors.back().second = -factors.back().second;
            ++i;
        } else {
            std::size_t best = 0;
            int best_state = -1;
            for (const auto& [name, q] : names)
                if (name.size() > best && w.compare(i, name.size(), name) == 0) {
                    best = name.size();
                    best_state = q;
                }
            if (best == 0)
                throw std::invalid_argument("undefined name at '" + w.substr(i) + "'");
            factors.emplace_back(best_state, 1);
            i += best;
        }
    }
    std::erase_if(factors, [](const auto& f) { return f.first == 0; });
    return factors;
}

inline Perm parse_perm(const std::string& s, std::size_t& pos, unsigned d,
                       const std::string& who) {
    Perm perm(d);
    for (unsigned x = 0; x < d; ++x) perm[x] = static_cast<std::uint8_t>(x);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) return perm;
    if (s[pos] == 's') {
        ++pos;
        unsigned long k = 1;
        if (pos < s.size() && s[pos] == '^') {
            ++pos;
            std::size_t used = 0;
            k = std::stoul(s.substr(pos), &used);
            if (used == 0) throw std::invalid_argument("bad cycle power for '" + who + "'");
            pos += used;
        }
        for (unsigned x = 0; x < d; ++x) perm[x] = static_cast<std::uint8_t>((x + k) % d);
    } else if (s[pos] == '[') {
        ++pos;
        for (unsigned x = 0; x < d; ++x) {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == ',')) ++pos;
            std::size_t used = 0;
            unsigned long img = std::stoul(s.substr(pos), &used);
            if (used == 0 || img >= d)
                throw std::invalid_argument("bad image list for '" + who + "'");
            perm[x] = static_cast<std::uint8_t>(img);
            pos += used;
        }
        while (pos < s.size() && s[pos] == ' ') ++pos;
        if (pos >= s.size() || s[pos] != ']')
            throw std::invalid_argument("unterminated image list for '" + who + "'");
        ++pos;
        if (!is_perm(perm))
            throw std::invalid_argument("root action of '" + who + "' is not a permutation");
    }
    return perm;
}

}  // namespace detail

inline ParsedGroup parse_group(const std::string& text) {
    using detail::trim;

    std::vector<std::string> stmts;
    {
        std::string line;
        std::istringstream in(text);
        while (std::getline(in, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::size_t start = 0;
            while (start <= line.size()) {
                std::size_t semi = line.find(';', start);
                std::string piece = trim(line.substr(
                    start, semi == std::string::npos ? std::string::npos : semi - start));
                if (!piece.empty()) stmts.push_back(piece);
                if (semi == std::string::npos) break;
                start = semi + 1;
            }
        }
    }

    ParsedGroup out;
    struct Def {
        std::string name, rhs;
    };
    std::vector<Def> defs;
    bool have_d = false;
    for (const auto& st : stmts) {
        if (st == "field") {
            out.field = true;
            continue;
        }
        auto eq = st.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected '=' in statement '" + st + "'");
        std::string name = trim(st.substr(0, eq));
        std::string rhs = trim(st.substr(eq + 1));
        if (name == "p") {
            std::size_t used = 0;
            unsigned long v = std::stoul(rhs, &used);
            if (used != rhs.size() || v < 2)
                throw std::invalid_argument("bad alphabet size '" + rhs + "'");
            out.d = static_cast<unsigned>(v);
            have_d = true;
            continue;
        }
        if (!detail::valid_name(name))
            throw std::invalid_argument("bad state name '" + name + "'");
        for (const auto& d : defs)
            if (d.name == name)
                throw std::invalid_argument("duplicate definition of '" + name + "'");
        defs.push_back({name, rhs});
    }
    if (!have_d) throw std::invalid_argument("missing alphabet size: 'p = <int>'");
    if (out.field) require_prime(out.d);

    auto machine = std::make_shared<Machine>(out.d);
    std::map<std::string, int> names;
    std::vector<std::string> section_lists(defs.size());
    for (std::size_t i = 0; i < defs.size(); ++i) {
        std::size_t pos = 0;
        Perm perm = detail::parse_perm(defs[i].rhs, pos, out.d, defs[i].name);
        while (pos < defs[i].rhs.size() && defs[i].rhs[pos] == ' ') ++pos;
        if (pos < defs[i].rhs.size()) {
            if (defs[i].rhs[pos] != '(')
                throw std::invalid_argument("unexpected text in definition of '" +
                                            defs[i].name + "'");
            std::size_t close = defs[i].rhs.rfind(')');
            if (close == std::string::npos || trim(defs[i].rhs.substr(close + 1)) != "")
                throw std::invalid_argument("unterminated section list for '" +
                                            defs[i].name + "'");
            section_lists[i] = defs[i].rhs.substr(pos + 1, close - pos - 1);
        }
        names[defs[i].name] = machine->declare_state(defs[i].name, perm);
    }

    for (std::size_t i = 0; i < defs.size(); ++i) {
        int q = names[defs[i].name];
        if (section_lists[i].empty()) {
            for (unsigned x = 0; x < out.d; ++x) machine->set_transition(q, x, 0);
            continue;
        }
        std::vector<std::string> parts;
        {
            std::string cur;
            for (char c : section_lists[i]) {
                if (c == ',') {
                    parts.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            parts.push_back(cur);
        }
        if (parts.size() != out.d)
            throw std::invalid_argument("expected " + std::to_string(out.d) +
                                        " sections for '" + defs[i].name + "'");
        for (unsigned x = 0; x < out.d; ++x) {
            auto word = detail::parse_word(parts[x], names);
            int acc = 0;
            for (auto it = word.rbegin(); it != word.rend(); ++it) {
                int s = it->second > 0 ? it->first : machine->inverse_state(it->first);
                acc = machine->product_state(s, acc);
            }
            machine->set_transition(q, x, acc);
        }
    }
    machine->drain();

    out.machine = machine;
    for (const auto& def : defs)
        out.generators.emplace_back(def.name, Element::of_state(machine, names[def.name]));
    return out;
}

}  // namespace selfsim
