/* nfa.hpp -- finite automata over alphabets 2^AP with symbolic letters
 * (bits + care mask), supporting the Boolean algebra (product, union,
 * complement), variable projection with padding closure, and trimming. */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace slidset {

struct StateBlowup : std::runtime_error {
    explicit StateBlowup(size_t limit)
        : std::runtime_error("state budget exceeded: " + std::to_string(limit)), limit(limit) {}
    size_t limit;
};

// A transition label: fires on a concrete letter L (a bit set over the
// automaton's AP) iff L agrees with `bits` on every position in `care`.
struct Letter {
    uint64_t bits = 0, care = 0;

    bool matches(uint64_t concrete) const { return ((concrete ^ bits) & care) == 0; }
    bool compatible(const Letter& o) const { return ((bits ^ o.bits) & care & o.care) == 0; }
    Letter merged(const Letter& o) const {
        return {(bits & care) | (o.bits & o.care), care | o.care};
    }
    // Compatible with the all-absent letter.
    bool blank_ok() const { return (bits & care) == 0; }
};

struct Nfa {
    std::vector<std::string> ap;  // sorted variable names; bit i <-> ap[i]
    int states = 0;
    int init = 0;
    struct Trans {
        int from;
        Letter letter;
        int to;
    };
    std::vector<Trans> trans;
    std::vector<bool> finals;

    int add_state(bool fin = false) {
        finals.push_back(fin);
        return states++;
    }
    void add_trans(int from, Letter l, int to) { trans.push_back({from, l, to}); }
    int ap_index(const std::string& v) const;  // -1 if absent
};

using Word = std::vector<uint64_t>;  // concrete letters over the automaton's AP

// Accepts the one-state automaton for the full (resp. empty) language.
Nfa nfa_all(std::vector<std::string> ap);
Nfa nfa_none(std::vector<std::string> ap);

// Re-expresses the automaton over a superset AP (bit positions remapped).
Nfa align(const Nfa& a, const std::vector<std::string>& ap);
// Sorted union of the two AP sets.
std::vector<std::string> ap_union(const Nfa& a, const Nfa& b);

Nfa product(const Nfa& a, const Nfa& b, size_t budget = 1 << 20);
Nfa nfa_union(const Nfa& a, const Nfa& b);
// Complement via subset construction over local letter minterms.
Nfa complement(const Nfa& a, size_t budget = 1 << 20);
// Drops the variable from the AP and closes the finals under trailing
// blank letters.
Nfa project(const Nfa& a, const std::string& var);

// Marks as final every state that reaches a final state through
// blank-compatible transitions.
void padding_close(Nfa& a);

// Restricts to states reachable from the initial state and co-reachable
// from a final state (the initial state is always kept).
Nfa trim(const Nfa& a);

bool accepts(const Nfa& a, const Word& w);
bool is_empty_lang(const Nfa& a);

std::string to_string(const Nfa& a);

}  // namespace slidset
