/* rqspa.hpp -- satisfiability of restricted quantified set-Presburger
 * formulas: sign-split translation from Z to N, separation of counting
 * atoms, compilation of the quantified core to automata, and emptiness of
 * the resulting Presburger automaton. */

#pragma once

#include "slidset/eval.hpp"
#include "slidset/formula.hpp"
#include "slidset/nfa.hpp"
#include "slidset/qfpa.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slidset {

struct SolverBudget : std::runtime_error {
    explicit SolverBudget(const std::string& what)
        : std::runtime_error("solver budget exhausted: " + what) {}
};

// A counting atom mentions something that has no tracker expression
// (anything other than a free integer variable or min/max of a free set
// variable).
struct UnexpressibleTerm : std::runtime_error {
    explicit UnexpressibleTerm(const std::string& what)
        : std::runtime_error("no counter expression for: " + what) {}
};

// ---------------------------------------------------------------------------
// Step I: Z -> N translation
// ---------------------------------------------------------------------------

// Sign/emptiness classification directing the translation: integer
// variables are nonnegative or negative; set variables carry which of the
// two sides (nonnegative / negative elements) are inhabited.
enum class IntSign { Pos, Neg };
enum class SetSign { Pos, Neg, Both, Bot };

struct Context {
    std::map<std::string, IntSign> ints;
    std::map<std::string, SetSign> sets;
};

// Names of the nonnegative/negative halves of a variable under the split
// encoding x |-> (x#p, x#n), S |-> (S#p, S#n).
std::string pos_name(const std::string& v);
std::string neg_name(const std::string& v);

// Rewrites the formula so the translation tables apply: desugars, renames
// bound variables apart, and hoists min/max of compound set terms into
// universally bound set variables.
FormulaRef prepare(const FormulaRef& f);

// Translation of a prepared formula under one fixed context (guard
// conjuncts included).  The context must cover all free variables.
FormulaRef translate_under(const FormulaRef& f, const Context& ctx);

// All contexts over the free variables of `f`, all-positive first.
std::vector<Context> enumerate_contexts(const FormulaRef& f);

// Full translation: disjunction of translate_under over all contexts.
// Satisfying N-models are exactly the M-images of satisfying Z-models.
FormulaRef translate_z_to_n(const FormulaRef& f);

// ---------------------------------------------------------------------------
// Step II: separation of counting atoms
// ---------------------------------------------------------------------------

struct CoreCount {
    FormulaRef core;                  // counting-free (RQSPA^-)
    std::vector<FormulaRef> count;    // counting atoms, possibly negated
};

// The disjunction over subsets of the counting atoms: each disjunct fixes a
// truth value for every counting atom (replaced by that constant in the
// core) and records the corresponding literal in `count`.
std::vector<CoreCount> split_core_count(const FormulaRef& f);

// ---------------------------------------------------------------------------
// Step III: automata
// ---------------------------------------------------------------------------

// Compiles a counting-free formula over N into an NFA over AP = free vars
// whose language is the word encoding of the formula's models (closed
// under trailing blank padding; every free integer variable is constrained
// to occur exactly once).
Nfa msow_to_nfa(const FormulaRef& core, size_t budget = 1 << 20);

// Occurrence trackers: a two-state NFA per integer variable (before/after
// its position) and a three-state NFA per set variable (before first /
// inside / after last occurrence).  State-visit counts of an accepting run
// recover the variable's value and the set's min/max.
std::vector<Nfa> build_trackers(const std::vector<std::string>& intVars,
                                const std::vector<std::string>& setVars);

struct PresburgerAutomaton {
    Nfa nfa;
    QfpaRef psi;  // over the transition-count variables parikh_var(i)
};

// Product of the core automaton with the trackers; the counting literals
// become psi by substituting each variable / min / max with the linear
// expression in transition counts that recovers it.
PresburgerAutomaton assemble_pa(const Nfa& core, const std::vector<Nfa>& trackers,
                                const std::vector<FormulaRef>& count, size_t budget = 1 << 20);

// A word accepted by the automaton whose transition counts satisfy psi, or
// nullopt if there is none.
std::optional<Word> pa_emptiness(const PresburgerAutomaton& pa, long long budget = 2'000'000);

// ---------------------------------------------------------------------------
// Word <-> model correspondence
// ---------------------------------------------------------------------------

// Word encoding of an N-model: length 1 + the largest value mentioned (the
// empty word when there is none); integer variables occupy their value's
// position, sets mark their elements' positions.
Word encode_model(const BoundedModel& m, const std::vector<std::string>& ap,
                  const std::map<std::string, Sort>& sorts);

// Inverse of encode_model.  Unknown variables default to 0 / empty; an
// integer variable occurring in several positions is invalid input.
BoundedModel decode_word(const Word& w, const std::vector<std::string>& ap,
                         const std::map<std::string, Sort>& sorts);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RqspaBudgets {
    size_t states = 1 << 20;
    long long solver = 2'000'000;
};

// Satisfiability over Z.  Returns a model (with a window wide enough to
// check it by bounded evaluation) or nullopt for unsatisfiable.
std::optional<BoundedModel> rqspa_sat(const FormulaRef& f, const RqspaBudgets& budgets = {});

}  // namespace slidset
