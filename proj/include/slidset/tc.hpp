/* tc.hpp -- transitive-closure formulas for difference-bound set relations:
 * single-relation closure by case analysis on the added anchors, bounded
 * unfolding, the multi-relation product closure, and elimination of the
 * shared step-count variable. */

#pragma once

#include "slidset/dbs.hpp"
#include "slidset/formula.hpp"

#include <string>
#include <utility>
#include <vector>

namespace slidset {

struct IndependenceViolation : std::runtime_error {
    explicit IndependenceViolation(const std::string& what)
        : std::runtime_error("independence violation: " + what) {}
};

struct NonLinear : std::runtime_error {
    explicit NonLinear(const std::string& what) : std::runtime_error("not linear: " + what) {}
};

// Which shape of closure was generated, by the added-anchor set of the
// (primal-oriented) relation and the emptiness/gap analysis.
enum class TcCase {
    Identity,           // T_s empty: the relation is contained in equality
    MinPossiblyEmpty,   // T_s = {min}, S' possibly empty
    MinStrict,          // T_s = {min}, S' nonempty, strict min gap
    MinNonStrict,       // T_s = {min}, S' nonempty, non-strict min gap
    MaxPossiblyEmpty,   // mirrored versions for T_s = {max}
    MaxStrict,
    MaxNonStrict,
    BothPossiblyEmpty,  // T_s = {min, max}, S' possibly empty
    BothNonEmpty,       // T_s = {min, max}, S' nonempty (any gap mix)
};

struct TcTrace {
    TcCase tc_case = TcCase::Identity;
    // For BothNonEmpty: the gap strictness on each side.
    Strictness min_gap = Strictness::NonStrict;
    Strictness max_gap = Strictness::NonStrict;
    // For tc_multi: the case taken by each component, in order.
    std::vector<TcCase> component_cases;
    // Auxiliary set variables introduced (S#1, S#2, ... in order).
    std::vector<std::string> aux_vars;
    // Anchor pairs whose bound partitions were instantiated.
    std::vector<std::pair<Anchor, Anchor>> partitions_used;
};

struct TcResult {
    FormulaRef formula;
    TcTrace trace;
};

std::string to_string(TcCase c);

// succ(T, y, z): y and z are adjacent members of T with y < z.
FormulaRef succ_formula(SetRef t, const std::string& y, const std::string& z);

// n-fold composition of the relation with itself as a formula over (s, sp):
// intermediate sets are existentially quantified.  n = 1 is the relation
// itself.
FormulaRef unfold_n(const SaturatedDbs& r, int n, const std::string& s = "S",
                    const std::string& sp = "S'");

// Reflexive-transitive closure of a single saturated relation, as a formula
// over the two set variables.  Raises NotSaturated when r is not a
// saturation fixpoint.
TcResult tc_single(const SaturatedDbs& r, const std::string& s = "S",
                   const std::string& sp = "S'");

// Closure of a product of independent relations stepping in lockstep.  The
// i-th relation ranges over names[i] = (s_i, sp_i); all names must be
// distinct.  Defaults to (S1, S1'), (S2, S2'), ...
TcResult tc_multi(const std::vector<SaturatedDbs>& rs,
                  std::vector<std::pair<std::string, std::string>> names = {});

// One x-scaled difference bound: lhs <= rhs + cx * x.
struct ScaledBound {
    IntRef lhs, rhs;
    long long cx = 0;
};

// Quantifier-free equivalent of  exists x >= 1. /\ bounds, as a formula in
// counting and divisibility atoms over the bound terms.
FormulaRef quant_elim_scale(const std::vector<ScaledBound>& bounds, const std::string& x);

}  // namespace slidset
