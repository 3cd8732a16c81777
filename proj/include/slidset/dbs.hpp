/* dbs.hpp -- difference-bound set relations over a pair (S, S'): the set
 * part S = S' u T_s (or the symmetric orientation) plus difference bounds
 * over the four anchor terms, with constraint graphs, normalization and
 * saturation. */

#pragma once

#include "slidset/formula.hpp"

#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace slidset {

struct NotSaturated : std::runtime_error {
    explicit NotSaturated(const std::string& what) : std::runtime_error("not saturated: " + what) {}
};

// The four anchor terms.
enum class Anchor { MinS, MaxS, MinSp, MaxSp };

// lhs <= rhs + c
struct Bound {
    Anchor lhs, rhs;
    long long c;
    auto operator<=>(const Bound&) const = default;
};

struct DbsRelation {
    // primal: S = S' u T_s;  otherwise S' = S u T_s.
    bool primal = true;
    std::set<Anchor> ts;
    std::vector<Bound> int_part;  // equalities stored as two bounds

    auto operator<=>(const DbsRelation&) const = default;
};

// Edge (from, to, w) reads  from <= to + w.
struct ConstraintGraph {
    std::set<Anchor> vertices;
    std::vector<Bound> edges;
};

struct SaturatedDbs {
    DbsRelation rel;
    bool nonempty_s = false;   // S surely nonempty
    bool nonempty_sp = false;  // S' surely nonempty

    auto operator<=>(const SaturatedDbs&) const = default;
};

enum class Strictness { Strict, NonStrict };

ConstraintGraph build_graph(const DbsRelation& r);
bool satisfiable(const ConstraintGraph& g);

// Normal form: one bound per ordered anchor pair (T1 != T2, T2 reachable
// from T1) carrying the minimal path weight; nullopt on a negative cycle.
std::optional<DbsRelation> normalize(const DbsRelation& r);

// Saturation fixpoint; nullopt when the integer part becomes unsatisfiable.
std::optional<SaturatedDbs> saturate(const DbsRelation& r);

// The bounds mentioning both anchors of the pair (in canonical order).
std::vector<Bound> partition(const SaturatedDbs& r, std::pair<Anchor, Anchor> a);

// Strict iff the pair carries a gap: for {min(S),min(S')} a bound
// min(S) <= min(S') - c with c > 0; for {max(S),max(S')} a bound
// max(S') <= max(S) - c with c > 0.
Strictness classify(const SaturatedDbs& r, std::pair<Anchor, Anchor> a);

// ---- helpers shared with the closure engine --------------------------------

// Swaps the roles of S and S' (relation inversion).
DbsRelation swap_roles(const DbsRelation& r);
SaturatedDbs swap_roles(const SaturatedDbs& r);

// min(S), max(S), min(S'), max(S') as terms over the given variable names.
IntRef anchor_term(Anchor a, const std::string& s, const std::string& sp);

// The relation as a formula over set variables named s and sp.
FormulaRef to_formula(const DbsRelation& r, const std::string& s = "S",
                      const std::string& sp = "S'");

std::string to_string(Anchor a);
std::string to_string(const Bound& b);

// Entailment of  a <= b + c  from the (normalized or not) bound list.
bool entails(const std::vector<Bound>& bounds, Anchor a, Anchor b, long long c);

}  // namespace slidset
