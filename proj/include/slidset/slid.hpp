/* slid.hpp -- separation-logic formulas with linearly compositional
 * inductive predicates and set data constraints: definitions and their
 * well-formedness conditions, precise heap semantics for finite states,
 * data-constraint extraction, the unfolding formulas, the equisatisfiable
 * abstraction, and the end-to-end satisfiability check. */

#pragma once

#include "slidset/dbs.hpp"
#include "slidset/eval.hpp"
#include "slidset/formula.hpp"
#include "slidset/rqspa.hpp"
#include "slidset/tc.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace slidset {

struct MissingTc : std::runtime_error {
    explicit MissingTc(const std::string& pred)
        : std::runtime_error("no transitive closure available for predicate: " + pred) {}
};

struct FuelExhausted : std::runtime_error {
    FuelExhausted() : std::runtime_error("unfolding fuel exhausted before a verdict") {}
};

// An error from one stage of the check_sat pipeline, wrapping the original
// message with the stage name.
struct StageError : std::runtime_error {
    StageError(const std::string& stage_, const std::string& what)
        : std::runtime_error("[" + stage_ + "] " + what), stage(stage_) {}
    std::string stage;
};

// ---------------------------------------------------------------------------
// Syntax
// ---------------------------------------------------------------------------

// A parameter or argument that is either a location variable or a set
// variable.  (Inductive-predicate parameters have no integer components.)
struct TypedVar {
    std::string name;
    bool is_loc = true;
    auto operator<=>(const TypedVar&) const = default;
};

// One field of a points-to atom: a location field holding a location
// variable, or a data field holding an integer term.
struct Field {
    std::string name;
    bool is_loc = true;
    std::string loc;  // location variable when is_loc
    IntRef data;      // integer term when !is_loc
};

using PointsTo = std::vector<Field>;  // the record rho

// A linearly compositional inductive definition.  The base rule is fixed to
//   P(E, alpha; F, beta; xi) ::= E = F /\ alpha = beta /\ emp
// and the inductive rule to
//   P(E, alpha; F, beta; xi) ::=
//     exists X, S. phi /\ E |-> (rho) * P(Y, gamma; F, beta; xi).
// The data formula phi is kept in vector form: one difference-bound set
// relation per set-sorted parameter position, relating the source set (as
// "S") to the corresponding recursive-call set (as "S'").  A default
// relation denotes plain equality.
struct InductiveDef {
    std::string name;

    std::string src_root;        // E
    std::vector<TypedVar> src;   // alpha (tail)
    std::string dst_root;        // F
    std::vector<TypedVar> dst;   // beta (tail)
    std::vector<std::string> stat;  // xi (location variables)

    std::vector<std::string> ex_locs;  // X
    std::vector<std::string> ex_sets;  // S
    std::vector<DbsRelation> phi;      // one per set position of alpha, in order
    PointsTo rho;
    std::string rec_root;        // Y
    std::vector<TypedVar> rec;   // gamma (tail)
};

// Validation report for the shape constraints and conditions C1-C6.
enum class Cond { Shape, C1, C2, C3, C4, C5, C6 };

struct Violation {
    Cond cond;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

std::string to_string(Cond c);
std::string to_string(const ValidationReport& r);

ValidationReport validate_defs(const InductiveDef& d);

// A spatial atom: emp, a points-to atom, or a predicate atom.
struct SpatialAtom {
    enum Kind { Emp, Pto, Pred } kind = Emp;
    std::string root;  // E (Pto) or Z1 (Pred)
    // Pto payload.
    PointsTo rho;
    // Pred payload: P(root, src; dst_root, dst; stat).
    std::string pred;
    std::vector<TypedVar> src;  // mu
    std::string dst_root;       // Z2
    std::vector<TypedVar> dst;  // nu
    std::vector<std::string> stat;  // chi
};

SpatialAtom emp_atom();
SpatialAtom pto_atom(std::string root, PointsTo rho);
SpatialAtom pred_atom(std::string pred, std::string root, std::vector<TypedVar> src,
                      std::string dstRoot, std::vector<TypedVar> dst,
                      std::vector<std::string> stat = {});

struct PureAtom {
    std::string lhs, rhs;
    bool eq = true;  // E = F when true, E != F otherwise
};

// Pi /\ Delta /\ Sigma.  Delta is a quantifier-free data formula.
struct SlidFormula {
    std::vector<PureAtom> pure;
    FormulaRef data = ftrue();
    std::vector<SpatialAtom> spatial;
};

std::string to_string(const SlidFormula& f);

// Shape checks against the definitions: every predicate atom uses the one
// predicate of `defs` with matching arities/sorts, every points-to atom uses
// exactly its field set, and Delta is quantifier-free.  Throws SortError.
void validate_formula(const SlidFormula& f, const std::vector<InductiveDef>& defs);

// ---------------------------------------------------------------------------
// Semantics
// ---------------------------------------------------------------------------

// Locations are integers; nil is 0 and never occurs in a heap domain.
using Loc = long long;
using Heap = std::map<std::pair<Loc, std::string>, long long>;

// The value of a location variable is a Loc, of an integer variable an
// integer, of a set variable a finite integer set.
using Value = std::variant<long long, std::vector<long long>>;

struct State {
    std::map<std::string, Value> assign;
    Heap heap;
};

// Field names bound at some location of the heap (all locations carry the
// same field set when the heap is well-formed).
std::vector<std::string> heap_fields(const Heap& h);

// Well-formedness: no nil in the domain and field consistency.
bool valid_heap(const Heap& h);

// Fuel-bounded evaluation with the classic precise semantics; predicate
// atoms are approximated from below by at most `fuel` unfoldings.  Throws
// FuelExhausted when the verdict would need deeper unfolding, and
// UnboundVariable / SortError on bad inputs.
bool eval_slid(const State& st, const SlidFormula& f, const std::vector<InductiveDef>& defs,
               int fuel);

// ---------------------------------------------------------------------------
// Abstraction
// ---------------------------------------------------------------------------

// phi_P: the data constraint of the inductive rule with the recursive-call
// data vector read as the destination, one relation per set position.
std::vector<DbsRelation> extract_phi_P(const InductiveDef& d);

enum class UfldDepth { One, GeTwo };

// The unfolding formula of a predicate atom: depth One is the extracted
// data constraint instantiated at the atom's arguments (plus the root/
// destination equality when the rule passes its root on), GeTwo adds two
// explicit layers over fresh intermediate vectors and the closure of the
// rest.  `tc` must be the closure of extract_phi_P(d) computed by tc_multi
// over its default names; GeTwo raises MissingTc without it.  `tag` is
// worked into the fresh intermediate names so unfoldings of different atoms
// never share them.
FormulaRef ufld(const SpatialAtom& a, const InductiveDef& d, UfldDepth depth,
                const TcResult* tc = nullptr, const std::string& tag = "");

// The abstraction: a data formula over the program variables (locations
// read as integers) plus one or two {0,1}-valued allocation variables per
// spatial atom.  `bools` records each allocation variable with the location
// variable it is about.
struct AbsFormula {
    FormulaRef formula;
    std::vector<std::pair<std::string, std::string>> bools;  // (variable, root)
};

AbsFormula abs_formula(const SlidFormula& f, const std::vector<InductiveDef>& defs);

// ---------------------------------------------------------------------------
// Satisfiability
// ---------------------------------------------------------------------------

struct SlidSatResult {
    bool sat = false;
    std::optional<BoundedModel> model;  // the satisfying assignment of the abstraction
};

// Pipeline: validate -> extract -> saturate -> closure -> abstraction ->
// set-constraint satisfiability.  Errors from any stage are rethrown as
// StageError tagged with the stage name.
SlidSatResult check_sat(const SlidFormula& f, const std::vector<InductiveDef>& defs,
                        const RqspaBudgets& budgets = {});

// A state witnessing `f` whose assignment extends the data/location part of
// `m` (an abstraction model), with the heap rebuilt by rule unfolding; used
// to re-validate SAT answers.  Returns nullopt when no heap of at most
// `fuel` cells per atom fits.
std::optional<State> concretize(const SlidFormula& f, const std::vector<InductiveDef>& defs,
                                const BoundedModel& m, int fuel);

}  // namespace slidset
