/* formula.hpp -- AST for integer/set formulas: terms, atoms, connectives,
 * quantifiers, plus construction helpers, printing, free variables,
 * capture-avoiding substitution and desugaring to the core fragment. */

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slidset {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct UnboundVariable : std::runtime_error {
    explicit UnboundVariable(const std::string& name)
        : std::runtime_error("unbound variable: " + name), var(name) {}
    std::string var;
};

struct SortError : std::runtime_error {
    explicit SortError(const std::string& what) : std::runtime_error("sort error: " + what) {}
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

enum class Sort { Int, Set };

struct IntTerm;
struct SetTerm;
struct Formula;

using IntRef = std::shared_ptr<const IntTerm>;
using SetRef = std::shared_ptr<const SetTerm>;
using FormulaRef = std::shared_ptr<const Formula>;

enum class IntKind { Const, Var, Min, Max };

struct IntTerm {
    IntKind kind;
    long long value = 0;  // Const
    std::string var;      // Var
    SetRef set;           // Min / Max
};

enum class SetKind { Empty, Var, Singleton, Union, Inter, Diff };

struct SetTerm {
    SetKind kind;
    std::string var;  // Var
    IntRef elem;      // Singleton
    SetRef lhs, rhs;  // Union / Inter / Diff
};

// Linear combination of integer terms, used by counting atoms:
//   constant + sum of coeff * base  where base is a Var/Min/Max term.
struct MTerm {
    long long constant = 0;
    std::vector<std::pair<long long, IntRef>> parts;
};

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

enum class CmpOp { Eq, Le, Ge, Lt, Gt, Ne };
enum class SetOp { Eq, SubsetEq, SupsetEq, Subset, Supset, Ne };

enum class FKind {
    True,
    False,
    IntCmp,    // ilhs iop irhs + offset
    SetCmp,    // slhs sop srhs
    Member,    // ilhs in slhs                      (sugar)
    CountCmp,  // mterm mop 0
    Divides,   // mterm = residue  (mod modulus)
    Not,
    And,
    Or,       // sugar
    Implies,  // sugar
    ForallInt,
    ExistsInt,  // sugar
    ForallSet,
    ExistsSet  // sugar
};

struct Formula {
    FKind kind;

    // Atom payloads.
    IntRef ilhs, irhs;
    CmpOp iop = CmpOp::Eq;
    long long offset = 0;
    SetRef slhs, srhs;
    SetOp sop = SetOp::Eq;
    MTerm mterm;
    CmpOp mop = CmpOp::Eq;
    long long modulus = 0, residue = 0;

    // Structure: Not has one child, Implies two, And/Or any number.
    std::vector<FormulaRef> kids;
    std::string qvar;  // quantifiers

    // Lazily computed free-variable map (name -> sort), shared and immutable
    // once filled.  Safe because formulas themselves are immutable.
    mutable std::shared_ptr<const std::map<std::string, Sort>> fv_cache;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

IntRef iconst(long long v);
IntRef ivar(const std::string& name);
IntRef tmin(SetRef s);
IntRef tmax(SetRef s);
IntRef tmin(const std::string& setVar);
IntRef tmax(const std::string& setVar);

SetRef sempty();
SetRef svar(const std::string& name);
SetRef ssingle(IntRef elem);
SetRef sunion(SetRef a, SetRef b);
SetRef sinter(SetRef a, SetRef b);
SetRef sdiff(SetRef a, SetRef b);

FormulaRef ftrue();
FormulaRef ffalse();
FormulaRef int_cmp(IntRef lhs, CmpOp op, IntRef rhs, long long offset = 0);
FormulaRef set_cmp(SetRef lhs, SetOp op, SetRef rhs);
FormulaRef member(IntRef elem, SetRef set);
FormulaRef count_cmp(MTerm m, CmpOp op);
FormulaRef divides(MTerm m, long long modulus, long long residue);
FormulaRef mk_not(FormulaRef f);
FormulaRef mk_and(std::vector<FormulaRef> kids);
FormulaRef mk_and(FormulaRef a, FormulaRef b);
FormulaRef mk_or(std::vector<FormulaRef> kids);
FormulaRef mk_or(FormulaRef a, FormulaRef b);
FormulaRef mk_implies(FormulaRef a, FormulaRef b);
FormulaRef forall_int(const std::string& var, FormulaRef body);
FormulaRef exists_int(const std::string& var, FormulaRef body);
FormulaRef forall_set(const std::string& var, FormulaRef body);
FormulaRef exists_set(const std::string& var, FormulaRef body);

// ---------------------------------------------------------------------------
// Inspection
// ---------------------------------------------------------------------------

// Free variables with their sorts.  A name used at both sorts raises SortError.
const std::map<std::string, Sort>& free_vars(const FormulaRef& f);
void collect_free_vars(const IntRef& t, std::map<std::string, Sort>& out);
void collect_free_vars(const SetRef& t, std::map<std::string, Sort>& out);

// Structural equality (ignores caches).
bool equal(const IntRef& a, const IntRef& b);
bool equal(const SetRef& a, const SetRef& b);
bool equal(const FormulaRef& a, const FormulaRef& b);

// Rendering in the surface syntax accepted by the parser.
std::string to_string(const IntRef& t);
std::string to_string(const SetRef& t);
std::string to_string(const MTerm& m);
std::string to_string(const FormulaRef& f);

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

// Simultaneous substitution.  `anchors` rewrites min/max applied to a set
// *variable*: key (isMin, setName) -> replacement integer term.  Anchor
// rewrites are tried before the set substitution descends into the argument,
// so [min(S) -> u, S -> T] maps min(S) to u and S elsewhere to T.
struct Subst {
    std::map<std::string, IntRef> ints;
    std::map<std::string, SetRef> sets;
    std::map<std::pair<bool, std::string>, IntRef> anchors;

    bool empty() const { return ints.empty() && sets.empty() && anchors.empty(); }
};

IntRef substitute(const IntRef& t, const Subst& s);
SetRef substitute(const SetRef& t, const Subst& s);
FormulaRef substitute(const FormulaRef& f, const Subst& s);

// Fresh-name helper: returns `base` if unused, else base'1, base'2, ...
std::string fresh_name(const std::string& base, const std::map<std::string, Sort>& avoid);

// ---------------------------------------------------------------------------
// Desugaring
// ---------------------------------------------------------------------------

// Rewrites to the core fragment: comparisons among {=, <=, >=}, set
// comparisons among {=, sube}, connectives among {not, and}, quantifiers
// among {forall}.  Member becomes a singleton-subset atom.
FormulaRef desugar(const FormulaRef& f);

// Negation normal form over the full (sugared) syntax: negations pushed to
// atoms, Implies expanded.  Atom-level negation is kept as Not(atom).
FormulaRef nnf(const FormulaRef& f);

// Bottom-up constant folding: ground atoms are evaluated outright (min/max
// of a provably empty set makes the atom false, != true, matching the
// bounded evaluator), and True/False propagate through connectives and
// quantifiers.  The result is equivalent over every model.
FormulaRef simplify(const FormulaRef& f);

}  // namespace slidset
