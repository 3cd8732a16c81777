/* rqspa.cpp -- the three-stage satisfiability pipeline: sign-split
 * translation to N, counting-atom separation, and compilation of the
 * quantified core into automata with Presburger side constraints. */

#include "slidset/rqspa.hpp"

#include "slidset/parikh.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <map>
#include <set>

namespace slidset {

std::string pos_name(const std::string& v) { return v + "#p"; }
std::string neg_name(const std::string& v) { return v + "#n"; }

// ---------------------------------------------------------------------------
// Preparation: desugar, rename apart, hoist compound min/max arguments
// ---------------------------------------------------------------------------

namespace {

void collect_names(const SetRef& t, std::map<std::string, Sort>& out);

void collect_names(const IntRef& t, std::map<std::string, Sort>& out) {
    if (!t) return;
    if (t->kind == IntKind::Var) out.emplace(t->var, Sort::Int);
    if (t->set) collect_names(t->set, out);
}

void collect_names(const SetRef& t, std::map<std::string, Sort>& out) {
    if (!t) return;
    if (t->kind == SetKind::Var) out.emplace(t->var, Sort::Set);
    collect_names(t->elem, out);
    collect_names(t->lhs, out);
    collect_names(t->rhs, out);
}

// Every name occurring in the formula, free or bound.
void collect_names(const FormulaRef& f, std::map<std::string, Sort>& out) {
    collect_names(f->ilhs, out);
    collect_names(f->irhs, out);
    collect_names(f->slhs, out);
    collect_names(f->srhs, out);
    for (auto& [c, base] : f->mterm.parts) {
        (void)c;
        collect_names(base, out);
    }
    if (!f->qvar.empty())
        out.emplace(f->qvar, (f->kind == FKind::ForallInt || f->kind == FKind::ExistsInt)
                                 ? Sort::Int
                                 : Sort::Set);
    for (auto& k : f->kids) collect_names(k, out);
}

FormulaRef uniquify(const FormulaRef& f, const Subst& ren, std::map<std::string, Sort>& used) {
    switch (f->kind) {
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: {
            bool isInt = f->kind == FKind::ForallInt || f->kind == FKind::ExistsInt;
            std::string nv = fresh_name(f->qvar, used);
            used.emplace(nv, isInt ? Sort::Int : Sort::Set);
            Subst r2 = ren;
            if (isInt)
                r2.ints[f->qvar] = ivar(nv);
            else
                r2.sets[f->qvar] = svar(nv);
            FormulaRef body = uniquify(f->kids[0], r2, used);
            switch (f->kind) {
                case FKind::ForallInt: return forall_int(nv, body);
                case FKind::ExistsInt: return exists_int(nv, body);
                case FKind::ForallSet: return forall_set(nv, body);
                default: return exists_set(nv, body);
            }
        }
        case FKind::Not:
        case FKind::And:
        case FKind::Or:
        case FKind::Implies: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(uniquify(k, ren, used));
            switch (f->kind) {
                case FKind::Not: return mk_not(kids[0]);
                case FKind::And: return mk_and(std::move(kids));
                case FKind::Or: return mk_or(std::move(kids));
                default: return mk_implies(kids[0], kids[1]);
            }
        }
        default: return substitute(f, ren);
    }
}

// A min/max application whose argument is not a plain set variable, if any;
// innermost-first so the returned argument itself is hoist-free.
SetRef find_compound_arg(const IntRef& t);
SetRef find_compound_arg(const SetRef& t);

SetRef find_compound_arg(const IntRef& t) {
    if (!t || (t->kind != IntKind::Min && t->kind != IntKind::Max)) return nullptr;
    if (auto inner = find_compound_arg(t->set)) return inner;
    if (t->set->kind != SetKind::Var) return t->set;
    return nullptr;
}

SetRef find_compound_arg(const SetRef& t) {
    if (!t) return nullptr;
    if (auto r = find_compound_arg(t->elem)) return r;
    if (auto r = find_compound_arg(t->lhs)) return r;
    if (auto r = find_compound_arg(t->rhs)) return r;
    return nullptr;
}

SetRef find_compound_arg(const FormulaRef& atom) {
    if (auto r = find_compound_arg(atom->ilhs)) return r;
    if (auto r = find_compound_arg(atom->irhs)) return r;
    if (auto r = find_compound_arg(atom->slhs)) return r;
    if (auto r = find_compound_arg(atom->srhs)) return r;
    for (auto& [c, base] : atom->mterm.parts) {
        (void)c;
        if (auto r = find_compound_arg(base)) return r;
    }
    return nullptr;
}

IntRef replace_set(const IntRef& t, const SetRef& from, const SetRef& to);

SetRef replace_set(const SetRef& t, const SetRef& from, const SetRef& to) {
    if (!t) return t;
    if (equal(t, from)) return to;
    switch (t->kind) {
        case SetKind::Singleton: return ssingle(replace_set(t->elem, from, to));
        case SetKind::Union: return sunion(replace_set(t->lhs, from, to), replace_set(t->rhs, from, to));
        case SetKind::Inter: return sinter(replace_set(t->lhs, from, to), replace_set(t->rhs, from, to));
        case SetKind::Diff: return sdiff(replace_set(t->lhs, from, to), replace_set(t->rhs, from, to));
        default: return t;
    }
}

IntRef replace_set(const IntRef& t, const SetRef& from, const SetRef& to) {
    if (!t) return t;
    if (t->kind == IntKind::Min) return tmin(replace_set(t->set, from, to));
    if (t->kind == IntKind::Max) return tmax(replace_set(t->set, from, to));
    return t;
}

FormulaRef replace_set_atom(const FormulaRef& f, const SetRef& from, const SetRef& to) {
    Formula g = *f;
    g.ilhs = replace_set(f->ilhs, from, to);
    g.irhs = replace_set(f->irhs, from, to);
    g.slhs = replace_set(f->slhs, from, to);
    g.srhs = replace_set(f->srhs, from, to);
    for (auto& [c, base] : g.mterm.parts) {
        (void)c;
        base = replace_set(base, from, to);
    }
    g.fv_cache = nullptr;
    return std::make_shared<const Formula>(std::move(g));
}

FormulaRef hoist(const FormulaRef& f, std::map<std::string, Sort>& used) {
    switch (f->kind) {
        case FKind::Not: return mk_not(hoist(f->kids[0], used));
        case FKind::And:
        case FKind::Or: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(hoist(k, used));
            return f->kind == FKind::And ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
        case FKind::Implies:
            return mk_implies(hoist(f->kids[0], used), hoist(f->kids[1], used));
        case FKind::ForallInt: return forall_int(f->qvar, hoist(f->kids[0], used));
        case FKind::ExistsInt: return exists_int(f->qvar, hoist(f->kids[0], used));
        case FKind::ForallSet: return forall_set(f->qvar, hoist(f->kids[0], used));
        case FKind::ExistsSet: return exists_set(f->qvar, hoist(f->kids[0], used));
        default: {
            SetRef arg = find_compound_arg(f);
            if (!arg) return f;
            std::string h = fresh_name("h#", used);
            used.emplace(h, Sort::Set);
            // An existential wrapper keeps the undefinedness convention: if
            // the argument itself denotes no set value (min/max of an empty
            // set inside it), the equality fails for every witness and the
            // atom stays false.
            FormulaRef inner = mk_and(set_cmp(svar(h), SetOp::Eq, arg),
                                      replace_set_atom(f, arg, svar(h)));
            return hoist(exists_set(h, inner), used);
        }
    }
}

}  // namespace

FormulaRef prepare(const FormulaRef& f) {
    FormulaRef g = desugar(f);
    std::map<std::string, Sort> used;
    collect_names(g, used);
    g = uniquify(g, {}, used);
    g = hoist(g, used);
    return desugar(g);
}

// ---------------------------------------------------------------------------
// Step I: translation under a context
// ---------------------------------------------------------------------------

namespace {

// A translated integer side: undefined, a constant, or a signed N-term.
struct TrInt {
    bool bot = false;
    bool isConst = false;
    long long c = 0;
    int sign = +1;  // the side denotes sign * term
    IntRef t;
};

TrInt tr_bot() { return {true, false, 0, +1, nullptr}; }
TrInt tr_const(long long c) { return {false, true, c, +1, nullptr}; }
TrInt tr_term(int sign, IntRef t) { return {false, false, 0, sign, std::move(t)}; }

SetSign set_sign(const Context& ctx, const std::string& s) {
    auto it = ctx.sets.find(s);
    if (it == ctx.sets.end()) throw UnboundVariable(s);
    return it->second;
}

IntSign int_sign(const Context& ctx, const std::string& x) {
    auto it = ctx.ints.find(x);
    if (it == ctx.ints.end()) throw UnboundVariable(x);
    return it->second;
}

TrInt tr_int_term(const IntRef& t, const Context& ctx) {
    switch (t->kind) {
        case IntKind::Const: return tr_const(t->value);
        case IntKind::Var:
            return int_sign(ctx, t->var) == IntSign::Pos ? tr_term(+1, ivar(pos_name(t->var)))
                                                         : tr_term(-1, ivar(neg_name(t->var)));
        case IntKind::Min: {
            const std::string& s = t->set->var;
            switch (set_sign(ctx, s)) {
                case SetSign::Bot: return tr_bot();
                case SetSign::Pos: return tr_term(+1, tmin(pos_name(s)));
                default: return tr_term(-1, tmax(neg_name(s)));  // Neg, Both
            }
        }
        default: {  // Max
            const std::string& s = t->set->var;
            switch (set_sign(ctx, s)) {
                case SetSign::Bot: return tr_bot();
                case SetSign::Neg: return tr_term(-1, tmin(neg_name(s)));
                default: return tr_term(+1, tmax(pos_name(s)));  // Pos, Both
            }
        }
    }
}

CmpOp flip(CmpOp op) {
    if (op == CmpOp::Le) return CmpOp::Ge;
    if (op == CmpOp::Ge) return CmpOp::Le;
    return op;
}

bool const_cmp(long long a, CmpOp op, long long b) {
    switch (op) {
        case CmpOp::Eq: return a == b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Ge: return a >= b;
        default: throw SortError("non-core comparison in translation");
    }
}

// term ? K  for a signed N-term and a constant.
FormulaRef tr_term_vs_const(const TrInt& a, CmpOp op, long long k) {
    if (a.sign > 0) {
        if (k >= 0) return int_cmp(a.t, op, iconst(k));
        return op == CmpOp::Ge ? ftrue() : ffalse();
    }
    // -t ? K  <=>  t ?' -K
    if (k <= 0) return int_cmp(a.t, flip(op), iconst(-k));
    return op == CmpOp::Le ? ftrue() : ffalse();
}

// a ? b + c  after translation of both sides.
FormulaRef tr_int_atom(const TrInt& a, CmpOp op, const TrInt& b, long long c) {
    if (a.bot || b.bot) return ffalse();
    if (a.isConst && b.isConst) return const_cmp(a.c, op, b.c + c) ? ftrue() : ffalse();
    if (a.isConst) return tr_term_vs_const(b, flip(op), a.c - c);  // K ? b+c <=> b ?' K-c
    if (b.isConst) return tr_term_vs_const(a, op, b.c + c);

    if (a.sign > 0 && b.sign > 0) return int_cmp(a.t, op, b.t, c);
    if (a.sign < 0 && b.sign < 0) return int_cmp(b.t, op, a.t, c);  // -s ? -t+c <=> t ? s+c
    if (a.sign > 0) {
        // s ? -t + c, both sides nonnegative: compare against a split of c.
        if (c < 0) return op == CmpOp::Ge ? ftrue() : ffalse();
        std::vector<FormulaRef> cases;
        for (long long c1 = 0; c1 <= c; c1++)
            cases.push_back(mk_and(int_cmp(a.t, op, iconst(c1)), int_cmp(b.t, op, iconst(c - c1))));
        return mk_or(std::move(cases));
    }
    // -s ? t + c
    if (c > 0) return op == CmpOp::Le ? ftrue() : ffalse();
    std::vector<FormulaRef> cases;
    for (long long c1 = 0; c1 <= -c; c1++)
        cases.push_back(
            mk_and(int_cmp(iconst(c1), op, a.t), int_cmp(iconst(-c - c1), op, b.t)));
    return mk_or(std::move(cases));
}

// Positive/negative half of a set term; nullopt when the term's value is
// undefined under the context.
std::optional<SetRef> tr_set_term(const SetRef& t, const Context& ctx, bool posSide) {
    switch (t->kind) {
        case SetKind::Empty: return sempty();
        case SetKind::Var: {
            SetSign sg = set_sign(ctx, t->var);
            if (posSide)
                return (sg == SetSign::Pos || sg == SetSign::Both) ? svar(pos_name(t->var))
                                                                   : sempty();
            return (sg == SetSign::Neg || sg == SetSign::Both) ? svar(neg_name(t->var)) : sempty();
        }
        case SetKind::Singleton: {
            const IntRef& e = t->elem;
            if (e->kind == IntKind::Const) {
                if (posSide) return e->value >= 0 ? ssingle(iconst(e->value)) : sempty();
                return e->value < 0 ? ssingle(iconst(-e->value)) : sempty();
            }
            if (e->kind == IntKind::Var) {
                IntSign sg = int_sign(ctx, e->var);
                if (posSide)
                    return sg == IntSign::Pos ? ssingle(ivar(pos_name(e->var))) : sempty();
                return sg == IntSign::Neg ? ssingle(ivar(neg_name(e->var))) : sempty();
            }
            // {min(S)} / {max(S)} with S a plain variable after preparation.
            const std::string& s = e->set->var;
            SetSign sg = set_sign(ctx, s);
            if (sg == SetSign::Bot) return std::nullopt;
            if (e->kind == IntKind::Min) {
                if (posSide)
                    return sg == SetSign::Pos ? ssingle(tmin(pos_name(s))) : sempty();
                return sg == SetSign::Pos ? sempty() : ssingle(tmax(neg_name(s)));
            }
            if (posSide) return sg == SetSign::Neg ? sempty() : ssingle(tmax(pos_name(s)));
            return sg == SetSign::Neg ? ssingle(tmin(neg_name(s))) : sempty();
        }
        default: {
            auto l = tr_set_term(t->lhs, ctx, posSide);
            auto r = tr_set_term(t->rhs, ctx, posSide);
            if (!l || !r) return std::nullopt;
            if (t->kind == SetKind::Union) return sunion(*l, *r);
            if (t->kind == SetKind::Inter) return sinter(*l, *r);
            return sdiff(*l, *r);
        }
    }
}

FormulaRef tr_count_atom(const FormulaRef& f, const Context& ctx) {
    MTerm out;
    out.constant = f->mterm.constant;
    for (auto& [coeff, base] : f->mterm.parts) {
        TrInt s = tr_int_term(base, ctx);
        if (s.bot) return ffalse();
        if (s.isConst) {
            out.constant += coeff * s.c;
            continue;
        }
        out.parts.push_back({coeff * s.sign, s.t});
    }
    if (f->kind == FKind::CountCmp) {
        if (out.parts.empty())
            return const_cmp(out.constant, f->mop, 0) ? ftrue() : ffalse();
        return count_cmp(std::move(out), f->mop);
    }
    if (out.parts.empty()) {
        long long r = ((out.constant % f->modulus) + f->modulus) % f->modulus;
        return r == ((f->residue % f->modulus) + f->modulus) % f->modulus ? ftrue() : ffalse();
    }
    return divides(std::move(out), f->modulus, f->residue);
}

FormulaRef int_guard(const std::string& x, IntSign sg) {
    if (sg == IntSign::Pos) return int_cmp(ivar(neg_name(x)), CmpOp::Eq, iconst(0));
    return mk_and(int_cmp(ivar(pos_name(x)), CmpOp::Eq, iconst(0)),
                  int_cmp(ivar(neg_name(x)), CmpOp::Ge, iconst(1)));
}

FormulaRef set_guard(const std::string& s, SetSign sg) {
    FormulaRef pe = set_cmp(svar(pos_name(s)), SetOp::Eq, sempty());
    FormulaRef ne = set_cmp(svar(neg_name(s)), SetOp::Eq, sempty());
    switch (sg) {
        case SetSign::Pos: return mk_and(mk_not(pe), ne);
        case SetSign::Neg: return mk_and(pe, mk_not(ne));
        case SetSign::Both: return mk_and(mk_not(pe), mk_not(ne));
        default: return mk_and(pe, ne);
    }
}

FormulaRef tr(const FormulaRef& f, const Context& ctx) {
    switch (f->kind) {
        case FKind::True:
        case FKind::False: return f;
        case FKind::IntCmp:
            return tr_int_atom(tr_int_term(f->ilhs, ctx), f->iop, tr_int_term(f->irhs, ctx),
                               f->offset);
        case FKind::SetCmp: {
            if (f->sop != SetOp::Eq && f->sop != SetOp::SubsetEq)
                throw SortError("non-core set comparison in translation");
            auto lp = tr_set_term(f->slhs, ctx, true), rp = tr_set_term(f->srhs, ctx, true);
            auto ln = tr_set_term(f->slhs, ctx, false), rn = tr_set_term(f->srhs, ctx, false);
            if (!lp || !rp || !ln || !rn) return ffalse();
            return mk_and(set_cmp(*lp, f->sop, *rp), set_cmp(*ln, f->sop, *rn));
        }
        case FKind::CountCmp:
        case FKind::Divides: return tr_count_atom(f, ctx);
        case FKind::Not: return mk_not(tr(f->kids[0], ctx));
        case FKind::And:
        case FKind::Or: {
            std::vector<FormulaRef> kids;
            for (auto& k : f->kids) kids.push_back(tr(k, ctx));
            return f->kind == FKind::And ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
        case FKind::Implies: return mk_implies(tr(f->kids[0], ctx), tr(f->kids[1], ctx));
        case FKind::ForallInt: {
            const std::string& x = f->qvar;
            Context cpos = ctx, cneg = ctx;
            cpos.ints[x] = IntSign::Pos;
            cneg.ints[x] = IntSign::Neg;
            FormulaRef body = mk_and(mk_implies(int_guard(x, IntSign::Pos), tr(f->kids[0], cpos)),
                                     mk_implies(int_guard(x, IntSign::Neg), tr(f->kids[0], cneg)));
            return forall_int(pos_name(x), forall_int(neg_name(x), body));
        }
        case FKind::ForallSet: {
            const std::string& s = f->qvar;
            std::vector<FormulaRef> cases;
            for (SetSign sg : {SetSign::Pos, SetSign::Neg, SetSign::Both, SetSign::Bot}) {
                Context c2 = ctx;
                c2.sets[s] = sg;
                cases.push_back(mk_implies(set_guard(s, sg), tr(f->kids[0], c2)));
            }
            return forall_set(pos_name(s), forall_set(neg_name(s), mk_and(std::move(cases))));
        }
        case FKind::ExistsInt: {
            const std::string& x = f->qvar;
            Context cpos = ctx, cneg = ctx;
            cpos.ints[x] = IntSign::Pos;
            cneg.ints[x] = IntSign::Neg;
            FormulaRef body = mk_or(mk_and(int_guard(x, IntSign::Pos), tr(f->kids[0], cpos)),
                                    mk_and(int_guard(x, IntSign::Neg), tr(f->kids[0], cneg)));
            return exists_int(pos_name(x), exists_int(neg_name(x), body));
        }
        case FKind::ExistsSet: {
            const std::string& s = f->qvar;
            std::vector<FormulaRef> cases;
            for (SetSign sg : {SetSign::Pos, SetSign::Neg, SetSign::Both, SetSign::Bot}) {
                Context c2 = ctx;
                c2.sets[s] = sg;
                cases.push_back(mk_and(set_guard(s, sg), tr(f->kids[0], c2)));
            }
            return exists_set(pos_name(s), exists_set(neg_name(s), mk_or(std::move(cases))));
        }
        default: throw SortError("unexpected construct in translation");
    }
}

}  // namespace

FormulaRef translate_under(const FormulaRef& f, const Context& ctx) {
    std::vector<FormulaRef> parts;
    for (auto& [x, sg] : ctx.ints) parts.push_back(int_guard(x, sg));
    for (auto& [s, sg] : ctx.sets) parts.push_back(set_guard(s, sg));
    parts.push_back(tr(f, ctx));
    return mk_and(std::move(parts));
}

namespace {

// Mixed-radix context indexing shared by the eager and lazy paths: integer
// variables contribute a factor 2, set variables a factor 4; index 0 is the
// all-positive context.
Context context_at(const std::map<std::string, Sort>& fv, size_t index) {
    Context ctx;
    for (auto& [v, sort] : fv) {
        if (sort == Sort::Int) {
            ctx.ints[v] = (index % 2 == 0) ? IntSign::Pos : IntSign::Neg;
            index /= 2;
        } else {
            static constexpr SetSign kOrder[4] = {SetSign::Pos, SetSign::Neg, SetSign::Both,
                                                  SetSign::Bot};
            ctx.sets[v] = kOrder[index % 4];
            index /= 4;
        }
    }
    return ctx;
}

size_t context_count(const std::map<std::string, Sort>& fv) {
    size_t n = 1;
    for (auto& [v, sort] : fv) {
        (void)v;
        n *= sort == Sort::Int ? 2 : 4;
    }
    return n;
}

}  // namespace

std::vector<Context> enumerate_contexts(const FormulaRef& f) {
    const auto& fv = free_vars(f);
    std::vector<Context> out;
    size_t n = context_count(fv);
    for (size_t i = 0; i < n; i++) out.push_back(context_at(fv, i));
    return out;
}

FormulaRef translate_z_to_n(const FormulaRef& f) {
    FormulaRef g = prepare(f);
    std::vector<FormulaRef> disjuncts;
    for (const Context& ctx : enumerate_contexts(g)) disjuncts.push_back(translate_under(g, ctx));
    return mk_or(std::move(disjuncts));
}

// ---------------------------------------------------------------------------
// Step II: separation of counting atoms
// ---------------------------------------------------------------------------

namespace {

void collect_count_atoms(const FormulaRef& f, std::vector<FormulaRef>& out) {
    if (f->kind == FKind::CountCmp || f->kind == FKind::Divides) {
        for (auto& a : out)
            if (equal(a, f)) return;
        out.push_back(f);
        return;
    }
    for (auto& k : f->kids) collect_count_atoms(k, out);
}

FormulaRef red(const FormulaRef& f, const std::vector<FormulaRef>& atoms, size_t mask) {
    if (f->kind == FKind::CountCmp || f->kind == FKind::Divides) {
        for (size_t i = 0; i < atoms.size(); i++)
            if (equal(atoms[i], f)) return (mask >> i & 1) ? ftrue() : ffalse();
        return f;
    }
    if (f->kids.empty()) return f;
    std::vector<FormulaRef> kids;
    for (auto& k : f->kids) kids.push_back(red(k, atoms, mask));
    switch (f->kind) {
        case FKind::Not: return mk_not(kids[0]);
        case FKind::And: return mk_and(std::move(kids));
        case FKind::Or: return mk_or(std::move(kids));
        case FKind::Implies: return mk_implies(kids[0], kids[1]);
        case FKind::ForallInt: return forall_int(f->qvar, kids[0]);
        case FKind::ExistsInt: return exists_int(f->qvar, kids[0]);
        case FKind::ForallSet: return forall_set(f->qvar, kids[0]);
        default: return exists_set(f->qvar, kids[0]);
    }
}

// The negation of a counting atom, as a positive atom where the comparison
// allows it (over the integers: not(m >= 0) is m+1 <= 0 and dually).
FormulaRef negate_count_atom(const FormulaRef& f) {
    if (f->kind == FKind::CountCmp && f->mop == CmpOp::Ge) {
        MTerm m = f->mterm;
        m.constant += 1;
        return count_cmp(std::move(m), CmpOp::Le);
    }
    if (f->kind == FKind::CountCmp && f->mop == CmpOp::Le) {
        MTerm m = f->mterm;
        m.constant -= 1;
        return count_cmp(std::move(m), CmpOp::Ge);
    }
    return mk_not(f);
}

}  // namespace

std::vector<CoreCount> split_core_count(const FormulaRef& f) {
    std::vector<FormulaRef> atoms;
    collect_count_atoms(f, atoms);
    if (atoms.size() > 20) throw SolverBudget("too many counting atoms");
    std::vector<CoreCount> out;
    for (size_t mask = 0; mask < (size_t(1) << atoms.size()); mask++) {
        CoreCount cc;
        // Folding after the sign substitution prunes dead branches; sign
        // choices that only differ inside pruned branches then share a core.
        cc.core = simplify(red(f, atoms, mask));
        if (cc.core->kind == FKind::False) continue;
        for (size_t i = 0; i < atoms.size(); i++)
            cc.count.push_back((mask >> i & 1) ? atoms[i] : negate_count_atom(atoms[i]));
        out.push_back(std::move(cc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step III: compiling the counting-free core to an NFA
// ---------------------------------------------------------------------------

namespace {

// "v occurs in exactly one letter".
Nfa once_nfa(const std::string& v) {
    Nfa a;
    a.ap = {v};
    int q0 = a.add_state(false), q1 = a.add_state(true);
    a.init = q0;
    a.add_trans(q0, {0, 1}, q0);
    a.add_trans(q0, {1, 1}, q1);
    a.add_trans(q1, {0, 1}, q1);
    return a;
}

// Position-defining gadgets: u occurs exactly once, at the described
// position.  Words lacking such a position are rejected.
Nfa def_const(const std::string& u, long long c) {
    Nfa a;
    a.ap = {u};
    for (long long i = 0; i <= c + 1; i++) a.add_state(i == c + 1);
    a.init = 0;
    for (long long i = 0; i < c; i++) a.add_trans(int(i), {0, 1}, int(i + 1));
    a.add_trans(int(c), {1, 1}, int(c + 1));
    a.add_trans(int(c + 1), {0, 1}, int(c + 1));
    return a;
}

Nfa def_min(const std::string& u, const std::string& s) {
    Nfa a;
    a.ap = {s, u};
    std::sort(a.ap.begin(), a.ap.end());
    uint64_t S = uint64_t(1) << a.ap_index(s), U = uint64_t(1) << a.ap_index(u);
    int q0 = a.add_state(false), q1 = a.add_state(true);
    a.init = q0;
    a.add_trans(q0, {0, S | U}, q0);       // neither S nor u yet
    a.add_trans(q0, {S | U, S | U}, q1);   // first S-position carries u
    a.add_trans(q1, {0, U}, q1);           // anything afterwards, u spent
    return a;
}

Nfa def_max(const std::string& u, const std::string& s) {
    Nfa a;
    a.ap = {s, u};
    std::sort(a.ap.begin(), a.ap.end());
    uint64_t S = uint64_t(1) << a.ap_index(s), U = uint64_t(1) << a.ap_index(u);
    int q0 = a.add_state(false), q1 = a.add_state(true);
    a.init = q0;
    a.add_trans(q0, {0, U}, q0);           // any prefix without u
    a.add_trans(q0, {S | U, S | U}, q1);   // last S-position carries u
    a.add_trans(q1, {0, S | U}, q1);       // no S (and no u) afterwards
    return a;
}

// pos(x) ? pos(y) + c for distinct variables x, y, assuming each occurs
// exactly once.  Gap counting is clamped at |c|+1, which already decides
// every comparison.
Nfa cmp_vars(const std::string& x, const std::string& y, CmpOp op, long long c) {
    long long G = std::llabs(c) + 1;
    Nfa a;
    a.ap = {x, y};
    std::sort(a.ap.begin(), a.ap.end());
    uint64_t X = uint64_t(1) << a.ap_index(x), Y = uint64_t(1) << a.ap_index(y);
    auto holds = [&](long long diff) { return const_cmp(diff, op, c); };
    int start = a.add_state(false);
    a.init = start;
    a.add_trans(start, {0, X | Y}, start);
    // diff = pos(x) - pos(y); states for "x seen, y pending" at clamped gap
    // g (diff will be -g) and symmetrically for y first.
    std::vector<int> xs(G + 1), ys(G + 1);
    int both0 = a.add_state(holds(0));
    a.add_trans(both0, {0, X | Y}, both0);
    a.add_trans(start, {X | Y, X | Y}, both0);
    for (long long g = 1; g <= G; g++) {
        xs[g] = a.add_state(false);
        ys[g] = a.add_state(false);
    }
    a.add_trans(start, {X, X | Y}, xs[1]);
    a.add_trans(start, {Y, X | Y}, ys[1]);
    for (long long g = 1; g <= G; g++) {
        long long next = std::min(g + 1, G);
        a.add_trans(xs[g], {0, X | Y}, xs[next]);
        a.add_trans(ys[g], {0, X | Y}, ys[next]);
        int accX = a.add_state(holds(-g));  // y arrives g letters after x
        int accY = a.add_state(holds(g));
        a.add_trans(xs[g], {Y, X | Y}, accX);
        a.add_trans(ys[g], {X, X | Y}, accY);
        a.add_trans(accX, {0, X | Y}, accX);
        a.add_trans(accY, {0, X | Y}, accY);
    }
    return trim(a);
}

struct MsowBuilder {
    size_t budget;
    std::map<std::string, Sort> names;  // all names, for fresh gadget vars

    std::string fresh(Sort sort) {
        std::string u = fresh_name("u#", names);
        names.emplace(u, sort);
        return u;
    }

    // Letter-wise truth of `pos in t` as a function of the letter bits.
    static bool term_bit(const SetRef& t, uint64_t letter, const std::map<std::string, int>& bit) {
        switch (t->kind) {
            case SetKind::Empty: return false;
            case SetKind::Var: return letter >> bit.at(t->var) & 1;
            case SetKind::Singleton: return letter >> bit.at(t->elem->var) & 1;
            case SetKind::Union:
                return term_bit(t->lhs, letter, bit) || term_bit(t->rhs, letter, bit);
            case SetKind::Inter:
                return term_bit(t->lhs, letter, bit) && term_bit(t->rhs, letter, bit);
            default: return term_bit(t->lhs, letter, bit) && !term_bit(t->rhs, letter, bit);
        }
    }

    static void term_vars(const SetRef& t, std::map<std::string, Sort>& out) {
        switch (t->kind) {
            case SetKind::Empty: return;
            case SetKind::Var: out.emplace(t->var, Sort::Set); return;
            case SetKind::Singleton: out.emplace(t->elem->var, Sort::Int); return;
            default:
                term_vars(t->lhs, out);
                term_vars(t->rhs, out);
        }
    }

    // A singleton whose element is not a plain variable, if any.
    static IntRef find_nonvar_elem(const SetRef& t) {
        switch (t->kind) {
            case SetKind::Singleton:
                return t->elem->kind == IntKind::Var ? nullptr : t->elem;
            case SetKind::Union:
            case SetKind::Inter:
            case SetKind::Diff: {
                if (auto r = find_nonvar_elem(t->lhs)) return r;
                return find_nonvar_elem(t->rhs);
            }
            default: return nullptr;
        }
    }

    Nfa set_atom(const FormulaRef& f) {
        // Kernelize non-variable singleton elements through a fresh position
        // variable with a defining atom; the existential keeps undefined
        // min/max arguments false.
        IntRef e = find_nonvar_elem(f->slhs) ? find_nonvar_elem(f->slhs)
                                             : find_nonvar_elem(f->srhs);
        if (e) {
            std::string u = fresh(Sort::Int);
            auto fix = [&](const SetRef& t) {
                return replace_set(t, ssingle(e), ssingle(ivar(u)));
            };
            FormulaRef atom = set_cmp(fix(f->slhs), f->sop, fix(f->srhs));
            return build(exists_int(u, mk_and(int_cmp(ivar(u), CmpOp::Eq, e), atom)));
        }
        std::map<std::string, Sort> vars;
        term_vars(f->slhs, vars);
        term_vars(f->srhs, vars);
        Nfa a;
        for (auto& [v, sort] : vars) {
            (void)sort;
            a.ap.push_back(v);
        }
        std::map<std::string, int> bit;
        for (size_t i = 0; i < a.ap.size(); i++) bit[a.ap[i]] = int(i);
        int q = a.add_state(true);
        a.init = q;
        uint64_t care = (a.ap.size() == 64) ? ~uint64_t(0)
                                            : ((uint64_t(1) << a.ap.size()) - 1);
        for (uint64_t letter = 0; letter < (uint64_t(1) << a.ap.size()); letter++) {
            bool l = term_bit(f->slhs, letter, bit), r = term_bit(f->srhs, letter, bit);
            bool ok = f->sop == SetOp::Eq ? l == r : !l || r;
            if (ok) a.add_trans(q, {letter, care}, q);
        }
        return a;
    }

    Nfa int_atom(const FormulaRef& f) {
        // Each side becomes a position variable, defined by a gadget when it
        // is not already a variable.
        std::vector<Nfa> defs;
        auto side = [&](const IntRef& t) -> std::string {
            switch (t->kind) {
                case IntKind::Var: return t->var;
                case IntKind::Const: {
                    std::string u = fresh(Sort::Int);
                    defs.push_back(def_const(u, t->value));
                    return u;
                }
                case IntKind::Min: {
                    std::string u = fresh(Sort::Int);
                    defs.push_back(def_min(u, t->set->var));
                    return u;
                }
                default: {
                    std::string u = fresh(Sort::Int);
                    defs.push_back(def_max(u, t->set->var));
                    return u;
                }
            }
        };
        std::string x = side(f->ilhs), y = side(f->irhs);
        if (x == y)
            return const_cmp(0, f->iop, f->offset) ? nfa_all({x}) : nfa_none({x});
        Nfa a = cmp_vars(x, y, f->iop, f->offset);
        for (auto& d : defs) a = product(a, d, budget);
        // Project the gadget positions away again.
        for (auto& d : defs)
            for (auto& v : d.ap)
                if (v.rfind("u#", 0) == 0) a = project(a, v);
        return a;
    }

    Nfa exists_int_nfa(const std::string& x, const Nfa& body) {
        return project(product(body, once_nfa(x), budget), x);
    }

    Nfa build(const FormulaRef& f) {
        // Quantifiers and negations pay for subset constructions; their
        // results are memoized because the counting-atom case split hands us
        // the same subtrees over and over.
        switch (f->kind) {
            case FKind::Not:
            case FKind::ForallInt:
            case FKind::ExistsInt:
            case FKind::ForallSet:
            case FKind::ExistsSet: {
                static std::map<std::pair<std::string, size_t>, Nfa> cache;
                auto key = std::make_pair(to_string(f), budget);
                auto it = cache.find(key);
                if (it != cache.end()) return it->second;
                Nfa a = build_uncached(f);
                if (cache.size() > 4096) cache.clear();
                return cache.emplace(std::move(key), std::move(a)).first->second;
            }
            default: return build_uncached(f);
        }
    }

    Nfa build_uncached(const FormulaRef& f) {
        switch (f->kind) {
            case FKind::True: return nfa_all({});
            case FKind::False: return nfa_none({});
            case FKind::IntCmp: return int_atom(f);
            case FKind::SetCmp: return set_atom(f);
            case FKind::Not: return complement(build(f->kids[0]), budget);
            case FKind::And: {
                Nfa a = nfa_all({});
                for (auto& k : f->kids) a = product(a, build(k), budget);
                return a;
            }
            case FKind::Or: {
                Nfa a = nfa_none({});
                for (auto& k : f->kids) a = nfa_union(a, build(k));
                return a;
            }
            case FKind::Implies:
                return nfa_union(complement(build(f->kids[0]), budget), build(f->kids[1]));
            case FKind::ExistsInt: return exists_int_nfa(f->qvar, build(f->kids[0]));
            case FKind::ForallInt:
                return complement(
                    exists_int_nfa(f->qvar, complement(build(f->kids[0]), budget)), budget);
            case FKind::ExistsSet: return project(build(f->kids[0]), f->qvar);
            case FKind::ForallSet:
                return complement(project(complement(build(f->kids[0]), budget), f->qvar),
                                  budget);
            case FKind::Member: return build(desugar(f));
            default: throw SortError("counting atom inside the automaton core");
        }
    }
};

}  // namespace

Nfa msow_to_nfa(const FormulaRef& core, size_t budget) {
    FormulaRef f = desugar(core);
    MsowBuilder b;
    b.budget = budget;
    collect_names(f, b.names);
    Nfa a = b.build(f);
    // Free integer variables must occur exactly once for the word to encode
    // a model.
    for (auto& [v, sort] : free_vars(f))
        if (sort == Sort::Int) a = product(a, once_nfa(v), budget);
    return trim(a);
}

// ---------------------------------------------------------------------------
// Trackers and PA assembly
// ---------------------------------------------------------------------------

std::vector<Nfa> build_trackers(const std::vector<std::string>& intVars,
                                const std::vector<std::string>& setVars) {
    std::vector<Nfa> out;
    for (auto& x : intVars) {
        // p0 up to and including x's position, p1 after; x must occur.
        Nfa a;
        a.ap = {x};
        int p0 = a.add_state(false), p1 = a.add_state(true);
        a.init = p0;
        a.add_trans(p0, {0, 1}, p0);
        a.add_trans(p0, {1, 1}, p1);
        a.add_trans(p1, {0, 1}, p1);
        out.push_back(std::move(a));
    }
    for (auto& s : setVars) {
        // q0 before the first occurrence, q1 from just after the first up to
        // the last, q2 after the last.  The accepting run is unique.
        Nfa a;
        a.ap = {s};
        int q0 = a.add_state(true), q1 = a.add_state(false), q2 = a.add_state(true);
        a.init = q0;
        a.add_trans(q0, {0, 1}, q0);
        a.add_trans(q0, {1, 1}, q1);  // first, not last
        a.add_trans(q0, {1, 1}, q2);  // sole occurrence
        a.add_trans(q1, {0, 0}, q1);  // interior letters, S free
        a.add_trans(q1, {1, 1}, q2);  // last occurrence
        a.add_trans(q2, {0, 1}, q2);
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

// Product that reports, for every result state, the originating pair.
Nfa product_tracked(const Nfa& a0, const Nfa& b0, size_t budget,
                    std::vector<std::pair<int, int>>& origin) {
    auto ap = ap_union(a0, b0);
    Nfa a = align(a0, ap), b = align(b0, ap);
    Nfa out;
    out.ap = ap;
    std::map<std::pair<int, int>, int> id;
    std::deque<std::pair<int, int>> work;
    origin.clear();
    auto state = [&](int x, int y) {
        auto [it, freshPair] = id.try_emplace({x, y}, out.states);
        if (freshPair) {
            out.add_state(a.finals[x] && b.finals[y]);
            origin.push_back({x, y});
            if (size_t(out.states) > budget) throw StateBlowup(budget);
            work.push_back({x, y});
        }
        return it->second;
    };
    out.init = state(a.init, b.init);
    std::vector<std::vector<const Nfa::Trans*>> outA(a.states), outB(b.states);
    for (auto& t : a.trans) outA[t.from].push_back(&t);
    for (auto& t : b.trans) outB[t.from].push_back(&t);
    while (!work.empty()) {
        auto [x, y] = work.front();
        work.pop_front();
        int from = id.at({x, y});
        for (auto* ta : outA[x])
            for (auto* tb : outB[y])
                if (ta->letter.compatible(tb->letter))
                    out.add_trans(from, ta->letter.merged(tb->letter), state(ta->to, tb->to));
    }
    return out;
}

// Trim while keeping per-state annotations consistent.
Nfa trim_tracked(const Nfa& a, std::vector<std::vector<int>>& comps) {
    Nfa t = trim(a);
    // Recompute the mapping by redoing trim's reachability bookkeeping: the
    // state order of trim() is ascending original index, so recover it by
    // matching counts.
    std::vector<std::vector<int>> fwd(a.states), bwd(a.states);
    for (auto& tr : a.trans) {
        fwd[tr.from].push_back(tr.to);
        bwd[tr.to].push_back(tr.from);
    }
    auto reach = [&](std::vector<int> seeds, const std::vector<std::vector<int>>& adj) {
        std::vector<bool> seen(a.states);
        std::deque<int> work(seeds.begin(), seeds.end());
        for (int s : seeds) seen[s] = true;
        while (!work.empty()) {
            int q = work.front();
            work.pop_front();
            for (int r : adj[q])
                if (!seen[r]) {
                    seen[r] = true;
                    work.push_back(r);
                }
        }
        return seen;
    };
    auto fromInit = reach({a.init}, fwd);
    std::vector<int> fins;
    for (int q = 0; q < a.states; q++)
        if (a.finals[q]) fins.push_back(q);
    auto toFinal = reach(fins, bwd);
    std::vector<std::vector<int>> newComps(comps.size());
    for (int q = 0; q < a.states; q++)
        if ((fromInit[q] && toFinal[q]) || q == a.init)
            for (size_t k = 0; k < comps.size(); k++) newComps[k].push_back(comps[k][q]);
    for (auto& c : newComps)
        if (int(c.size()) != t.states)
            throw std::logic_error("tracker map out of sync with trim (internal)");
    comps = std::move(newComps);
    return t;
}

}  // namespace

PresburgerAutomaton assemble_pa(const Nfa& core, const std::vector<Nfa>& trackers,
                                const std::vector<FormulaRef>& count, size_t budget) {
    // Fold the trackers into the core, remembering which tracker state each
    // product state projects to.
    Nfa cur = core;
    std::vector<std::vector<int>> comps;  // per tracker: product state -> tracker state
    std::vector<std::string> subject;     // per tracker: its variable
    std::vector<bool> isInt;
    for (auto& trk : trackers) {
        std::vector<std::pair<int, int>> origin;
        Nfa next = product_tracked(cur, trk, budget, origin);
        for (auto& c : comps) {
            std::vector<int> upd(next.states);
            for (int q = 0; q < next.states; q++) upd[q] = c[origin[q].first];
            c = std::move(upd);
        }
        std::vector<int> own(next.states);
        for (int q = 0; q < next.states; q++) own[q] = origin[q].second;
        comps.push_back(std::move(own));
        subject.push_back(trk.ap.at(0));
        isInt.push_back(trk.states == 2);
        cur = std::move(next);
    }
    cur = trim_tracked(cur, comps);

    // State-visit counts as linear expressions over transition counts: the
    // visits of a state equal its incoming transition counts, plus one at
    // the initial state.
    auto visits = [&](size_t trk, int compState) {
        LinExpr e;
        for (size_t i = 0; i < cur.trans.size(); i++)
            if (comps[trk][cur.trans[i].to] == compState) e.add(LinExpr::var(parikh_var(i)));
        if (comps[trk][cur.init] == compState) e.add(LinExpr::of(1));
        return e;
    };
    auto tracker_of = [&](const std::string& v, bool wantInt) -> size_t {
        for (size_t k = 0; k < subject.size(); k++)
            if (subject[k] == v && isInt[k] == wantInt) return k;
        throw UnexpressibleTerm(v);
    };
    // Nonemptiness of a tracked set: the accepting run leaves the tracker's
    // initial component.
    auto nonempty = [&](size_t trk) {
        LinExpr e;
        for (size_t i = 0; i < cur.trans.size(); i++)
            if (comps[trk][cur.trans[i].from] == 0 && comps[trk][cur.trans[i].to] != 0)
                e.add(LinExpr::var(parikh_var(i)));
        e.add(LinExpr::of(-1));
        return q_cmp(e, CmpOp::Ge);
    };

    std::function<QfpaRef(const FormulaRef&)> psi_of = [&](const FormulaRef& f) -> QfpaRef {
        switch (f->kind) {
            case FKind::Not: return q_not(psi_of(f->kids[0]));
            case FKind::CountCmp:
            case FKind::Divides: {
                LinExpr e = LinExpr::of(f->mterm.constant);
                std::vector<QfpaRef> guards;
                for (auto& [coeff, base] : f->mterm.parts) {
                    switch (base->kind) {
                        case IntKind::Var: {
                            size_t k = tracker_of(base->var, true);
                            LinExpr v = visits(k, 0);
                            v.add(LinExpr::of(-1));
                            e.add(v, coeff);
                            break;
                        }
                        case IntKind::Min:
                        case IntKind::Max: {
                            if (base->set->kind != SetKind::Var)
                                throw UnexpressibleTerm(to_string(base));
                            size_t k = tracker_of(base->set->var, false);
                            LinExpr v = visits(k, 0);
                            if (base->kind == IntKind::Max) v.add(visits(k, 1));
                            v.add(LinExpr::of(-1));
                            e.add(v, coeff);
                            guards.push_back(nonempty(k));
                            break;
                        }
                        default: throw UnexpressibleTerm(to_string(base));
                    }
                }
                QfpaRef atom = f->kind == FKind::CountCmp
                                   ? q_cmp(e, f->mop)
                                   : q_div(e.add(LinExpr::of(-f->residue)), f->modulus);
                guards.push_back(atom);
                return q_and(std::move(guards));
            }
            default: throw UnexpressibleTerm(to_string(f));
        }
    };
    std::vector<QfpaRef> parts;
    for (auto& lit : count) parts.push_back(psi_of(lit));
    return {std::move(cur), q_and(std::move(parts))};
}

// ---------------------------------------------------------------------------
// PA emptiness with witness extraction
// ---------------------------------------------------------------------------

std::optional<Word> pa_emptiness(const PresburgerAutomaton& pa, long long budget) {
    auto solve = [&](const QfpaRef& f) -> std::optional<QfpaModel> {
        try {
            return qfpa_sat(f, qfpa_vars(f), budget);
        } catch (const Budget& b) {
            throw SolverBudget(b.what());
        }
    };
    auto counts_of = [&](const QfpaModel& m) {
        std::vector<long long> counts(pa.nfa.trans.size(), 0);
        for (size_t i = 0; i < counts.size(); i++) {
            auto it = m.find(parikh_var(i));
            if (it != m.end()) counts[i] = it->second;
        }
        return counts;
    };

    // Hierholzer assembly of the run from the transition counts; lowest
    // transition index first for determinism.
    auto assemble = [&](std::vector<long long> counts) {
        std::vector<std::vector<size_t>> outT(pa.nfa.states);
        for (size_t i = 0; i < pa.nfa.trans.size(); i++) outT[pa.nfa.trans[i].from].push_back(i);

        std::vector<std::pair<int, long long>> stack{{pa.nfa.init, -1}};
        std::vector<long long> edges;
        while (!stack.empty()) {
            auto [v, viaEdge] = stack.back();
            long long next = -1;
            for (size_t i : outT[v])
                if (counts[i] > 0) {
                    next = (long long)i;
                    break;
                }
            if (next >= 0) {
                counts[next]--;
                stack.push_back({pa.nfa.trans[next].to, next});
            } else {
                edges.push_back(viaEdge);
                stack.pop_back();
            }
        }
        std::reverse(edges.begin(), edges.end());
        Word w;
        for (long long e : edges) {
            if (e < 0) continue;
            const Letter& l = pa.nfa.trans[e].letter;
            w.push_back(l.bits & l.care);
        }
        for (long long c : counts)
            if (c != 0) throw std::logic_error("flow solution is not a single run (internal)");
        return w;
    };

    // Lazy connectivity: solve flow conservation + psi only, which is much
    // easier on the solver than the eager depth encoding, then check the
    // solution's support for reachability from the initial state.  A
    // disconnected solution is cut off: either some transition crosses from
    // the reachable region into the unreachable one, or the unreachable
    // region stays unused.  Each cut names a distinct reachable region, so
    // the loop terminates; the round cap just keeps the worst case at bay.
    QfpaRef base = q_and(parikh_flow_formula(pa.nfa), pa.psi);
    std::vector<QfpaRef> cuts;
    for (int round = 0; round < 64; round++) {
        auto m = solve(q_and(base, q_and(cuts)));
        if (!m) return std::nullopt;
        std::vector<long long> counts = counts_of(*m);

        std::vector<bool> reach(pa.nfa.states, false);
        reach[pa.nfa.init] = true;
        for (bool grown = true; grown;) {
            grown = false;
            for (size_t i = 0; i < counts.size(); i++)
                if (counts[i] > 0 && reach[pa.nfa.trans[i].from] && !reach[pa.nfa.trans[i].to]) {
                    reach[pa.nfa.trans[i].to] = true;
                    grown = true;
                }
        }
        bool connected = true;
        for (size_t i = 0; i < counts.size(); i++)
            if (counts[i] > 0 && !reach[pa.nfa.trans[i].from]) {
                connected = false;
                break;
            }
        if (connected) return assemble(std::move(counts));

        LinExpr enter;
        std::vector<QfpaRef> unused;
        for (size_t i = 0; i < pa.nfa.trans.size(); i++) {
            bool fromR = reach[pa.nfa.trans[i].from], toR = reach[pa.nfa.trans[i].to];
            if (fromR && !toR) enter.add(LinExpr::var(parikh_var(i)));
            if (!fromR) unused.push_back(q_cmp(LinExpr::var(parikh_var(i)), CmpOp::Le));
        }
        enter.add(LinExpr::of(-1));
        cuts.push_back(q_or(q_cmp(enter, CmpOp::Ge), q_and(std::move(unused))));
    }

    // Fallback: the eager depth-variable encoding, complete in one call.
    auto m = solve(q_and(parikh_formula(pa.nfa), pa.psi));
    if (!m) return std::nullopt;
    return assemble(counts_of(*m));
}

// ---------------------------------------------------------------------------
// Word <-> model correspondence
// ---------------------------------------------------------------------------

Word encode_model(const BoundedModel& m, const std::vector<std::string>& ap,
                  const std::map<std::string, Sort>& sorts) {
    long long len = 0;
    for (auto& [v, s] : sorts) {
        if (s == Sort::Int) {
            auto it = m.ints.find(v);
            if (it != m.ints.end()) len = std::max(len, it->second + 1);
        } else {
            auto it = m.sets.find(v);
            if (it != m.sets.end())
                for (long long e : it->second) len = std::max(len, e + 1);
        }
    }
    Word w(len, 0);
    for (size_t i = 0; i < ap.size(); i++) {
        auto s = sorts.find(ap[i]);
        if (s == sorts.end()) continue;
        if (s->second == Sort::Int) {
            auto it = m.ints.find(ap[i]);
            if (it != m.ints.end() && it->second < 0)
                throw std::invalid_argument("negative value in word encoding: " + ap[i]);
            if (it != m.ints.end()) w[it->second] |= uint64_t(1) << i;
        } else {
            auto it = m.sets.find(ap[i]);
            if (it != m.sets.end())
                for (long long e : it->second) {
                    if (e < 0)
                        throw std::invalid_argument("negative value in word encoding: " + ap[i]);
                    w[e] |= uint64_t(1) << i;
                }
        }
    }
    return w;
}

BoundedModel decode_word(const Word& w, const std::vector<std::string>& ap,
                         const std::map<std::string, Sort>& sorts) {
    BoundedModel m = BoundedModel::window(0, std::max<long long>(1, (long long)w.size()) - 1);
    for (auto& [v, s] : sorts) {
        if (s == Sort::Int)
            m.ints[v] = 0;
        else
            m.sets[v] = {};
    }
    for (size_t i = 0; i < ap.size(); i++) {
        auto s = sorts.find(ap[i]);
        if (s == sorts.end()) continue;
        std::vector<long long> positions;
        for (size_t p = 0; p < w.size(); p++)
            if (w[p] >> i & 1) positions.push_back((long long)p);
        if (s->second == Sort::Set) {
            m.sets[ap[i]] = positions;
        } else {
            if (positions.size() > 1)
                throw std::invalid_argument("word places " + ap[i] + " more than once");
            m.ints[ap[i]] = positions.empty() ? 0 : positions[0];
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

std::optional<BoundedModel> rqspa_sat(const FormulaRef& f, const RqspaBudgets& budgets) {
    FormulaRef g = prepare(f);
    const auto& fv = free_vars(g);
    size_t nCtx = context_count(fv);
    // Distinct sign choices frequently collapse to the same counting-free
    // core after folding; compile each distinct core once.
    std::map<std::string, Nfa> coreCache;
    for (size_t ci = 0; ci < nCtx; ci++) {
        Context ctx = context_at(fv, ci);
        // Constant folding first: a context of the wrong sign leaves ground
        // contradictions behind, and killing them here avoids building
        // automata for the whole disjunct.
        FormulaRef t = simplify(desugar(translate_under(g, ctx)));
        if (t->kind == FKind::False) continue;
        for (const CoreCount& cc : split_core_count(t)) {
            std::string key = to_string(cc.core);
            auto hit = coreCache.find(key);
            if (hit == coreCache.end())
                hit = coreCache.emplace(std::move(key), msow_to_nfa(cc.core, budgets.states)).first;
            const Nfa& core = hit->second;
            if (is_empty_lang(core)) continue;

            std::map<std::string, Sort> counted;
            for (auto& lit : cc.count) {
                const FormulaRef& atom = lit->kind == FKind::Not ? lit->kids[0] : lit;
                for (auto& [c, base] : atom->mterm.parts) {
                    (void)c;
                    if (base->kind == IntKind::Var)
                        counted.emplace(base->var, Sort::Int);
                    else if (base->set && base->set->kind == SetKind::Var)
                        counted.emplace(base->set->var, Sort::Set);
                }
            }
            std::vector<std::string> ints, sets;
            for (auto& [v, s] : counted) (s == Sort::Int ? ints : sets).push_back(v);

            PresburgerAutomaton pa =
                assemble_pa(core, build_trackers(ints, sets), cc.count, budgets.states);
            auto w = pa_emptiness(pa, budgets.solver);
            if (!w) continue;

            // Decode the half-variables and map back through the sign split.
            std::map<std::string, Sort> halves;
            for (auto& [v, s] : fv) {
                halves.emplace(pos_name(v), s);
                halves.emplace(neg_name(v), s);
            }
            BoundedModel n = decode_word(*w, pa.nfa.ap, halves);
            long long L = std::max<long long>(n.hi, 1);
            BoundedModel z = BoundedModel::window(-L, L);
            for (auto& [v, s] : fv) {
                if (s == Sort::Int) {
                    z.ints[v] = n.ints[pos_name(v)] - n.ints[neg_name(v)];
                } else {
                    std::vector<long long> elems = n.sets[pos_name(v)];
                    for (long long e : n.sets[neg_name(v)]) elems.push_back(-e);
                    std::sort(elems.begin(), elems.end());
                    z.sets[v] = std::move(elems);
                }
            }
            return z;
        }
    }
    return std::nullopt;
}

}  // namespace slidset
