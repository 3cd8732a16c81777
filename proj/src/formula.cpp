/* formula.cpp -- construction, printing, free variables, substitution and
 * desugaring for the formula AST. */

#include "slidset/formula.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace slidset {

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

IntRef iconst(long long v) {
    auto t = std::make_shared<IntTerm>();
    t->kind = IntKind::Const;
    t->value = v;
    return t;
}

IntRef ivar(const std::string& name) {
    auto t = std::make_shared<IntTerm>();
    t->kind = IntKind::Var;
    t->var = name;
    return t;
}

IntRef tmin(SetRef s) {
    auto t = std::make_shared<IntTerm>();
    t->kind = IntKind::Min;
    t->set = std::move(s);
    return t;
}

IntRef tmax(SetRef s) {
    auto t = std::make_shared<IntTerm>();
    t->kind = IntKind::Max;
    t->set = std::move(s);
    return t;
}

IntRef tmin(const std::string& setVar) { return tmin(svar(setVar)); }
IntRef tmax(const std::string& setVar) { return tmax(svar(setVar)); }

SetRef sempty() {
    auto t = std::make_shared<SetTerm>();
    t->kind = SetKind::Empty;
    return t;
}

SetRef svar(const std::string& name) {
    auto t = std::make_shared<SetTerm>();
    t->kind = SetKind::Var;
    t->var = name;
    return t;
}

SetRef ssingle(IntRef elem) {
    auto t = std::make_shared<SetTerm>();
    t->kind = SetKind::Singleton;
    t->elem = std::move(elem);
    return t;
}

static SetRef sbin(SetKind k, SetRef a, SetRef b) {
    auto t = std::make_shared<SetTerm>();
    t->kind = k;
    t->lhs = std::move(a);
    t->rhs = std::move(b);
    return t;
}

SetRef sunion(SetRef a, SetRef b) { return sbin(SetKind::Union, std::move(a), std::move(b)); }
SetRef sinter(SetRef a, SetRef b) { return sbin(SetKind::Inter, std::move(a), std::move(b)); }
SetRef sdiff(SetRef a, SetRef b) { return sbin(SetKind::Diff, std::move(a), std::move(b)); }

static std::shared_ptr<Formula> mk(FKind k) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    return f;
}

FormulaRef ftrue() {
    static FormulaRef t = mk(FKind::True);
    return t;
}

FormulaRef ffalse() {
    static FormulaRef f = mk(FKind::False);
    return f;
}

FormulaRef int_cmp(IntRef lhs, CmpOp op, IntRef rhs, long long offset) {
    auto f = mk(FKind::IntCmp);
    f->ilhs = std::move(lhs);
    f->irhs = std::move(rhs);
    f->iop = op;
    f->offset = offset;
    return f;
}

FormulaRef set_cmp(SetRef lhs, SetOp op, SetRef rhs) {
    auto f = mk(FKind::SetCmp);
    f->slhs = std::move(lhs);
    f->srhs = std::move(rhs);
    f->sop = op;
    return f;
}

FormulaRef member(IntRef elem, SetRef set) {
    auto f = mk(FKind::Member);
    f->ilhs = std::move(elem);
    f->slhs = std::move(set);
    return f;
}

FormulaRef count_cmp(MTerm m, CmpOp op) {
    auto f = mk(FKind::CountCmp);
    f->mterm = std::move(m);
    f->mop = op;
    return f;
}

FormulaRef divides(MTerm m, long long modulus, long long residue) {
    if (modulus <= 0) throw SortError("divisibility atom needs a positive modulus");
    auto f = mk(FKind::Divides);
    f->mterm = std::move(m);
    f->modulus = modulus;
    f->residue = residue;
    return f;
}

FormulaRef mk_not(FormulaRef g) {
    auto f = mk(FKind::Not);
    f->kids.push_back(std::move(g));
    return f;
}

FormulaRef mk_and(std::vector<FormulaRef> kids) {
    if (kids.empty()) return ftrue();
    if (kids.size() == 1) return kids[0];
    auto f = mk(FKind::And);
    // Flatten nested conjunctions so printing and traversal stay shallow.
    for (auto& k : kids) {
        if (k->kind == FKind::And)
            f->kids.insert(f->kids.end(), k->kids.begin(), k->kids.end());
        else
            f->kids.push_back(std::move(k));
    }
    return f;
}

FormulaRef mk_and(FormulaRef a, FormulaRef b) { return mk_and(std::vector<FormulaRef>{std::move(a), std::move(b)}); }

FormulaRef mk_or(std::vector<FormulaRef> kids) {
    if (kids.empty()) return ffalse();
    if (kids.size() == 1) return kids[0];
    auto f = mk(FKind::Or);
    for (auto& k : kids) {
        if (k->kind == FKind::Or)
            f->kids.insert(f->kids.end(), k->kids.begin(), k->kids.end());
        else
            f->kids.push_back(std::move(k));
    }
    return f;
}

FormulaRef mk_or(FormulaRef a, FormulaRef b) { return mk_or(std::vector<FormulaRef>{std::move(a), std::move(b)}); }

FormulaRef mk_implies(FormulaRef a, FormulaRef b) {
    auto f = mk(FKind::Implies);
    f->kids.push_back(std::move(a));
    f->kids.push_back(std::move(b));
    return f;
}

static FormulaRef quant(FKind k, const std::string& var, FormulaRef body) {
    auto f = mk(k);
    f->qvar = var;
    f->kids.push_back(std::move(body));
    return f;
}

FormulaRef forall_int(const std::string& var, FormulaRef body) { return quant(FKind::ForallInt, var, std::move(body)); }
FormulaRef exists_int(const std::string& var, FormulaRef body) { return quant(FKind::ExistsInt, var, std::move(body)); }
FormulaRef forall_set(const std::string& var, FormulaRef body) { return quant(FKind::ForallSet, var, std::move(body)); }
FormulaRef exists_set(const std::string& var, FormulaRef body) { return quant(FKind::ExistsSet, var, std::move(body)); }

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

static void add_var(std::map<std::string, Sort>& out, const std::string& name, Sort sort) {
    auto [it, inserted] = out.emplace(name, sort);
    if (!inserted && it->second != sort)
        throw SortError("variable used at both sorts: " + name);
}

void collect_free_vars(const IntRef& t, std::map<std::string, Sort>& out) {
    switch (t->kind) {
        case IntKind::Const: return;
        case IntKind::Var: add_var(out, t->var, Sort::Int); return;
        case IntKind::Min:
        case IntKind::Max: collect_free_vars(t->set, out); return;
    }
}

void collect_free_vars(const SetRef& t, std::map<std::string, Sort>& out) {
    switch (t->kind) {
        case SetKind::Empty: return;
        case SetKind::Var: add_var(out, t->var, Sort::Set); return;
        case SetKind::Singleton: collect_free_vars(t->elem, out); return;
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff:
            collect_free_vars(t->lhs, out);
            collect_free_vars(t->rhs, out);
            return;
    }
}

static void collect_free_vars(const FormulaRef& f, std::map<std::string, Sort>& out) {
    switch (f->kind) {
        case FKind::True:
        case FKind::False: return;
        case FKind::IntCmp:
            collect_free_vars(f->ilhs, out);
            collect_free_vars(f->irhs, out);
            return;
        case FKind::SetCmp:
            collect_free_vars(f->slhs, out);
            collect_free_vars(f->srhs, out);
            return;
        case FKind::Member:
            collect_free_vars(f->ilhs, out);
            collect_free_vars(f->slhs, out);
            return;
        case FKind::CountCmp:
        case FKind::Divides:
            for (auto& [c, base] : f->mterm.parts) {
                (void)c;
                collect_free_vars(base, out);
            }
            return;
        case FKind::Not:
        case FKind::And:
        case FKind::Or:
        case FKind::Implies:
            for (auto& k : f->kids) collect_free_vars(k, out);
            return;
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: {
            std::map<std::string, Sort> inner(free_vars(f->kids[0]));
            inner.erase(f->qvar);
            for (auto& [n, s] : inner) add_var(out, n, s);
            return;
        }
    }
}

const std::map<std::string, Sort>& free_vars(const FormulaRef& f) {
    if (!f->fv_cache) {
        std::map<std::string, Sort> out;
        collect_free_vars(f, out);
        f->fv_cache = std::make_shared<const std::map<std::string, Sort>>(std::move(out));
    }
    return *f->fv_cache;
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

bool equal(const IntRef& a, const IntRef& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case IntKind::Const: return a->value == b->value;
        case IntKind::Var: return a->var == b->var;
        case IntKind::Min:
        case IntKind::Max: return equal(a->set, b->set);
    }
    return false;
}

bool equal(const SetRef& a, const SetRef& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case SetKind::Empty: return true;
        case SetKind::Var: return a->var == b->var;
        case SetKind::Singleton: return equal(a->elem, b->elem);
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
    }
    return false;
}

static bool equal(const MTerm& a, const MTerm& b) {
    if (a.constant != b.constant || a.parts.size() != b.parts.size()) return false;
    for (size_t i = 0; i < a.parts.size(); i++)
        if (a.parts[i].first != b.parts[i].first || !equal(a.parts[i].second, b.parts[i].second)) return false;
    return true;
}

bool equal(const FormulaRef& a, const FormulaRef& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case FKind::True:
        case FKind::False: return true;
        case FKind::IntCmp:
            return a->iop == b->iop && a->offset == b->offset && equal(a->ilhs, b->ilhs) && equal(a->irhs, b->irhs);
        case FKind::SetCmp: return a->sop == b->sop && equal(a->slhs, b->slhs) && equal(a->srhs, b->srhs);
        case FKind::Member: return equal(a->ilhs, b->ilhs) && equal(a->slhs, b->slhs);
        case FKind::CountCmp: return a->mop == b->mop && equal(a->mterm, b->mterm);
        case FKind::Divides:
            return a->modulus == b->modulus && a->residue == b->residue && equal(a->mterm, b->mterm);
        default: break;
    }
    if (a->qvar != b->qvar || a->kids.size() != b->kids.size()) return false;
    for (size_t i = 0; i < a->kids.size(); i++)
        if (!equal(a->kids[i], b->kids[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Printing (surface syntax)
// ---------------------------------------------------------------------------

std::string to_string(const SetRef& t);

std::string to_string(const IntRef& t) {
    switch (t->kind) {
        case IntKind::Const: return std::to_string(t->value);
        case IntKind::Var: return t->var;
        case IntKind::Min: return "min(" + to_string(t->set) + ")";
        case IntKind::Max: return "max(" + to_string(t->set) + ")";
    }
    return "?";
}

static std::string set_str(const SetRef& t, SetKind parent, bool leftChild) {
    std::string body;
    bool binary = false;
    switch (t->kind) {
        case SetKind::Empty: return "{}";
        case SetKind::Var: return t->var;
        case SetKind::Singleton: return "{" + to_string(t->elem) + "}";
        case SetKind::Union:
            body = set_str(t->lhs, t->kind, true) + " u " + set_str(t->rhs, t->kind, false);
            binary = true;
            break;
        case SetKind::Inter:
            body = set_str(t->lhs, t->kind, true) + " n " + set_str(t->rhs, t->kind, false);
            binary = true;
            break;
        case SetKind::Diff:
            body = set_str(t->lhs, t->kind, true) + " \\ " + set_str(t->rhs, t->kind, false);
            binary = true;
            break;
    }
    // Binary set operators are left-associative at equal precedence; keep a
    // left chain of the same operator bare, parenthesize everything else.
    bool bare = parent == SetKind::Var || (binary && parent == t->kind && leftChild);
    return (binary && !bare) ? "(" + body + ")" : body;
}

std::string to_string(const SetRef& t) { return set_str(t, SetKind::Var, false); }

std::string to_string(const MTerm& m) {
    std::ostringstream os;
    bool first = true;
    for (auto& [c, base] : m.parts) {
        if (c == 0) continue;
        long long a = c;
        if (first) {
            if (a < 0) {
                os << "-";
                a = -a;
            }
        } else {
            os << (a < 0 ? " - " : " + ");
            if (a < 0) a = -a;
        }
        if (a != 1) os << a << "*";
        os << to_string(base);
        first = false;
    }
    if (first) {
        os << m.constant;
    } else if (m.constant != 0) {
        os << (m.constant < 0 ? " - " : " + ") << std::llabs(m.constant);
    }
    return os.str();
}

static const char* cmp_str(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Ne: return "!=";
    }
    return "?";
}

static const char* setop_str(SetOp op) {
    switch (op) {
        case SetOp::Eq: return "=";
        case SetOp::SubsetEq: return "sube";
        case SetOp::SupsetEq: return "supe";
        case SetOp::Subset: return "sub";
        case SetOp::Supset: return "sup";
        case SetOp::Ne: return "!=";
    }
    return "?";
}

// Precedence: Implies 1 (right assoc), Or 2, And 3, Not/quantifier 4, atom 5.
static int prec(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::Implies: return 1;
        case FKind::Or: return 2;
        case FKind::And: return 3;
        case FKind::Not: return 4;
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: return 0;  // body extends right; always wrap as a child
        default: return 5;
    }
}

static std::string fml_str(const FormulaRef& f, int minPrec) {
    std::string body;
    switch (f->kind) {
        case FKind::True: body = "true"; break;
        case FKind::False: body = "false"; break;
        case FKind::IntCmp: {
            body = to_string(f->ilhs) + " " + cmp_str(f->iop) + " " + to_string(f->irhs);
            if (f->offset > 0) body += " + " + std::to_string(f->offset);
            if (f->offset < 0) body += " - " + std::to_string(-f->offset);
            break;
        }
        case FKind::SetCmp:
            body = to_string(f->slhs) + " " + setop_str(f->sop) + " " + to_string(f->srhs);
            break;
        case FKind::Member: body = to_string(f->ilhs) + " in " + to_string(f->slhs); break;
        case FKind::CountCmp: body = to_string(f->mterm) + " " + cmp_str(f->mop) + " 0"; break;
        case FKind::Divides:
            body = "(" + to_string(f->mterm) + ") mod " + std::to_string(f->modulus) + " = " +
                   std::to_string(f->residue);
            break;
        case FKind::Not: body = "!" + fml_str(f->kids[0], 4); break;
        case FKind::And: {
            for (size_t i = 0; i < f->kids.size(); i++)
                body += (i ? " /\\ " : "") + fml_str(f->kids[i], 4);
            break;
        }
        case FKind::Or: {
            for (size_t i = 0; i < f->kids.size(); i++)
                body += (i ? " \\/ " : "") + fml_str(f->kids[i], 3);
            break;
        }
        case FKind::Implies:
            body = fml_str(f->kids[0], 2) + " -> " + fml_str(f->kids[1], 1);
            break;
        case FKind::ForallInt: body = "forall int " + f->qvar + ". " + fml_str(f->kids[0], 0); break;
        case FKind::ExistsInt: body = "exists int " + f->qvar + ". " + fml_str(f->kids[0], 0); break;
        case FKind::ForallSet: body = "forall set " + f->qvar + ". " + fml_str(f->kids[0], 0); break;
        case FKind::ExistsSet: body = "exists set " + f->qvar + ". " + fml_str(f->kids[0], 0); break;
    }
    return prec(f) < minPrec ? "(" + body + ")" : body;
}

std::string to_string(const FormulaRef& f) { return fml_str(f, 0); }

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

std::string fresh_name(const std::string& base, const std::map<std::string, Sort>& avoid) {
    if (!avoid.count(base)) return base;
    for (int i = 1;; i++) {
        std::string cand = base + "'" + std::to_string(i);
        if (!avoid.count(cand)) return cand;
    }
}

IntRef substitute(const IntRef& t, const Subst& s) {
    switch (t->kind) {
        case IntKind::Const: return t;
        case IntKind::Var: {
            auto it = s.ints.find(t->var);
            return it == s.ints.end() ? t : it->second;
        }
        case IntKind::Min:
        case IntKind::Max: {
            bool isMin = t->kind == IntKind::Min;
            if (t->set->kind == SetKind::Var) {
                auto it = s.anchors.find({isMin, t->set->var});
                if (it != s.anchors.end()) return it->second;
            }
            SetRef inner = substitute(t->set, s);
            if (inner.get() == t->set.get()) return t;
            return isMin ? tmin(inner) : tmax(inner);
        }
    }
    return t;
}

SetRef substitute(const SetRef& t, const Subst& s) {
    switch (t->kind) {
        case SetKind::Empty: return t;
        case SetKind::Var: {
            auto it = s.sets.find(t->var);
            return it == s.sets.end() ? t : it->second;
        }
        case SetKind::Singleton: {
            IntRef e = substitute(t->elem, s);
            return e.get() == t->elem.get() ? t : ssingle(e);
        }
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff: {
            SetRef a = substitute(t->lhs, s), b = substitute(t->rhs, s);
            if (a.get() == t->lhs.get() && b.get() == t->rhs.get()) return t;
            return sbin(t->kind, a, b);
        }
    }
    return t;
}

static MTerm substitute(const MTerm& m, const Subst& s) {
    // Substituting a constant for a base folds into the constant part;
    // substituting a non-atomic term keeps it as the part's base.
    MTerm out;
    out.constant = m.constant;
    for (auto& [c, base] : m.parts) {
        IntRef nb = substitute(base, s);
        if (nb->kind == IntKind::Const)
            out.constant += c * nb->value;
        else
            out.parts.emplace_back(c, nb);
    }
    return out;
}

static void subst_range_fv(const Subst& s, std::map<std::string, Sort>& out) {
    for (auto& [n, t] : s.ints) {
        (void)n;
        collect_free_vars(t, out);
    }
    for (auto& [n, t] : s.sets) {
        (void)n;
        collect_free_vars(t, out);
    }
    for (auto& [k, t] : s.anchors) {
        (void)k;
        collect_free_vars(t, out);
    }
}

FormulaRef substitute(const FormulaRef& f, const Subst& s) {
    if (s.empty()) return f;
    switch (f->kind) {
        case FKind::True:
        case FKind::False: return f;
        case FKind::IntCmp: {
            IntRef a = substitute(f->ilhs, s), b = substitute(f->irhs, s);
            if (a.get() == f->ilhs.get() && b.get() == f->irhs.get()) return f;
            return int_cmp(a, f->iop, b, f->offset);
        }
        case FKind::SetCmp: {
            SetRef a = substitute(f->slhs, s), b = substitute(f->srhs, s);
            if (a.get() == f->slhs.get() && b.get() == f->srhs.get()) return f;
            return set_cmp(a, f->sop, b);
        }
        case FKind::Member: {
            IntRef e = substitute(f->ilhs, s);
            SetRef t = substitute(f->slhs, s);
            if (e.get() == f->ilhs.get() && t.get() == f->slhs.get()) return f;
            return member(e, t);
        }
        case FKind::CountCmp: return count_cmp(substitute(f->mterm, s), f->mop);
        case FKind::Divides: return divides(substitute(f->mterm, s), f->modulus, f->residue);
        case FKind::Not: return mk_not(substitute(f->kids[0], s));
        case FKind::And:
        case FKind::Or:
        case FKind::Implies: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            bool changed = false;
            for (auto& k : f->kids) {
                kids.push_back(substitute(k, s));
                changed |= kids.back().get() != k.get();
            }
            if (!changed) return f;
            if (f->kind == FKind::And) return mk_and(std::move(kids));
            if (f->kind == FKind::Or) return mk_or(std::move(kids));
            return mk_implies(kids[0], kids[1]);
        }
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: {
            bool setSort = f->kind == FKind::ForallSet || f->kind == FKind::ExistsSet;
            // The bound variable shadows any mapping for its own name.
            Subst inner = s;
            if (setSort) {
                inner.sets.erase(f->qvar);
                inner.anchors.erase({true, f->qvar});
                inner.anchors.erase({false, f->qvar});
            } else {
                inner.ints.erase(f->qvar);
            }
            if (inner.empty()) return f;
            // Restrict to mappings whose domain actually occurs free in the
            // body: avoids spurious renaming and keeps results shared.
            const auto& bodyFv = free_vars(f->kids[0]);
            Subst used;
            for (auto& [n, t] : inner.ints)
                if (bodyFv.count(n)) used.ints.emplace(n, t);
            for (auto& [n, t] : inner.sets)
                if (bodyFv.count(n)) used.sets.emplace(n, t);
            for (auto& [k, t] : inner.anchors)
                if (bodyFv.count(k.second)) used.anchors.emplace(k, t);
            if (used.empty()) return f;

            std::map<std::string, Sort> rangeFv;
            subst_range_fv(used, rangeFv);
            std::string var = f->qvar;
            FormulaRef body = f->kids[0];
            if (rangeFv.count(var)) {
                // Capture: rename the bound variable before substituting.
                std::map<std::string, Sort> avoid = rangeFv;
                for (auto& [n, so] : bodyFv) avoid.emplace(n, so);
                std::string nv = fresh_name(var, avoid);
                Subst ren;
                if (setSort)
                    ren.sets.emplace(var, svar(nv));
                else
                    ren.ints.emplace(var, ivar(nv));
                body = substitute(body, ren);
                var = nv;
            }
            return quant(f->kind, var, substitute(body, used));
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Desugaring
// ---------------------------------------------------------------------------

FormulaRef desugar(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::True:
        case FKind::False:
        case FKind::Divides: return f;
        case FKind::IntCmp:
            switch (f->iop) {
                case CmpOp::Eq:
                case CmpOp::Le:
                case CmpOp::Ge: return f;
                case CmpOp::Lt: return int_cmp(f->ilhs, CmpOp::Le, f->irhs, f->offset - 1);
                case CmpOp::Gt: return int_cmp(f->ilhs, CmpOp::Ge, f->irhs, f->offset + 1);
                case CmpOp::Ne: return mk_not(int_cmp(f->ilhs, CmpOp::Eq, f->irhs, f->offset));
            }
            return f;
        case FKind::SetCmp:
            switch (f->sop) {
                case SetOp::Eq:
                case SetOp::SubsetEq: return f;
                case SetOp::SupsetEq: return set_cmp(f->srhs, SetOp::SubsetEq, f->slhs);
                case SetOp::Subset:
                    return mk_and(set_cmp(f->slhs, SetOp::SubsetEq, f->srhs),
                                  mk_not(set_cmp(f->slhs, SetOp::Eq, f->srhs)));
                case SetOp::Supset:
                    return mk_and(set_cmp(f->srhs, SetOp::SubsetEq, f->slhs),
                                  mk_not(set_cmp(f->slhs, SetOp::Eq, f->srhs)));
                case SetOp::Ne: return mk_not(set_cmp(f->slhs, SetOp::Eq, f->srhs));
            }
            return f;
        case FKind::Member: return set_cmp(ssingle(f->ilhs), SetOp::SubsetEq, f->slhs);
        case FKind::CountCmp:
            switch (f->mop) {
                case CmpOp::Eq:
                case CmpOp::Le:
                case CmpOp::Ge: return f;
                case CmpOp::Lt: {
                    MTerm m = f->mterm;
                    m.constant += 1;  // m < 0  <=>  m + 1 <= 0
                    return count_cmp(std::move(m), CmpOp::Le);
                }
                case CmpOp::Gt: {
                    MTerm m = f->mterm;
                    m.constant -= 1;  // m > 0  <=>  m - 1 >= 0
                    return count_cmp(std::move(m), CmpOp::Ge);
                }
                case CmpOp::Ne: return mk_not(count_cmp(f->mterm, CmpOp::Eq));
            }
            return f;
        case FKind::Not: {
            FormulaRef k = desugar(f->kids[0]);
            return k.get() == f->kids[0].get() ? f : mk_not(k);
        }
        case FKind::And: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            bool changed = false;
            for (auto& k : f->kids) {
                kids.push_back(desugar(k));
                changed |= kids.back().get() != k.get();
            }
            return changed ? mk_and(std::move(kids)) : f;
        }
        case FKind::Or: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(mk_not(desugar(k)));
            return mk_not(mk_and(std::move(kids)));
        }
        case FKind::Implies:
            return mk_not(mk_and(desugar(f->kids[0]), mk_not(desugar(f->kids[1]))));
        case FKind::ForallInt: return forall_int(f->qvar, desugar(f->kids[0]));
        case FKind::ForallSet: return forall_set(f->qvar, desugar(f->kids[0]));
        case FKind::ExistsInt: return mk_not(forall_int(f->qvar, mk_not(desugar(f->kids[0]))));
        case FKind::ExistsSet: return mk_not(forall_set(f->qvar, mk_not(desugar(f->kids[0]))));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Negation normal form
// ---------------------------------------------------------------------------

static FormulaRef nnf_neg(const FormulaRef& f);

FormulaRef nnf(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::Not: return nnf_neg(f->kids[0]);
        case FKind::And:
        case FKind::Or: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(nnf(k));
            return f->kind == FKind::And ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
        case FKind::Implies: return mk_or(nnf_neg(f->kids[0]), nnf(f->kids[1]));
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: return quant(f->kind, f->qvar, nnf(f->kids[0]));
        default: return f;
    }
}

static FormulaRef nnf_neg(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::True: return ffalse();
        case FKind::False: return ftrue();
        case FKind::Not: return nnf(f->kids[0]);
        case FKind::And: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(nnf_neg(k));
            return mk_or(std::move(kids));
        }
        case FKind::Or: {
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(nnf_neg(k));
            return mk_and(std::move(kids));
        }
        case FKind::Implies: return mk_and(nnf(f->kids[0]), nnf_neg(f->kids[1]));
        case FKind::ForallInt: return exists_int(f->qvar, nnf_neg(f->kids[0]));
        case FKind::ExistsInt: return forall_int(f->qvar, nnf_neg(f->kids[0]));
        case FKind::ForallSet: return exists_set(f->qvar, nnf_neg(f->kids[0]));
        case FKind::ExistsSet: return forall_set(f->qvar, nnf_neg(f->kids[0]));
        default: return mk_not(f);  // atoms keep their negation
    }
}

// ---------------------------------------------------------------------------
// Constant folding
// ---------------------------------------------------------------------------

namespace {

// Ground-term evaluation over unbounded integers.  The outer optional is
// empty when the term mentions a variable (not foldable); the inner optional
// is empty when the term is ground but undefined (min/max of the empty set),
// which makes the enclosing atom false -- except for the derived forms !=,
// which behave as the negation of = and so become true.
using GInt = std::optional<std::optional<long long>>;
using GSet = std::optional<std::optional<std::set<long long>>>;

GSet ground_set(const SetRef& t);

GInt ground_int(const IntRef& t) {
    switch (t->kind) {
        case IntKind::Const: return {{t->value}};
        case IntKind::Var: return std::nullopt;
        case IntKind::Min:
        case IntKind::Max: {
            GSet s = ground_set(t->set);
            if (!s) return std::nullopt;
            if (!*s || (*s)->empty()) return {std::optional<long long>{}};
            return {{t->kind == IntKind::Min ? *(*s)->begin() : *(*s)->rbegin()}};
        }
    }
    return std::nullopt;
}

GSet ground_set(const SetRef& t) {
    switch (t->kind) {
        case SetKind::Empty: return {{std::set<long long>{}}};
        case SetKind::Var: return std::nullopt;
        case SetKind::Singleton: {
            GInt e = ground_int(t->elem);
            if (!e) return std::nullopt;
            if (!*e) return {std::optional<std::set<long long>>{}};
            return {{std::set<long long>{**e}}};
        }
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff: {
            GSet a = ground_set(t->lhs), b = ground_set(t->rhs);
            if (!a || !b) return std::nullopt;
            if (!*a || !*b) return {std::optional<std::set<long long>>{}};
            std::set<long long> out;
            if (t->kind == SetKind::Union) {
                out = **a;
                out.insert((*b)->begin(), (*b)->end());
            } else if (t->kind == SetKind::Inter) {
                for (long long v : **a)
                    if ((*b)->count(v)) out.insert(v);
            } else {
                for (long long v : **a)
                    if (!(*b)->count(v)) out.insert(v);
            }
            return {{std::move(out)}};
        }
    }
    return std::nullopt;
}

bool fold_cmp(long long a, CmpOp op, long long b) {
    switch (op) {
        case CmpOp::Eq: return a == b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Ge: return a >= b;
        case CmpOp::Lt: return a < b;
        case CmpOp::Gt: return a > b;
        case CmpOp::Ne: return a != b;
    }
    return false;
}

// Folds a ground atom to True/False; returns nullptr when some operand
// mentions a variable.
FormulaRef fold_atom(const FormulaRef& f) {
    auto verdict = [](bool b) { return b ? ftrue() : ffalse(); };
    switch (f->kind) {
        case FKind::IntCmp: {
            GInt a = ground_int(f->ilhs), b = ground_int(f->irhs);
            if (!a || !b) return nullptr;
            if (!*a || !*b) return verdict(f->iop == CmpOp::Ne);
            return verdict(fold_cmp(**a, f->iop, **b + f->offset));
        }
        case FKind::SetCmp: {
            GSet a = ground_set(f->slhs), b = ground_set(f->srhs);
            if (!a || !b) return nullptr;
            if (!*a || !*b) return verdict(f->sop == SetOp::Ne);
            auto sub = [](const std::set<long long>& x, const std::set<long long>& y) {
                return std::includes(y.begin(), y.end(), x.begin(), x.end());
            };
            switch (f->sop) {
                case SetOp::Eq: return verdict(**a == **b);
                case SetOp::SubsetEq: return verdict(sub(**a, **b));
                case SetOp::SupsetEq: return verdict(sub(**b, **a));
                case SetOp::Subset: return verdict(sub(**a, **b) && **a != **b);
                case SetOp::Supset: return verdict(sub(**b, **a) && **a != **b);
                case SetOp::Ne: return verdict(**a != **b);
            }
            return nullptr;
        }
        case FKind::Member: {
            GInt e = ground_int(f->ilhs);
            GSet s = ground_set(f->slhs);
            if (!e || !s) return nullptr;
            if (!*e || !*s) return ffalse();
            return verdict((*s)->count(**e) != 0);
        }
        case FKind::CountCmp: {
            long long sum = f->mterm.constant;
            for (auto& [c, base] : f->mterm.parts) {
                GInt v = ground_int(base);
                if (!v) return nullptr;
                if (!*v) return verdict(f->mop == CmpOp::Ne);
                sum += c * **v;
            }
            return verdict(fold_cmp(sum, f->mop, 0));
        }
        case FKind::Divides: {
            long long sum = f->mterm.constant;
            for (auto& [c, base] : f->mterm.parts) {
                GInt v = ground_int(base);
                if (!v) return nullptr;
                if (!*v) return ffalse();
                sum += c * **v;
            }
            return verdict((sum - f->residue) % f->modulus == 0);
        }
        default: return nullptr;
    }
}

}  // namespace

FormulaRef simplify(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::True:
        case FKind::False: return f;
        case FKind::IntCmp:
        case FKind::SetCmp:
        case FKind::Member:
        case FKind::CountCmp:
        case FKind::Divides: {
            FormulaRef g = fold_atom(f);
            return g ? g : f;
        }
        case FKind::Not: {
            FormulaRef k = simplify(f->kids[0]);
            if (k->kind == FKind::True) return ffalse();
            if (k->kind == FKind::False) return ftrue();
            return k == f->kids[0] ? f : mk_not(k);
        }
        case FKind::And:
        case FKind::Or: {
            bool isAnd = f->kind == FKind::And;
            std::vector<FormulaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) {
                FormulaRef s = simplify(k);
                if (s->kind == (isAnd ? FKind::False : FKind::True))
                    return isAnd ? ffalse() : ftrue();
                if (s->kind == (isAnd ? FKind::True : FKind::False)) continue;
                kids.push_back(std::move(s));
            }
            return isAnd ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
        case FKind::Implies: {
            FormulaRef a = simplify(f->kids[0]), b = simplify(f->kids[1]);
            if (a->kind == FKind::False || b->kind == FKind::True) return ftrue();
            if (a->kind == FKind::True) return b;
            if (b->kind == FKind::False) return mk_not(a);
            return mk_implies(a, b);
        }
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: {
            FormulaRef body = simplify(f->kids[0]);
            // Both integer and set domains are nonempty, so a constant body
            // passes straight through the quantifier.
            if (body->kind == FKind::True || body->kind == FKind::False) return body;
            if (!free_vars(body).count(f->qvar)) return body;
            if (body == f->kids[0]) return f;
            switch (f->kind) {
                case FKind::ForallInt: return forall_int(f->qvar, body);
                case FKind::ExistsInt: return exists_int(f->qvar, body);
                case FKind::ForallSet: return forall_set(f->qvar, body);
                default: return exists_set(f->qvar, body);
            }
        }
    }
    return f;
}

}  // namespace slidset
