/* eval.cpp -- bounded evaluation.  Sets are bitmasks over the window.
 * Quantifier blocks are evaluated with conjunct/disjunct scheduling: each
 * conjunct is checked as soon as the last block variable it mentions has a
 * value, which prunes the search long before the innermost loop.  Membership
 * guards additionally restrict an integer variable's range to the guarding
 * set's elements. */

#include "slidset/eval.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>

namespace slidset {

namespace {

class Evaluator {
  public:
    explicit Evaluator(const BoundedModel& m) : lo_(m.lo), hi_(m.hi) {
        if (m.hi < m.lo) throw std::out_of_range("empty evaluation window");
        long long width = m.hi - m.lo + 1;
        if (width > 62) throw std::out_of_range("evaluation window wider than 62 values");
        width_ = static_cast<int>(width);
        for (auto& [n, v] : m.ints) ints_[n] = v;
        for (auto& [n, elems] : m.sets) {
            uint64_t mask = 0;
            for (long long e : elems) {
                if (e < lo_ || e > hi_)
                    throw std::out_of_range("set element outside evaluation window: " + n);
                mask |= 1ull << (e - lo_);
            }
            sets_[n] = mask;
        }
    }

    bool eval(const FormulaRef& f) {
        switch (f->kind) {
            case FKind::True: return true;
            case FKind::False: return false;
            case FKind::IntCmp: {
                auto a = eval_int(f->ilhs), b = eval_int(f->irhs);
                // != is by definition the negation of =, so an undefined
                // operand makes it true; every other atom becomes false.
                if (!a || !b) return f->iop == CmpOp::Ne;
                return cmp(*a, f->iop, *b + f->offset);
            }
            case FKind::SetCmp: {
                auto a = eval_set(f->slhs), b = eval_set(f->srhs);
                if (!a || !b) return f->sop == SetOp::Ne;
                switch (f->sop) {
                    case SetOp::Eq: return *a == *b;
                    case SetOp::SubsetEq: return (*a & ~*b) == 0;
                    case SetOp::SupsetEq: return (*b & ~*a) == 0;
                    case SetOp::Subset: return (*a & ~*b) == 0 && *a != *b;
                    case SetOp::Supset: return (*b & ~*a) == 0 && *a != *b;
                    case SetOp::Ne: return *a != *b;
                }
                return false;
            }
            case FKind::Member: {
                auto e = eval_int(f->ilhs);
                auto s = eval_set(f->slhs);
                if (!e || !s || *e < lo_ || *e > hi_) return false;
                return (*s >> (*e - lo_)) & 1;
            }
            case FKind::CountCmp: {
                auto v = eval_mterm(f->mterm);
                if (!v) return f->mop == CmpOp::Ne;
                return cmp(*v, f->mop, 0);
            }
            case FKind::Divides: {
                auto v = eval_mterm(f->mterm);
                if (!v) return false;
                long long r = (*v - f->residue) % f->modulus;
                return r == 0;
            }
            case FKind::Not: return !eval(f->kids[0]);
            case FKind::And:
                for (auto& k : f->kids)
                    if (!eval(k)) return false;
                return true;
            case FKind::Or:
                for (auto& k : f->kids)
                    if (eval(k)) return true;
                return false;
            case FKind::Implies: return !eval(f->kids[0]) || eval(f->kids[1]);
            case FKind::ExistsInt:
            case FKind::ExistsSet: return eval_block(f, /*exists=*/true);
            case FKind::ForallInt:
            case FKind::ForallSet: return eval_block(f, /*exists=*/false);
        }
        return false;
    }

  private:
    static bool cmp(long long a, CmpOp op, long long b) {
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

    std::optional<long long> eval_int(const IntRef& t) {
        switch (t->kind) {
            case IntKind::Const: return t->value;
            case IntKind::Var: {
                auto it = ints_.find(t->var);
                if (it == ints_.end()) throw UnboundVariable(t->var);
                return it->second;
            }
            case IntKind::Min:
            case IntKind::Max: {
                auto m = eval_set(t->set);
                if (!m || *m == 0) return std::nullopt;
                int bit = t->kind == IntKind::Min ? __builtin_ctzll(*m) : 63 - __builtin_clzll(*m);
                return lo_ + bit;
            }
        }
        return std::nullopt;
    }

    // nullopt marks an undefined set term: one containing min/max of an
    // empty set, or a singleton whose element falls outside the window
    // (not representable; all honest set values live inside the window).
    std::optional<uint64_t> eval_set(const SetRef& t) {
        switch (t->kind) {
            case SetKind::Empty: return 0;
            case SetKind::Var: {
                auto it = sets_.find(t->var);
                if (it == sets_.end()) throw UnboundVariable(t->var);
                return it->second;
            }
            case SetKind::Singleton: {
                auto e = eval_int(t->elem);
                if (!e || *e < lo_ || *e > hi_) return std::nullopt;
                return 1ull << (*e - lo_);
            }
            case SetKind::Union:
            case SetKind::Inter:
            case SetKind::Diff: {
                auto a = eval_set(t->lhs), b = eval_set(t->rhs);
                if (!a || !b) return std::nullopt;
                if (t->kind == SetKind::Union) return *a | *b;
                if (t->kind == SetKind::Inter) return *a & *b;
                return *a & ~*b;
            }
        }
        return 0;
    }

    std::optional<long long> eval_mterm(const MTerm& m) {
        long long sum = m.constant;
        for (auto& [c, base] : m.parts) {
            auto v = eval_int(base);
            if (!v) return std::nullopt;
            sum += c * *v;
        }
        return sum;
    }

    // ---- quantifier blocks -------------------------------------------------

    struct BlockVar {
        std::string name;
        bool isSet;
    };

    // Highest block-variable index occurring free in g, or -1.
    static int level_of(const FormulaRef& g, const std::vector<BlockVar>& vars) {
        const auto& fv = free_vars(g);
        for (int i = static_cast<int>(vars.size()) - 1; i >= 0; i--)
            if (fv.count(vars[i].name)) return i;
        return -1;
    }

    // A membership guard for integer variable `v` usable once the variables
    // up to v's level have values: for an exists block a conjunct v in T,
    // for a forall block a disjunct !(v in T) or !( ... /\ v in T /\ ... ).
    // In the forall case any value outside T satisfies the disjunct outright,
    // so only members of T need to be enumerated.
    static SetRef member_guard(const FormulaRef& g, const std::string& v, bool exists) {
        const FormulaRef* atom = &g;
        if (!exists) {
            if (g->kind != FKind::Not) return nullptr;
            atom = &g->kids[0];
            if ((*atom)->kind == FKind::And) {
                for (auto& k : (*atom)->kids) {
                    if (k->kind == FKind::Member && k->ilhs->kind == IntKind::Var && k->ilhs->var == v) {
                        std::map<std::string, Sort> fv;
                        collect_free_vars(k->slhs, fv);
                        if (!fv.count(v)) return k->slhs;
                    }
                }
                return nullptr;
            }
        }
        if ((*atom)->kind == FKind::Member && (*atom)->ilhs->kind == IntKind::Var && (*atom)->ilhs->var == v) {
            std::map<std::string, Sort> fv;
            collect_free_vars((*atom)->slhs, fv);
            if (!fv.count(v)) return (*atom)->slhs;
        }
        return nullptr;
    }

    bool eval_block(const FormulaRef& f, bool exists) {
        // Collect the maximal prefix of like-polarity quantifiers (both sorts).
        std::vector<BlockVar> vars;
        FormulaRef body = f;
        while (true) {
            FKind k = body->kind;
            bool match = exists ? (k == FKind::ExistsInt || k == FKind::ExistsSet)
                                : (k == FKind::ForallInt || k == FKind::ForallSet);
            if (!match) break;
            vars.push_back({body->qvar, k == FKind::ExistsSet || k == FKind::ForallSet});
            body = body->kids[0];
        }

        // Split the body into schedulable pieces: conjuncts for exists,
        // disjuncts for forall (an implication contributes !lhs and rhs).
        std::vector<FormulaRef> pieces;
        if (exists) {
            if (body->kind == FKind::And)
                pieces = body->kids;
            else
                pieces.push_back(body);
        } else {
            if (body->kind == FKind::Or)
                pieces = body->kids;
            else if (body->kind == FKind::Implies) {
                pieces.push_back(mk_not(body->kids[0]));
                pieces.push_back(body->kids[1]);
            } else
                pieces.push_back(body);
        }

        std::vector<std::vector<FormulaRef>> atLevel(vars.size());
        for (auto& p : pieces) {
            int lv = level_of(p, vars);
            if (lv < 0) {
                // Independent of the block: decides the whole formula early.
                bool v = eval(p);
                if (exists && !v) return false;
                if (!exists && v) return true;
            } else {
                atLevel[lv].push_back(p);
            }
        }

        return loop(0, vars, atLevel, exists);
    }

    bool loop(size_t i, const std::vector<BlockVar>& vars,
              const std::vector<std::vector<FormulaRef>>& atLevel, bool exists) {
        if (i == vars.size()) return exists;  // exists: all conjuncts held; forall: none fired
        const BlockVar& bv = vars[i];

        // Check the pieces scheduled at this level for the current value.
        // exists: all must hold to go deeper; forall: any firing closes the branch.
        auto check = [&](bool& closed) {
            if (exists) {
                for (auto& p : atLevel[i])
                    if (!eval(p)) return false;
                return true;
            }
            for (auto& p : atLevel[i])
                if (eval(p)) {
                    closed = true;
                    return true;
                }
            return true;
        };

        bool result = !exists;
        if (bv.isSet) {
            auto saved = save_set(bv.name);
            uint64_t count = 1ull << width_;
            for (uint64_t mask = 0; mask < count; mask++) {
                sets_[bv.name] = mask;
                bool closed = false;
                bool ok = check(closed);
                if (exists) {
                    if (ok && loop(i + 1, vars, atLevel, exists)) {
                        result = true;
                        break;
                    }
                } else if (!closed && !loop(i + 1, vars, atLevel, exists)) {
                    result = false;
                    break;
                }
            }
            restore_set(bv.name, saved);
        } else {
            auto saved = save_int(bv.name);
            // Membership guards shrink the range to a set's elements.
            std::optional<uint64_t> range;
            for (auto& p : atLevel[i]) {
                if (SetRef g = member_guard(p, bv.name, exists)) {
                    auto s = eval_set(g);
                    // An undefined guard set admits no members at all.
                    range = s ? *s : 0;
                    break;
                }
            }
            auto visit = [&](long long v) {
                ints_[bv.name] = v;
                bool closed = false;
                bool ok = check(closed);
                if (exists) {
                    if (ok && loop(i + 1, vars, atLevel, exists)) {
                        result = true;
                        return false;
                    }
                } else if (!closed && !loop(i + 1, vars, atLevel, exists)) {
                    result = false;
                    return false;
                }
                return true;
            };
            if (range) {
                uint64_t m = *range;
                while (m) {
                    int bit = __builtin_ctzll(m);
                    m &= m - 1;
                    if (!visit(lo_ + bit)) break;
                }
            } else {
                for (long long v = lo_; v <= hi_; v++)
                    if (!visit(v)) break;
            }
            restore_int(bv.name, saved);
        }
        return result;
    }

    std::optional<long long> save_int(const std::string& n) {
        auto it = ints_.find(n);
        return it == ints_.end() ? std::nullopt : std::optional<long long>(it->second);
    }
    void restore_int(const std::string& n, std::optional<long long> old) {
        if (old)
            ints_[n] = *old;
        else
            ints_.erase(n);
    }
    std::optional<uint64_t> save_set(const std::string& n) {
        auto it = sets_.find(n);
        return it == sets_.end() ? std::nullopt : std::optional<uint64_t>(it->second);
    }
    void restore_set(const std::string& n, std::optional<uint64_t> old) {
        if (old)
            sets_[n] = *old;
        else
            sets_.erase(n);
    }

    long long lo_, hi_;
    int width_;
    std::unordered_map<std::string, long long> ints_;
    std::unordered_map<std::string, uint64_t> sets_;
};

}  // namespace

bool eval_bounded(const FormulaRef& f, const BoundedModel& m) {
    Evaluator ev(m);
    return ev.eval(f);
}

}  // namespace slidset
