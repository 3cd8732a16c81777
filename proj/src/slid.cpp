/* slid.cpp -- separation-logic formulas with linearly compositional
 * inductive predicates: validation, precise fuel-bounded semantics,
 * unfolding formulas, the allocation abstraction, and check_sat. */

#include "slidset/slid.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace slidset {

namespace {

using IntSet = std::set<long long>;

// ---------------------------------------------------------------------------
// Assignments
// ---------------------------------------------------------------------------

long long as_scal(const std::map<std::string, Value>& a, const std::string& n) {
    auto it = a.find(n);
    if (it == a.end()) throw UnboundVariable(n);
    if (auto* p = std::get_if<long long>(&it->second)) return *p;
    throw SortError("set-valued variable used as a scalar: " + n);
}

IntSet as_set(const std::map<std::string, Value>& a, const std::string& n) {
    auto it = a.find(n);
    if (it == a.end()) throw UnboundVariable(n);
    if (auto* p = std::get_if<std::vector<long long>>(&it->second))
        return IntSet(p->begin(), p->end());
    throw SortError("scalar variable used as a set: " + n);
}

std::optional<IntSet> eval_sterm(const SetRef& t, const std::map<std::string, Value>& a);

std::optional<long long> eval_iterm(const IntRef& t, const std::map<std::string, Value>& a) {
    switch (t->kind) {
        case IntKind::Const: return t->value;
        case IntKind::Var: return as_scal(a, t->var);
        case IntKind::Min:
        case IntKind::Max: {
            auto s = eval_sterm(t->set, a);
            if (!s || s->empty()) return std::nullopt;
            return t->kind == IntKind::Min ? *s->begin() : *s->rbegin();
        }
    }
    return std::nullopt;
}

std::optional<IntSet> eval_sterm(const SetRef& t, const std::map<std::string, Value>& a) {
    switch (t->kind) {
        case SetKind::Empty: return IntSet{};
        case SetKind::Var: return as_set(a, t->var);
        case SetKind::Singleton: {
            auto e = eval_iterm(t->elem, a);
            if (!e) return std::nullopt;
            return IntSet{*e};
        }
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff: {
            auto l = eval_sterm(t->lhs, a), r = eval_sterm(t->rhs, a);
            if (!l || !r) return std::nullopt;
            IntSet out;
            if (t->kind == SetKind::Union) {
                out = *l;
                out.insert(r->begin(), r->end());
            } else if (t->kind == SetKind::Inter) {
                std::set_intersection(l->begin(), l->end(), r->begin(), r->end(),
                                      std::inserter(out, out.end()));
            } else {
                std::set_difference(l->begin(), l->end(), r->begin(), r->end(),
                                    std::inserter(out, out.end()));
            }
            return out;
        }
    }
    return std::nullopt;
}

bool value_eq(const Value& a, const Value& b) {
    if (a.index() != b.index()) throw SortError("comparing values of different sorts");
    if (auto* p = std::get_if<long long>(&a)) return *p == std::get<long long>(b);
    auto va = std::get<std::vector<long long>>(a), vb = std::get<std::vector<long long>>(b);
    return IntSet(va.begin(), va.end()) == IntSet(vb.begin(), vb.end());
}

// The relation on two concrete sets, checked through its formula rendering.
bool rel_holds(const DbsRelation& r, const IntSet& a, const IntSet& b) {
    long long lo = 0, hi = 0;
    for (long long v : a) lo = std::min(lo, v), hi = std::max(hi, v);
    for (long long v : b) lo = std::min(lo, v), hi = std::max(hi, v);
    auto m = BoundedModel::window(lo - 1, hi + 1);
    m.with_set("S", {a.begin(), a.end()});
    m.with_set("S'", {b.begin(), b.end()});
    return eval_bounded(to_formula(r), m);
}

void collect_consts(const FormulaRef& f, std::vector<long long>& out);

void collect_consts(const IntRef& t, std::vector<long long>& out) {
    switch (t->kind) {
        case IntKind::Const: out.push_back(t->value); break;
        case IntKind::Var: break;
        case IntKind::Min:
        case IntKind::Max: {
            const SetRef& s = t->set;
            if (s->kind == SetKind::Singleton) collect_consts(s->elem, out);
            break;
        }
    }
}

void collect_consts(const SetRef& t, std::vector<long long>& out) {
    switch (t->kind) {
        case SetKind::Singleton: collect_consts(t->elem, out); break;
        case SetKind::Union:
        case SetKind::Inter:
        case SetKind::Diff:
            collect_consts(t->lhs, out);
            collect_consts(t->rhs, out);
            break;
        default: break;
    }
}

void collect_consts(const FormulaRef& f, std::vector<long long>& out) {
    if (f->ilhs) collect_consts(f->ilhs, out);
    if (f->irhs) collect_consts(f->irhs, out);
    if (f->slhs) collect_consts(f->slhs, out);
    if (f->srhs) collect_consts(f->srhs, out);
    for (auto& [c, base] : f->mterm.parts) {
        (void)c;
        collect_consts(base, out);
    }
    for (auto& k : f->kids) collect_consts(k, out);
}

// Evaluation of the data part on the assignment: the window covers the
// set elements, the relevant scalar values, and the constants of Delta.
bool delta_holds(const std::map<std::string, Value>& assign, const FormulaRef& delta) {
    std::vector<long long> hull{0};
    collect_consts(delta, hull);
    BoundedModel m;
    for (auto& [v, s] : free_vars(delta)) {
        if (s == Sort::Int) {
            long long x = as_scal(assign, v);
            m.with_int(v, x);
            hull.push_back(x);
        } else {
            IntSet xs = as_set(assign, v);
            m.with_set(v, {xs.begin(), xs.end()});
            for (long long e : xs) hull.push_back(e);
        }
    }
    auto [lo, hi] = std::minmax_element(hull.begin(), hull.end());
    m.lo = *lo - 1;
    m.hi = *hi + 1;
    return eval_bounded(delta, m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string to_string(Cond c) {
    switch (c) {
        case Cond::Shape: return "shape";
        case Cond::C1: return "C1";
        case Cond::C2: return "C2";
        case Cond::C3: return "C3";
        case Cond::C4: return "C4";
        case Cond::C5: return "C5";
        case Cond::C6: return "C6";
    }
    return "?";
}

std::string to_string(const ValidationReport& r) {
    if (r.ok()) return "ok";
    std::string out;
    for (auto& v : r.violations) {
        if (!out.empty()) out += "; ";
        out += to_string(v.cond) + ": " + v.message;
    }
    return out;
}

static std::string to_string(const PointsTo& rho) {
    std::string out = "(";
    for (size_t i = 0; i < rho.size(); i++) {
        if (i) out += ", ";
        out += rho[i].name + ": " + (rho[i].is_loc ? rho[i].loc : to_string(rho[i].data));
    }
    return out + ")";
}

static std::string to_string(const SpatialAtom& a) {
    switch (a.kind) {
        case SpatialAtom::Emp: return "emp";
        case SpatialAtom::Pto: return a.root + " |-> " + to_string(a.rho);
        case SpatialAtom::Pred: {
            std::string out = a.pred + "(" + a.root;
            for (auto& v : a.src) out += ", " + v.name;
            out += "; " + a.dst_root;
            for (auto& v : a.dst) out += ", " + v.name;
            if (!a.stat.empty()) {
                out += ";";
                for (size_t i = 0; i < a.stat.size(); i++) out += (i ? ", " : " ") + a.stat[i];
            }
            return out + ")";
        }
    }
    return "?";
}

std::string to_string(const SlidFormula& f) {
    std::string out;
    for (auto& p : f.pure) {
        if (!out.empty()) out += " /\\ ";
        out += p.lhs + (p.eq ? " = " : " != ") + p.rhs;
    }
    if (!out.empty()) out += " /\\ ";
    out += to_string(f.data);
    out += " : ";
    for (size_t i = 0; i < f.spatial.size(); i++) {
        if (i) out += " * ";
        out += to_string(f.spatial[i]);
    }
    if (f.spatial.empty()) out += "emp";
    return out;
}

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

SpatialAtom emp_atom() { return SpatialAtom{}; }

SpatialAtom pto_atom(std::string root, PointsTo rho) {
    SpatialAtom a;
    a.kind = SpatialAtom::Pto;
    a.root = std::move(root);
    a.rho = std::move(rho);
    return a;
}

SpatialAtom pred_atom(std::string pred, std::string root, std::vector<TypedVar> src,
                      std::string dstRoot, std::vector<TypedVar> dst,
                      std::vector<std::string> stat) {
    SpatialAtom a;
    a.kind = SpatialAtom::Pred;
    a.pred = std::move(pred);
    a.root = std::move(root);
    a.src = std::move(src);
    a.dst_root = std::move(dstRoot);
    a.dst = std::move(dst);
    a.stat = std::move(stat);
    return a;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate_defs(const InductiveDef& d) {
    ValidationReport rep;
    auto bad = [&](Cond c, std::string m) { rep.violations.push_back({c, std::move(m)}); };

    bool shapeOk = true;
    if (d.src.size() != d.dst.size()) {
        bad(Cond::Shape, "source/destination parameter arity mismatch");
        shapeOk = false;
    } else {
        for (size_t i = 0; i < d.src.size(); i++)
            if (d.src[i].is_loc != d.dst[i].is_loc) {
                bad(Cond::Shape, "source/destination sort mismatch at position " +
                                     std::to_string(i + 1));
                shapeOk = false;
            }
    }
    if (d.rec.size() != d.src.size()) {
        bad(Cond::Shape, "recursive-call arity mismatch");
        shapeOk = false;
    } else {
        for (size_t i = 0; i < d.rec.size(); i++)
            if (d.rec[i].is_loc != d.src[i].is_loc) {
                bad(Cond::Shape,
                    "recursive-call sort mismatch at position " + std::to_string(i + 1));
                shapeOk = false;
            }
    }
    size_t setCount = 0;
    for (auto& v : d.src)
        if (!v.is_loc) setCount++;
    if (d.phi.size() != setCount) {
        bad(Cond::Shape, "expected one data relation per set parameter");
        shapeOk = false;
    }
    {
        std::set<std::string> fn;
        for (auto& f : d.rho)
            if (!fn.insert(f.name).second) bad(Cond::Shape, "duplicate field " + f.name);
    }

    // Occurrences in rho: per-field variable sets, counted across fields.
    std::map<std::string, int> rhoCount;
    std::set<std::string> rhoLocVars;
    for (auto& f : d.rho) {
        if (f.is_loc) {
            rhoCount[f.loc]++;
            rhoLocVars.insert(f.loc);
        } else {
            std::map<std::string, Sort> fv;
            collect_free_vars(f.data, fv);
            for (auto& [v, s] : fv) {
                (void)s;
                rhoCount[v]++;
            }
        }
    }

    // Variables of the data formula: the source and recursive-call set
    // variables at each set position.
    std::set<std::string> phiVars;
    if (shapeOk) {
        for (size_t i = 0; i < d.src.size(); i++)
            if (!d.src[i].is_loc) {
                phiVars.insert(d.src[i].name);
                phiVars.insert(d.rec[i].name);
            }
    }

    // C1: F and beta occur neither in phi nor in rho.
    std::vector<std::string> dstVars{d.dst_root};
    for (auto& v : d.dst) dstVars.push_back(v.name);
    for (auto& v : dstVars) {
        if (phiVars.count(v)) bad(Cond::C1, v + " occurs in the data formula");
        if (rhoCount.count(v)) bad(Cond::C1, v + " occurs in the points-to record");
    }

    // C2 and C3 hold by representation: the data formula is kept as one
    // difference-bound relation per set position.

    // C4: no variable twice in the recursive call, nor twice in rho.
    {
        std::map<std::string, int> cnt;
        cnt[d.rec_root]++;
        for (auto& v : d.rec) cnt[v.name]++;
        cnt[d.dst_root]++;
        for (auto& v : d.dst) cnt[v.name]++;
        for (auto& v : d.stat) cnt[v]++;
        for (auto& [v, c] : cnt)
            if (c > 1) bad(Cond::C4, v + " occurs more than once in the recursive call");
    }
    for (auto& [v, c] : rhoCount)
        if (c > 1) bad(Cond::C4, v + " occurs more than once in the points-to record");

    // C5: static parameters are locations by representation; every location
    // variable of alpha, xi and X occurs in rho.
    {
        std::vector<std::string> need;
        for (auto& v : d.src)
            if (v.is_loc) need.push_back(v.name);
        for (auto& v : d.stat) need.push_back(v);
        for (auto& v : d.ex_locs) need.push_back(v);
        for (auto& v : need)
            if (!rhoLocVars.count(v)) bad(Cond::C5, v + " does not occur in the points-to record");
    }

    // C6: Y is existential and gamma draws from E, X and S only.
    {
        std::set<std::string> xs(d.ex_locs.begin(), d.ex_locs.end());
        std::set<std::string> ss(d.ex_sets.begin(), d.ex_sets.end());
        if (!xs.count(d.rec_root))
            bad(Cond::C6, "recursive root " + d.rec_root + " is not an existential location");
        for (auto& v : d.rec) {
            if (v.is_loc) {
                if (v.name != d.src_root && !xs.count(v.name))
                    bad(Cond::C6, v.name + " is not the source root or an existential location");
            } else if (!ss.count(v.name)) {
                bad(Cond::C6, v.name + " is not an existential set");
            }
        }
    }
    return rep;
}

static bool quantifier_free(const FormulaRef& f) {
    switch (f->kind) {
        case FKind::ForallInt:
        case FKind::ExistsInt:
        case FKind::ForallSet:
        case FKind::ExistsSet: return false;
        default:
            for (auto& k : f->kids)
                if (!quantifier_free(k)) return false;
            return true;
    }
}

static const InductiveDef* find_def(const std::vector<InductiveDef>& defs,
                                    const std::string& name) {
    for (auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

void validate_formula(const SlidFormula& f, const std::vector<InductiveDef>& defs) {
    if (!quantifier_free(f.data)) throw SortError("data part must be quantifier-free");
    std::set<std::string> used;
    for (auto& a : f.spatial)
        if (a.kind == SpatialAtom::Pred) used.insert(a.pred);
    if (used.size() > 1)
        throw SortError("a formula may use only a single inductive predicate");
    const InductiveDef* p = nullptr;
    if (!used.empty()) {
        p = find_def(defs, *used.begin());
        if (!p) throw SortError("unknown predicate: " + *used.begin());
    } else if (!defs.empty()) {
        p = &defs.front();
    }
    for (auto& a : f.spatial) {
        if (a.kind == SpatialAtom::Pred) {
            if (a.src.size() != p->src.size() || a.dst.size() != p->dst.size() ||
                a.stat.size() != p->stat.size())
                throw SortError("argument arity mismatch for " + a.pred);
            for (size_t i = 0; i < a.src.size(); i++)
                if (a.src[i].is_loc != p->src[i].is_loc || a.dst[i].is_loc != p->dst[i].is_loc)
                    throw SortError("argument sort mismatch for " + a.pred);
        } else if (a.kind == SpatialAtom::Pto && p) {
            std::map<std::string, bool> want, have;
            for (auto& fd : p->rho) want[fd.name] = fd.is_loc;
            for (auto& fd : a.rho) have[fd.name] = fd.is_loc;
            if (want != have)
                throw SortError("points-to atom at " + a.root +
                                " does not use the field set of " + p->name);
        }
    }
}

// ---------------------------------------------------------------------------
// Semantics
// ---------------------------------------------------------------------------

std::vector<std::string> heap_fields(const Heap& h) {
    std::set<std::string> fs;
    for (auto& [k, v] : h) {
        (void)v;
        fs.insert(k.second);
    }
    return {fs.begin(), fs.end()};
}

bool valid_heap(const Heap& h) {
    std::map<Loc, std::set<std::string>> byLoc;
    for (auto& [k, v] : h) {
        (void)v;
        if (k.first == 0) return false;  // nil is never allocated
        byLoc[k.first].insert(k.second);
    }
    for (auto& [l, fs] : byLoc) {
        (void)l;
        if (fs != byLoc.begin()->second) return false;
    }
    return true;
}

namespace {

enum class Tri { False, True, Unknown };

Tri tri_or(Tri a, Tri b) {
    if (a == Tri::True || b == Tri::True) return Tri::True;
    if (a == Tri::Unknown || b == Tri::Unknown) return Tri::Unknown;
    return Tri::False;
}

Tri tri_and(Tri a, Tri b) {
    if (a == Tri::False || b == Tri::False) return Tri::False;
    if (a == Tri::Unknown || b == Tri::Unknown) return Tri::Unknown;
    return Tri::True;
}

// Candidate values for the recursive-call set given the source set under
// the relation.  For S = S' u T_s the callee set lies between S minus the
// anchor values and S; for the mirrored orientation it extends S by at most
// one value below its minimum and one above its maximum, drawn from
// `universe`.
std::vector<IntSet> callee_set_candidates(const DbsRelation& r, const IntSet& src,
                                          const std::vector<long long>& universe) {
    std::vector<IntSet> cands{src};
    if (r.primal) {
        if (!src.empty()) {
            IntSet a = src, b = src, c = src;
            a.erase(*src.begin());
            b.erase(*src.rbegin());
            c = a;
            c.erase(*src.rbegin());
            cands.push_back(a);
            cands.push_back(b);
            cands.push_back(c);
        }
    } else {
        std::vector<long long> below, above;
        for (long long v : universe) {
            if (src.empty() || v < *src.begin()) below.push_back(v);
            if (src.empty() || v > *src.rbegin()) above.push_back(v);
        }
        for (long long v : below) {
            IntSet a = src;
            a.insert(v);
            cands.push_back(a);
            for (long long w : above) {
                IntSet b = a;
                b.insert(w);
                cands.push_back(b);
            }
        }
        for (long long w : above) {
            IntSet b = src;
            b.insert(w);
            cands.push_back(b);
        }
    }
    std::vector<IntSet> out;
    for (auto& c : cands) {
        if (std::find(out.begin(), out.end(), c) != out.end()) continue;
        if (rel_holds(r, src, c)) out.push_back(c);
    }
    return out;
}

// Set-sorted positions of the source parameter vector, i.e. the positions
// the data relations of `phi` are aligned with.
std::vector<size_t> set_positions(const InductiveDef& d) {
    std::vector<size_t> out;
    for (size_t i = 0; i < d.src.size(); i++)
        if (!d.src[i].is_loc) out.push_back(i);
    return out;
}

// The position j with gamma_j = E, when the rule passes its root on.
std::optional<size_t> root_index(const InductiveDef& d) {
    for (size_t j = 0; j < d.rec.size(); j++)
        if (d.rec[j].is_loc && d.rec[j].name == d.src_root) return j;
    return std::nullopt;
}

struct SpatialEval {
    const State& st;
    const std::vector<InductiveDef>& defs;
    std::vector<long long> universe;

    Tri atoms(const std::vector<SpatialAtom>& as, size_t i, const Heap& h, int fuel) {
        if (i == as.size()) return h.empty() ? Tri::True : Tri::False;
        const SpatialAtom& a = as[i];
        switch (a.kind) {
            case SpatialAtom::Emp: return atoms(as, i + 1, h, fuel);
            case SpatialAtom::Pto: {
                Loc l = as_scal(st.assign, a.root);
                Heap rest;
                std::map<std::string, long long> cell;
                for (auto& [k, v] : h)
                    if (k.first == l)
                        cell[k.second] = v;
                    else
                        rest[k] = v;
                if (cell.empty()) return Tri::False;
                std::set<std::string> want;
                for (auto& fd : a.rho) want.insert(fd.name);
                std::set<std::string> have;
                for (auto& [fn, v] : cell) {
                    (void)v;
                    have.insert(fn);
                }
                if (want != have) return Tri::False;
                for (auto& fd : a.rho) {
                    if (fd.is_loc) {
                        if (cell[fd.name] != as_scal(st.assign, fd.loc)) return Tri::False;
                    } else {
                        auto v = eval_iterm(fd.data, st.assign);
                        if (!v || *v != cell[fd.name]) return Tri::False;
                    }
                }
                return atoms(as, i + 1, rest, fuel);
            }
            case SpatialAtom::Pred: {
                const InductiveDef* d = find_def(defs, a.pred);
                if (!d) throw SortError("unknown predicate: " + a.pred);
                auto arg = [&](const TypedVar& v) -> Value {
                    if (v.is_loc) return as_scal(st.assign, v.name);
                    IntSet s = as_set(st.assign, v.name);
                    return std::vector<long long>(s.begin(), s.end());
                };
                std::map<std::string, Value> env;
                env[d->src_root] = as_scal(st.assign, a.root);
                env[d->dst_root] = as_scal(st.assign, a.dst_root);
                for (size_t k = 0; k < d->src.size(); k++) {
                    env[d->src[k].name] = arg(a.src[k]);
                    env[d->dst[k].name] = arg(a.dst[k]);
                }
                for (size_t k = 0; k < d->stat.size(); k++)
                    env[d->stat[k]] = as_scal(st.assign, a.stat[k]);

                std::vector<Loc> locs;
                for (auto& [k, v] : h) {
                    (void)v;
                    if (locs.empty() || locs.back() != k.first) locs.push_back(k.first);
                }
                Tri res = Tri::False;
                for (uint64_t mask = 0; mask < (uint64_t(1) << locs.size()); mask++) {
                    Heap mine, rest;
                    for (auto& [k, v] : h) {
                        size_t j = std::lower_bound(locs.begin(), locs.end(), k.first) -
                                   locs.begin();
                        (mask >> j & 1 ? mine : rest)[k] = v;
                    }
                    Tri r1 = pred(*d, env, mine, fuel);
                    if (r1 == Tri::False) continue;
                    res = tri_or(res, tri_and(r1, atoms(as, i + 1, rest, fuel)));
                    if (res == Tri::True) return res;
                }
                return res;
            }
        }
        return Tri::False;
    }

    Tri pred(const InductiveDef& d, const std::map<std::string, Value>& env, const Heap& h,
             int fuel) {
        // Base rule: E = F, alpha = beta, emp.
        bool baseOk = value_eq(env.at(d.src_root), env.at(d.dst_root));
        for (size_t k = 0; baseOk && k < d.src.size(); k++)
            baseOk = value_eq(env.at(d.src[k].name), env.at(d.dst[k].name));
        if (h.empty()) return baseOk ? Tri::True : Tri::False;
        if (fuel == 0) return Tri::Unknown;

        // Inductive rule: the root cell plus a shorter segment.
        Loc l = as_scal(env, d.src_root);
        if (l == 0) return Tri::False;
        Heap rest;
        std::map<std::string, long long> cell;
        for (auto& [k, v] : h)
            if (k.first == l)
                cell[k.second] = v;
            else
                rest[k] = v;
        if (cell.empty()) return Tri::False;
        std::set<std::string> want;
        for (auto& fd : d.rho) want.insert(fd.name);
        std::set<std::string> have;
        for (auto& [fn, v] : cell) {
            (void)v;
            have.insert(fn);
        }
        if (want != have) return Tri::False;

        // Existential locations are read off the root cell.
        auto env2 = env;
        std::set<std::string> xs(d.ex_locs.begin(), d.ex_locs.end());
        for (auto& fd : d.rho)
            if (fd.is_loc && xs.count(fd.loc) && !env2.count(fd.loc))
                env2[fd.loc] = cell[fd.name];
        for (auto& fd : d.rho)
            if (fd.is_loc && cell[fd.name] != as_scal(env2, fd.loc)) return Tri::False;

        // Existential sets come from the per-position relations.
        auto pos = set_positions(d);
        std::vector<std::vector<IntSet>> cands;
        for (size_t k = 0; k < pos.size(); k++) {
            IntSet src = as_set(env2, d.src[pos[k]].name);
            cands.push_back(callee_set_candidates(d.phi[k], src, universe));
            if (cands.back().empty()) return Tri::False;
        }
        Tri res = Tri::False;
        std::vector<size_t> pick(pos.size(), 0);
        while (true) {
            auto env3 = env2;
            for (size_t k = 0; k < pos.size(); k++) {
                const IntSet& s = cands[k][pick[k]];
                env3[d.rec[pos[k]].name] = std::vector<long long>(s.begin(), s.end());
            }
            bool cellOk = true;
            for (auto& fd : d.rho)
                if (!fd.is_loc) {
                    auto v = eval_iterm(fd.data, env3);
                    if (!v || *v != cell[fd.name]) {
                        cellOk = false;
                        break;
                    }
                }
            if (cellOk) {
                std::map<std::string, Value> env4;
                env4[d.src_root] = env3.at(d.rec_root);
                env4[d.dst_root] = env3.at(d.dst_root);
                for (size_t k = 0; k < d.src.size(); k++) {
                    env4[d.src[k].name] = env3.at(d.rec[k].name);
                    env4[d.dst[k].name] = env3.at(d.dst[k].name);
                }
                for (auto& v : d.stat) env4[v] = env3.at(v);
                res = tri_or(res, pred(d, env4, rest, fuel - 1));
                if (res == Tri::True) return res;
            }
            // next combination
            size_t k = 0;
            for (; k < pick.size(); k++) {
                if (++pick[k] < cands[k].size()) break;
                pick[k] = 0;
            }
            if (pos.empty() || k == pick.size()) break;
        }
        return res;
    }
};

std::vector<long long> state_universe(const State& st) {
    std::set<long long> u{0};
    for (auto& [n, v] : st.assign) {
        (void)n;
        if (auto* p = std::get_if<long long>(&v))
            u.insert(*p);
        else
            for (long long e : std::get<std::vector<long long>>(v)) u.insert(e);
    }
    for (auto& [k, v] : st.heap) {
        (void)k;
        u.insert(v);
    }
    return {u.begin(), u.end()};
}

}  // namespace

bool eval_slid(const State& st, const SlidFormula& f, const std::vector<InductiveDef>& defs,
               int fuel) {
    if (!valid_heap(st.heap)) throw std::invalid_argument("malformed heap");
    for (auto& p : f.pure) {
        bool same = as_scal(st.assign, p.lhs) == as_scal(st.assign, p.rhs);
        if (same != p.eq) return false;
    }
    if (!delta_holds(st.assign, f.data)) return false;
    SpatialEval ev{st, defs, state_universe(st)};
    Tri r = ev.atoms(f.spatial, 0, st.heap, fuel);
    if (r == Tri::Unknown) throw FuelExhausted();
    return r == Tri::True;
}

// ---------------------------------------------------------------------------
// Abstraction
// ---------------------------------------------------------------------------

std::vector<DbsRelation> extract_phi_P(const InductiveDef& d) { return d.phi; }

FormulaRef ufld(const SpatialAtom& a, const InductiveDef& d, UfldDepth depth, const TcResult* tc,
                const std::string& tag) {
    if (a.kind != SpatialAtom::Pred) throw SortError("ufld expects a predicate atom");
    auto idx = root_index(d);
    auto pos = set_positions(d);
    std::vector<FormulaRef> conj;
    if (depth == UfldDepth::One) {
        if (idx) conj.push_back(int_cmp(ivar(a.root), CmpOp::Eq, ivar(a.dst[*idx].name)));
        for (size_t k = 0; k < pos.size(); k++)
            conj.push_back(
                to_formula(d.phi[k], a.src[pos[k]].name, a.dst[pos[k]].name));
        return mk_and(std::move(conj));
    }
    if (!tc) throw MissingTc(d.name);
    auto gname = [&](int layer, size_t p) {
        return "g" + std::to_string(layer) + "#" + tag + "_" + std::to_string(p);
    };
    if (idx) {
        conj.push_back(int_cmp(ivar(a.root), CmpOp::Ne, ivar(a.dst[*idx].name)));
        conj.push_back(int_cmp(ivar(a.root), CmpOp::Ne, ivar(gname(2, *idx))));
    }
    Subst s;
    for (size_t k = 0; k < pos.size(); k++) {
        conj.push_back(to_formula(d.phi[k], a.src[pos[k]].name, gname(1, pos[k])));
        conj.push_back(to_formula(d.phi[k], gname(1, pos[k]), gname(2, pos[k])));
        s.sets["S" + std::to_string(k + 1)] = svar(gname(2, pos[k]));
        s.sets["S" + std::to_string(k + 1) + "'"] = svar(a.dst[pos[k]].name);
    }
    conj.push_back(substitute(tc->formula, s));
    return mk_and(std::move(conj));
}

AbsFormula abs_formula(const SlidFormula& f, const std::vector<InductiveDef>& defs) {
    validate_formula(f, defs);
    std::vector<FormulaRef> conj;
    for (auto& p : f.pure)
        conj.push_back(int_cmp(ivar(p.lhs), p.eq ? CmpOp::Eq : CmpOp::Ne, ivar(p.rhs)));
    conj.push_back(f.data);

    // Closures, per predicate in use.
    std::map<std::string, std::optional<TcResult>> tcs;
    for (auto& a : f.spatial) {
        if (a.kind != SpatialAtom::Pred || tcs.count(a.pred)) continue;
        const InductiveDef* d = find_def(defs, a.pred);
        std::vector<SaturatedDbs> sats;
        bool ok = true;
        for (auto& r : extract_phi_P(*d)) {
            auto s = saturate(r);
            if (!s) {
                ok = false;
                break;
            }
            sats.push_back(*s);
        }
        tcs[a.pred] = ok ? std::optional<TcResult>(tc_multi(sats)) : std::nullopt;
    }

    struct BoolVar {
        std::string name, root;
        size_t atom;
    };
    std::vector<BoolVar> bools;
    AbsFormula out;
    for (size_t i = 0; i < f.spatial.size(); i++) {
        const SpatialAtom& a = f.spatial[i];
        std::string b = "alc#" + std::to_string(i + 1);
        if (a.kind == SpatialAtom::Emp) continue;
        bools.push_back({b, a.root, i});
        auto set1 = [&](const std::string& v) {
            return int_cmp(ivar(v), CmpOp::Eq, iconst(1));
        };
        if (a.kind == SpatialAtom::Pto) {
            conj.push_back(set1(b));
            continue;
        }
        const InductiveDef* d = find_def(defs, a.pred);
        auto idx = root_index(*d);
        std::vector<FormulaRef> mark{set1(b)};
        if (idx) {
            std::string bv = "dst#" + std::to_string(i + 1);
            bools.push_back({bv, a.dst[*idx].name, i});
            mark.push_back(set1(bv));
        }
        // Empty-segment disjunct: Z1 = Z2 and mu = nu.
        std::vector<FormulaRef> eqs{int_cmp(ivar(a.root), CmpOp::Eq, ivar(a.dst_root))};
        for (size_t k = 0; k < a.src.size(); k++) {
            if (a.src[k].is_loc)
                eqs.push_back(int_cmp(ivar(a.src[k].name), CmpOp::Eq, ivar(a.dst[k].name)));
            else
                eqs.push_back(set_cmp(svar(a.src[k].name), SetOp::Eq, svar(a.dst[k].name)));
        }
        const auto& tc = tcs.at(a.pred);
        std::string tag = std::to_string(i + 1);
        FormulaRef d1 = mk_and(std::move(eqs));
        FormulaRef d2 = ffalse(), d3 = ffalse();
        if (tc) {
            auto k2 = mark, k3 = mark;
            k2.push_back(ufld(a, *d, UfldDepth::One, &*tc, tag));
            k3.push_back(ufld(a, *d, UfldDepth::GeTwo, &*tc, tag));
            d2 = mk_and(std::move(k2));
            d3 = mk_and(std::move(k3));
            // The fresh intermediate vectors are existential: quantifying
            // them here keeps them out of the solver's free variables.
            for (size_t p = 0; p < d->src.size(); p++) {
                std::string g1 = "g1#" + tag + "_" + std::to_string(p);
                std::string g2 = "g2#" + tag + "_" + std::to_string(p);
                if (!d->src[p].is_loc) {
                    d3 = exists_set(g1, exists_set(g2, d3));
                } else {
                    if (free_vars(d3).count(g2)) d3 = exists_int(g2, d3);
                }
            }
        }
        conj.push_back(mk_or({d1, d2, d3}));
    }

    for (auto& bv : bools) {
        conj.push_back(int_cmp(iconst(0), CmpOp::Le, ivar(bv.name)));
        conj.push_back(int_cmp(ivar(bv.name), CmpOp::Le, iconst(1)));
        out.bools.push_back({bv.name, bv.root});
    }
    // Separation: equal allocated roots may not both claim a cell.
    for (auto& p : bools)
        for (auto& q : bools) {
            if (p.atom == q.atom) continue;
            conj.push_back(
                mk_implies(mk_and(int_cmp(ivar(p.root), CmpOp::Eq, ivar(q.root)),
                                  int_cmp(ivar(p.name), CmpOp::Eq, iconst(1))),
                           int_cmp(ivar(q.name), CmpOp::Eq, iconst(0))));
        }
    out.formula = mk_and(std::move(conj));
    return out;
}

// ---------------------------------------------------------------------------
// Satisfiability
// ---------------------------------------------------------------------------

SlidSatResult check_sat(const SlidFormula& f, const std::vector<InductiveDef>& defs,
                        const RqspaBudgets& budgets) {
    auto stage = [](const char* name, auto fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    };
    stage("validate", [&] {
        validate_formula(f, defs);
        for (auto& d : defs) {
            auto rep = validate_defs(d);
            if (!rep.ok()) throw std::invalid_argument(d.name + ": " + to_string(rep));
        }
        return 0;
    });
    AbsFormula abs = stage("abstraction", [&] { return abs_formula(f, defs); });
    auto m = stage("solver", [&] { return rqspa_sat(abs.formula, budgets); });
    SlidSatResult res;
    res.sat = m.has_value();
    res.model = std::move(m);
    return res;
}

// ---------------------------------------------------------------------------
// Witness reconstruction
// ---------------------------------------------------------------------------

namespace {

// Heaps of at most `fuel` cells satisfying the predicate under the given
// parameter values; intermediate roots are drawn from `pool`.
void gen_pred(const InductiveDef& d, const std::map<std::string, Value>& env,
              const std::vector<long long>& pool, const std::vector<long long>& universe,
              std::set<Loc> used, int fuel, std::vector<Heap>& out) {
    bool baseOk = value_eq(env.at(d.src_root), env.at(d.dst_root));
    for (size_t k = 0; baseOk && k < d.src.size(); k++)
        baseOk = value_eq(env.at(d.src[k].name), env.at(d.dst[k].name));
    if (baseOk) out.push_back({});
    if (fuel == 0) return;
    Loc l = as_scal(env, d.src_root);
    if (l == 0 || used.count(l)) return;
    used.insert(l);

    // Choices for the existential locations.
    std::vector<long long> locCands = pool;
    locCands.push_back(as_scal(env, d.dst_root));
    locCands.push_back(0);
    std::sort(locCands.begin(), locCands.end());
    locCands.erase(std::unique(locCands.begin(), locCands.end()), locCands.end());

    auto pos = set_positions(d);
    std::vector<size_t> xpick(d.ex_locs.size(), 0);
    while (true) {
        auto env2 = env;
        for (size_t k = 0; k < d.ex_locs.size(); k++) env2[d.ex_locs[k]] = locCands[xpick[k]];

        std::vector<std::vector<IntSet>> cands;
        bool any = true;
        for (size_t k = 0; k < pos.size(); k++) {
            IntSet src = as_set(env2, d.src[pos[k]].name);
            cands.push_back(callee_set_candidates(d.phi[k], src, universe));
            if (cands.back().empty()) any = false;
        }
        if (any) {
            std::vector<size_t> spick(pos.size(), 0);
            while (true) {
                auto env3 = env2;
                for (size_t k = 0; k < pos.size(); k++) {
                    const IntSet& s = cands[k][spick[k]];
                    env3[d.rec[pos[k]].name] = std::vector<long long>(s.begin(), s.end());
                }
                std::map<std::string, long long> cell;
                bool cellOk = true;
                for (auto& fd : d.rho) {
                    if (fd.is_loc) {
                        cell[fd.name] = as_scal(env3, fd.loc);
                    } else {
                        auto v = eval_iterm(fd.data, env3);
                        if (!v) {
                            cellOk = false;
                            break;
                        }
                        cell[fd.name] = *v;
                    }
                }
                if (cellOk) {
                    std::map<std::string, Value> env4;
                    env4[d.src_root] = env3.at(d.rec_root);
                    env4[d.dst_root] = env3.at(d.dst_root);
                    for (size_t k = 0; k < d.src.size(); k++) {
                        env4[d.src[k].name] = env3.at(d.rec[k].name);
                        env4[d.dst[k].name] = env3.at(d.dst[k].name);
                    }
                    for (auto& v : d.stat) env4[v] = env3.at(v);
                    std::vector<Heap> subs;
                    gen_pred(d, env4, pool, universe, used, fuel - 1, subs);
                    for (auto& sh : subs) {
                        Heap full = sh;
                        for (auto& [fn, v] : cell) full[{l, fn}] = v;
                        out.push_back(std::move(full));
                    }
                }
                size_t k = 0;
                for (; k < spick.size(); k++) {
                    if (++spick[k] < cands[k].size()) break;
                    spick[k] = 0;
                }
                if (pos.empty() || k == spick.size()) break;
            }
        }
        size_t k = 0;
        for (; k < xpick.size(); k++) {
            if (++xpick[k] < locCands.size()) break;
            xpick[k] = 0;
        }
        if (d.ex_locs.empty() || k == xpick.size()) break;
    }
}

void collect_formula_vars(const SlidFormula& f, std::map<std::string, Sort>& scal,
                          std::set<std::string>& sets) {
    auto loc = [&](const std::string& v) { scal.emplace(v, Sort::Int); };
    for (auto& p : f.pure) loc(p.lhs), loc(p.rhs);
    for (auto& [v, s] : free_vars(f.data))
        (s == Sort::Int ? (void)scal.emplace(v, Sort::Int) : (void)sets.insert(v));
    for (auto& a : f.spatial) {
        if (a.kind == SpatialAtom::Emp) continue;
        loc(a.root);
        if (a.kind == SpatialAtom::Pto) {
            for (auto& fd : a.rho) {
                if (fd.is_loc) {
                    loc(fd.loc);
                } else {
                    std::map<std::string, Sort> fv;
                    collect_free_vars(fd.data, fv);
                    for (auto& [v, s] : fv)
                        (s == Sort::Int ? (void)scal.emplace(v, Sort::Int)
                                        : (void)sets.insert(v));
                }
            }
        } else {
            loc(a.dst_root);
            for (auto& v : a.src) (v.is_loc ? (void)loc(v.name) : (void)sets.insert(v.name));
            for (auto& v : a.dst) (v.is_loc ? (void)loc(v.name) : (void)sets.insert(v.name));
            for (auto& v : a.stat) loc(v);
        }
    }
}

}  // namespace

std::optional<State> concretize(const SlidFormula& f, const std::vector<InductiveDef>& defs,
                                const BoundedModel& m, int fuel) {
    State st;
    std::map<std::string, Sort> scal;
    std::set<std::string> sets;
    collect_formula_vars(f, scal, sets);
    for (auto& [v, s] : scal) {
        (void)s;
        auto it = m.ints.find(v);
        st.assign[v] = it == m.ints.end() ? 0 : it->second;
    }
    for (auto& v : sets) {
        auto it = m.sets.find(v);
        st.assign[v] = it == m.sets.end() ? std::vector<long long>{} : it->second;
    }

    // Fresh locations beyond everything mentioned so far.
    long long top = 1;
    for (auto& [v, val] : st.assign) {
        (void)v;
        if (auto* p = std::get_if<long long>(&val)) top = std::max(top, std::llabs(*p));
    }
    std::vector<long long> pool;
    for (int k = 1; k <= fuel; k++) pool.push_back(top + k);
    std::vector<long long> universe;
    {
        std::set<long long> u{0};
        for (long long v = m.lo; v <= m.hi; v++) u.insert(v);
        universe.assign(u.begin(), u.end());
    }

    std::vector<std::vector<Heap>> cands;
    for (auto& a : f.spatial) {
        switch (a.kind) {
            case SpatialAtom::Emp: cands.push_back({Heap{}}); break;
            case SpatialAtom::Pto: {
                Loc l = as_scal(st.assign, a.root);
                if (l == 0) return std::nullopt;
                Heap h;
                for (auto& fd : a.rho) {
                    if (fd.is_loc) {
                        h[{l, fd.name}] = as_scal(st.assign, fd.loc);
                    } else {
                        auto v = eval_iterm(fd.data, st.assign);
                        if (!v) return std::nullopt;
                        h[{l, fd.name}] = *v;
                    }
                }
                cands.push_back({std::move(h)});
                break;
            }
            case SpatialAtom::Pred: {
                const InductiveDef* d = find_def(defs, a.pred);
                if (!d) return std::nullopt;
                std::map<std::string, Value> env;
                env[d->src_root] = as_scal(st.assign, a.root);
                env[d->dst_root] = as_scal(st.assign, a.dst_root);
                for (size_t k = 0; k < d->src.size(); k++) {
                    env[d->src[k].name] = st.assign.at(a.src[k].name);
                    env[d->dst[k].name] = st.assign.at(a.dst[k].name);
                }
                for (size_t k = 0; k < d->stat.size(); k++)
                    env[d->stat[k]] = as_scal(st.assign, a.stat[k]);
                std::vector<Heap> hs;
                gen_pred(*d, env, pool, universe, {}, fuel, hs);
                if (hs.empty()) return std::nullopt;
                cands.push_back(std::move(hs));
                break;
            }
        }
    }

    // Pick one candidate per atom with disjoint footprints.
    std::vector<size_t> pick(cands.size(), 0);
    while (true) {
        Heap h;
        bool ok = true;
        std::set<Loc> seen;
        for (size_t i = 0; ok && i < cands.size(); i++) {
            std::set<Loc> mine;
            for (auto& [k, v] : cands[i][pick[i]]) {
                mine.insert(k.first);
                h[k] = v;
            }
            for (Loc l : mine)
                if (!seen.insert(l).second) ok = false;
        }
        if (ok) {
            State cand = st;
            cand.heap = std::move(h);
            try {
                if (valid_heap(cand.heap) && eval_slid(cand, f, defs, fuel + 1)) return cand;
            } catch (const FuelExhausted&) {
            }
        }
        size_t i = 0;
        for (; i < pick.size(); i++) {
            if (++pick[i] < cands[i].size()) break;
            pick[i] = 0;
        }
        if (pick.empty() || i == pick.size()) break;
    }
    return std::nullopt;
}

}  // namespace slidset
