/* tc.cpp -- closure formulas for difference-bound set relations.  The
 * generator dispatches on the added-anchor set of the (primal-oriented)
 * relation: closures that add only minima and closures that add only maxima
 * share one orientation-parameterized construction, and the two-sided case
 * stitches a min chain and a max chain together with a shared step count. */

#include "slidset/tc.hpp"

#include "slidset/qfpa.hpp"

#include <functional>
#include <stdexcept>

namespace slidset {

namespace {

constexpr std::pair<Anchor, Anchor> kWithinS{Anchor::MinS, Anchor::MaxS};
constexpr std::pair<Anchor, Anchor> kWithinSp{Anchor::MinSp, Anchor::MaxSp};
constexpr std::pair<Anchor, Anchor> kGapMin{Anchor::MinS, Anchor::MinSp};
constexpr std::pair<Anchor, Anchor> kGapMax{Anchor::MaxS, Anchor::MaxSp};

using TermFn = std::function<IntRef(Anchor)>;

// Anchors rendered over a source/destination set-variable pair.
TermFn tf(std::string s, std::string sp) {
    return [s = std::move(s), sp = std::move(sp)](Anchor a) { return anchor_term(a, s, sp); };
}

FormulaRef bounds_f(const std::vector<Bound>& bs, const TermFn& t) {
    std::vector<FormulaRef> cs;
    for (auto& b : bs) cs.push_back(int_cmp(t(b.lhs), CmpOp::Le, t(b.rhs), b.c));
    return mk_and(std::move(cs));
}

struct Ctx {
    TcTrace trace;
    int counter = 0;
    std::map<std::string, Sort> used;

    std::string fresh_set() {
        std::string n;
        do n = "S#" + std::to_string(++counter);
        while (used.count(n));
        used[n] = Sort::Set;
        trace.aux_vars.push_back(n);
        return n;
    }
};

std::vector<Bound> part(const SaturatedDbs& r, std::pair<Anchor, Anchor> p, Ctx& cx) {
    cx.trace.partitions_used.push_back(p);
    return partition(r, p);
}

// One growth direction: Low adds minima to a chain S >= ... >= S', High adds
// maxima.  `gap` is the anchor pair that moves, `keep` the one that is
// carried along unchanged from step to step.
struct Orient {
    bool low;
    std::pair<Anchor, Anchor> gap, keep;
};

const Orient kLow{true, kGapMin, kGapMax};
const Orient kHigh{false, kGapMax, kGapMin};

IntRef add_term(const Orient& o, const std::string& name) {
    return o.low ? tmin(name) : tmax(name);
}

// Every element of a lies strictly beyond b in the growth direction.
FormulaRef ordered_before(const Orient& o, SetRef a, SetRef b) {
    if (o.low) return int_cmp(tmax(a), CmpOp::Lt, tmin(b));
    return int_cmp(tmin(a), CmpOp::Gt, tmax(b));
}

FormulaRef nonempty(SetRef a) { return set_cmp(std::move(a), SetOp::Ne, sempty()); }

// forall y z. succ(succSet, y, z) -> gap bounds over the adjacent pair.  In
// the Low direction the larger set of an adjacent step has the smaller
// minimum, so y plays min(S) and z plays min(S'); in the High direction z
// plays max(S) and y plays max(S').
FormulaRef succ_guard(const SaturatedDbs& r, const Orient& o, SetRef succSet, Ctx& cx) {
    auto bs = part(r, o.gap, cx);
    std::map<std::string, Sort> avoid = cx.used;
    std::string y = fresh_name("y", avoid);
    avoid[y] = Sort::Int;
    std::string z = fresh_name("z", avoid);
    IntRef ty = ivar(y), tz = ivar(z);
    TermFn t = [&](Anchor a) {
        if (o.low) return a == Anchor::MinS ? ty : tz;
        return a == Anchor::MaxS ? tz : ty;
    };
    return forall_int(y, forall_int(z, mk_implies(succ_formula(std::move(succSet), y, z),
                                                  bounds_f(bs, t))));
}

// n-step unfolding over oriented names, sharing the aux-name counter.
FormulaRef unfold_with(const SaturatedDbs& r, int n, const std::string& s, const std::string& sp,
                       Ctx& cx) {
    std::vector<std::string> chain{s};
    for (int i = 1; i < n; i++) chain.push_back(cx.fresh_set());
    chain.push_back(sp);
    std::vector<FormulaRef> steps;
    for (int i = 0; i < n; i++) steps.push_back(to_formula(r.rel, chain[i], chain[i + 1]));
    FormulaRef f = mk_and(std::move(steps));
    for (int i = n - 1; i >= 1; i--) f = exists_set(chain[i], f);
    return f;
}

// One-sided growth, S' possibly empty: beyond the first added element the
// integer part carries no constraints between steps, so a single witness S''
// (the set one step up from S') pins everything down.
FormulaRef one_sided_possibly_empty(const SaturatedDbs& r, const Orient& o, const std::string& s,
                                    const std::string& sp, Ctx& cx) {
    std::string spp = cx.fresh_set();
    std::vector<FormulaRef> c;
    c.push_back(set_cmp(svar(spp), SetOp::Eq, sunion(svar(sp), ssingle(add_term(o, spp)))));
    c.push_back(bounds_f(r.rel.int_part, tf(s, sp)));
    c.push_back(bounds_f(r.rel.int_part, tf(spp, sp)));
    c.push_back(nonempty(svar(s)));
    c.push_back(set_cmp(svar(spp), SetOp::SubsetEq, svar(s)));
    auto rest = sdiff(svar(s), svar(spp));
    c.push_back(mk_implies(mk_and(nonempty(rest), nonempty(svar(spp))),
                           ordered_before(o, rest, svar(spp))));
    return exists_set(spp, mk_and(std::move(c)));
}

// One-sided growth, S' surely nonempty.  S1 is S without its added anchor,
// S2 is S' plus one element: the chain between them is reconstructed from
// the elements of S1 \ S2, whose adjacent gaps must each satisfy the moving
// anchor pair of the relation.
FormulaRef one_sided_nonempty(const SaturatedDbs& r, const Orient& o, Strictness st,
                              const std::string& s, const std::string& sp, Ctx& cx) {
    std::string s1 = cx.fresh_set(), s2 = cx.fresh_set();
    std::vector<FormulaRef> c;
    c.push_back(set_cmp(svar(s), SetOp::Eq, sunion(svar(s1), ssingle(add_term(o, s)))));
    c.push_back(set_cmp(svar(s2), SetOp::Eq, sunion(svar(sp), ssingle(add_term(o, s2)))));
    auto keep = part(r, o.keep, cx);
    c.push_back(bounds_f(keep, tf(s, s1)));
    c.push_back(bounds_f(keep, tf(s2, sp)));
    if (st == Strictness::Strict) {
        c.push_back(nonempty(svar(s2)));
        c.push_back(nonempty(sdiff(svar(s1), svar(s2))));
    }
    c.push_back(set_cmp(svar(s2), SetOp::SubsetEq, svar(s1)));
    auto mid = sdiff(svar(s1), svar(s2));
    auto ord = ordered_before(o, mid, svar(s2));
    c.push_back(st == Strictness::Strict ? ord : mk_implies(nonempty(mid), ord));
    auto withinS = part(r, kWithinS, cx), withinSp = part(r, kWithinSp, cx);
    c.push_back(bounds_f(withinS, tf(s, sp)));
    c.push_back(bounds_f(withinS, tf(s2, sp)));
    c.push_back(bounds_f(withinSp, tf(s, s1)));
    c.push_back(bounds_f(withinSp, tf(s, sp)));
    auto gap = part(r, o.gap, cx);
    c.push_back(bounds_f(gap, tf(s, s1)));
    c.push_back(bounds_f(gap, tf(s2, sp)));
    c.push_back(succ_guard(r, o, sunion(mid, ssingle(add_term(o, s2))), cx));
    return exists_set(s1, exists_set(s2, mk_and(std::move(c))));
}

// Two-sided growth, S' possibly empty: S splits into a low part, a copy of
// S' one step up, and a high part.
FormulaRef both_possibly_empty(const SaturatedDbs& r, const std::string& s, const std::string& sp,
                               Ctx& cx) {
    std::string s1 = cx.fresh_set(), s2 = cx.fresh_set(), s3 = cx.fresh_set();
    std::vector<FormulaRef> c;
    c.push_back(set_cmp(svar(s2), SetOp::Eq,
                        sunion(sunion(svar(sp), ssingle(tmin(s2))), ssingle(tmax(s2)))));
    c.push_back(set_cmp(svar(s), SetOp::Eq, sunion(sunion(svar(s1), svar(s2)), svar(s3))));
    c.push_back(bounds_f(r.rel.int_part, tf(s, sp)));
    c.push_back(bounds_f(r.rel.int_part, tf(s2, sp)));
    c.push_back(mk_implies(nonempty(svar(s1)), int_cmp(tmax(s1), CmpOp::Lt, tmin(s2))));
    c.push_back(mk_implies(nonempty(svar(s3)), int_cmp(tmax(s2), CmpOp::Lt, tmin(s3))));
    return exists_set(s1, exists_set(s2, exists_set(s3, mk_and(std::move(c)))));
}

std::vector<ScaledBound> scaled_gap_bounds(const SaturatedDbs& r, const std::string& s,
                                           const std::string& sp) {
    std::vector<ScaledBound> out;
    for (auto p : {kGapMin, kGapMax})
        for (auto& b : partition(r, p))
            out.push_back({anchor_term(b.lhs, s, sp), anchor_term(b.rhs, s, sp), b.c});
    return out;
}

// Two-sided growth, S' surely nonempty: a min chain and a max chain advance
// together, so besides the two succ-reconstructed chains the step counts on
// both sides must agree -- the shared count is eliminated symbolically.
FormulaRef both_nonempty(const SaturatedDbs& r, Strictness stMin, Strictness stMax,
                         const std::string& s, const std::string& sp, Ctx& cx) {
    std::string s1 = cx.fresh_set(), s2 = cx.fresh_set(), s3 = cx.fresh_set(),
                s4 = cx.fresh_set();
    std::vector<FormulaRef> c;
    c.push_back(set_cmp(svar(s), SetOp::Eq,
                        sunion(sunion(svar(s1), ssingle(tmin(s))), ssingle(tmax(s)))));
    c.push_back(set_cmp(svar(s1), SetOp::Eq, sunion(sunion(svar(s3), svar(s2)), svar(s4))));
    c.push_back(set_cmp(svar(s2), SetOp::Eq,
                        sunion(sunion(svar(sp), ssingle(tmin(s2))), ssingle(tmax(s2)))));
    auto ordMin = int_cmp(tmax(s3), CmpOp::Lt, tmin(s2));
    auto ordMax = int_cmp(tmax(s2), CmpOp::Lt, tmin(s4));
    if (stMin == Strictness::Strict) {
        c.push_back(nonempty(svar(s3)));
        c.push_back(ordMin);
    } else {
        c.push_back(mk_implies(nonempty(svar(s3)), ordMin));
    }
    if (stMax == Strictness::Strict) {
        c.push_back(nonempty(svar(s4)));
        c.push_back(ordMax);
    } else {
        c.push_back(mk_implies(nonempty(svar(s4)), ordMax));
    }
    auto withinS = part(r, kWithinS, cx), withinSp = part(r, kWithinSp, cx);
    auto crossA = part(r, {Anchor::MinS, Anchor::MaxSp}, cx);
    auto crossB = part(r, {Anchor::MinSp, Anchor::MaxS}, cx);
    auto gapMin = part(r, kGapMin, cx), gapMax = part(r, kGapMax, cx);
    c.push_back(bounds_f(withinS, tf(s, sp)));
    c.push_back(bounds_f(withinS, tf(s2, sp)));
    c.push_back(bounds_f(withinSp, tf(s, s1)));
    c.push_back(bounds_f(withinSp, tf(s, sp)));
    for (auto* p : {&crossA, &crossB, &gapMin, &gapMax}) {
        c.push_back(bounds_f(*p, tf(s, s1)));
        c.push_back(bounds_f(*p, tf(s2, sp)));
    }
    c.push_back(succ_guard(r, kLow, sunion(svar(s3), ssingle(tmin(s2))), cx));
    c.push_back(succ_guard(r, kHigh, sunion(svar(s4), ssingle(tmax(s2))), cx));
    std::string x = fresh_name("x", cx.used);
    c.push_back(quant_elim_scale(scaled_gap_bounds(r, s, sp), x));
    return exists_set(s1, exists_set(s2, exists_set(s3, exists_set(s4, mk_and(std::move(c))))));
}

void validate(const SaturatedDbs& r) {
    auto s = saturate(r.rel);
    if (!s || *s != r) throw NotSaturated("tc input is not a saturation fixpoint");
}

// The closure as a list of disjuncts; the first is always S = S'.
std::vector<FormulaRef> closure_disjuncts(const SaturatedDbs& orig, const std::string& os,
                                          const std::string& osp, Ctx& cx) {
    validate(orig);
    bool swapped = !orig.rel.primal;
    SaturatedDbs r = swapped ? swap_roles(orig) : orig;
    const std::string& s = swapped ? osp : os;
    const std::string& sp = swapped ? os : osp;
    cx.used[s] = Sort::Set;
    cx.used[sp] = Sort::Set;

    auto eq = set_cmp(svar(os), SetOp::Eq, svar(osp));
    const auto& ts = r.rel.ts;
    if (ts.empty()) {
        cx.trace.tc_case = TcCase::Identity;
        return {eq};
    }
    auto phiR = to_formula(r.rel, s, sp);
    if (ts == std::set<Anchor>{Anchor::MinS} || ts == std::set<Anchor>{Anchor::MaxS}) {
        const Orient& o = ts.count(Anchor::MinS) ? kLow : kHigh;
        if (!r.nonempty_sp) {
            cx.trace.tc_case = o.low ? TcCase::MinPossiblyEmpty : TcCase::MaxPossiblyEmpty;
            return {eq, one_sided_possibly_empty(r, o, s, sp, cx)};
        }
        Strictness st = classify(r, o.gap);
        (o.low ? cx.trace.min_gap : cx.trace.max_gap) = st;
        auto block = one_sided_nonempty(r, o, st, s, sp, cx);
        if (st == Strictness::Strict) {
            cx.trace.tc_case = o.low ? TcCase::MinStrict : TcCase::MaxStrict;
            return {eq, phiR, unfold_with(r, 2, s, sp, cx), block};
        }
        cx.trace.tc_case = o.low ? TcCase::MinNonStrict : TcCase::MaxNonStrict;
        return {eq, phiR, block};
    }
    if (ts != std::set<Anchor>{Anchor::MinS, Anchor::MaxS})
        throw NotSaturated("unexpected added-anchor set");
    if (!r.nonempty_sp) {
        cx.trace.tc_case = TcCase::BothPossiblyEmpty;
        return {eq, both_possibly_empty(r, s, sp, cx)};
    }
    cx.trace.tc_case = TcCase::BothNonEmpty;
    cx.trace.min_gap = classify(r, kGapMin);
    cx.trace.max_gap = classify(r, kGapMax);
    return {eq, phiR, unfold_with(r, 2, s, sp, cx),
            both_nonempty(r, cx.trace.min_gap, cx.trace.max_gap, s, sp, cx)};
}

FormulaRef from_qfpa(const QfpaRef& g, const std::vector<IntRef>& terms) {
    switch (g->kind) {
        case QfpaKind::True: return ftrue();
        case QfpaKind::False: return ffalse();
        case QfpaKind::Cmp:
        case QfpaKind::Div: {
            MTerm m;
            m.constant = g->expr.constant;
            for (auto& [name, k] : g->expr.coeffs)
                m.parts.push_back({k, terms.at(std::stoul(name.substr(3)))});
            if (g->kind == QfpaKind::Cmp) return count_cmp(std::move(m), g->op);
            return divides(std::move(m), g->modulus, 0);
        }
        case QfpaKind::Not: return mk_not(from_qfpa(g->kids[0], terms));
        case QfpaKind::And:
        case QfpaKind::Or: {
            std::vector<FormulaRef> kids;
            for (auto& k : g->kids) kids.push_back(from_qfpa(k, terms));
            return g->kind == QfpaKind::And ? mk_and(std::move(kids)) : mk_or(std::move(kids));
        }
    }
    return ftrue();
}

}  // namespace

std::string to_string(TcCase c) {
    switch (c) {
        case TcCase::Identity: return "identity";
        case TcCase::MinPossiblyEmpty: return "min/possibly-empty";
        case TcCase::MinStrict: return "min/strict";
        case TcCase::MinNonStrict: return "min/non-strict";
        case TcCase::MaxPossiblyEmpty: return "max/possibly-empty";
        case TcCase::MaxStrict: return "max/strict";
        case TcCase::MaxNonStrict: return "max/non-strict";
        case TcCase::BothPossiblyEmpty: return "both/possibly-empty";
        case TcCase::BothNonEmpty: return "both/nonempty";
    }
    return "?";
}

FormulaRef succ_formula(SetRef t, const std::string& y, const std::string& z) {
    std::map<std::string, Sort> avoid;
    collect_free_vars(t, avoid);
    avoid[y] = Sort::Int;
    avoid[z] = Sort::Int;
    std::string w = fresh_name("w", avoid);
    auto inner = mk_implies(member(ivar(w), t), mk_or(int_cmp(ivar(w), CmpOp::Le, ivar(y)),
                                                      int_cmp(ivar(z), CmpOp::Le, ivar(w))));
    return mk_and({member(ivar(y), t), member(ivar(z), t),
                   int_cmp(ivar(y), CmpOp::Lt, ivar(z)), forall_int(w, inner)});
}

FormulaRef unfold_n(const SaturatedDbs& r, int n, const std::string& s, const std::string& sp) {
    if (n < 1) throw std::invalid_argument("unfold_n: n must be positive");
    validate(r);
    Ctx cx;
    cx.used[s] = Sort::Set;
    cx.used[sp] = Sort::Set;
    return unfold_with(r, n, s, sp, cx);
}

TcResult tc_single(const SaturatedDbs& r, const std::string& s, const std::string& sp) {
    Ctx cx;
    auto disj = closure_disjuncts(r, s, sp, cx);
    return {mk_or(std::move(disj)), std::move(cx.trace)};
}

TcResult tc_multi(const std::vector<SaturatedDbs>& rs,
                  std::vector<std::pair<std::string, std::string>> names) {
    if (rs.empty()) throw std::invalid_argument("tc_multi: no relations");
    if (names.empty())
        for (size_t i = 0; i < rs.size(); i++) {
            std::string base = "S" + std::to_string(i + 1);
            names.push_back({base, base + "'"});
        }
    if (names.size() != rs.size()) throw std::invalid_argument("tc_multi: name count mismatch");
    std::set<std::string> seen;
    for (auto& [a, b] : names)
        for (auto& n : {a, b})
            if (!seen.insert(n).second) throw IndependenceViolation("shared set variable " + n);

    Ctx cx;
    for (auto& n : seen) cx.used[n] = Sort::Set;
    std::vector<FormulaRef> eqs, phis;
    std::vector<ScaledBound> sync;
    for (size_t i = 0; i < rs.size(); i++) {
        auto disj = closure_disjuncts(rs[i], names[i].first, names[i].second, cx);
        cx.trace.component_cases.push_back(cx.trace.tc_case);
        eqs.push_back(disj[0]);
        if (disj.size() == 1) {
            // A relation contained in equality composes to itself for any
            // positive number of steps.
            phis.push_back(to_formula(rs[i].rel, names[i].first, names[i].second));
        } else {
            phis.push_back(mk_or(std::vector<FormulaRef>(disj.begin() + 1, disj.end())));
        }
        bool sw = !rs[i].rel.primal;
        SaturatedDbs w = sw ? swap_roles(rs[i]) : rs[i];
        const std::string& ws = sw ? names[i].second : names[i].first;
        const std::string& wsp = sw ? names[i].first : names[i].second;
        for (auto& b : scaled_gap_bounds(w, ws, wsp)) sync.push_back(b);
    }
    std::string x = fresh_name("x", cx.used);
    phis.push_back(quant_elim_scale(sync, x));
    return {mk_or(mk_and(std::move(eqs)), mk_and(std::move(phis))), std::move(cx.trace)};
}

FormulaRef quant_elim_scale(const std::vector<ScaledBound>& bounds, const std::string& x) {
    if (x.rfind("tc#", 0) == 0) throw std::invalid_argument("quant_elim_scale: reserved name");
    std::vector<IntRef> terms;
    std::vector<std::string> keys;
    auto lin_of = [&](const IntRef& t) -> LinExpr {
        if (t->kind == IntKind::Const) return LinExpr::of(t->value);
        std::string k = to_string(t);
        for (size_t i = 0; i < keys.size(); i++)
            if (keys[i] == k) return LinExpr::var("tc#" + std::to_string(i));
        keys.push_back(k);
        terms.push_back(t);
        return LinExpr::var("tc#" + std::to_string(keys.size() - 1));
    };
    std::vector<QfpaRef> conj;
    for (auto& b : bounds) {
        LinExpr e = lin_of(b.lhs);
        e.add(lin_of(b.rhs), -1);
        e.add(LinExpr::var(x, -b.cx));
        conj.push_back(q_cmp(std::move(e), CmpOp::Le));
    }
    return from_qfpa(eliminate_exists(q_and(std::move(conj)), x, 1), terms);
}

}  // namespace slidset
