/* dbs.cpp -- constraint graphs, shortest-path normal forms and the
 * saturation fixpoint for difference-bound set relations. */

#include "slidset/dbs.hpp"

#include <algorithm>
#include <array>

namespace slidset {

namespace {

constexpr int N = 4;
constexpr long long INF = 1ll << 60;

int idx(Anchor a) { return static_cast<int>(a); }
Anchor anc(int i) { return static_cast<Anchor>(i); }

using Dist = std::array<std::array<long long, N>, N>;

// All-pairs shortest paths over the bound edges; diagonal < 0 flags a
// negative cycle.
Dist shortest_paths(const std::vector<Bound>& bounds) {
    Dist d;
    for (int i = 0; i < N; i++)
        for (int j = 0; j < N; j++) d[i][j] = i == j ? 0 : INF;
    for (auto& b : bounds) d[idx(b.lhs)][idx(b.rhs)] = std::min(d[idx(b.lhs)][idx(b.rhs)], b.c);
    for (int k = 0; k < N; k++)
        for (int i = 0; i < N; i++)
            for (int j = 0; j < N; j++)
                if (d[i][k] < INF && d[k][j] < INF)
                    d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

bool has_negative_cycle(const Dist& d) {
    for (int i = 0; i < N; i++)
        if (d[i][i] < 0) return true;
    return false;
}

std::vector<Bound> to_bounds(const Dist& d) {
    std::vector<Bound> out;
    for (int i = 0; i < N; i++)
        for (int j = 0; j < N; j++)
            if (i != j && d[i][j] < INF) out.push_back({anc(i), anc(j), d[i][j]});
    std::sort(out.begin(), out.end());
    return out;
}

Anchor swap_anchor(Anchor a) {
    switch (a) {
        case Anchor::MinS: return Anchor::MinSp;
        case Anchor::MaxS: return Anchor::MaxSp;
        case Anchor::MinSp: return Anchor::MinS;
        case Anchor::MaxSp: return Anchor::MaxS;
    }
    return a;
}

bool mentions(const DbsRelation& r, Anchor a) {
    if (r.ts.count(a)) return true;
    for (auto& b : r.int_part)
        if (b.lhs == a || b.rhs == a) return true;
    return false;
}

}  // namespace

DbsRelation swap_roles(const DbsRelation& r) {
    DbsRelation out;
    out.primal = !r.primal;
    for (auto a : r.ts) out.ts.insert(swap_anchor(a));
    for (auto& b : r.int_part) out.int_part.push_back({swap_anchor(b.lhs), swap_anchor(b.rhs), b.c});
    std::sort(out.int_part.begin(), out.int_part.end());
    return out;
}

SaturatedDbs swap_roles(const SaturatedDbs& r) {
    SaturatedDbs out;
    out.rel = swap_roles(r.rel);
    out.nonempty_s = r.nonempty_sp;
    out.nonempty_sp = r.nonempty_s;
    return out;
}

ConstraintGraph build_graph(const DbsRelation& r) {
    ConstraintGraph g;
    for (auto& b : r.int_part) {
        g.edges.push_back(b);
        g.vertices.insert(b.lhs);
        g.vertices.insert(b.rhs);
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

bool satisfiable(const ConstraintGraph& g) { return !has_negative_cycle(shortest_paths(g.edges)); }

std::optional<DbsRelation> normalize(const DbsRelation& r) {
    Dist d = shortest_paths(r.int_part);
    if (has_negative_cycle(d)) return std::nullopt;
    DbsRelation out = r;
    out.int_part = to_bounds(d);
    return out;
}

bool entails(const std::vector<Bound>& bounds, Anchor a, Anchor b, long long c) {
    Dist d = shortest_paths(bounds);
    return d[idx(a)][idx(b)] <= c;
}

std::optional<SaturatedDbs> saturate(const DbsRelation& r) {
    bool swapped = !r.primal;
    DbsRelation cur = swapped ? swap_roles(r) : r;

    // Absorption: S' u T_s already contains min(S')/max(S'), so they are
    // dropped from T_s up front.  Their occurrence still forces S' to be
    // nonempty (min/max of the empty set falsifies the set atom), so the
    // fact is kept as a flag before the terms disappear.
    bool forceSp = cur.ts.count(Anchor::MinSp) || cur.ts.count(Anchor::MaxSp);
    cur.ts.erase(Anchor::MinSp);
    cur.ts.erase(Anchor::MaxSp);

    bool nonemptyS = false, nonemptySp = false;
    for (int iter = 0;; iter++) {
        if (iter > 16) throw std::logic_error("saturation failed to reach a fixpoint");
        auto normd = normalize(cur);
        if (!normd) return std::nullopt;
        DbsRelation next = *normd;
        Dist d = shortest_paths(next.int_part);

        nonemptySp = forceSp || mentions(next, Anchor::MinSp) || mentions(next, Anchor::MaxSp);
        // S' nonempty propagates to S since S contains S'.
        nonemptyS = nonemptySp || mentions(next, Anchor::MinS) || mentions(next, Anchor::MaxS);

        if (nonemptyS) next.int_part.push_back({Anchor::MinS, Anchor::MaxS, 0});
        if (nonemptySp) next.int_part.push_back({Anchor::MinSp, Anchor::MaxSp, 0});
        if (nonemptyS && nonemptySp) {
            // S' subset of S: the anchors nest.
            next.int_part.push_back({Anchor::MinS, Anchor::MinSp, 0});
            next.int_part.push_back({Anchor::MaxSp, Anchor::MaxS, 0});

            // T_s membership vs. anchor equality, in both directions.
            auto eq = [&](Anchor a, Anchor b) {
                return d[idx(a)][idx(b)] <= 0 && d[idx(b)][idx(a)] <= 0;
            };
            if (next.ts.count(Anchor::MinS) && eq(Anchor::MinS, Anchor::MinSp))
                next.ts.erase(Anchor::MinS);
            if (next.ts.count(Anchor::MaxS) && eq(Anchor::MaxS, Anchor::MaxSp))
                next.ts.erase(Anchor::MaxS);
            if (!next.ts.count(Anchor::MinS)) {
                next.int_part.push_back({Anchor::MinS, Anchor::MinSp, 0});
                next.int_part.push_back({Anchor::MinSp, Anchor::MinS, 0});
            }
            if (!next.ts.count(Anchor::MaxS)) {
                next.int_part.push_back({Anchor::MaxS, Anchor::MaxSp, 0});
                next.int_part.push_back({Anchor::MaxSp, Anchor::MaxS, 0});
            }
        }
        // A singleton S collapses the anchors: {max(S)} is {min(S)}.
        if (nonemptyS && next.ts.count(Anchor::MaxS) && d[idx(Anchor::MinS)][idx(Anchor::MaxS)] <= 0 &&
            d[idx(Anchor::MaxS)][idx(Anchor::MinS)] <= 0) {
            next.ts.erase(Anchor::MaxS);
            next.ts.insert(Anchor::MinS);
        }

        auto renormd = normalize(next);
        if (!renormd) return std::nullopt;
        next = *renormd;
        if (next == cur) break;
        cur = std::move(next);
    }

    SaturatedDbs out;
    out.rel = swapped ? swap_roles(cur) : cur;
    out.nonempty_s = swapped ? nonemptySp : nonemptyS;
    out.nonempty_sp = swapped ? nonemptyS : nonemptySp;
    return out;
}

std::vector<Bound> partition(const SaturatedDbs& r, std::pair<Anchor, Anchor> a) {
    std::vector<Bound> out;
    for (auto& b : r.rel.int_part) {
        bool hit = (b.lhs == a.first && b.rhs == a.second) || (b.lhs == a.second && b.rhs == a.first);
        if (hit) out.push_back(b);
    }
    return out;
}

Strictness classify(const SaturatedDbs& r, std::pair<Anchor, Anchor> a) {
    // Gap orientation: min(S) <= min(S') - c, or max(S') <= max(S) - c.
    Anchor from, to;
    if ((a.first == Anchor::MinS && a.second == Anchor::MinSp) ||
        (a.first == Anchor::MinSp && a.second == Anchor::MinS)) {
        from = Anchor::MinS;
        to = Anchor::MinSp;
    } else {
        from = Anchor::MaxSp;
        to = Anchor::MaxS;
    }
    for (auto& b : partition(r, a))
        if (b.lhs == from && b.rhs == to && b.c < 0) return Strictness::Strict;
    return Strictness::NonStrict;
}

IntRef anchor_term(Anchor a, const std::string& s, const std::string& sp) {
    switch (a) {
        case Anchor::MinS: return tmin(s);
        case Anchor::MaxS: return tmax(s);
        case Anchor::MinSp: return tmin(sp);
        case Anchor::MaxSp: return tmax(sp);
    }
    return tmin(s);
}

FormulaRef to_formula(const DbsRelation& r, const std::string& s, const std::string& sp) {
    const std::string& lhs = r.primal ? s : sp;
    const std::string& rhs = r.primal ? sp : s;
    SetRef u = svar(rhs);
    for (auto a : r.ts) u = sunion(u, ssingle(anchor_term(a, s, sp)));
    std::vector<FormulaRef> conj{set_cmp(svar(lhs), SetOp::Eq, u)};
    for (auto& b : r.int_part)
        conj.push_back(int_cmp(anchor_term(b.lhs, s, sp), CmpOp::Le, anchor_term(b.rhs, s, sp), b.c));
    return mk_and(std::move(conj));
}

std::string to_string(Anchor a) {
    switch (a) {
        case Anchor::MinS: return "min(S)";
        case Anchor::MaxS: return "max(S)";
        case Anchor::MinSp: return "min(S')";
        case Anchor::MaxSp: return "max(S')";
    }
    return "?";
}

std::string to_string(const Bound& b) {
    std::string s = to_string(b.lhs) + " <= " + to_string(b.rhs);
    if (b.c > 0) s += " + " + std::to_string(b.c);
    if (b.c < 0) s += " - " + std::to_string(-b.c);
    return s;
}

}  // namespace slidset
