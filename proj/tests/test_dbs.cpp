/* test_dbs.cpp -- constraint graphs, normal forms, saturation. */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "slidset/dbs.hpp"
#include "slidset/eval.hpp"

#include <random>

using namespace slidset;

namespace {

// Enumerates all pairs (A, A') of subsets of {0..hi} and checks that r and
// r2 have the same models.
bool same_models(const FormulaRef& a, const FormulaRef& b, long long hi) {
    for (uint64_t ma = 0; ma < (1u << (hi + 1)); ma++) {
        for (uint64_t mb = 0; mb < (1u << (hi + 1)); mb++) {
            std::vector<long long> ea, eb;
            for (long long v = 0; v <= hi; v++) {
                if (ma >> v & 1) ea.push_back(v);
                if (mb >> v & 1) eb.push_back(v);
            }
            auto m = BoundedModel::window(0, hi).with_set("S", ea).with_set("S'", eb);
            if (eval_bounded(a, m) != eval_bounded(b, m)) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("graph construction") {
    DbsRelation r;
    r.ts = {Anchor::MinS};
    // min(S') = min(S) + 1 as two bounds
    r.int_part = {{Anchor::MinSp, Anchor::MinS, 1}, {Anchor::MinS, Anchor::MinSp, -1}};
    auto g = build_graph(r);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0] == Bound{Anchor::MinS, Anchor::MinSp, -1});
    CHECK(g.edges[1] == Bound{Anchor::MinSp, Anchor::MinS, 1});
    CHECK(g.vertices.size() == 2);

    DbsRelation empty;
    CHECK(build_graph(empty).edges.empty());

    DbsRelation one;
    one.int_part = {{Anchor::MinS, Anchor::MaxS, 0}};
    CHECK(build_graph(one).edges.size() == 1);
}

TEST_CASE("negative cycles decide satisfiability") {
    ConstraintGraph g;
    g.edges = {{Anchor::MinS, Anchor::MaxS, -1}, {Anchor::MaxS, Anchor::MinS, 0}};
    CHECK_FALSE(satisfiable(g));
    g.edges = {{Anchor::MinS, Anchor::MaxS, -1}, {Anchor::MaxS, Anchor::MinS, 2}};
    CHECK(satisfiable(g));
}

TEST_CASE("normalization computes tightest bounds") {
    // a <= b + 1, b <= c + 2 gives a <= c + 3 (a=min(S), b=max(S), c=min(S'))
    DbsRelation r;
    r.int_part = {{Anchor::MinS, Anchor::MaxS, 1}, {Anchor::MaxS, Anchor::MinSp, 2}};
    auto n = normalize(r);
    REQUIRE(n.has_value());
    bool found = false;
    for (auto& b : n->int_part)
        if (b == Bound{Anchor::MinS, Anchor::MinSp, 3}) found = true;
    CHECK(found);
    // idempotence
    auto n2 = normalize(*n);
    REQUIRE(n2.has_value());
    CHECK(n->int_part == n2->int_part);

    // negative cycle reports unsat
    DbsRelation bad;
    bad.int_part = {{Anchor::MinS, Anchor::MaxS, -1}, {Anchor::MaxS, Anchor::MinS, 0}};
    CHECK_FALSE(normalize(bad).has_value());
}

TEST_CASE("saturation of the one-step minimum extension") {
    // S = S' u {min(S)} /\ min(S') = min(S) + 1
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = {{Anchor::MinSp, Anchor::MinS, 1}, {Anchor::MinS, Anchor::MinSp, -1}};
    auto s = saturate(r);
    REQUIRE(s.has_value());
    CHECK(s->rel.ts == std::set<Anchor>{Anchor::MinS});
    CHECK(s->nonempty_s);
    CHECK(s->nonempty_sp);
    std::vector<Bound> expected = {
        {Anchor::MinS, Anchor::MaxS, -1},   {Anchor::MinS, Anchor::MinSp, -1},
        {Anchor::MinS, Anchor::MaxSp, -1},  {Anchor::MaxS, Anchor::MaxSp, 0},
        {Anchor::MinSp, Anchor::MinS, 1},   {Anchor::MinSp, Anchor::MaxS, 0},
        {Anchor::MinSp, Anchor::MaxSp, 0},  {Anchor::MaxSp, Anchor::MaxS, 0},
    };
    std::sort(expected.begin(), expected.end());
    CHECK(s->rel.int_part == expected);
}

TEST_CASE("saturation trivial and collapsing cases") {
    // S = S' with empty integer part: nothing to do.
    DbsRelation id;
    auto s = saturate(id);
    REQUIRE(s.has_value());
    CHECK(s->rel.ts.empty());
    CHECK(s->rel.int_part.empty());
    CHECK_FALSE(s->nonempty_s);

    // S = S' u {min(S)} /\ min(S) = min(S'): the singleton is absorbed.
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = {{Anchor::MinS, Anchor::MinSp, 0}, {Anchor::MinSp, Anchor::MinS, 0}};
    auto s2 = saturate(r);
    REQUIRE(s2.has_value());
    CHECK(s2->rel.ts.empty());
    CHECK(same_models(to_formula(r), to_formula(s2->rel), 4));
}

TEST_CASE("partitions and strictness") {
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = {{Anchor::MinSp, Anchor::MinS, 1}, {Anchor::MinS, Anchor::MinSp, -1}};
    auto s = saturate(r);
    REQUIRE(s.has_value());

    auto minPair = partition(*s, {Anchor::MinS, Anchor::MinSp});
    REQUIRE(minPair.size() == 2);
    CHECK(minPair[0] == Bound{Anchor::MinS, Anchor::MinSp, -1});
    CHECK(minPair[1] == Bound{Anchor::MinSp, Anchor::MinS, 1});

    CHECK(partition(*s, {Anchor::MinS, Anchor::MaxSp}).size() == 1);  // min(S) <= max(S') - 1

    // all six pairs cover the int part disjointly
    std::vector<std::pair<Anchor, Anchor>> pairs = {
        {Anchor::MinS, Anchor::MaxS},  {Anchor::MinS, Anchor::MinSp}, {Anchor::MinS, Anchor::MaxSp},
        {Anchor::MaxS, Anchor::MinSp}, {Anchor::MaxS, Anchor::MaxSp}, {Anchor::MinSp, Anchor::MaxSp}};
    size_t total = 0;
    for (auto& p : pairs) total += partition(*s, p).size();
    CHECK(total == s->rel.int_part.size());

    CHECK(classify(*s, {Anchor::MinS, Anchor::MinSp}) == Strictness::Strict);
    CHECK(classify(*s, {Anchor::MaxS, Anchor::MaxSp}) == Strictness::NonStrict);

    // min(S) <= min(S') alone is non-strict
    DbsRelation r2;
    r2.ts = {Anchor::MinS};
    r2.int_part = {{Anchor::MinS, Anchor::MinSp, 0}};
    auto s2 = saturate(r2);
    REQUIRE(s2.has_value());
    CHECK(classify(*s2, {Anchor::MinS, Anchor::MinSp}) == Strictness::NonStrict);
}

TEST_CASE("property: saturation preserves models and is idempotent") {
    std::mt19937 rng(5);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    const Anchor anchors[] = {Anchor::MinS, Anchor::MaxS, Anchor::MinSp, Anchor::MaxSp};

    int unsatCount = 0;
    for (int iter = 0; iter < 120; iter++) {
        DbsRelation r;
        r.primal = pick(4) != 0;  // mostly primal, some symmetric
        for (auto a : anchors)
            if (pick(4) == 0) r.ts.insert(a);
        int nb = pick(4);
        for (int i = 0; i < nb; i++) {
            Anchor x = anchors[pick(4)], y = anchors[pick(4)];
            if (x == y) continue;
            r.int_part.push_back({x, y, pick(5) - 2});
        }

        auto s = saturate(r);
        auto f = to_formula(r);
        if (!s) {
            unsatCount++;
            // Unsat must mean no models at all.
            CHECK(same_models(f, ffalse(), 3));
            continue;
        }
        CHECK(same_models(f, to_formula(s->rel), 3));
        auto s2 = saturate(s->rel);
        REQUIRE(s2.has_value());
        CHECK(s->rel == s2->rel);
    }
    CHECK(unsatCount > 0);  // the generator must exercise the Unsat path
}
