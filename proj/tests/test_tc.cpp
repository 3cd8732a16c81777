/* test_tc.cpp -- closure formulas checked against a brute-force
 * reflexive-transitive closure over small windows. */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "slidset/eval.hpp"
#include "slidset/tc.hpp"

#include <random>

using namespace slidset;

namespace {

SaturatedDbs sat(const DbsRelation& r) {
    auto s = saturate(r);
    REQUIRE(s.has_value());
    return *s;
}

// Compares tc_single against the brute-force closure over {0..hi} and
// returns the trace for inspection.
TcTrace check_tc(const DbsRelation& r, long long hi) {
    auto s = sat(r);
    auto tc = tc_single(s);
    auto want = oracle::closure_matrix(to_formula(r), "S", "S'", hi);
    size_t n = size_t(1) << (hi + 1);
    for (size_t a = 0; a < n; a++)
        for (size_t b = 0; b < n; b++) {
            auto m = BoundedModel::window(0, hi)
                         .with_set("S", oracle::mask_elems(a, hi))
                         .with_set("S'", oracle::mask_elems(b, hi));
            bool got = eval_bounded(tc.formula, m);
            if (got != want[a][b]) {
                CAPTURE(to_string(tc.trace.tc_case));
                CAPTURE(a);
                CAPTURE(b);
                CHECK(got == want[a][b]);
                return tc.trace;
            }
        }
    CHECK(true);
    return tc.trace;
}

// min(S') = min(S) + 1 as two bounds.
std::vector<Bound> min_gap_one() {
    return {{Anchor::MinSp, Anchor::MinS, 1}, {Anchor::MinS, Anchor::MinSp, -1}};
}

}  // namespace

TEST_CASE("succ picks adjacent members") {
    auto t = svar("T");
    auto f = succ_formula(t, "y", "z");
    auto base = BoundedModel::window(0, 7).with_set("T", {1, 3, 6});
    auto at = [&](long long y, long long z) {
        return eval_bounded(f, base.with_int("y", y).with_int("z", z));
    };
    CHECK(at(1, 3));
    CHECK(at(3, 6));
    CHECK_FALSE(at(1, 6));  // 3 lies between
    CHECK_FALSE(at(3, 1));  // wrong order
    CHECK_FALSE(at(1, 4));  // 4 is not a member
    CHECK_FALSE(at(3, 3));

    // binder avoids capture of an ambient w
    auto g = succ_formula(svar("w"), "y", "z");
    auto m = BoundedModel::window(0, 3).with_set("w", {0, 2}).with_int("y", 0).with_int("z", 2);
    CHECK(eval_bounded(g, m));
}

TEST_CASE("unfold composes the relation") {
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = min_gap_one();
    auto s = sat(r);

    const long long hi = 4;
    auto step = oracle::step_matrix(to_formula(r), "S", "S'", hi);
    size_t n = step.size();

    auto u1 = unfold_n(s, 1);
    auto u2 = unfold_n(s, 2);
    for (size_t a = 0; a < n; a++)
        for (size_t b = 0; b < n; b++) {
            auto m = BoundedModel::window(0, hi)
                         .with_set("S", oracle::mask_elems(a, hi))
                         .with_set("S'", oracle::mask_elems(b, hi));
            CHECK(eval_bounded(u1, m) == step[a][b]);
            bool two = false;
            for (size_t k = 0; k < n && !two; k++) two = step[a][k] && step[k][b];
            CHECK(eval_bounded(u2, m) == two);
        }

    CHECK_THROWS_AS(unfold_n(s, 0), std::invalid_argument);
}

TEST_CASE("shared step count elimination") {
    SUBCASE("single scaled equality gives ordering plus parity") {
        // exists x >= 1. min(S') = min(S) + 2x
        std::vector<ScaledBound> bs = {{tmin("S'"), tmin("S"), 2}, {tmin("S"), tmin("S'"), -2}};
        auto f = quant_elim_scale(bs, "x");
        for (long long a = 0; a <= 10; a++)
            for (long long b = 0; b <= 10; b++) {
                auto m = BoundedModel::window(0, 10).with_set("S", {a}).with_set("S'", {b});
                CHECK(eval_bounded(f, m) == (b > a && (b - a) % 2 == 0));
            }
    }
    SUBCASE("two equalities must agree on the count") {
        // exists x >= 1. min(S') = min(S) + 3x /\ max(S) = max(S') + 2x
        std::vector<ScaledBound> bs = {{tmin("S'"), tmin("S"), 3},
                                       {tmin("S"), tmin("S'"), -3},
                                       {tmax("S"), tmax("S'"), 2},
                                       {tmax("S'"), tmax("S"), -2}};
        auto f = quant_elim_scale(bs, "x");
        for (long long a = 0; a <= 12; a += 2)
            for (long long b = 0; b <= 12; b++)
                for (long long c = 0; c <= 12; c++)
                    for (long long d = 0; d <= 12; d += 2) {
                        bool want = false;
                        for (long long x = 1; x <= 12; x++)
                            want |= b == a + 3 * x && c == d + 2 * x;
                        auto m = BoundedModel::window(0, 12)
                                     .with_set("S", {std::min(a, c), std::max(a, c)})
                                     .with_set("S'", {std::min(b, d), std::max(b, d)});
                        // only meaningful when the pairs keep their roles
                        if (a > c || b > d) continue;
                        CHECK(eval_bounded(f, m) == want);
                    }
    }
    SUBCASE("unscaled bounds pass through") {
        std::vector<ScaledBound> bs = {{tmin("S"), tmin("S'"), 0}};
        auto f = quant_elim_scale(bs, "x");
        auto m = BoundedModel::window(0, 5).with_set("S", {1}).with_set("S'", {3});
        CHECK(eval_bounded(f, m));
        auto m2 = BoundedModel::window(0, 5).with_set("S", {4}).with_set("S'", {3});
        CHECK_FALSE(eval_bounded(f, m2));
    }
}

TEST_CASE("identity case") {
    DbsRelation r;  // S = S'
    auto tc = tc_single(sat(r));
    CHECK(tc.trace.tc_case == TcCase::Identity);
    auto m = BoundedModel::window(0, 3).with_set("S", {1, 2}).with_set("S'", {1, 2});
    CHECK(eval_bounded(tc.formula, m));
    CHECK_FALSE(eval_bounded(tc.formula, m.with_set("S'", {2})));

    // equality plus constraints still closes to plain equality
    DbsRelation r2;
    r2.int_part = {{Anchor::MinS, Anchor::MinSp, 0}, {Anchor::MinSp, Anchor::MinS, 0}};
    check_tc(r2, 3);
}

TEST_CASE("minimum chain, possibly empty tail") {
    // S = S' u {min(S)} and nothing else
    DbsRelation r;
    r.ts = {Anchor::MinS};
    auto trace = check_tc(r, 4);
    CHECK(trace.tc_case == TcCase::MinPossiblyEmpty);

    // with a width constraint on the growing set
    DbsRelation r2;
    r2.ts = {Anchor::MinS};
    r2.int_part = {{Anchor::MinS, Anchor::MaxS, -2}};
    auto t2 = check_tc(r2, 4);
    CHECK(t2.tc_case == TcCase::MinPossiblyEmpty);
}

TEST_CASE("minimum chain, strict gap") {
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = min_gap_one();
    auto trace = check_tc(r, 5);
    CHECK(trace.tc_case == TcCase::MinStrict);
    CHECK(trace.min_gap == Strictness::Strict);
    CHECK(trace.aux_vars.size() >= 3);  // unfold middle + S1 + S2
}

TEST_CASE("minimum chain, non-strict gap") {
    // S = S' u {min(S)} /\ min(S) <= min(S')
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = {{Anchor::MinS, Anchor::MinSp, 0}};
    auto trace = check_tc(r, 4);
    CHECK(trace.tc_case == TcCase::MinNonStrict);
}

TEST_CASE("maximum chain mirrors the minimum chain") {
    // S = S' u {max(S)} /\ max(S') = max(S) - 1
    DbsRelation r;
    r.ts = {Anchor::MaxS};
    r.int_part = {{Anchor::MaxSp, Anchor::MaxS, -1}, {Anchor::MaxS, Anchor::MaxSp, 1}};
    auto trace = check_tc(r, 5);
    CHECK(trace.tc_case == TcCase::MaxStrict);
    CHECK(trace.max_gap == Strictness::Strict);

    DbsRelation r2;
    r2.ts = {Anchor::MaxS};
    auto t2 = check_tc(r2, 4);
    CHECK(t2.tc_case == TcCase::MaxPossiblyEmpty);
}

TEST_CASE("inverted orientation uses the swapped construction") {
    // S' = S u {min(S')} /\ min(S) = min(S') + 1: the primed set grows
    DbsRelation r;
    r.primal = false;
    r.ts = {Anchor::MinSp};
    r.int_part = {{Anchor::MinS, Anchor::MinSp, 1}, {Anchor::MinSp, Anchor::MinS, -1}};
    check_tc(r, 5);
}

TEST_CASE("two-sided growth, possibly empty tail") {
    // S = S' u {min(S), max(S)} /\ min(S) <= max(S) - 1
    DbsRelation r;
    r.ts = {Anchor::MinS, Anchor::MaxS};
    r.int_part = {{Anchor::MinS, Anchor::MaxS, -1}};
    auto trace = check_tc(r, 4);
    CHECK(trace.tc_case == TcCase::BothPossiblyEmpty);
}

TEST_CASE("two-sided growth, nonempty tail") {
    SUBCASE("strict on both sides") {
        // min(S') = min(S) + 1 /\ max(S) = max(S') + 1
        DbsRelation r;
        r.ts = {Anchor::MinS, Anchor::MaxS};
        r.int_part = min_gap_one();
        r.int_part.push_back({Anchor::MaxS, Anchor::MaxSp, 1});
        r.int_part.push_back({Anchor::MaxSp, Anchor::MaxS, -1});
        auto trace = check_tc(r, 6);
        CHECK(trace.tc_case == TcCase::BothNonEmpty);
        CHECK(trace.min_gap == Strictness::Strict);
        CHECK(trace.max_gap == Strictness::Strict);
    }
    SUBCASE("strict min, non-strict max") {
        // min(S') = min(S) + 1 /\ max(S') <= max(S)
        DbsRelation r;
        r.ts = {Anchor::MinS, Anchor::MaxS};
        r.int_part = min_gap_one();
        r.int_part.push_back({Anchor::MaxSp, Anchor::MaxS, 0});
        auto trace = check_tc(r, 5);
        CHECK(trace.tc_case == TcCase::BothNonEmpty);
        CHECK(trace.min_gap == Strictness::Strict);
        CHECK(trace.max_gap == Strictness::NonStrict);
    }
    SUBCASE("non-strict on both sides") {
        // min(S) <= min(S') /\ max(S') <= max(S)
        DbsRelation r;
        r.ts = {Anchor::MinS, Anchor::MaxS};
        r.int_part = {{Anchor::MinS, Anchor::MinSp, 0}, {Anchor::MaxSp, Anchor::MaxS, 0}};
        auto trace = check_tc(r, 5);
        CHECK(trace.tc_case == TcCase::BothNonEmpty);
        CHECK(trace.min_gap == Strictness::NonStrict);
    }
}

TEST_CASE("lockstep product closure") {
    // two copies of the unit-gap minimum chain, advancing together
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = min_gap_one();
    auto s = sat(r);
    auto tc = tc_multi({s, s});
    REQUIRE(tc.trace.component_cases.size() == 2);
    CHECK(tc.trace.component_cases[0] == TcCase::MinStrict);

    const long long hi = 3;
    auto step = oracle::step_matrix(to_formula(r), "S", "S'", hi);
    size_t n = step.size();
    // product closure over pairs of masks
    std::vector<std::vector<bool>> prod(n * n, std::vector<bool>(n * n));
    for (size_t a1 = 0; a1 < n; a1++)
        for (size_t a2 = 0; a2 < n; a2++)
            for (size_t b1 = 0; b1 < n; b1++)
                for (size_t b2 = 0; b2 < n; b2++)
                    prod[a1 * n + a2][b1 * n + b2] = step[a1][b1] && step[a2][b2];
    auto want = oracle::closure(std::move(prod));

    for (size_t a1 = 0; a1 < n; a1++)
        for (size_t a2 = 0; a2 < n; a2++)
            for (size_t b1 = 0; b1 < n; b1++)
                for (size_t b2 = 0; b2 < n; b2++) {
                    auto m = BoundedModel::window(0, hi)
                                 .with_set("S1", oracle::mask_elems(a1, hi))
                                 .with_set("S1'", oracle::mask_elems(b1, hi))
                                 .with_set("S2", oracle::mask_elems(a2, hi))
                                 .with_set("S2'", oracle::mask_elems(b2, hi));
                    CHECK(eval_bounded(tc.formula, m) ==
                          want[a1 * n + a2][b1 * n + b2]);
                }
}

TEST_CASE("errors") {
    DbsRelation r;
    r.ts = {Anchor::MinS};
    r.int_part = min_gap_one();

    SUBCASE("unsaturated input is rejected") {
        SaturatedDbs fake;
        fake.rel = r;  // missing the derived bounds and flags
        CHECK_THROWS_AS(tc_single(fake), NotSaturated);
        CHECK_THROWS_AS(unfold_n(fake, 2), NotSaturated);
    }
    SUBCASE("shared names across components are rejected") {
        auto s = sat(r);
        CHECK_THROWS_AS(tc_multi({s, s}, {{"S", "S'"}, {"S", "T'"}}), IndependenceViolation);
    }
    SUBCASE("empty product is rejected") {
        CHECK_THROWS_AS(tc_multi({}), std::invalid_argument);
    }
}

TEST_CASE("property: random relations agree with the brute-force closure") {
    std::mt19937 rng(31);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    const Anchor anchors[] = {Anchor::MinS, Anchor::MaxS, Anchor::MinSp, Anchor::MaxSp};

    std::set<TcCase> seen;
    int done = 0;
    for (int iter = 0; iter < 400 && done < 30; iter++) {
        DbsRelation r;
        r.primal = pick(5) != 0;
        for (auto a : anchors)
            if (pick(3) == 0) r.ts.insert(a);
        int nb = pick(3);
        for (int i = 0; i < nb; i++) {
            Anchor x = anchors[pick(4)], y = anchors[pick(4)];
            if (x == y) continue;
            r.int_part.push_back({x, y, pick(5) - 2});
        }
        auto s = saturate(r);
        if (!s) continue;
        done++;
        auto trace = check_tc(r, 3);
        seen.insert(trace.tc_case);
    }
    CHECK(done == 30);
    CHECK(seen.size() >= 4);  // the generator must hit several branches
}
