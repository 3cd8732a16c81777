/* test_nfa.cpp -- Boolean-algebra laws for the symbolic automaton layer,
 * checked by exhaustive enumeration of words up to a length bound. */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "slidset/nfa.hpp"

#include <functional>
#include <random>

using namespace slidset;

namespace {

// Calls fn on every word over `bits` atomic propositions with length <= len.
void each_word(int bits, int len, const std::function<void(const Word&)>& fn) {
    Word w;
    std::function<void()> rec = [&] {
        fn(w);
        if (int(w.size()) == len) return;
        for (uint64_t l = 0; l < (uint64_t(1) << bits); l++) {
            w.push_back(l);
            rec();
            w.pop_back();
        }
    };
    rec();
}

// "v occurs in exactly one letter".
Nfa once(const std::string& v) {
    Nfa a;
    a.ap = {v};
    int q0 = a.add_state(false), q1 = a.add_state(true);
    a.init = q0;
    a.add_trans(q0, {0, 1}, q0);
    a.add_trans(q0, {1, 1}, q1);
    a.add_trans(q1, {0, 1}, q1);
    return a;
}

// "every letter containing p also contains q".
Nfa p_implies_q() {
    Nfa a;
    a.ap = {"p", "q"};
    int s = a.add_state(true);
    a.init = s;
    a.add_trans(s, {0, 1}, s);  // no p, q free
    a.add_trans(s, {3, 3}, s);  // p and q
    return a;
}

// Random NFA over the given AP for property checks.
Nfa random_nfa(std::mt19937& rng, std::vector<std::string> ap, int states, int edges) {
    Nfa a;
    a.ap = std::move(ap);
    std::uniform_int_distribution<int> st(0, states - 1);
    std::uniform_int_distribution<uint64_t> bt(0, (uint64_t(1) << a.ap.size()) - 1);
    for (int i = 0; i < states; i++) a.add_state(rng() % 2 == 0);
    a.init = st(rng);
    for (int i = 0; i < edges; i++) {
        uint64_t care = bt(rng);
        a.add_trans(st(rng), {bt(rng) & care, care}, st(rng));
    }
    return a;
}

}  // namespace

TEST_CASE("letters: matching and merging") {
    Letter any{0, 0}, p{1, 1}, noP{0, 1}, pq{3, 3};
    CHECK(any.matches(0));
    CHECK(any.matches(3));
    CHECK(p.matches(1));
    CHECK(p.matches(3));
    CHECK(!p.matches(2));
    CHECK(!noP.matches(1));
    CHECK(p.compatible(any));
    CHECK(!p.compatible(noP));
    CHECK(p.compatible(pq));
    Letter m = p.merged(pq);
    CHECK(m.bits == 3);
    CHECK(m.care == 3);
    CHECK(any.blank_ok());
    CHECK(noP.blank_ok());
    CHECK(!p.blank_ok());
}

TEST_CASE("basic acceptance and trivial automata") {
    Nfa a = once("x");
    CHECK(!accepts(a, {}));
    CHECK(accepts(a, {1}));
    CHECK(accepts(a, {0, 1, 0}));
    CHECK(!accepts(a, {1, 1}));
    CHECK(!is_empty_lang(a));
    CHECK(is_empty_lang(nfa_none({"x"})));
    CHECK(accepts(nfa_all({"x"}), {}));
    CHECK(accepts(nfa_all({"x"}), {1, 0, 1}));
}

TEST_CASE("product is intersection, union is union, complement flips") {
    Nfa A = once("p");
    Nfa B = p_implies_q();  // shared var p, extra var q
    Nfa I = product(A, B);
    Nfa U = nfa_union(A, B);
    Nfa C = complement(A);
    // A over {p} and the combined automata over {p,q}: A ignores q.
    each_word(2, 5, [&](const Word& w) {
        Word wp;  // w restricted to p (bit 0)
        for (uint64_t l : w) wp.push_back(l & 1);
        bool inA = accepts(A, wp), inB = accepts(B, w);
        CHECK(accepts(I, w) == (inA && inB));
        CHECK(accepts(U, w) == (inA || inB));
        CHECK(accepts(C, wp) == !inA);
    });
}

TEST_CASE("complement and product on random automata") {
    std::mt19937 rng(7);
    for (int it = 0; it < 25; it++) {
        Nfa A = random_nfa(rng, {"p", "q"}, 3, 6);
        Nfa B = random_nfa(rng, {"q", "r"}, 3, 6);
        Nfa C = complement(A);
        Nfa CC = complement(C);
        Nfa P = product(A, B);
        each_word(2, 4, [&](const Word& w) {
            bool inA = accepts(A, w);
            CHECK(accepts(C, w) == !inA);
            CHECK(accepts(CC, w) == inA);
        });
        // product over ap {p,q,r}: A reads bits {p,q}, B reads bits {q,r}.
        each_word(3, 4, [&](const Word& w) {
            Word wa, wb;
            for (uint64_t l : w) {
                wa.push_back(l & 3);
                wb.push_back(l >> 1);
            }
            CHECK(accepts(P, w) == (accepts(A, wa) && accepts(B, wb)));
        });
    }
}

TEST_CASE("trim preserves the language") {
    std::mt19937 rng(11);
    for (int it = 0; it < 40; it++) {
        Nfa A = random_nfa(rng, {"p"}, 4, 5);
        Nfa T = trim(A);
        CHECK(T.states <= A.states);
        each_word(1, 6, [&](const Word& w) { CHECK(accepts(A, w) == accepts(T, w)); });
    }
}

TEST_CASE("projection with padding closure") {
    // L = words where p occurs exactly once and q occurs exactly once and
    // the q-position is strictly after the p-position.
    Nfa a;
    a.ap = {"p", "q"};
    int s0 = a.add_state(false), s1 = a.add_state(false), s2 = a.add_state(true);
    a.init = s0;
    a.add_trans(s0, {0, 3}, s0);
    a.add_trans(s0, {1, 3}, s1);  // p alone
    a.add_trans(s1, {0, 3}, s1);
    a.add_trans(s1, {2, 3}, s2);  // q alone
    a.add_trans(s2, {0, 3}, s2);

    // Projecting q away: "p occurs exactly once, not at the last position"
    // becomes "p occurs exactly once" thanks to the padding closure (the
    // q-letter beyond p's position projects to a trailing blank).
    Nfa pr = project(a, "q");
    REQUIRE(pr.ap == std::vector<std::string>{"p"});
    each_word(1, 6, [&](const Word& w) {
        int count = 0;
        for (uint64_t l : w) count += int(l & 1);
        CHECK(accepts(pr, w) == (count == 1));
    });

    // Projection of a variable not in the AP only pads; a trailing q-letter
    // is not blank while q is still in the AP, so it stays mandatory.
    Nfa same = project(a, "z");
    CHECK(same.ap == a.ap);
    CHECK(accepts(same, {1, 2}));
    CHECK(!accepts(same, {1}));
}

TEST_CASE("padding closure agrees with explicit blank extension") {
    std::mt19937 rng(23);
    for (int it = 0; it < 30; it++) {
        Nfa A = random_nfa(rng, {"p", "q"}, 4, 7);
        Nfa P = A;
        padding_close(P);
        each_word(2, 4, [&](const Word& w) {
            // P accepts w iff A accepts w . blank^k for some k.
            bool ext = false;
            Word padded = w;
            for (int k = 0; k <= 6 && !ext; k++) {
                ext = accepts(A, padded);
                padded.push_back(0);
            }
            CHECK(accepts(P, w) == ext);
        });
    }
}

TEST_CASE("align embeds into a larger AP") {
    Nfa A = once("q");
    Nfa B = align(A, {"p", "q", "r"});
    CHECK(accepts(B, {2}));
    CHECK(accepts(B, {5, 2, 1}));  // other bits are don't-care
    CHECK(!accepts(B, {5, 1}));
    CHECK_THROWS_AS(align(A, {"p", "r"}), std::invalid_argument);
}

TEST_CASE("state budgets raise StateBlowup") {
    Nfa A = once("p"), B = once("q");
    CHECK_THROWS_AS(product(A, B, 2), StateBlowup);
    CHECK_THROWS_AS(complement(product(A, B), 1), StateBlowup);
}

TEST_CASE("dump format is stable and readable") {
    Nfa a = once("x");
    std::string d = to_string(a);
    CHECK(d == "nfa states=2 init=0 ap={x}\n"
               "  0 {x} 1\n"
               "  0 {} 0\n"
               "  1 {} 1\n"
               "final: 1\n");
    Nfa all = nfa_all({"u", "v"});
    CHECK(to_string(all) == "nfa states=1 init=0 ap={u,v}\n"
                            "  0 {u?,v?} 0\n"
                            "final: 0\n");
}
