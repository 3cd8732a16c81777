/* nfa.cpp -- symbolic-letter automaton algebra: product, union, complement
 * via local-minterm subset construction, projection with padding closure. */

#include "slidset/nfa.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace slidset {

int Nfa::ap_index(const std::string& v) const {
    auto it = std::lower_bound(ap.begin(), ap.end(), v);
    if (it == ap.end() || *it != v) return -1;
    return int(it - ap.begin());
}

Nfa nfa_all(std::vector<std::string> ap) {
    Nfa a;
    a.ap = std::move(ap);
    int q = a.add_state(true);
    a.add_trans(q, {0, 0}, q);
    a.init = q;
    return a;
}

Nfa nfa_none(std::vector<std::string> ap) {
    Nfa a;
    a.ap = std::move(ap);
    a.init = a.add_state(false);
    return a;
}

Nfa align(const Nfa& a, const std::vector<std::string>& ap) {
    std::vector<int> remap(a.ap.size());
    for (size_t i = 0; i < a.ap.size(); i++) {
        auto it = std::lower_bound(ap.begin(), ap.end(), a.ap[i]);
        if (it == ap.end() || *it != a.ap[i])
            throw std::invalid_argument("align: target AP is not a superset");
        remap[i] = int(it - ap.begin());
    }
    Nfa out = a;
    out.ap = ap;
    for (auto& t : out.trans) {
        uint64_t bits = 0, care = 0;
        for (size_t i = 0; i < remap.size(); i++) {
            bits |= (t.letter.bits >> i & 1) << remap[i];
            care |= (t.letter.care >> i & 1) << remap[i];
        }
        t.letter = {bits, care};
    }
    return out;
}

std::vector<std::string> ap_union(const Nfa& a, const Nfa& b) {
    std::vector<std::string> ap;
    std::set_union(a.ap.begin(), a.ap.end(), b.ap.begin(), b.ap.end(), std::back_inserter(ap));
    return ap;
}

Nfa product(const Nfa& a0, const Nfa& b0, size_t budget) {
    auto ap = ap_union(a0, b0);
    Nfa a = align(a0, ap), b = align(b0, ap);
    Nfa out;
    out.ap = ap;
    std::map<std::pair<int, int>, int> id;
    std::deque<std::pair<int, int>> work;
    auto state = [&](int x, int y) {
        auto [it, fresh] = id.try_emplace({x, y}, out.states);
        if (fresh) {
            out.add_state(a.finals[x] && b.finals[y]);
            if (size_t(out.states) > budget) throw StateBlowup(budget);
            work.push_back({x, y});
        }
        return it->second;
    };
    out.init = state(a.init, b.init);
    // Outgoing transitions indexed by source state.
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
    return trim(out);
}

Nfa nfa_union(const Nfa& a0, const Nfa& b0) {
    auto ap = ap_union(a0, b0);
    Nfa a = align(a0, ap), b = align(b0, ap);
    Nfa out;
    out.ap = ap;
    out.states = a.states + b.states;
    out.finals = a.finals;
    out.finals.insert(out.finals.end(), b.finals.begin(), b.finals.end());
    out.trans = a.trans;
    for (auto t : b.trans) out.trans.push_back({t.from + a.states, t.letter, t.to + a.states});
    // Fresh initial state replicating both initial states' behaviour.
    out.init = out.add_state(a.finals[a.init] || b.finals[b.init]);
    for (auto& t : a.trans)
        if (t.from == a.init) out.add_trans(out.init, t.letter, t.to);
    for (auto& t : b.trans)
        if (t.from == b.init) out.add_trans(out.init, t.letter, t.to + a.states);
    return trim(out);
}

namespace {

// Concrete letters (over `vars` bit positions) that partition the behaviour
// of the given transition set: one representative per minterm of the union
// of care masks.
std::vector<uint64_t> care_minterms(uint64_t care) {
    std::vector<uint64_t> bitsOf;
    for (int i = 0; i < 64; i++)
        if (care >> i & 1) bitsOf.push_back(uint64_t(1) << i);
    std::vector<uint64_t> out;
    out.reserve(size_t(1) << bitsOf.size());
    for (uint64_t m = 0; m < (uint64_t(1) << bitsOf.size()); m++) {
        uint64_t letter = 0;
        for (size_t i = 0; i < bitsOf.size(); i++)
            if (m >> i & 1) letter |= bitsOf[i];
        out.push_back(letter);
    }
    return out;
}

}  // namespace

Nfa complement(const Nfa& a, size_t budget) {
    std::vector<std::vector<const Nfa::Trans*>> outT(a.states);
    for (auto& t : a.trans) outT[t.from].push_back(&t);

    Nfa out;
    out.ap = a.ap;
    std::map<std::set<int>, int> id;
    std::deque<std::set<int>> work;
    auto state = [&](const std::set<int>& qs) {
        auto [it, fresh] = id.try_emplace(qs, out.states);
        if (fresh) {
            bool fin = std::any_of(qs.begin(), qs.end(), [&](int q) { return a.finals[q]; });
            out.add_state(!fin);  // complemented acceptance
            if (size_t(out.states) > budget) throw StateBlowup(budget);
            work.push_back(qs);
        }
        return it->second;
    };
    out.init = state({a.init});
    while (!work.empty()) {
        auto qs = work.front();
        work.pop_front();
        int from = id.at(qs);
        uint64_t care = 0;
        for (int q : qs)
            for (auto* t : outT[q]) care |= t->letter.care;
        for (uint64_t letter : care_minterms(care)) {
            std::set<int> next;
            for (int q : qs)
                for (auto* t : outT[q])
                    if (t->letter.matches(letter)) next.insert(t->to);
            out.add_trans(from, {letter, care}, state(next));
        }
    }
    return out;
}

void padding_close(Nfa& a) {
    std::vector<std::vector<int>> blankPred(a.states);
    for (auto& t : a.trans)
        if (t.letter.blank_ok()) blankPred[t.to].push_back(t.from);
    std::deque<int> work;
    for (int q = 0; q < a.states; q++)
        if (a.finals[q]) work.push_back(q);
    while (!work.empty()) {
        int q = work.front();
        work.pop_front();
        for (int p : blankPred[q])
            if (!a.finals[p]) {
                a.finals[p] = true;
                work.push_back(p);
            }
    }
}

Nfa project(const Nfa& a, const std::string& var) {
    int idx = a.ap_index(var);
    if (idx < 0) {
        Nfa out = a;
        padding_close(out);
        return out;
    }
    uint64_t low = (uint64_t(1) << idx) - 1;
    Nfa out;
    out.ap = a.ap;
    out.ap.erase(out.ap.begin() + idx);
    out.states = a.states;
    out.init = a.init;
    out.finals = a.finals;
    for (auto t : a.trans) {
        auto drop = [&](uint64_t w) { return (w & low) | ((w >> (idx + 1)) << idx); };
        t.letter = {drop(t.letter.bits), drop(t.letter.care)};
        out.trans.push_back(t);
    }
    padding_close(out);
    return trim(out);
}

Nfa trim(const Nfa& a) {
    std::vector<std::vector<int>> fwd(a.states), bwd(a.states);
    for (auto& t : a.trans) {
        fwd[t.from].push_back(t.to);
        bwd[t.to].push_back(t.from);
    }
    auto reach = [&](std::vector<int> seeds, const std::vector<std::vector<int>>& adj) {
        std::vector<bool> seen(a.states);
        std::deque<int> work;
        for (int s : seeds)
            if (!seen[s]) {
                seen[s] = true;
                work.push_back(s);
            }
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

    std::vector<int> remap(a.states, -1);
    Nfa out;
    out.ap = a.ap;
    for (int q = 0; q < a.states; q++)
        if ((fromInit[q] && toFinal[q]) || q == a.init) remap[q] = out.add_state(a.finals[q]);
    out.init = remap[a.init];
    for (auto& t : a.trans)
        if (remap[t.from] >= 0 && remap[t.to] >= 0 && fromInit[t.from] && toFinal[t.to])
            out.add_trans(remap[t.from], t.letter, remap[t.to]);
    return out;
}

bool accepts(const Nfa& a, const Word& w) {
    std::set<int> cur{a.init};
    for (uint64_t letter : w) {
        std::set<int> next;
        for (auto& t : a.trans)
            if (cur.count(t.from) && t.letter.matches(letter)) next.insert(t.to);
        cur = std::move(next);
        if (cur.empty()) return false;
    }
    for (int q : cur)
        if (a.finals[q]) return true;
    return false;
}

bool is_empty_lang(const Nfa& a) {
    Nfa t = trim(a);
    for (bool f : t.finals)
        if (f) return false;
    return true;
}

std::string to_string(const Nfa& a) {
    // Stable plain-text dump: header, then sorted transitions with the
    // letter shown as the sorted set of present variables (don't-care
    // variables marked with '?'), then the final-state list.
    std::ostringstream os;
    os << "nfa states=" << a.states << " init=" << a.init << " ap={";
    for (size_t i = 0; i < a.ap.size(); i++) os << (i ? "," : "") << a.ap[i];
    os << "}\n";
    std::vector<std::tuple<int, std::string, int>> rows;
    for (auto& t : a.trans) {
        std::string letter = "{";
        bool first = true;
        for (size_t i = 0; i < a.ap.size(); i++) {
            bool care = t.letter.care >> i & 1, bit = t.letter.bits >> i & 1;
            if (care && !bit) continue;
            if (!first) letter += ",";
            first = false;
            letter += a.ap[i];
            if (!care) letter += "?";
        }
        letter += "}";
        rows.push_back({t.from, letter, t.to});
    }
    std::stable_sort(rows.begin(), rows.end());
    for (auto& [from, letter, to] : rows) os << "  " << from << " " << letter << " " << to << "\n";
    os << "final:";
    for (int q = 0; q < a.states; q++)
        if (a.finals[q]) os << " " << q;
    os << "\n";
    return os.str();
}

}  // namespace slidset
