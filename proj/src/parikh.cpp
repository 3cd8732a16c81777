/* parikh.cpp -- flow-based Parikh image construction with depth-variable
 * connectivity, one disjunct per accepting sink. */

#include "slidset/parikh.hpp"

namespace slidset {

std::string parikh_var(size_t i) { return "t#" + std::to_string(i); }
std::string parikh_depth_var(int q) { return "d#" + std::to_string(q); }

namespace {

// inflow/outflow of each state as linear expressions over the counts.
void flows(const Nfa& nfa, std::vector<LinExpr>& in, std::vector<LinExpr>& out) {
    in.assign(nfa.states, {});
    out.assign(nfa.states, {});
    for (size_t i = 0; i < nfa.trans.size(); i++) {
        auto& t = nfa.trans[i];
        in[t.to].add(LinExpr::var(parikh_var(i)));
        out[t.from].add(LinExpr::var(parikh_var(i)));
    }
}

// One disjunct per accepting sink: flow conservation with a unit of excess
// at the initial state and a unit of demand at the sink.
QfpaRef sink_disjunction(const Nfa& nfa, const std::vector<LinExpr>& in,
                         const std::vector<LinExpr>& out) {
    std::vector<QfpaRef> disjuncts;
    for (int f = 0; f < nfa.states; f++) {
        if (!nfa.finals[f]) continue;
        std::vector<QfpaRef> flow;
        for (int q = 0; q < nfa.states; q++) {
            LinExpr balance = in[q];
            balance.add(out[q], -1);
            balance.add(LinExpr::of((q == nfa.init ? 1 : 0) - (q == f ? 1 : 0)));
            flow.push_back(q_cmp(balance, CmpOp::Eq));
        }
        disjuncts.push_back(q_and(std::move(flow)));
    }
    if (disjuncts.empty()) return q_false();
    return q_or(std::move(disjuncts));
}

}  // namespace

QfpaRef parikh_formula(const Nfa& nfa) {
    std::vector<LinExpr> in, out;
    flows(nfa, in, out);
    std::vector<std::vector<size_t>> into(nfa.states);
    for (size_t i = 0; i < nfa.trans.size(); i++) into[nfa.trans[i].to].push_back(i);

    std::vector<QfpaRef> shared;
    for (size_t i = 0; i < nfa.trans.size(); i++)
        shared.push_back(q_cmp(LinExpr::var(parikh_var(i)), CmpOp::Ge));

    // Connectivity: depth 1 at the initial state; every other state either
    // has zero inflow (and depth 0) or an incoming used transition whose
    // source sits one depth level below.  Strict depth increase rules out
    // disconnected cycles.
    shared.push_back(q_cmp(LinExpr::var(parikh_depth_var(nfa.init)).add(LinExpr::of(-1)), CmpOp::Eq));
    for (int q = 0; q < nfa.states; q++) {
        if (q == nfa.init) continue;
        std::vector<QfpaRef> options;
        options.push_back(q_and(q_cmp(in[q], CmpOp::Eq),
                                q_cmp(LinExpr::var(parikh_depth_var(q)), CmpOp::Eq)));
        for (size_t i : into[q]) {
            int src = nfa.trans[i].from;
            options.push_back(q_and(
                {q_cmp(LinExpr::var(parikh_var(i)).add(LinExpr::of(-1)), CmpOp::Ge),
                 q_cmp(LinExpr::var(parikh_depth_var(src)).add(LinExpr::of(-1)), CmpOp::Ge),
                 q_cmp(LinExpr::var(parikh_depth_var(q))
                           .add(LinExpr::var(parikh_depth_var(src)), -1)
                           .add(LinExpr::of(-1)),
                       CmpOp::Eq)}));
        }
        shared.push_back(q_or(std::move(options)));
    }
    QfpaRef common = q_and(std::move(shared));
    return q_and(common, sink_disjunction(nfa, in, out));
}

QfpaRef parikh_flow_formula(const Nfa& nfa) {
    std::vector<LinExpr> in, out;
    flows(nfa, in, out);
    std::vector<QfpaRef> shared;
    for (size_t i = 0; i < nfa.trans.size(); i++)
        shared.push_back(q_cmp(LinExpr::var(parikh_var(i)), CmpOp::Ge));
    return q_and(q_and(std::move(shared)), sink_disjunction(nfa, in, out));
}

}  // namespace slidset
