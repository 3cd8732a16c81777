/* parikh.hpp -- existential-Presburger characterization of the Parikh
 * images of an automaton's accepting runs (flow conservation plus
 * spanning-tree connectivity over transition counts). */

#pragma once

#include "slidset/nfa.hpp"
#include "slidset/qfpa.hpp"

#include <string>

namespace slidset {

// Count variable for transition index i of the automaton.
std::string parikh_var(size_t i);
// Auxiliary depth variable for state q (extra solver variable; treat as
// existentially quantified and nonnegative).
std::string parikh_depth_var(int q);

// Formula over the transition-count variables (and auxiliary depth
// variables) whose solutions, restricted to the count variables, are
// exactly the Parikh images of accepting runs of the automaton.  All
// variables are meant to range over the naturals.
QfpaRef parikh_formula(const Nfa& nfa);

// The flow-conservation part alone (no connectivity): a relaxation of
// parikh_formula whose solutions may describe a run plus disconnected
// cycles.  Useful for solving lazily: check a solution's support for
// reachability and add a cut when it is disconnected.
QfpaRef parikh_flow_formula(const Nfa& nfa);

}  // namespace slidset
