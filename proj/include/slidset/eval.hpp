/* eval.hpp -- bounded-window evaluation of formulas.  Quantifiers range over
 * a finite integer window; set values are subsets of that window. */

#pragma once

#include "slidset/formula.hpp"

#include <map>
#include <string>
#include <vector>

namespace slidset {

// A finite model: every quantifier ranges over [lo, hi] and every set value
// is a subset of [lo, hi].  Free integer variables may hold any value.
struct BoundedModel {
    long long lo = 0, hi = 0;
    std::map<std::string, long long> ints;
    std::map<std::string, std::vector<long long>> sets;

    static BoundedModel window(long long lo, long long hi) {
        BoundedModel m;
        m.lo = lo;
        m.hi = hi;
        return m;
    }
    BoundedModel& with_int(const std::string& name, long long v) {
        ints[name] = v;
        return *this;
    }
    BoundedModel& with_set(const std::string& name, std::vector<long long> elems) {
        sets[name] = std::move(elems);
        return *this;
    }
};

// Evaluates `f` in `m`.  min/max of an empty set makes the enclosing atom
// false (and hence its negation true); the derived forms != on both sorts
// behave as the negation of =, so an undefined operand makes them true.
// Throws UnboundVariable when a free
// variable has no assignment, and std::out_of_range when a set value of the
// model falls outside the window or the window is wider than 62 values.
bool eval_bounded(const FormulaRef& f, const BoundedModel& m);

}  // namespace slidset
