/* oracles.hpp -- independent brute-force reference implementations used to
 * cross-check the symbolic engines over small finite windows. */

#pragma once

#include "slidset/dbs.hpp"
#include "slidset/eval.hpp"
#include "slidset/formula.hpp"

#include <cstdint>
#include <vector>

namespace slidset::oracle {

// Elements of the subset of {0..hi} encoded by the bit mask.
inline std::vector<long long> mask_elems(uint64_t mask, long long hi) {
    std::vector<long long> out;
    for (long long v = 0; v <= hi; v++)
        if (mask >> v & 1) out.push_back(v);
    return out;
}

// step[a][b] = whether (A, B) with masks a, b satisfies the relation formula
// over the window {0..hi}.
inline std::vector<std::vector<bool>> step_matrix(const FormulaRef& rel, const std::string& s,
                                                  const std::string& sp, long long hi) {
    size_t n = size_t(1) << (hi + 1);
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n));
    for (size_t a = 0; a < n; a++)
        for (size_t b = 0; b < n; b++) {
            auto mod = BoundedModel::window(0, hi)
                           .with_set(s, mask_elems(a, hi))
                           .with_set(sp, mask_elems(b, hi));
            m[a][b] = eval_bounded(rel, mod);
        }
    return m;
}

// Reflexive-transitive closure of a step matrix (Warshall).
inline std::vector<std::vector<bool>> closure(std::vector<std::vector<bool>> m) {
    size_t n = m.size();
    for (size_t i = 0; i < n; i++) m[i][i] = true;
    for (size_t k = 0; k < n; k++)
        for (size_t i = 0; i < n; i++) {
            if (!m[i][k]) continue;
            for (size_t j = 0; j < n; j++)
                if (m[k][j]) m[i][j] = true;
        }
    return m;
}

// Reflexive-transitive closure of the relation over the window, indexed by
// subset masks.
inline std::vector<std::vector<bool>> closure_matrix(const FormulaRef& rel, const std::string& s,
                                                     const std::string& sp, long long hi) {
    return closure(step_matrix(rel, s, sp, hi));
}

}  // namespace slidset::oracle
