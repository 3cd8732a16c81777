/* qfpa.hpp -- quantifier-free linear integer arithmetic: formulas over
 * linear atoms and divisibility atoms, satisfiability with model
 * extraction, and single-variable existential elimination. */

#pragma once

#include "slidset/formula.hpp"  // CmpOp

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace slidset {

struct Budget : std::runtime_error {
    explicit Budget(const std::string& what) : std::runtime_error("budget exhausted: " + what) {}
};

// Raised when eliminate_exists meets an atom it cannot treat as linear in
// the eliminated variable.  LinExpr is linear by construction, so in
// practice this guards against internal misuse only.
struct NonLinearInX : std::runtime_error {
    explicit NonLinearInX(const std::string& var)
        : std::runtime_error("not linear in " + var) {}
};

// Sum of coeff*var plus a constant.
struct LinExpr {
    std::map<std::string, long long> coeffs;
    long long constant = 0;

    static LinExpr of(long long c) {
        LinExpr e;
        e.constant = c;
        return e;
    }
    static LinExpr var(const std::string& v, long long coeff = 1) {
        LinExpr e;
        if (coeff != 0) e.coeffs[v] = coeff;
        return e;
    }
    LinExpr& add(const LinExpr& o, long long scale = 1);
    LinExpr scaled(long long k) const;
    long long coeff(const std::string& v) const {
        auto it = coeffs.find(v);
        return it == coeffs.end() ? 0 : it->second;
    }
    bool is_constant() const { return coeffs.empty(); }
};

enum class QfpaKind { True, False, Cmp, Div, Not, And, Or };

struct Qfpa;
using QfpaRef = std::shared_ptr<const Qfpa>;

struct Qfpa {
    QfpaKind kind;
    LinExpr expr;             // Cmp: expr op 0; Div: expr ≡ 0 (mod modulus)
    CmpOp op = CmpOp::Eq;     // Cmp
    long long modulus = 0;    // Div, >= 2
    std::vector<QfpaRef> kids;
};

QfpaRef q_true();
QfpaRef q_false();
QfpaRef q_cmp(LinExpr e, CmpOp op);
QfpaRef q_div(LinExpr e, long long modulus);
QfpaRef q_not(QfpaRef f);
QfpaRef q_and(std::vector<QfpaRef> kids);
QfpaRef q_and(QfpaRef a, QfpaRef b);
QfpaRef q_or(std::vector<QfpaRef> kids);
QfpaRef q_or(QfpaRef a, QfpaRef b);

std::set<std::string> qfpa_vars(const QfpaRef& f);
std::string to_string(const QfpaRef& f);
std::string to_string(const LinExpr& e);

using QfpaModel = std::map<std::string, long long>;

bool qfpa_eval(const QfpaRef& f, const QfpaModel& m);

// Satisfiability with model extraction.  Variables listed in `nonneg` are
// constrained to be >= 0.  Complete: never returns "unknown"; instances that
// exceed the resource cap raise Budget instead.  Small variable counts are
// decided by variable elimination (always terminates); larger instances go
// through rational simplex with branch and bound under `budget` node count.
std::optional<QfpaModel> qfpa_sat(const QfpaRef& f, const std::set<std::string>& nonneg = {},
                                  long long budget = 2'000'000);

// Quantifier-free equivalent of  exists x >= lower. f.
QfpaRef eliminate_exists(const QfpaRef& f, const std::string& x, long long lower);

}  // namespace slidset
