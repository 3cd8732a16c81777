/* qfpa.cpp -- linear integer arithmetic: normalization, Cooper-style
 * single-variable elimination, and satisfiability via either a complete
 * elimination chain (few variables) or rational simplex with branch and
 * bound (many variables, e.g. Parikh images). */

#include "slidset/qfpa.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <sstream>

namespace slidset {

// ---------------------------------------------------------------------------
// LinExpr
// ---------------------------------------------------------------------------

LinExpr& LinExpr::add(const LinExpr& o, long long scale) {
    constant += scale * o.constant;
    for (auto& [v, c] : o.coeffs) {
        long long nc = coeffs[v] + scale * c;
        if (nc == 0)
            coeffs.erase(v);
        else
            coeffs[v] = nc;
    }
    return *this;
}

LinExpr LinExpr::scaled(long long k) const {
    LinExpr e;
    if (k == 0) return e;
    e.constant = constant * k;
    for (auto& [v, c] : coeffs) e.coeffs[v] = c * k;
    return e;
}

// ---------------------------------------------------------------------------
// Builders with constant folding
// ---------------------------------------------------------------------------

static std::shared_ptr<Qfpa> qmk(QfpaKind k) {
    auto f = std::make_shared<Qfpa>();
    f->kind = k;
    return f;
}

QfpaRef q_true() {
    static QfpaRef t = qmk(QfpaKind::True);
    return t;
}

QfpaRef q_false() {
    static QfpaRef f = qmk(QfpaKind::False);
    return f;
}

static bool const_cmp(long long v, CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return v == 0;
        case CmpOp::Le: return v <= 0;
        case CmpOp::Ge: return v >= 0;
        case CmpOp::Lt: return v < 0;
        case CmpOp::Gt: return v > 0;
        case CmpOp::Ne: return v != 0;
    }
    return false;
}

QfpaRef q_cmp(LinExpr e, CmpOp op) {
    if (e.is_constant()) return const_cmp(e.constant, op) ? q_true() : q_false();
    auto f = qmk(QfpaKind::Cmp);
    f->expr = std::move(e);
    f->op = op;
    return f;
}

QfpaRef q_div(LinExpr e, long long modulus) {
    if (modulus <= 0) throw std::invalid_argument("divisibility modulus must be positive");
    if (modulus == 1) return q_true();
    if (e.is_constant()) return e.constant % modulus == 0 ? q_true() : q_false();
    auto f = qmk(QfpaKind::Div);
    f->expr = std::move(e);
    f->modulus = modulus;
    return f;
}

QfpaRef q_not(QfpaRef g) {
    if (g->kind == QfpaKind::True) return q_false();
    if (g->kind == QfpaKind::False) return q_true();
    if (g->kind == QfpaKind::Not) return g->kids[0];
    auto f = qmk(QfpaKind::Not);
    f->kids.push_back(std::move(g));
    return f;
}

QfpaRef q_and(std::vector<QfpaRef> kids) {
    std::vector<QfpaRef> out;
    for (auto& k : kids) {
        if (k->kind == QfpaKind::False) return q_false();
        if (k->kind == QfpaKind::True) continue;
        if (k->kind == QfpaKind::And)
            out.insert(out.end(), k->kids.begin(), k->kids.end());
        else
            out.push_back(k);
    }
    if (out.empty()) return q_true();
    if (out.size() == 1) return out[0];
    auto f = qmk(QfpaKind::And);
    f->kids = std::move(out);
    return f;
}

QfpaRef q_and(QfpaRef a, QfpaRef b) { return q_and(std::vector<QfpaRef>{std::move(a), std::move(b)}); }

QfpaRef q_or(std::vector<QfpaRef> kids) {
    std::vector<QfpaRef> out;
    for (auto& k : kids) {
        if (k->kind == QfpaKind::True) return q_true();
        if (k->kind == QfpaKind::False) continue;
        if (k->kind == QfpaKind::Or)
            out.insert(out.end(), k->kids.begin(), k->kids.end());
        else
            out.push_back(k);
    }
    if (out.empty()) return q_false();
    if (out.size() == 1) return out[0];
    auto f = qmk(QfpaKind::Or);
    f->kids = std::move(out);
    return f;
}

QfpaRef q_or(QfpaRef a, QfpaRef b) { return q_or(std::vector<QfpaRef>{std::move(a), std::move(b)}); }

// ---------------------------------------------------------------------------
// Inspection / evaluation
// ---------------------------------------------------------------------------

static void vars_into(const QfpaRef& f, std::set<std::string>& out) {
    switch (f->kind) {
        case QfpaKind::Cmp:
        case QfpaKind::Div:
            for (auto& [v, c] : f->expr.coeffs) {
                (void)c;
                out.insert(v);
            }
            return;
        default:
            for (auto& k : f->kids) vars_into(k, out);
    }
}

std::set<std::string> qfpa_vars(const QfpaRef& f) {
    std::set<std::string> out;
    vars_into(f, out);
    return out;
}

std::string to_string(const LinExpr& e) {
    std::ostringstream os;
    bool first = true;
    for (auto& [v, c] : e.coeffs) {
        if (first) {
            if (c < 0) os << "-";
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        if (std::llabs(c) != 1) os << std::llabs(c) << "*";
        os << v;
        first = false;
    }
    if (first)
        os << e.constant;
    else if (e.constant != 0)
        os << (e.constant < 0 ? " - " : " + ") << std::llabs(e.constant);
    return os.str();
}

std::string to_string(const QfpaRef& f) {
    switch (f->kind) {
        case QfpaKind::True: return "true";
        case QfpaKind::False: return "false";
        case QfpaKind::Cmp: {
            const char* ops[] = {"=", "<=", ">=", "<", ">", "!="};
            return to_string(f->expr) + " " + ops[(int)f->op] + " 0";
        }
        case QfpaKind::Div:
            return "(" + to_string(f->expr) + ") mod " + std::to_string(f->modulus) + " = 0";
        case QfpaKind::Not: return "!(" + to_string(f->kids[0]) + ")";
        case QfpaKind::And:
        case QfpaKind::Or: {
            std::string sep = f->kind == QfpaKind::And ? " /\\ " : " \\/ ";
            std::string s = "(";
            for (size_t i = 0; i < f->kids.size(); i++) s += (i ? sep : "") + to_string(f->kids[i]);
            return s + ")";
        }
    }
    return "?";
}

static long long eval_expr(const LinExpr& e, const QfpaModel& m) {
    long long sum = e.constant;
    for (auto& [v, c] : e.coeffs) {
        auto it = m.find(v);
        if (it == m.end()) throw UnboundVariable(v);
        sum += c * it->second;
    }
    return sum;
}

bool qfpa_eval(const QfpaRef& f, const QfpaModel& m) {
    switch (f->kind) {
        case QfpaKind::True: return true;
        case QfpaKind::False: return false;
        case QfpaKind::Cmp: return const_cmp(eval_expr(f->expr, m), f->op);
        case QfpaKind::Div: {
            long long r = eval_expr(f->expr, m) % f->modulus;
            return r == 0;
        }
        case QfpaKind::Not: return !qfpa_eval(f->kids[0], m);
        case QfpaKind::And:
            for (auto& k : f->kids)
                if (!qfpa_eval(k, m)) return false;
            return true;
        case QfpaKind::Or:
            for (auto& k : f->kids)
                if (qfpa_eval(k, m)) return true;
            return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Normalization: NNF with atoms among { e <= 0, e = 0, e ≡ 0 (mod m) }
// ---------------------------------------------------------------------------

static QfpaRef norm(const QfpaRef& f, bool positive) {
    switch (f->kind) {
        case QfpaKind::True: return positive ? q_true() : q_false();
        case QfpaKind::False: return positive ? q_false() : q_true();
        case QfpaKind::Cmp: {
            LinExpr e = f->expr;
            CmpOp op = f->op;
            if (!positive) {
                // negate the comparison, then fall through to normalization
                switch (op) {
                    case CmpOp::Eq: op = CmpOp::Ne; break;
                    case CmpOp::Ne: op = CmpOp::Eq; break;
                    case CmpOp::Le: op = CmpOp::Gt; break;
                    case CmpOp::Gt: op = CmpOp::Le; break;
                    case CmpOp::Ge: op = CmpOp::Lt; break;
                    case CmpOp::Lt: op = CmpOp::Ge; break;
                }
            }
            switch (op) {
                case CmpOp::Eq: return q_cmp(e, CmpOp::Eq);
                case CmpOp::Le: return q_cmp(e, CmpOp::Le);
                case CmpOp::Ge: return q_cmp(e.scaled(-1), CmpOp::Le);
                case CmpOp::Lt: {
                    e.constant += 1;
                    return q_cmp(e, CmpOp::Le);
                }
                case CmpOp::Gt: {
                    LinExpr g = e.scaled(-1);
                    g.constant += 1;
                    return q_cmp(g, CmpOp::Le);
                }
                case CmpOp::Ne: {
                    LinExpr a = e, b = e.scaled(-1);
                    a.constant += 1;  // e + 1 <= 0  (e < 0)
                    b.constant += 1;  // -e + 1 <= 0 (e > 0)
                    return q_or(q_cmp(a, CmpOp::Le), q_cmp(b, CmpOp::Le));
                }
            }
            return f;
        }
        case QfpaKind::Div: {
            if (positive) return q_div(f->expr, f->modulus);
            std::vector<QfpaRef> ds;
            for (long long r = 1; r < f->modulus; r++) {
                LinExpr e = f->expr;
                e.constant -= r;
                ds.push_back(q_div(e, f->modulus));
            }
            return q_or(std::move(ds));
        }
        case QfpaKind::Not: return norm(f->kids[0], !positive);
        case QfpaKind::And:
        case QfpaKind::Or: {
            bool isAnd = (f->kind == QfpaKind::And) == positive;
            std::vector<QfpaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(norm(k, positive));
            return isAnd ? q_and(std::move(kids)) : q_or(std::move(kids));
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Cooper elimination (on normalized formulas)
// ---------------------------------------------------------------------------

static QfpaRef subst_var(const QfpaRef& f, const std::string& x, const LinExpr& t) {
    switch (f->kind) {
        case QfpaKind::Cmp:
        case QfpaKind::Div: {
            long long c = f->expr.coeff(x);
            if (c == 0) return f;
            LinExpr e = f->expr;
            e.coeffs.erase(x);
            e.add(t, c);
            return f->kind == QfpaKind::Cmp ? q_cmp(std::move(e), f->op)
                                            : q_div(std::move(e), f->modulus);
        }
        case QfpaKind::And:
        case QfpaKind::Or: {
            std::vector<QfpaRef> kids;
            kids.reserve(f->kids.size());
            for (auto& k : f->kids) kids.push_back(subst_var(k, x, t));
            return f->kind == QfpaKind::And ? q_and(std::move(kids)) : q_or(std::move(kids));
        }
        default: return f;
    }
}

// Rescales every atom so x occurs with coefficient ±delta_c, then reads
// delta_c*x as a fresh variable (reusing the name x) with coefficient ±1.
// The caller adds the matching  x ≡ 0 (mod delta_c)  conjunct.
static QfpaRef unit_normalize(const QfpaRef& f, const std::string& x, long long delta_c) {
    switch (f->kind) {
        case QfpaKind::Cmp: {
            long long c = f->expr.coeff(x);
            if (c == 0) return f;
            long long k = delta_c / std::llabs(c);
            LinExpr e = f->expr.scaled(k);  // k > 0 keeps <= direction
            e.coeffs[x] = c > 0 ? 1 : -1;
            return q_cmp(std::move(e), f->op);
        }
        case QfpaKind::Div: {
            long long c = f->expr.coeff(x);
            if (c == 0) return f;
            long long k = delta_c / std::llabs(c);
            LinExpr e = f->expr.scaled(k);
            e.coeffs[x] = c > 0 ? 1 : -1;
            return q_div(std::move(e), f->modulus * k);
        }
        case QfpaKind::And:
        case QfpaKind::Or: {
            std::vector<QfpaRef> kids;
            for (auto& kd : f->kids) kids.push_back(unit_normalize(kd, x, delta_c));
            return f->kind == QfpaKind::And ? q_and(std::move(kids)) : q_or(std::move(kids));
        }
        default: return f;
    }
}

// phi_{-inf}: atoms in x replaced by their limit as x -> -inf; divisibility
// atoms keep x (substituted with the sweep constant afterwards).
static QfpaRef minus_inf(const QfpaRef& f, const std::string& x) {
    switch (f->kind) {
        case QfpaKind::Cmp: {
            long long c = f->expr.coeff(x);
            if (c == 0) return f;
            if (f->op == CmpOp::Eq) return q_false();
            return c > 0 ? q_true() : q_false();  // c*x + e <= 0 as x -> -inf
        }
        case QfpaKind::And:
        case QfpaKind::Or: {
            std::vector<QfpaRef> kids;
            for (auto& k : f->kids) kids.push_back(minus_inf(k, x));
            return f->kind == QfpaKind::And ? q_and(std::move(kids)) : q_or(std::move(kids));
        }
        default: return f;
    }
}

static void collect_cooper_data(const QfpaRef& f, const std::string& x, long long& delta,
                                std::vector<LinExpr>& lowerStrict) {
    switch (f->kind) {
        case QfpaKind::Cmp: {
            long long c = f->expr.coeff(x);
            if (c == 0) return;
            assert(c == 1 || c == -1);
            // Atom is  c*x + e ? 0.
            LinExpr e = f->expr;
            e.coeffs.erase(x);
            if (f->op == CmpOp::Eq) {
                // x = -c*e  -> strict lower bound term  (-c*e) - 1
                LinExpr b = e.scaled(-c);
                b.constant -= 1;
                lowerStrict.push_back(std::move(b));
            } else if (c == -1) {
                // -x + e <= 0  ->  x >= e  -> strict bound e - 1
                e.constant -= 1;
                lowerStrict.push_back(std::move(e));
            }
            return;
        }
        case QfpaKind::Div: {
            if (f->expr.coeff(x) == 0) return;
            delta = std::lcm(delta, f->modulus);
            return;
        }
        case QfpaKind::And:
        case QfpaKind::Or:
            for (auto& k : f->kids) collect_cooper_data(k, x, delta, lowerStrict);
            return;
        default: return;
    }
}

static long long coeff_lcm(const QfpaRef& f, const std::string& x) {
    switch (f->kind) {
        case QfpaKind::Cmp:
        case QfpaKind::Div: {
            long long c = f->expr.coeff(x);
            return c == 0 ? 1 : std::llabs(c);
        }
        case QfpaKind::And:
        case QfpaKind::Or: {
            long long l = 1;
            for (auto& k : f->kids) l = std::lcm(l, coeff_lcm(k, x));
            return l;
        }
        default: return 1;
    }
}

// exists x. f  for normalized f.
static QfpaRef cooper(const QfpaRef& f, const std::string& x) {
    if (!qfpa_vars(f).count(x)) return f;

    long long dc = coeff_lcm(f, x);
    QfpaRef g = unit_normalize(f, x, dc);
    if (dc > 1) g = q_and(g, q_div(LinExpr::var(x), dc));

    long long delta = 1;
    std::vector<LinExpr> lowerStrict;
    collect_cooper_data(g, x, delta, lowerStrict);

    QfpaRef ninf = minus_inf(g, x);
    std::vector<QfpaRef> disjuncts;
    for (long long j = 1; j <= delta; j++) {
        disjuncts.push_back(subst_var(ninf, x, LinExpr::of(j)));
        for (auto& b : lowerStrict) {
            LinExpr t = b;
            t.constant += j;
            disjuncts.push_back(subst_var(g, x, t));
        }
    }
    return q_or(std::move(disjuncts));
}

QfpaRef eliminate_exists(const QfpaRef& f, const std::string& x, long long lower) {
    QfpaRef g = norm(f, true);
    // guard x >= lower, i.e. lower - x <= 0
    LinExpr guard = LinExpr::of(lower);
    guard.add(LinExpr::var(x), -1);
    g = q_and(g, q_cmp(std::move(guard), CmpOp::Le));
    return cooper(g, x);
}

// ---------------------------------------------------------------------------
// Single-variable grounding (for model extraction after elimination)
// ---------------------------------------------------------------------------

static void single_var_candidates(const QfpaRef& f, const std::string& x,
                                  std::vector<long long>& boundaries, long long& delta) {
    switch (f->kind) {
        case QfpaKind::Cmp: {
            long long c = f->expr.coeff(x);
            if (c == 0) return;
            LinExpr e = f->expr;
            e.coeffs.erase(x);
            if (!e.is_constant()) throw NonLinearInX(x);  // other vars must be grounded
            // c*x + k ? 0 boundary near -k/c
            long long k = e.constant;
            long long q = -k / c;
            boundaries.push_back(q - 1);
            boundaries.push_back(q);
            boundaries.push_back(q + 1);
            return;
        }
        case QfpaKind::Div:
            if (f->expr.coeff(x) != 0) delta = std::lcm(delta, f->modulus);
            return;
        default:
            for (auto& k : f->kids) single_var_candidates(k, x, boundaries, delta);
    }
}

static long long solve_single(const QfpaRef& f, const std::string& x) {
    std::vector<long long> boundaries{0};
    long long delta = 1;
    single_var_candidates(f, x, boundaries, delta);
    for (long long b : boundaries) {
        for (long long k = -delta - 1; k <= delta + 1; k++) {
            QfpaModel m{{x, b + k}};
            if (qfpa_eval(f, m)) return b + k;
        }
    }
    throw std::logic_error("no witness for single-variable formula (internal)");
}

// ---------------------------------------------------------------------------
// Complete decision by elimination chain (small variable counts)
// ---------------------------------------------------------------------------

static size_t formula_size(const QfpaRef& f) {
    size_t s = 1;
    for (auto& k : f->kids) s += formula_size(k);
    return s;
}

// `cap` bounds the size of intermediate elimination results; exceeding it
// raises Budget so the caller can fall back to search.
static std::optional<QfpaModel> solve_by_elimination(QfpaRef f, size_t cap) {
    std::set<std::string> vs = qfpa_vars(f);
    std::vector<std::string> vars(vs.begin(), vs.end());
    std::vector<QfpaRef> chain{f};
    for (auto& v : vars) {
        // One Cooper step multiplies the size by roughly (#bounds * delta),
        // so refuse inputs already at the cap rather than only outputs.
        if (formula_size(chain.back()) > cap) throw Budget("elimination size");
        chain.push_back(cooper(chain.back(), v));
    }
    if (formula_size(chain.back()) > cap) throw Budget("elimination size");
    QfpaRef ground = chain.back();
    if (!qfpa_eval(ground, {})) return std::nullopt;

    QfpaModel model;
    for (size_t i = vars.size(); i-- > 0;) {
        QfpaRef g = chain[i];
        for (size_t j = i + 1; j < vars.size(); j++)
            g = subst_var(g, vars[j], LinExpr::of(model[vars[j]]));
        model[vars[i]] = solve_single(g, vars[i]);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Rational simplex with bounds (Dutertre/de Moura style) + branch and bound
// ---------------------------------------------------------------------------

namespace {

struct Bound {
    bool has = false;
    mpq_class v;
};

struct Simplex {
    // Columns 0..n-1; rows define basic variables as combinations of others.
    int n = 0;
    std::vector<Bound> lo, hi;
    std::vector<mpq_class> beta;
    std::vector<std::vector<mpq_class>> rows;  // row r: x_{basic[r]} = sum rows[r][c]*x_c
    std::vector<int> basic;                    // row -> var
    std::vector<int> rowOf;                    // var -> row or -1

    void init(int vars) {
        n = vars;
        lo.resize(n);
        hi.resize(n);
        beta.assign(n, 0);
        rowOf.assign(n, -1);
    }

    // Adds a new slack variable defined by `expr` over structural columns.
    int add_row(const std::map<int, long long>& expr) {
        int v = n++;
        lo.emplace_back();
        hi.emplace_back();
        std::vector<mpq_class> row(n, 0);
        mpq_class val = 0;
        for (auto& [c, a] : expr) {
            row[c] = mpq_class((long)a);
            val += mpq_class((long)a) * beta[c];
        }
        for (auto& r : rows) r.resize(n, 0);
        beta.push_back(val);
        rows.push_back(std::move(row));
        basic.push_back(v);
        rowOf.push_back((int)rows.size() - 1);
        return v;
    }

    void set_lo(int v, const mpq_class& x) {
        if (!lo[v].has || x > lo[v].v) {
            lo[v].has = true;
            lo[v].v = x;
        }
    }
    void set_hi(int v, const mpq_class& x) {
        if (!hi[v].has || x < hi[v].v) {
            hi[v].has = true;
            hi[v].v = x;
        }
    }

    bool in_bounds(int v) const {
        if (lo[v].has && beta[v] < lo[v].v) return false;
        if (hi[v].has && beta[v] > hi[v].v) return false;
        return true;
    }

    void update_nonbasic(int j, const mpq_class& v) {
        mpq_class d = v - beta[j];
        if (d == 0) return;
        beta[j] = v;
        for (size_t r = 0; r < rows.size(); r++)
            if (rows[r][j] != 0) beta[basic[r]] += rows[r][j] * d;
    }

    void pivot(int r, int j) {
        int old = basic[r];
        std::vector<mpq_class> nr(n, 0);
        mpq_class a = rows[r][j];
        nr[old] = 1 / a;
        for (int c = 0; c < n; c++)
            if (c != j && rows[r][c] != 0) nr[c] = -rows[r][c] / a;
        for (size_t r2 = 0; r2 < rows.size(); r2++) {
            if ((int)r2 == r || rows[r2][j] == 0) continue;
            mpq_class k = rows[r2][j];
            rows[r2][j] = 0;
            for (int c = 0; c < n; c++)
                if (nr[c] != 0) rows[r2][c] += k * nr[c];
        }
        rows[r] = std::move(nr);
        basic[r] = j;
        rowOf[old] = -1;
        rowOf[j] = r;
    }

    void pivot_and_update(int r, int j, const mpq_class& v) {
        int xi = basic[r];
        mpq_class theta = (v - beta[xi]) / rows[r][j];
        beta[xi] = v;
        beta[j] += theta;
        for (size_t r2 = 0; r2 < rows.size(); r2++)
            if ((int)r2 != r && rows[r2][j] != 0) beta[basic[r2]] += rows[r2][j] * theta;
        pivot(r, j);
    }

    // Ensures every nonbasic respects its bounds first (moving them is free).
    void settle_nonbasic() {
        for (int v = 0; v < n; v++) {
            if (rowOf[v] >= 0) continue;
            if (lo[v].has && beta[v] < lo[v].v) update_nonbasic(v, lo[v].v);
            else if (hi[v].has && beta[v] > hi[v].v) update_nonbasic(v, hi[v].v);
        }
    }

    bool check(long long& pivots, long long budget) {
        settle_nonbasic();
        while (true) {
            if (++pivots > budget) throw Budget("simplex pivots");
            int xi = -1, r = -1;
            for (size_t rr = 0; rr < rows.size(); rr++) {
                int b = basic[rr];
                if (!in_bounds(b) && (xi == -1 || b < xi)) {
                    xi = b;
                    r = (int)rr;
                }
            }
            if (xi == -1) return true;
            bool needUp = lo[xi].has && beta[xi] < lo[xi].v;
            mpq_class target = needUp ? lo[xi].v : hi[xi].v;
            int best = -1;
            for (int j = 0; j < n; j++) {
                if (rowOf[j] >= 0) continue;
                mpq_class a = rows[r][j];
                if (a == 0) continue;
                bool canInc = !hi[j].has || beta[j] < hi[j].v;
                bool canDec = !lo[j].has || beta[j] > lo[j].v;
                bool ok = needUp ? ((a > 0 && canInc) || (a < 0 && canDec))
                                 : ((a > 0 && canDec) || (a < 0 && canInc));
                if (ok && (best == -1 || j < best)) best = j;
            }
            if (best == -1) return false;
            pivot_and_update(r, best, target);
        }
    }
};

struct ConjSolver {
    std::vector<std::string> names;
    std::map<std::string, int> index;
    int col(const std::string& v) {
        auto it = index.find(v);
        if (it != index.end()) return it->second;
        int c = (int)names.size();
        index[v] = c;
        names.push_back(v);
        return c;
    }
};

}  // namespace

// Linear constraints of a conjunction of normalized atoms.  Divisibility
// atoms get an auxiliary integer variable:  e ≡ 0 (mod m)  becomes
// e - m*k = 0.
using LinConstraints = std::vector<std::pair<std::map<int, long long>, std::pair<bool, long long>>>;

static void fill_constraints(const std::vector<QfpaRef>& atoms, ConjSolver& cs,
                             LinConstraints& constraints) {
    int auxCount = 0;
    for (auto& a : atoms) {
        std::map<int, long long> expr;
        for (auto& [v, c] : a->expr.coeffs) expr[cs.col(v)] = c;
        long long rhs = -a->expr.constant;
        if (a->kind == QfpaKind::Cmp) {
            constraints.push_back({expr, {a->op == CmpOp::Eq, rhs}});
        } else {  // Div
            int k = cs.col("div_aux#" + std::to_string(auxCount++));
            expr[k] = -a->modulus;
            constraints.push_back({expr, {true, rhs}});
        }
    }
}

static Simplex make_simplex(const ConjSolver& cs, const LinConstraints& constraints,
                            const std::set<std::string>& nonneg) {
    Simplex sx;
    int structural = (int)cs.names.size();
    sx.init(structural);
    for (int c = 0; c < structural; c++)
        if (nonneg.count(cs.names[c])) sx.set_lo(c, 0);
    for (auto& [expr, rhs] : constraints) {
        int s = sx.add_row(expr);
        sx.set_hi(s, mpq_class((long)rhs.second));
        if (rhs.first) sx.set_lo(s, mpq_class((long)rhs.second));
    }
    return sx;
}

// Feasibility of the rational relaxation (divisibility relaxed too): used
// to prune DPLL branches early.
static bool lp_feasible(const std::vector<QfpaRef>& atoms, const std::set<std::string>& nonneg,
                        long long budget) {
    ConjSolver cs;
    LinConstraints constraints;
    fill_constraints(atoms, cs, constraints);
    Simplex sx = make_simplex(cs, constraints, nonneg);
    long long pivots = 0;
    return sx.check(pivots, budget);
}

static std::optional<QfpaModel> solve_conjunction(const std::vector<QfpaRef>& atoms,
                                                  const std::set<std::string>& nonneg,
                                                  long long budget) {
    ConjSolver cs;
    LinConstraints constraints;
    fill_constraints(atoms, cs, constraints);
    int structural = (int)cs.names.size();

    // Branch-and-bound state: extra integer bounds per structural column.
    struct Node {
        std::vector<std::pair<int, std::pair<bool, long long>>> extra;  // (col, (isLower, val))
    };
    std::vector<Node> stack{{}};
    long long pivots = 0, nodes = 0;

    while (!stack.empty()) {
        if (++nodes > 200000) throw Budget("branch and bound nodes");
        Node node = std::move(stack.back());
        stack.pop_back();

        Simplex sx = make_simplex(cs, constraints, nonneg);
        for (auto& [c, b] : node.extra) {
            if (b.first)
                sx.set_lo(c, mpq_class((long)b.second));
            else
                sx.set_hi(c, mpq_class((long)b.second));
        }

        if (!sx.check(pivots, budget)) continue;

        // Find a structural variable with a fractional value.
        int frac = -1;
        for (int c = 0; c < structural; c++) {
            if (sx.beta[c].get_den() != 1) {
                frac = c;
                break;
            }
        }
        if (frac == -1) {
            QfpaModel m;
            for (int c = 0; c < structural; c++) {
                if (cs.names[c].rfind("div_aux#", 0) == 0) continue;
                m[cs.names[c]] = (long long)sx.beta[c].get_num().get_si();
            }
            return m;
        }
        mpz_class fl;
        mpz_fdiv_q(fl.get_mpz_t(), sx.beta[frac].get_num().get_mpz_t(),
                   sx.beta[frac].get_den().get_mpz_t());
        long long f = fl.get_si();
        Node left = node, right = node;
        left.extra.push_back({frac, {false, f}});
        right.extra.push_back({frac, {true, f + 1}});
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return std::nullopt;
}

// DPLL over the Boolean structure of a normalized formula.  Conjuncts are
// flattened eagerly; disjunctions are deferred until no unit work remains,
// then the smallest one is split, after checking that the atoms collected
// so far are feasible as a rational relaxation (pruning whole subtrees).
static std::optional<QfpaModel> dpll(std::vector<QfpaRef> pending, std::vector<QfpaRef> atoms,
                                     std::vector<QfpaRef> ors, const std::set<std::string>& nonneg,
                                     long long budget, long long& branches) {
    while (!pending.empty()) {
        QfpaRef f = pending.back();
        pending.pop_back();
        switch (f->kind) {
            case QfpaKind::True: break;
            case QfpaKind::False: return std::nullopt;
            case QfpaKind::And:
                for (auto& k : f->kids) pending.push_back(k);
                break;
            case QfpaKind::Cmp:
            case QfpaKind::Div: atoms.push_back(f); break;
            case QfpaKind::Or: ors.push_back(f); break;
            case QfpaKind::Not: throw std::logic_error("dpll expects normalized input");
        }
    }
    if (ors.empty()) return solve_conjunction(atoms, nonneg, budget);
    if (++branches > 100000) throw Budget("dpll branches");
    if (!lp_feasible(atoms, nonneg, budget)) return std::nullopt;
    size_t bi = 0;
    for (size_t i = 1; i < ors.size(); i++)
        if (ors[i]->kids.size() < ors[bi]->kids.size()) bi = i;
    QfpaRef o = ors[bi];
    ors.erase(ors.begin() + (long)bi);
    for (auto& k : o->kids) {
        auto m = dpll({k}, atoms, ors, nonneg, budget, branches);
        if (m) return m;
    }
    return std::nullopt;
}

std::optional<QfpaModel> qfpa_sat(const QfpaRef& f, const std::set<std::string>& nonneg,
                                  long long budget) {
    QfpaRef g = norm(f, true);
    std::vector<QfpaRef> guards;
    std::set<std::string> vs = qfpa_vars(g);
    for (auto& v : nonneg)
        if (vs.count(v)) {
            guards.push_back(q_cmp(LinExpr::var(v, -1), CmpOp::Le));  // -v <= 0
        }
    QfpaRef h = q_and(q_and(std::move(guards)), g);

    // Two complete engines with complementary failure modes: the Cooper
    // elimination chain terminates on everything but can blow up in size on
    // disjunction-heavy inputs; branch-and-bound search handles those but
    // may hit its node budget on unbounded relaxations.  Try the one suited
    // to the input shape first and fall back to the other.
    auto by_elimination = [&]() -> std::optional<QfpaModel> {
        auto m = solve_by_elimination(h, 600);
        if (!m) return std::nullopt;
        // Elimination works on the guarded formula, so the model already
        // respects nonneg; make sure every requested var is present.
        for (auto& v : vs) m->emplace(v, 0);
        return m;
    };
    if (vs.size() <= 6 && formula_size(h) <= 120) {
        try {
            return by_elimination();
        } catch (const Budget&) {
            long long branches = 0;
            return dpll({h}, {}, {}, nonneg, budget, branches);
        }
    }
    try {
        long long branches = 0;
        return dpll({h}, {}, {}, nonneg, budget, branches);
    } catch (const Budget&) {
        return by_elimination();
    }
}

}  // namespace slidset
