#include "jetforge/matrix.hpp"

#include <map>
#include <sstream>

#include <Eigen/SVD>

namespace jetforge {

RationalMatrix RationalMatrix::identity(std::size_t n) {
    RationalMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

bool RationalMatrix::is_zero() const {
    for (const auto& v : a_)
        if (v != 0) return false;
    return true;
}

RationalMatrix RationalMatrix::transpose() const {
    RationalMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

RationalMatrix RationalMatrix::columns(const std::vector<std::size_t>& which) const {
    RationalMatrix out(rows_, which.size());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t j = 0; j < which.size(); ++j) out(r, j) = (*this)(r, which[j]);
    return out;
}

RationalMatrix RationalMatrix::rows_subset(const std::vector<std::size_t>& which) const {
    RationalMatrix out(which.size(), cols_);
    for (std::size_t i = 0; i < which.size(); ++i)
        for (std::size_t c = 0; c < cols_; ++c) out(i, c) = (*this)(which[i], c);
    return out;
}

std::vector<Scalar> RationalMatrix::column(std::size_t c) const {
    std::vector<Scalar> v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: shape mismatch");
    RationalMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Scalar& x = a(i, k);
            if (x == 0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                if (b(k, j) != 0) out(i, j) += x * b(k, j);
        }
    return out;
}

RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix sum: shape mismatch");
    RationalMatrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(i, j);
    return out;
}

RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix difference: shape mismatch");
    RationalMatrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) -= b(i, j);
    return out;
}

std::vector<Scalar> RationalMatrix::operator*(const std::vector<Scalar>& v) const {
    if (v.size() != cols_) throw std::invalid_argument("matrix-vector product: shape mismatch");
    std::vector<Scalar> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            if (v[c] != 0) out[r] += (*this)(r, c) * v[c];
    return out;
}

std::string RationalMatrix::str() const {
    std::ostringstream os;
    for (std::size_t r = 0; r < rows_; ++r) {
        os << '[';
        for (std::size_t c = 0; c < cols_; ++c) os << (c ? " " : "") << to_string((*this)(r, c));
        os << "]\n";
    }
    return os.str();
}

RationalMatrix hstack(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("hstack: row mismatch");
    RationalMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
        for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
    }
    return out;
}

RationalMatrix vstack(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    if (a.cols() != b.cols()) throw std::invalid_argument("vstack: column mismatch");
    RationalMatrix out(a.rows() + b.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) out(a.rows() + r, c) = b(r, c);
    return out;
}

RationalMatrix kron(const RationalMatrix& a, const RationalMatrix& b) {
    RationalMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
        }
    return out;
}

RowEchelon rref(const RationalMatrix& m) {
    RowEchelon out{m, {}};
    RationalMatrix& a = out.reduced;
    std::size_t r = 0;
    for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
        std::size_t p = r;
        while (p < a.rows() && a(p, c) == 0) ++p;
        if (p == a.rows()) continue;
        if (p != r)
            for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(r, j));
        const Scalar inv = 1 / a(r, c);
        for (std::size_t j = c; j < a.cols(); ++j) a(r, j) *= inv;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == r || a(i, c) == 0) continue;
            const Scalar f = a(i, c);
            for (std::size_t j = c; j < a.cols(); ++j)
                if (a(r, j) != 0) a(i, j) -= f * a(r, j);
        }
        out.pivots.push_back(c);
        ++r;
    }
    return out;
}

std::size_t rank(const RationalMatrix& m) { return rref(m).pivots.size(); }

RationalMatrix kernel_basis(const RationalMatrix& m) {
    RowEchelon e = rref(m);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : e.pivots) is_pivot[p] = true;
    std::vector<std::size_t> free;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (!is_pivot[c]) free.push_back(c);
    RationalMatrix k(m.cols(), free.size());
    for (std::size_t f = 0; f < free.size(); ++f) {
        k(free[f], f) = 1;
        for (std::size_t r = 0; r < e.pivots.size(); ++r) k(e.pivots[r], f) = -e.reduced(r, free[f]);
    }
    return k;
}

std::optional<AffineSolution> solve_affine(const RationalMatrix& a, const std::vector<Scalar>& b,
                                           const std::vector<Scalar>& free_values) {
    if (b.size() != a.rows()) throw std::invalid_argument("solve_affine: right-hand side size mismatch");
    RationalMatrix aug(a.rows(), a.cols() + 1);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) aug(r, c) = a(r, c);
        aug(r, a.cols()) = b[r];
    }
    RowEchelon e = rref(aug);
    if (!e.pivots.empty() && e.pivots.back() == a.cols()) return std::nullopt;
    AffineSolution s;
    s.pivot_columns = e.pivots;
    std::vector<bool> is_pivot(a.cols(), false);
    for (auto p : e.pivots) is_pivot[p] = true;
    for (std::size_t c = 0; c < a.cols(); ++c)
        if (!is_pivot[c]) s.free_columns.push_back(c);
    if (!free_values.empty() && free_values.size() != s.free_columns.size())
        throw std::invalid_argument("solve_affine: expected " + std::to_string(s.free_columns.size()) +
                                    " free values, got " + std::to_string(free_values.size()));
    s.particular.assign(a.cols(), Scalar(0));
    for (std::size_t f = 0; f < s.free_columns.size(); ++f)
        s.particular[s.free_columns[f]] = free_values.empty() ? Scalar(0) : free_values[f];
    for (std::size_t r = 0; r < e.pivots.size(); ++r) {
        Scalar v = e.reduced(r, a.cols());
        for (auto f : s.free_columns)
            if (e.reduced(r, f) != 0) v -= e.reduced(r, f) * s.particular[f];
        s.particular[e.pivots[r]] = v;
    }
    return s;
}

std::size_t float_rank(const std::vector<std::vector<double>>& rows, double tol) {
    if (rows.empty() || rows[0].empty()) return 0;
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * s(0)) ++count;
    return count;
}

// ---- polynomial matrices -------------------------------------------------

namespace {

// Lex order over atom ids (smaller id = more significant variable).
int lex_cmp(const Monomial& a, const Monomial& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first != b[j].first) return a[i].first < b[j].first ? 1 : -1;
        if (a[i].second != b[j].second) return a[i].second > b[j].second ? 1 : -1;
        ++i;
        ++j;
    }
    if (i < a.size()) return 1;
    if (j < b.size()) return -1;
    return 0;
}

const Term& leading(const Expr& e) {
    auto ts = e.terms();
    const Term* best = &ts[0];
    for (const auto& t : ts)
        if (lex_cmp(t.mono, best->mono) > 0) best = &t;
    return *best;
}

std::optional<Monomial> mono_div(const Monomial& a, const Monomial& b) {
    std::map<AtomId, int> e(a.begin(), a.end());
    for (const auto& [atom, k] : b) {
        auto it = e.find(atom);
        if (it == e.end() || it->second < k) return std::nullopt;
        it->second -= k;
    }
    Monomial out;
    for (const auto& [atom, k] : e)
        if (k != 0) out.emplace_back(atom, k);
    return out;
}

}  // namespace

std::optional<Expr> divide_exact(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw DivisionByZero("divide_exact by zero");
    if (auto c = b.constant()) return a.scaled(1 / *c);
    const Term lb = leading(b);
    Accumulator q;
    Expr r = a;
    while (!r.is_zero()) {
        const Term& lr = leading(r);
        auto m = mono_div(lr.mono, lb.mono);
        if (!m) return std::nullopt;
        Scalar c = lr.coef / lb.coef;
        Expr step = Expr::from_terms({Term{*m, c}});
        q.add(*m, c);
        r = r - step * b;
    }
    return q.finish();
}

std::size_t generic_rank(const ExprMatrix& input) {
    if (input.empty()) return 0;
    ExprMatrix m = input;
    const std::size_t rows = m.size(), cols = m[0].size();
    for (auto& row : m) {
        std::map<AtomId, int> lowest;
        for (const auto& e : row)
            for (const auto& t : e.terms())
                for (const auto& [atom, k] : t.mono)
                    if (k < 0) lowest[atom] = std::min(lowest[atom], k);
        if (lowest.empty()) continue;
        Monomial shift;
        for (const auto& [atom, k] : lowest) shift.emplace_back(atom, -k);
        Expr f = Expr::from_terms({Term{shift, Scalar(1)}});
        for (auto& e : row) e = e * f;
    }
    Expr prev = 1;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && m[p][c].is_zero()) ++p;
        if (p == rows) continue;
        std::swap(m[p], m[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                Expr num = m[r][c] * m[i][j] - m[i][c] * m[r][j];
                auto q = divide_exact(num, prev);
                if (!q) throw std::logic_error("generic_rank: inexact Bareiss step");
                m[i][j] = *q;
            }
            m[i][c] = Expr();
        }
        prev = m[r][c];
        ++r;
    }
    return r;
}

Expr determinant(const ExprMatrix& m) {
    const std::size_t n = m.size();
    for (const auto& row : m)
        if (row.size() != n) throw std::invalid_argument("determinant: matrix is not square");
    if (n == 0) return 1;
    if (n > 20) throw std::invalid_argument("determinant: matrix too large for cofactor expansion");
    // minor[mask] = det of the rows n-|mask|.. with the columns in mask.
    std::vector<Expr> minor(std::size_t{1} << n);
    minor[0] = 1;
    for (std::size_t mask = 1; mask < minor.size(); ++mask) {
        const std::size_t row = n - static_cast<std::size_t>(__builtin_popcountll(mask));
        Expr acc;
        int sign = 1;
        for (std::size_t c = 0; c < n; ++c) {
            if (!(mask >> c & 1)) continue;
            const std::size_t rest = mask & ~(std::size_t{1} << c);
            if (!m[row][c].is_zero() && !minor[rest].is_zero()) {
                Expr t = m[row][c] * minor[rest];
                acc += sign > 0 ? t : -t;
            }
            sign = -sign;
        }
        minor[mask] = std::move(acc);
    }
    return minor.back();
}

RationalMatrix evaluate_matrix(const ExprMatrix& m, const Assignment& a) {
    if (m.empty()) return {};
    RationalMatrix out(m.size(), m[0].size());
    Evaluator ev(a);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = ev(m[i][j]);
    return out;
}

}  // namespace jetforge
