#include "jetforge/expr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <sstream>

namespace jetforge {

// ---- scalars -------------------------------------------------------------

std::string to_string(const Scalar& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Scalar parse_scalar(const std::string& text) {
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        Scalar q(text, 10);
        q.canonicalize();
        return q;
    }
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const std::size_t frac = text.size() - dot - 1;
    mpz_class den = 1;
    for (std::size_t i = 0; i < frac; ++i) den *= 10;
    Scalar q(mpz_class(digits.empty() ? std::string("0") : digits, 10), den);
    q.canonicalize();
    return q;
}

Scalar pow(const Scalar& base, int exponent) {
    if (exponent == 0) return 1;
    if (base == 0) {
        if (exponent < 0) throw DivisionByZero("zero raised to a negative power");
        return 0;
    }
    const unsigned long e = static_cast<unsigned long>(exponent < 0 ? -exponent : exponent);
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), e);
    mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), e);
    Scalar r = exponent > 0 ? Scalar(num, den) : Scalar(den, num);
    r.canonicalize();
    return r;
}

// ---- VarRef --------------------------------------------------------------

std::string VarRef::str(int fiber_dim) const {
    switch (kind) {
        case Kind::Base: return "x" + std::to_string(index);
        case Kind::Covector: return "xi" + std::to_string(index);
        case Kind::Coord: return "y" + std::to_string(index);
        case Kind::Param: return name;
        case Kind::Jet:
            if (fiber_dim <= 1 && index == 1) return "u[" + jet.str() + "]";
            return "u" + std::to_string(index) + "[" + jet.str() + "]";
    }
    return "?";
}

std::strong_ordering operator<=>(const VarRef& a, const VarRef& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.index <=> b.index; c != 0) return c;
    if (a.kind == VarRef::Kind::Jet) {
        if (auto c = a.jet.dim() <=> b.jet.dim(); c != 0) return c;
        if (auto c = grlex_compare(a.jet, b.jet); c != 0) return c;
    }
    return a.name <=> b.name;
}

// ---- hashing -------------------------------------------------------------

namespace {

inline void hash_mix(std::size_t& h, std::size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

std::size_t scalar_hash(const Scalar& q) {
    std::size_t h = static_cast<std::size_t>(mpz_getlimbn(q.get_num_mpz_t(), 0));
    hash_mix(h, static_cast<std::size_t>(mpz_sgn(q.get_num_mpz_t()) + 1));
    hash_mix(h, static_cast<std::size_t>(mpz_getlimbn(q.get_den_mpz_t(), 0)));
    return h;
}

}  // namespace

std::size_t MonomialHash::operator()(const Monomial& m) const noexcept {
    std::size_t h = m.size();
    for (const auto& [a, e] : m) {
        hash_mix(h, a);
        hash_mix(h, static_cast<std::size_t>(e + 1024));
    }
    return h;
}

// ---- atom table ----------------------------------------------------------

namespace {

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return a.compare(b) < 0; }
};

struct CallKeyLess {
    bool operator()(const std::pair<std::string, Expr>& a,
                    const std::pair<std::string, Expr>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second.compare(b.second) < 0;
    }
};

class AtomTable {
public:
    static AtomTable& instance() {
        static AtomTable t;
        return t;
    }

    const AtomInfo& get(AtomId id) {
        std::shared_lock lock(mu_);
        return atoms_[id];
    }

    std::optional<AtomId> find_var(const VarRef& v) {
        std::shared_lock lock(mu_);
        auto it = vars_.find(v);
        if (it == vars_.end()) return std::nullopt;
        return it->second;
    }

    AtomId var(const VarRef& v) {
        {
            std::shared_lock lock(mu_);
            if (auto it = vars_.find(v); it != vars_.end()) return it->second;
        }
        std::unique_lock lock(mu_);
        if (auto it = vars_.find(v); it != vars_.end()) return it->second;
        AtomId id = push({AtomKind::Var, v, {}, {}});
        vars_.emplace(v, id);
        return id;
    }

    AtomId call(const std::string& fn, const Expr& arg) {
        auto key = std::make_pair(fn, arg);
        {
            std::shared_lock lock(mu_);
            if (auto it = calls_.find(key); it != calls_.end()) return it->second;
        }
        std::unique_lock lock(mu_);
        if (auto it = calls_.find(key); it != calls_.end()) return it->second;
        AtomId id = push({AtomKind::Call, {}, fn, arg});
        calls_.emplace(std::move(key), id);
        return id;
    }

    AtomId inverse(const Expr& sum) {
        {
            std::shared_lock lock(mu_);
            if (auto it = inverses_.find(sum); it != inverses_.end()) return it->second;
        }
        std::unique_lock lock(mu_);
        if (auto it = inverses_.find(sum); it != inverses_.end()) return it->second;
        AtomId id = push({AtomKind::Inverse, {}, {}, sum});
        inverses_.emplace(sum, id);
        return id;
    }

private:
    AtomId push(AtomInfo info) {
        atoms_.push_back(std::move(info));
        return static_cast<AtomId>(atoms_.size() - 1);
    }

    std::shared_mutex mu_;
    std::deque<AtomInfo> atoms_;
    std::map<VarRef, AtomId> vars_;
    std::map<std::pair<std::string, Expr>, AtomId, CallKeyLess> calls_;
    std::map<Expr, AtomId, ExprLess> inverses_;
};

Expr atom_expr(AtomId id) {
    return Expr::from_terms({Term{Monomial{{id, 1}}, Scalar(1)}});
}

}  // namespace

const AtomInfo& atom_info(AtomId id) { return AtomTable::instance().get(id); }
AtomId intern_var(const VarRef& v) { return AtomTable::instance().var(v); }
std::optional<AtomId> find_var(const VarRef& v) { return AtomTable::instance().find_var(v); }

// ---- monomials and accumulation -----------------------------------------

Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) {
            r.push_back(a[i++]);
        } else if (b[j].first < a[i].first) {
            r.push_back(b[j++]);
        } else {
            int e = a[i].second + b[j].second;
            if (e != 0) r.emplace_back(a[i].first, e);
            ++i;
            ++j;
        }
    }
    r.insert(r.end(), a.begin() + static_cast<std::ptrdiff_t>(i), a.end());
    r.insert(r.end(), b.begin() + static_cast<std::ptrdiff_t>(j), b.end());
    return r;
}

void Accumulator::add(const Monomial& m, const Scalar& c) {
    if (c == 0) return;
    auto [it, inserted] = map_.try_emplace(m, c);
    if (!inserted) it->second += c;
}

void Accumulator::add(Monomial&& m, const Scalar& c) {
    if (c == 0) return;
    auto [it, inserted] = map_.try_emplace(std::move(m), c);
    if (!inserted) it->second += c;
}

void Accumulator::add(const Expr& e, const Scalar& scale) {
    if (scale == 0) return;
    for (const auto& t : e.terms()) add(t.mono, t.coef * scale);
}

void Accumulator::add_product(const Monomial& m, const Scalar& scale, const Expr& e) {
    if (scale == 0) return;
    for (const auto& t : e.terms()) add(mono_mul(m, t.mono), t.coef * scale);
}

Expr Accumulator::finish() {
    std::vector<Term> out;
    out.reserve(map_.size());
    for (auto& [m, c] : map_)
        if (c != 0) out.push_back(Term{m, c});
    map_.clear();
    std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return a.mono < b.mono; });
    if (out.empty()) return Expr();
    return Expr(std::make_shared<const std::vector<Term>>(std::move(out)));
}

// ---- Expr basics ---------------------------------------------------------

Expr::Expr(const Scalar& c) {
    if (c != 0) {
        Scalar v = c;
        v.canonicalize();
        terms_ = std::make_shared<const std::vector<Term>>(std::vector<Term>{Term{{}, v}});
    }
}

Expr Expr::from_terms(std::vector<Term> terms) {
    Accumulator acc;
    for (auto& t : terms) {
        t.coef.canonicalize();
        acc.add(std::move(t.mono), t.coef);
    }
    return acc.finish();
}

Expr Expr::var(const VarRef& v) { return atom_expr(intern_var(v)); }

Expr Expr::call(const std::string& primitive, const Expr& arg) {
    const Primitive* p = PrimitiveRegistry::instance().find(primitive);
    if (!p) throw SemanticError("unknown primitive '" + primitive + "'");
    if (auto c = arg.constant(); c && p->eval_exact) {
        if (auto v = p->eval_exact(*c)) return Expr(*v);
    }
    return atom_expr(AtomTable::instance().call(primitive, arg));
}

std::span<const Term> Expr::terms() const {
    if (!terms_) return {};
    return {terms_->data(), terms_->size()};
}

bool Expr::is_constant() const { return size() == 0 || (size() == 1 && (*terms_)[0].mono.empty()); }

std::optional<Scalar> Expr::constant() const {
    if (size() == 0) return Scalar(0);
    if (size() == 1 && (*terms_)[0].mono.empty()) return (*terms_)[0].coef;
    return std::nullopt;
}

std::optional<AtomId> Expr::as_atom() const {
    if (size() != 1) return std::nullopt;
    const Term& t = (*terms_)[0];
    if (t.coef != 1 || t.mono.size() != 1 || t.mono[0].second != 1) return std::nullopt;
    return t.mono[0].first;
}

bool Expr::operator==(const Expr& o) const {
    if (terms_ == o.terms_) return true;
    if (size() != o.size()) return false;
    return std::equal(terms().begin(), terms().end(), o.terms().begin());
}

std::strong_ordering Expr::compare(const Expr& o) const {
    if (auto c = size() <=> o.size(); c != 0) return c;
    auto a = terms(), b = o.terms();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (auto c = a[i].mono <=> b[i].mono; c != 0) return c;
        int s = cmp(a[i].coef, b[i].coef);
        if (s != 0) return s < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    return std::strong_ordering::equal;
}

std::size_t Expr::hash() const {
    std::size_t h = size();
    MonomialHash mh;
    for (const auto& t : terms()) {
        hash_mix(h, mh(t.mono));
        hash_mix(h, scalar_hash(t.coef));
    }
    return h;
}

Expr Expr::operator-() const { return scaled(-1); }

Expr Expr::scaled(const Scalar& c) const {
    if (c == 0 || is_zero()) return Expr();
    if (c == 1) return *this;
    std::vector<Term> out(terms().begin(), terms().end());
    for (auto& t : out) t.coef *= c;
    return Expr(std::make_shared<const std::vector<Term>>(std::move(out)));
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    auto x = a.terms(), y = b.terms();
    std::vector<Term> out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i].mono < y[j].mono) {
            out.push_back(x[i++]);
        } else if (y[j].mono < x[i].mono) {
            out.push_back(y[j++]);
        } else {
            Scalar c = x[i].coef + y[j].coef;
            if (c != 0) out.push_back(Term{x[i].mono, c});
            ++i;
            ++j;
        }
    }
    for (; i < x.size(); ++i) out.push_back(x[i]);
    for (; j < y.size(); ++j) out.push_back(y[j]);
    if (out.empty()) return Expr();
    return Expr(std::make_shared<const std::vector<Term>>(std::move(out)));
}

Expr operator-(const Expr& a, const Expr& b) { return a + b.scaled(-1); }

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    if (auto c = a.constant()) return b.scaled(*c);
    if (auto c = b.constant()) return a.scaled(*c);
    Accumulator acc;
    for (const auto& s : a.terms())
        for (const auto& t : b.terms()) acc.add(mono_mul(s.mono, t.mono), s.coef * t.coef);
    return acc.finish();
}

namespace {

/// 1/(c * m) for a single term.
Expr invert_term(const Monomial& mono, const Scalar& coef) {
    if (coef == 0) throw DivisionByZero("division by zero");
    Monomial plain;
    Expr extra = 1;
    for (const auto& [a, e] : mono) {
        const AtomInfo& info = atom_info(a);
        if (info.kind == AtomKind::Inverse)
            extra = extra * info.arg.pow(e);
        else
            plain.emplace_back(a, -e);
    }
    return Expr::from_terms({Term{plain, 1 / coef}}) * extra;
}

}  // namespace

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw DivisionByZero("division by the zero expression");
    if (a.is_zero()) return Expr();
    if (b.size() == 1) return a * invert_term(b.terms()[0].mono, b.terms()[0].coef);

    // Factor b = c * g * S with g the monomial gcd and S normalized so that
    // its first canonical term has coefficient 1.
    std::map<AtomId, int> mins;
    for (const auto& [atom, e] : b.terms()[0].mono) mins[atom] = e;
    for (const auto& t : b.terms()) {
        std::map<AtomId, int> here(t.mono.begin(), t.mono.end());
        for (auto& [atom, e] : mins) {
            auto it = here.find(atom);
            e = std::min(e, it == here.end() ? 0 : it->second);
        }
        for (const auto& [atom, e] : here)
            if (!mins.count(atom)) mins[atom] = std::min(0, e);
    }
    Monomial g;
    for (const auto& [atom, e] : mins)
        if (e != 0) g.emplace_back(atom, e);
    Monomial ginv;
    for (const auto& [atom, e] : g) ginv.emplace_back(atom, -e);

    Accumulator acc;
    for (const auto& t : b.terms()) acc.add(mono_mul(t.mono, ginv), t.coef);
    Expr s = acc.finish();
    const Scalar c = s.terms()[0].coef;
    s = s.scaled(1 / c);

    Expr scale = invert_term(g, c);
    if (a.size() == s.size()) {
        const Scalar lambda = a.terms()[0].coef;
        if (a == s.scaled(lambda)) return scale.scaled(lambda);
    }
    return a * scale * atom_expr(AtomTable::instance().inverse(s));
}

Expr Expr::pow(int n) const {
    if (n == 0) return 1;
    if (n < 0) return (Expr(1) / *this).pow(-n);
    if (size() == 1) {
        const Term& t = terms()[0];
        Monomial m = t.mono;
        for (auto& [a, e] : m) e *= n;
        return from_terms({Term{std::move(m), jetforge::pow(t.coef, n)}});
    }
    Expr result = 1, base = *this;
    int k = n;
    while (k) {
        if (k & 1) result = result * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return result;
}

// ---- primitives ----------------------------------------------------------

PrimitiveRegistry& PrimitiveRegistry::instance() {
    static PrimitiveRegistry r;
    return r;
}

PrimitiveRegistry::PrimitiveRegistry() {
    add({"sin", [](const Expr& a) { return Expr::call("cos", a); },
         [](double x) -> std::optional<double> { return std::sin(x); },
         [](const Scalar& x) -> std::optional<Scalar> {
             if (x == 0) return Scalar(0);
             return std::nullopt;
         }});
    add({"cos", [](const Expr& a) { return -Expr::call("sin", a); },
         [](double x) -> std::optional<double> { return std::cos(x); },
         [](const Scalar& x) -> std::optional<Scalar> {
             if (x == 0) return Scalar(1);
             return std::nullopt;
         }});
    add({"exp", [](const Expr& a) { return Expr::call("exp", a); },
         [](double x) -> std::optional<double> { return std::exp(x); },
         [](const Scalar& x) -> std::optional<Scalar> {
             if (x == 0) return Scalar(1);
             return std::nullopt;
         }});
}

void PrimitiveRegistry::add(Primitive p) {
    std::string name = p.name;
    prims_[name] = std::move(p);
}

void PrimitiveRegistry::add_opaque(const std::string& name) {
    // A few derivatives are registered up front so that K', K'' can be
    // written directly; deeper ones appear when differentiation needs them.
    std::string cur = name;
    for (int i = 0; i < 4; ++i, cur += "'") {
        if (contains(cur)) continue;
        Primitive p;
        p.name = cur;
        p.derivative = [cur](const Expr& a) {
            PrimitiveRegistry::instance().add_opaque(cur + "'");
            return Expr::call(cur + "'", a);
        };
        add(std::move(p));
    }
}

const Primitive* PrimitiveRegistry::find(const std::string& name) const {
    auto it = prims_.find(name);
    return it == prims_.end() ? nullptr : &it->second;
}

// ---- derivations ---------------------------------------------------------

namespace {

class Deriver {
public:
    explicit Deriver(const std::function<Expr(const VarRef&)>& on_var) : on_var_(on_var) {}

    Expr run(const Expr& e) {
        Accumulator acc;
        for (const auto& t : e.terms()) {
            for (std::size_t i = 0; i < t.mono.size(); ++i) {
                const auto [atom, exp] = t.mono[i];
                const Expr& da = atom_derivative(atom);
                if (da.is_zero()) continue;
                Monomial rest = t.mono;
                if (exp == 1)
                    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
                else
                    rest[i].second = exp - 1;
                acc.add_product(rest, t.coef * exp, da);
            }
        }
        return acc.finish();
    }

private:
    const Expr& atom_derivative(AtomId id) {
        if (auto it = memo_.find(id); it != memo_.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        Expr d;
        switch (info.kind) {
            case AtomKind::Var: d = on_var_(info.var); break;
            case AtomKind::Call: {
                Expr inner = run(info.arg);
                if (!inner.is_zero()) {
                    const Primitive* p = PrimitiveRegistry::instance().find(info.fn);
                    if (!p || !p->derivative)
                        throw MissingDerivativeRule("no derivative rule for primitive '" + info.fn + "'");
                    d = p->derivative(info.arg) * inner;
                }
                break;
            }
            case AtomKind::Inverse: {
                Expr inner = run(info.arg);
                if (!inner.is_zero()) d = -(atom_expr(id).pow(2) * inner);
                break;
            }
        }
        return memo_.emplace(id, std::move(d)).first->second;
    }

    const std::function<Expr(const VarRef&)>& on_var_;
    std::unordered_map<AtomId, Expr> memo_;
};

}  // namespace

Expr apply_derivation(const Expr& e, const std::function<Expr(const VarRef&)>& on_var) {
    Deriver d(on_var);
    return d.run(e);
}

Expr differentiate(const Expr& e, const VarRef& v) {
    return apply_derivation(e, [&v](const VarRef& w) { return w == v ? Expr(1) : Expr(); });
}

// ---- substitution --------------------------------------------------------

namespace {

class Substituter {
public:
    explicit Substituter(const Bindings& b) : b_(b) {}

    Expr run(const Expr& e) {
        Accumulator acc;
        for (const auto& t : e.terms()) {
            Monomial keep;
            Expr product = 1;
            bool changed = false;
            for (const auto& [atom, exp] : t.mono) {
                const auto& r = replacement(atom);
                if (!r) {
                    keep.emplace_back(atom, exp);
                } else {
                    changed = true;
                    product = product * power(atom, *r, exp);
                }
            }
            if (!changed)
                acc.add(t.mono, t.coef);
            else
                acc.add_product(keep, t.coef, product);
        }
        return acc.finish();
    }

private:
    const std::optional<Expr>& replacement(AtomId id) {
        if (auto it = memo_.find(id); it != memo_.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        std::optional<Expr> r;
        switch (info.kind) {
            case AtomKind::Var:
                if (auto it = b_.find(info.var); it != b_.end()) r = it->second;
                break;
            case AtomKind::Call: {
                Expr arg = run(info.arg);
                if (!(arg == info.arg)) r = Expr::call(info.fn, arg);
                break;
            }
            case AtomKind::Inverse: {
                Expr s = run(info.arg);
                if (!(s == info.arg)) r = Expr(1) / s;
                break;
            }
        }
        return memo_.emplace(id, std::move(r)).first->second;
    }

    Expr power(AtomId id, const Expr& base, int exp) {
        auto key = std::make_pair(id, exp);
        if (auto it = pow_memo_.find(key); it != pow_memo_.end()) return it->second;
        Expr p = base.pow(exp);
        pow_memo_.emplace(key, p);
        return p;
    }

    const Bindings& b_;
    std::unordered_map<AtomId, std::optional<Expr>> memo_;
    std::map<std::pair<AtomId, int>, Expr> pow_memo_;
};

}  // namespace

Expr substitute(const Expr& e, const Bindings& bindings) {
    if (bindings.empty()) return e;
    Substituter s(bindings);
    return s.run(e);
}

// ---- evaluation ----------------------------------------------------------

void Assignment::set(const VarRef& v, const Scalar& value) { values_[intern_var(v)] = value; }

std::optional<Scalar> Assignment::get(const VarRef& v) const {
    auto id = find_var(v);
    if (!id) return std::nullopt;
    if (const Scalar* s = find(*id)) return *s;
    return std::nullopt;
}

const Scalar* Assignment::find(AtomId id) const {
    auto it = values_.find(id);
    return it == values_.end() ? nullptr : &it->second;
}

void FloatAssignment::set(const VarRef& v, double value) { values_[intern_var(v)] = value; }

const double* FloatAssignment::find(AtomId id) const {
    auto it = values_.find(id);
    return it == values_.end() ? nullptr : &it->second;
}

Scalar Evaluator::atom_value(AtomId id) {
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    const AtomInfo& info = atom_info(id);
    Scalar v;
    switch (info.kind) {
        case AtomKind::Var: {
            const Scalar* s = a_.find(id);
            if (!s) throw MissingVariable("no value for variable " + info.var.str());
            v = *s;
            break;
        }
        case AtomKind::Call: {
            const Primitive* p = PrimitiveRegistry::instance().find(info.fn);
            Scalar arg = (*this)(info.arg);
            std::optional<Scalar> r;
            if (p && p->eval_exact) r = p->eval_exact(arg);
            if (!r)
                throw NotExact("primitive '" + info.fn + "' has no exact value at " + to_string(arg));
            v = *r;
            break;
        }
        case AtomKind::Inverse: {
            Scalar s = (*this)(info.arg);
            if (s == 0) throw DivisionByZero("denominator " + info.arg.str() + " vanishes");
            v = 1 / s;
            break;
        }
    }
    cache_.emplace(id, v);
    return v;
}

Scalar Evaluator::operator()(const Expr& e) {
    Scalar total = 0;
    for (const auto& t : e.terms()) {
        Scalar term = t.coef;
        for (const auto& [atom, exp] : t.mono) {
            Scalar v = atom_value(atom);
            if (exp == 1)
                term *= v;
            else
                term *= jetforge::pow(v, exp);
        }
        total += term;
    }
    return total;
}

double FloatEvaluator::atom_value(AtomId id) {
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    const AtomInfo& info = atom_info(id);
    double v = 0;
    switch (info.kind) {
        case AtomKind::Var: {
            const double* s = a_.find(id);
            if (!s) throw MissingVariable("no value for variable " + info.var.str());
            v = *s;
            break;
        }
        case AtomKind::Call: {
            const Primitive* p = PrimitiveRegistry::instance().find(info.fn);
            if (!p || !p->eval_float)
                throw NotExact("primitive '" + info.fn + "' has no numeric evaluator");
            auto r = p->eval_float((*this)(info.arg));
            if (!r) throw NotExact("primitive '" + info.fn + "' failed to evaluate");
            v = *r;
            break;
        }
        case AtomKind::Inverse: {
            double s = (*this)(info.arg);
            if (s == 0.0) throw DivisionByZero("denominator " + info.arg.str() + " vanishes");
            v = 1.0 / s;
            break;
        }
    }
    cache_.emplace(id, v);
    return v;
}

double FloatEvaluator::operator()(const Expr& e) {
    double total = 0;
    for (const auto& t : e.terms()) {
        double term = t.coef.get_d();
        for (const auto& [atom, exp] : t.mono) {
            double v = atom_value(atom);
            if (exp < 0 && v == 0.0) throw DivisionByZero("zero raised to a negative power");
            term *= exp == 1 ? v : std::pow(v, exp);
        }
        total += term;
    }
    return total;
}

Scalar evaluate(const Expr& e, const Assignment& a) {
    Evaluator ev(a);
    return ev(e);
}

double evaluate_float(const Expr& e, const FloatAssignment& a) {
    FloatEvaluator ev(a);
    return ev(e);
}

// ---- structure queries ---------------------------------------------------

namespace {

void collect_vars(const Expr& e, std::set<VarRef>& out, std::set<AtomId>& seen) {
    for (const auto& t : e.terms()) {
        for (const auto& [atom, exp] : t.mono) {
            if (!seen.insert(atom).second) continue;
            const AtomInfo& info = atom_info(atom);
            if (info.kind == AtomKind::Var)
                out.insert(info.var);
            else
                collect_vars(info.arg, out, seen);
        }
    }
}

}  // namespace

std::vector<VarRef> free_vars(const Expr& e) {
    std::set<VarRef> out;
    std::set<AtomId> seen;
    collect_vars(e, out, seen);
    return {out.begin(), out.end()};
}

bool depends_on(const Expr& e, const VarRef& v) {
    auto vs = free_vars(e);
    return std::find(vs.begin(), vs.end(), v) != vs.end();
}

bool has_primitives(const Expr& e) {
    for (const auto& t : e.terms())
        for (const auto& [atom, exp] : t.mono) {
            const AtomInfo& info = atom_info(atom);
            if (info.kind == AtomKind::Call) return true;
            if (info.kind == AtomKind::Inverse && has_primitives(info.arg)) return true;
        }
    return false;
}

bool is_polynomial(const Expr& e) {
    for (const auto& t : e.terms())
        for (const auto& [atom, exp] : t.mono)
            if (exp < 0 || atom_info(atom).kind != AtomKind::Var) return false;
    return true;
}

int max_jet_order(const Expr& e) {
    int best = -1;
    for (const auto& v : free_vars(e))
        if (v.is_jet()) best = std::max(best, v.jet.degree());
    return best;
}

std::optional<int> polynomial_degree_in(const Expr& e, const VarRef& v) {
    auto id = find_var(v);
    if (!id) return 0;
    int deg = 0;
    for (const auto& t : e.terms())
        for (const auto& [atom, exp] : t.mono) {
            if (atom == *id) {
                if (exp < 0) return std::nullopt;
                deg = std::max(deg, exp);
            } else if (atom_info(atom).kind != AtomKind::Var && depends_on(atom_info(atom).arg, v)) {
                return std::nullopt;
            }
        }
    return deg;
}

// ---- printing ------------------------------------------------------------

namespace {

int atom_kind_rank(const AtomInfo& i) { return static_cast<int>(i.kind); }

bool display_atom_less(AtomId a, AtomId b) {
    if (a == b) return false;
    const AtomInfo& x = atom_info(a);
    const AtomInfo& y = atom_info(b);
    if (x.kind != y.kind) return atom_kind_rank(x) < atom_kind_rank(y);
    if (x.kind == AtomKind::Var) return (x.var <=> y.var) < 0;
    if (x.kind == AtomKind::Call && x.fn != y.fn) return x.fn < y.fn;
    return x.arg.compare(y.arg) < 0;
}

Monomial display_order(const Monomial& m) {
    Monomial r = m;
    std::sort(r.begin(), r.end(), [](const auto& p, const auto& q) { return display_atom_less(p.first, q.first); });
    return r;
}

bool display_term_less(const Monomial& a, const Monomial& b) {
    if (a.empty() || b.empty()) return !a.empty() && b.empty();  // constants last
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (a[i].first != b[i].first) return display_atom_less(a[i].first, b[i].first);
        if (a[i].second != b[i].second) return a[i].second > b[i].second;
    }
    return a.size() > b.size();
}

std::string factor_str(AtomId id, int exp, int fiber_dim) {
    const AtomInfo& info = atom_info(id);
    std::string base;
    switch (info.kind) {
        case AtomKind::Var: base = info.var.str(fiber_dim); break;
        case AtomKind::Call: base = info.fn + "(" + info.arg.str(fiber_dim) + ")"; break;
        case AtomKind::Inverse: return "(" + info.arg.str(fiber_dim) + ")^(" + std::to_string(-exp) + ")";
    }
    if (exp == 1) return base;
    if (exp > 0) return base + "^" + std::to_string(exp);
    return base + "^(" + std::to_string(exp) + ")";
}

}  // namespace

std::string Expr::str(int fiber_dim) const {
    if (is_zero()) return "0";
    std::vector<std::pair<Monomial, Scalar>> items;
    for (const auto& t : terms()) items.emplace_back(display_order(t.mono), t.coef);
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return display_term_less(a.first, b.first); });
    std::ostringstream os;
    bool first = true;
    for (const auto& [mono, coef] : items) {
        Scalar c = coef;
        if (first) {
            if (c < 0) {
                os << '-';
                c = -c;
            }
        } else {
            os << (c < 0 ? " - " : " + ");
            if (c < 0) c = -c;
        }
        first = false;
        if (mono.empty()) {
            os << to_string(c);
            continue;
        }
        if (c != 1) os << to_string(c) << '*';
        for (std::size_t i = 0; i < mono.size(); ++i) {
            if (i) os << '*';
            os << factor_str(mono[i].first, mono[i].second, fiber_dim);
        }
    }
    return os.str();
}

}  // namespace jetforge
