#include "satokit/tpoly.hpp"

#include <algorithm>
#include <sstream>

#include "satokit/errors.hpp"

namespace satokit {

int TMono::weight_t() const {
    int w = 0;
    for (auto& [k, p] : t) w += k * p;
    return w;
}

int TMono::weight_tp() const {
    int w = 0;
    for (auto& [k, p] : tp) w += k * p;
    return w;
}

bool TMono::operator<(const TMono& o) const {
    if (t != o.t) return t < o.t;
    return tp < o.tp;
}

TMono TMono::var(int k, int power, bool primed) {
    TMono m;
    if (power > 0) {
        if (primed)
            m.tp.push_back({k, power});
        else
            m.t.push_back({k, power});
    }
    return m;
}

std::string TMono::str() const {
    std::ostringstream os;
    if (t.empty() && tp.empty()) return "1";
    bool first = true;
    for (auto& [k, p] : t) {
        if (!first) os << "*";
        os << "t" << k;
        if (p > 1) os << "^" << p;
        first = false;
    }
    for (auto& [k, p] : tp) {
        if (!first) os << "*";
        os << "t'" << k;
        if (p > 1) os << "^" << p;
        first = false;
    }
    return os.str();
}

namespace {

std::vector<std::pair<int, int>> merge_vars(const std::vector<std::pair<int, int>>& a,
                                            const std::vector<std::pair<int, int>>& b) {
    std::vector<std::pair<int, int>> r;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
            r.push_back(a[i++]);
        else if (i == a.size() || b[j].first < a[i].first)
            r.push_back(b[j++]);
        else {
            r.push_back({a[i].first, a[i].second + b[j].second});
            ++i, ++j;
        }
    }
    return r;
}

TMono merge_monos(const TMono& a, const TMono& b) {
    TMono m;
    m.t = merge_vars(a.t, b.t);
    m.tp = merge_vars(a.tp, b.tp);
    return m;
}

} // namespace

TPoly::TPoly(Ring ring, int wb, int wbp)
    : ring_(std::move(ring)), wbudget_t_(wb), wbudget_tp_(wbp), exact_w_t_(kExactInf),
      exact_w_tp_(kExactInf) {}

TPoly TPoly::constant(const Ring& ring, int wb, const ParamElem& c, int wbp) {
    TPoly r(ring, wb, wbp);
    if (!c.is_zero()) r.terms_.emplace(TMono{}, c);
    return r;
}

TPoly TPoly::constant(const Ring& ring, int wb, const Rational& c, int wbp) {
    return constant(ring, wb, ParamElem::constant(ring, c), wbp);
}

TPoly TPoly::var(const Ring& ring, int wb, int k, bool primed, int wbp) {
    TPoly r(ring, wb, wbp);
    if (k < 1) throw BadInput("time variable index must be >= 1");
    TMono m = TMono::var(k, 1, primed);
    if (m.weight_t() <= wb && m.weight_tp() <= wbp)
        r.terms_.emplace(m, ParamElem::constant(ring, Rational(1)));
    else
        r.exact_w_t_ = wb, r.exact_w_tp_ = wbp;
    return r;
}

void TPoly::normalize(bool clipped_possible) {
    bool dropped = false;
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (it->second.is_zero()) {
            it = terms_.erase(it);
        } else if (it->first.weight_t() > wbudget_t_ || it->first.weight_tp() > wbudget_tp_) {
            dropped = true;
            it = terms_.erase(it);
        } else if (it->first.weight_t() > exact_w_t_ || it->first.weight_tp() > exact_w_tp_) {
            it = terms_.erase(it); // only exact data is stored
        } else {
            ++it;
        }
    }
    if (dropped || clipped_possible) {
        exact_w_t_ = std::min(exact_w_t_, (int32_t)wbudget_t_);
        exact_w_tp_ = std::min(exact_w_tp_, (int32_t)wbudget_tp_);
    }
}

TPoly TPoly::operator+(const TPoly& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in tpoly add");
    TPoly r(ring_, std::min(wbudget_t_, o.wbudget_t_), std::min(wbudget_tp_, o.wbudget_tp_));
    r.terms_ = terms_;
    for (auto& [m, c] : o.terms_) {
        auto [it, fresh] = r.terms_.emplace(m, c);
        if (!fresh) it->second = it->second + c;
    }
    r.exact_w_t_ = std::min(exact_w_t_, o.exact_w_t_);
    r.exact_w_tp_ = std::min(exact_w_tp_, o.exact_w_tp_);
    r.normalize(false);
    return r;
}

TPoly TPoly::operator-() const {
    TPoly r(*this);
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
}

TPoly TPoly::operator-(const TPoly& o) const { return *this + (-o); }

int TPoly::min_weight_t() const {
    int w = kExactInf;
    for (auto& [m, c] : terms_) w = std::min(w, m.weight_t());
    return w;
}

int TPoly::min_weight_tp() const {
    int w = kExactInf;
    for (auto& [m, c] : terms_) w = std::min(w, m.weight_tp());
    return w;
}

TPoly TPoly::operator*(const TPoly& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in tpoly mul");
    TPoly r(ring_, std::min(wbudget_t_, o.wbudget_t_), std::min(wbudget_tp_, o.wbudget_tp_));
    int wloA = min_weight_t(), wloB = o.min_weight_t();
    r.exact_w_t_ = std::min(sat_add(wloA, o.exact_w_t_), sat_add(wloB, exact_w_t_));
    int wloAp = min_weight_tp(), wloBp = o.min_weight_tp();
    r.exact_w_tp_ = std::min(sat_add(wloAp, o.exact_w_tp_), sat_add(wloBp, exact_w_tp_));
    for (auto& [ma, ca] : terms_) {
        for (auto& [mb, cb] : o.terms_) {
            TMono m = merge_monos(ma, mb);
            if (m.weight_t() > r.wbudget_t_ || m.weight_tp() > r.wbudget_tp_) continue;
            ParamElem c = ca * cb;
            auto [it, fresh] = r.terms_.emplace(m, c);
            if (!fresh) it->second = it->second + c;
        }
    }
    bool may_clip = exact_w_t_ < kExactInf || o.exact_w_t_ < kExactInf ||
                    exact_w_tp_ < kExactInf || o.exact_w_tp_ < kExactInf;
    if (!may_clip) {
        // exact inputs can still overflow the budget
        int hiA = 0, hiB = 0, hiAp = 0, hiBp = 0;
        for (auto& [m, c] : terms_) hiA = std::max(hiA, m.weight_t()), hiAp = std::max(hiAp, m.weight_tp());
        for (auto& [m, c] : o.terms_) hiB = std::max(hiB, m.weight_t()), hiBp = std::max(hiBp, m.weight_tp());
        may_clip = hiA + hiB > r.wbudget_t_ || hiAp + hiBp > r.wbudget_tp_;
    }
    r.normalize(may_clip);
    return r;
}

TPoly TPoly::scale(const ParamElem& c) const {
    TPoly r(ring_, wbudget_t_, wbudget_tp_);
    if (c.is_exact_zero()) return r;
    r.exact_w_t_ = exact_w_t_;
    r.exact_w_tp_ = exact_w_tp_;
    for (auto& [m, v] : terms_) r.terms_.emplace(m, v * c);
    r.normalize(false);
    return r;
}

TPoly TPoly::scale(const Rational& c) const { return scale(ParamElem::constant(ring_, c)); }

bool TPoly::operator==(const TPoly& o) const {
    return ring_ == o.ring_ && terms_ == o.terms_;
}

TPoly TPoly::ddt(int k, bool primed) const {
    TPoly r(ring_, wbudget_t_, wbudget_tp_);
    r.exact_w_t_ = primed ? exact_w_t_ : sat_add(exact_w_t_, -k);
    r.exact_w_tp_ = primed ? sat_add(exact_w_tp_, -k) : exact_w_tp_;
    for (auto& [m, c] : terms_) {
        const auto& bank = primed ? m.tp : m.t;
        for (size_t i = 0; i < bank.size(); ++i) {
            if (bank[i].first != k) continue;
            TMono n = m;
            auto& nb = primed ? n.tp : n.t;
            int p = nb[i].second;
            if (p == 1)
                nb.erase(nb.begin() + i);
            else
                nb[i].second -= 1;
            auto [it, fresh] = r.terms_.emplace(n, c * Rational(p));
            if (!fresh) it->second = it->second + c * Rational(p);
            break;
        }
    }
    r.normalize(false);
    return r;
}

TPoly TPoly::mul_var(int k, bool primed) const {
    TPoly r(ring_, wbudget_t_, wbudget_tp_);
    r.exact_w_t_ = primed ? exact_w_t_ : sat_add(exact_w_t_, k);
    r.exact_w_tp_ = primed ? sat_add(exact_w_tp_, k) : exact_w_tp_;
    TMono v = TMono::var(k, 1, primed);
    bool dropped = false;
    for (auto& [m, c] : terms_) {
        TMono n = merge_monos(m, v);
        if (n.weight_t() > wbudget_t_ || n.weight_tp() > wbudget_tp_) {
            dropped = true;
            continue;
        }
        r.terms_.emplace(n, c);
    }
    r.normalize(dropped);
    return r;
}

namespace {

TPoly tpoly_series(const TPoly& nil, const std::function<Rational(long)>& coeff_fn,
                   const char* what) {
    long cap = 4 + nil.wbudget_t() + nil.wbudget_tp();
    for (int i = 0; i < nil.ring()->nparams(); ++i)
        cap += 2L * std::abs(nil.ring()->param(i).budget_hi) + 4;
    TPoly acc = TPoly::constant(nil.ring(), nil.wbudget_t(), coeff_fn(0), nil.wbudget_tp());
    TPoly pw = TPoly::constant(nil.ring(), nil.wbudget_t(), Rational(1), nil.wbudget_tp());
    for (long k = 1; k <= cap; ++k) {
        pw = pw * nil;
        if (pw.is_zero()) {
            if (!nil.is_zero()) acc.restrict_exact_w(nil.wbudget_t(), nil.wbudget_tp());
            return acc;
        }
        Rational c = coeff_fn(k);
        if (!c.is_zero()) acc = acc + pw.scale(c);
    }
    throw NonUnit(std::string(what) + ": argument not nilpotent under truncation");
}

} // namespace

TPoly TPoly::invert_unit() const {
    ParamElem c0 = constant_term();
    ParamElem c0inv = c0.invert();
    TPoly tail = scale(c0inv) - constant(ring_, wbudget_t_, Rational(1), wbudget_tp_);
    return tpoly_series(
               tail, [](long k) { return Rational(k % 2 == 0 ? 1 : -1); }, "tpoly invert")
        .scale(c0inv);
}

TPoly TPoly::exp_nilpotent() const {
    if (!constant_term().is_zero()) throw NonUnit("tpoly exp: nonzero constant term");
    return tpoly_series(
        *this, [](long k) { return Rational::factorial(k).inv(); }, "tpoly exp");
}

TPoly TPoly::log_unit() const {
    ParamElem c0 = constant_term();
    if (!(c0 == ParamElem::constant(ring_, Rational(1))))
        throw NonUnit("tpoly log: constant term must be 1");
    TPoly tail = *this - constant(ring_, wbudget_t_, Rational(1), wbudget_tp_);
    return tpoly_series(
        tail,
        [](long k) {
            if (k == 0) return Rational(0);
            return Rational(k % 2 == 1 ? 1 : -1) / Rational(k);
        },
        "tpoly log");
}

ParamElem TPoly::coeff(const TMono& m) const {
    if (m.weight_t() > exact_w_t_ || m.weight_tp() > exact_w_tp_ ||
        m.weight_t() > wbudget_t_ || m.weight_tp() > wbudget_tp_) {
        std::ostringstream os;
        os << "t-coefficient request outside exact weight window: " << m.str();
        throw PrecisionUnderflow(os.str());
    }
    return coeff_or_zero(m);
}

ParamElem TPoly::coeff_or_zero(const TMono& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? ParamElem(ring_) : it->second;
}

ParamElem TPoly::substitute_t(const std::function<ParamElem(int)>& vals) const {
    ParamElem acc(ring_);
    for (auto& [m, c] : terms_) {
        if (!m.tp.empty()) throw BadInput("substitute_t: primed variables present");
        ParamElem v = c;
        for (auto& [k, p] : m.t) v = v * vals(k).pow(p);
        acc = acc + v;
    }
    return acc;
}

TPoly TPoly::substitute_t_poly(const std::function<TPoly(int)>& vals) const {
    TPoly acc(ring_, wbudget_t_, wbudget_tp_);
    acc.exact_w_t_ = exact_w_t_;
    acc.exact_w_tp_ = exact_w_tp_;
    for (auto& [m, c] : terms_) {
        if (!m.tp.empty()) throw BadInput("substitute_t_poly: primed variables present");
        TPoly v = constant(ring_, wbudget_t_, c, wbudget_tp_);
        for (auto& [k, p] : m.t)
            for (int i = 0; i < p; ++i) v = v * vals(k);
        acc = acc + v;
    }
    return acc;
}

TPoly TPoly::to_primed(int new_wbudget_tp) const {
    TPoly r(ring_, wbudget_t_, new_wbudget_tp);
    r.exact_w_t_ = kExactInf;
    r.exact_w_tp_ = exact_w_t_;
    for (auto& [m, c] : terms_) {
        if (!m.tp.empty()) throw BadInput("to_primed: already primed");
        TMono n;
        n.tp = m.t;
        r.terms_.emplace(n, c);
    }
    r.normalize(false);
    return r;
}

TPoly TPoly::reframed(int new_wt, int new_wtp) const {
    TPoly r(ring_, new_wt, new_wtp);
    r.exact_w_t_ = exact_w_t_;
    r.exact_w_tp_ = exact_w_tp_;
    r.terms_ = terms_;
    r.normalize(new_wt < wbudget_t_ || new_wtp < wbudget_tp_);
    return r;
}

void TPoly::restrict_exact_w(int wt, int wtp) {
    exact_w_t_ = std::min(exact_w_t_, (int32_t)wt);
    exact_w_tp_ = std::min(exact_w_tp_, (int32_t)wtp);
    normalize(false);
}

std::vector<std::pair<TMono, ParamElem>> TPoly::sorted_terms() const {
    return std::vector<std::pair<TMono, ParamElem>>(terms_.begin(), terms_.end());
}

} // namespace satokit
