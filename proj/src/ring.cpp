#include "satokit/ring.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "satokit/errors.hpp"

namespace satokit {

RingSpec::RingSpec(std::vector<Param> params) : params_(std::move(params)) {
    for (int i = 0; i < (int)params_.size(); ++i) {
        if (by_name_.count(params_[i].name))
            throw BadInput("duplicate parameter name: " + params_[i].name);
        by_name_[params_[i].name] = i;
    }
}

int RingSpec::index(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int RingSpec::index_or_throw(const std::string& name) const {
    int i = index(name);
    if (i < 0) throw BadInput("unknown parameter: " + name);
    return i;
}

Ring make_ring(std::vector<Param> params) {
    return std::make_shared<const RingSpec>(std::move(params));
}

Ring extend_ring(const Ring& r, const Param& extra) {
    std::vector<Param> ps;
    for (int i = 0; i < r->nparams(); ++i) ps.push_back(r->param(i));
    ps.push_back(extra);
    return make_ring(std::move(ps));
}

int32_t sat_add(int32_t a, int32_t b) {
    // The sentinels are absorbing: "fully exact" plus any finite shift stays
    // fully exact.
    if (a >= kExactInf || b >= kExactInf) return kExactInf;
    if (a <= -kExactInf || b <= -kExactInf) return -kExactInf;
    int64_t s = (int64_t)a + (int64_t)b;
    if (s >= kExactInf) return kExactInf;
    if (s <= -kExactInf) return -kExactInf;
    return (int32_t)s;
}

ParamElem::ParamElem(Ring ring) : ring_(std::move(ring)) {
    exact_hi_.assign(ring_->nparams(), kExactInf);
}

ParamElem ParamElem::constant(const Ring& ring, const Rational& c) {
    ParamElem e(ring);
    if (!c.is_zero()) e.terms_[ExpVec(ring->nparams(), 0)] = c;
    return e;
}

ParamElem ParamElem::monomial(const Ring& ring, const ExpVec& e, const Rational& c) {
    if ((int)e.size() != ring->nparams()) throw BadInput("monomial exponent arity mismatch");
    ParamElem r(ring);
    if (!c.is_zero()) r.terms_[e] = c;
    r.normalize_and_clip();
    return r;
}

ParamElem ParamElem::param(const Ring& ring, const std::string& name, int power) {
    ExpVec e(ring->nparams(), 0);
    e[ring->index_or_throw(name)] = power;
    return monomial(ring, e, Rational(1));
}

void ParamElem::normalize_and_clip(bool* dropped) {
    bool drop = false;
    for (auto it = terms_.begin(); it != terms_.end();) {
        bool kill = it->second.is_zero();
        if (!kill) {
            for (int i = 0; i < ring_->nparams(); ++i) {
                const Param& p = ring_->param(i);
                if (it->first[i] > p.budget_hi) { kill = true; drop = true; break; }
                // only exact data is ever stored
                if (it->first[i] > exact_hi_[i]) { kill = true; break; }
                if (!p.laurent && it->first[i] < 0)
                    throw BadInput("negative exponent in non-laurent parameter " + p.name);
            }
        }
        it = kill ? terms_.erase(it) : std::next(it);
    }
    if (drop) {
        for (int i = 0; i < ring_->nparams(); ++i)
            exact_hi_[i] = std::min(exact_hi_[i], (int32_t)ring_->param(i).budget_hi);
    }
    // An empty element whose only possible unknowns exceed a non-laurent
    // budget is an exact zero inside every requestable box: non-laurent
    // exponents are nonnegative and only grow under multiplication, so such
    // content can never re-enter a window, while nothing was ever truncated
    // in the laurent directions.
    if (terms_.empty()) {
        bool upgradable = true;
        for (int i = 0; i < ring_->nparams(); ++i) {
            const Param& p = ring_->param(i);
            if (p.laurent ? (exact_hi_[i] < kExactInf) : (exact_hi_[i] < p.budget_hi))
                upgradable = false;
        }
        if (upgradable) exact_hi_.assign(ring_->nparams(), kExactInf);
    }
    if (dropped) *dropped = drop;
}

ParamElem ParamElem::operator+(const ParamElem& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in add");
    ParamElem r(ring_);
    r.terms_ = terms_;
    for (auto& [e, c] : o.terms_) {
        auto [it, fresh] = r.terms_.emplace(e, c);
        if (!fresh) it->second += c;
    }
    for (int i = 0; i < ring_->nparams(); ++i)
        r.exact_hi_[i] = std::min(exact_hi_[i], o.exact_hi_[i]);
    r.normalize_and_clip();
    return r;
}

ParamElem ParamElem::operator-() const {
    ParamElem r(*this);
    for (auto& [e, c] : r.terms_) c = -c;
    return r;
}

ParamElem ParamElem::operator-(const ParamElem& o) const { return *this + (-o); }

ExpVec ParamElem::support_lo() const {
    ExpVec lo(ring_->nparams(), kExactInf);
    for (auto& [e, c] : terms_)
        for (int i = 0; i < ring_->nparams(); ++i) lo[i] = std::min(lo[i], e[i]);
    return lo;
}

ParamElem ParamElem::operator*(const ParamElem& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in mul");
    int n = ring_->nparams();
    ParamElem r(ring_);
    ExpVec loA = support_lo(), loB = o.support_lo();
    for (int i = 0; i < n; ++i)
        r.exact_hi_[i] = std::min(sat_add(loA[i], o.exact_hi_[i]), sat_add(loB[i], exact_hi_[i]));
    ExpVec e(n);
    for (auto& [ea, ca] : terms_) {
        for (auto& [eb, cb] : o.terms_) {
            bool keep = true;
            for (int i = 0; i < n; ++i) {
                e[i] = ea[i] + eb[i];
                if (e[i] > ring_->param(i).budget_hi) { keep = false; break; }
            }
            if (!keep) continue;
            Rational c = ca * cb;
            auto [it, fresh] = r.terms_.emplace(e, c);
            if (!fresh) it->second += c;
        }
    }
    r.normalize_and_clip();
    // Dropping above-budget products is always possible here even when both
    // inputs are fully exact, so cap the marks at the budget whenever the
    // product could have reached it.
    for (int i = 0; i < n; ++i) {
        int32_t reach = sat_add(max_exp(i) == -kExactInf ? 0 : max_exp(i),
                                o.max_exp(i) == -kExactInf ? 0 : o.max_exp(i));
        if (reach > ring_->param(i).budget_hi)
            r.exact_hi_[i] = std::min(r.exact_hi_[i], (int32_t)ring_->param(i).budget_hi);
    }
    return r;
}

ParamElem ParamElem::operator*(const Rational& c) const {
    ParamElem r(*this);
    if (c.is_zero()) {
        r.terms_.clear();
        return r;
    }
    for (auto& [e, v] : r.terms_) v *= c;
    return r;
}

bool ParamElem::operator==(const ParamElem& o) const {
    return ring_ == o.ring_ && terms_ == o.terms_;
}

int ParamElem::min_exp(int param_idx) const {
    int m = kExactInf;
    for (auto& [e, c] : terms_) m = std::min<int>(m, e[param_idx]);
    return m;
}

int ParamElem::max_exp(int param_idx) const {
    int m = -kExactInf;
    for (auto& [e, c] : terms_) m = std::max<int>(m, e[param_idx]);
    return m;
}

bool ParamElem::depends_on(int param_idx) const {
    for (auto& [e, c] : terms_)
        if (e[param_idx] != 0) return true;
    return false;
}

void ParamElem::restrict_exact_hi(const ExpVec& hi) {
    for (int i = 0; i < ring_->nparams(); ++i)
        exact_hi_[i] = std::min(exact_hi_[i], hi[i]);
    normalize_and_clip();
}

Rational ParamElem::coeff(const ExpVec& e) const {
    for (int i = 0; i < ring_->nparams(); ++i)
        if (e[i] > exact_hi_[i] || e[i] > ring_->param(i).budget_hi) {
            std::ostringstream os;
            os << "coefficient request outside exact window: parameter "
               << ring_->param(i).name << " exponent " << e[i] << " > mark "
               << std::min(exact_hi_[i], (int32_t)ring_->param(i).budget_hi);
            throw PrecisionUnderflow(os.str());
        }
    return coeff_or_zero(e);
}

Rational ParamElem::coeff_or_zero(const ExpVec& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
}

ParamElem ParamElem::select(int param_idx, int exponent) const {
    ParamElem r(ring_);
    r.exact_hi_ = exact_hi_;
    if (exponent > exact_hi_[param_idx])
        throw PrecisionUnderflow("select beyond exact window of " + ring_->param(param_idx).name);
    for (auto& [e, c] : terms_) {
        if (e[param_idx] != exponent) continue;
        ExpVec f = e;
        f[param_idx] = 0;
        r.terms_[f] = c;
    }
    r.exact_hi_[param_idx] = kExactInf;
    return r;
}

ParamElem ParamElem::truncate_above(int param_idx, int max_exp) const {
    ParamElem r(ring_);
    r.exact_hi_ = exact_hi_;
    r.exact_hi_[param_idx] = std::min(r.exact_hi_[param_idx], (int32_t)max_exp);
    for (auto& [e, c] : terms_)
        if (e[param_idx] <= max_exp) r.terms_[e] = c;
    return r;
}

ParamElem ParamElem::strip_param(const Ring& target, int param_idx) const {
    ParamElem r(target);
    std::vector<int> map(ring_->nparams(), -1);
    for (int i = 0; i < ring_->nparams(); ++i) {
        if (i == param_idx) continue;
        map[i] = target->index_or_throw(ring_->param(i).name);
    }
    for (int i = 0; i < ring_->nparams(); ++i) {
        if (i == param_idx) continue;
        r.exact_hi_[map[i]] = exact_hi_[i];
    }
    for (auto& [e, c] : terms_) {
        if (e[param_idx] != 0)
            throw BadInput("strip_param: residual exponent in " + ring_->param(param_idx).name);
        ExpVec f(target->nparams(), 0);
        for (int i = 0; i < ring_->nparams(); ++i)
            if (i != param_idx) f[map[i]] = e[i];
        r.terms_[f] = c;
    }
    r.normalize_and_clip();
    return r;
}

ParamElem ParamElem::cast(const Ring& target) const {
    ParamElem r(target);
    std::vector<int> map(ring_->nparams());
    for (int i = 0; i < ring_->nparams(); ++i)
        map[i] = target->index_or_throw(ring_->param(i).name);
    for (int i = 0; i < ring_->nparams(); ++i) r.exact_hi_[map[i]] = exact_hi_[i];
    for (auto& [e, c] : terms_) {
        ExpVec f(target->nparams(), 0);
        for (int i = 0; i < ring_->nparams(); ++i) f[map[i]] = e[i];
        r.terms_[f] = c;
    }
    r.normalize_and_clip();
    return r;
}

int ParamElem::total_order(const ExpVec& e, const std::vector<int>& idxs) {
    int s = 0;
    for (int i : idxs) s += e[i];
    return s;
}

namespace {

// Shared driver for the truncated power-series functionals. `nil` must be
// nilpotent under truncation; coefficient c_k multiplies nil^k. Termination
// relies on budget clipping, so the result is only exact up to the budgets.
ParamElem series_sum(const ParamElem& nil, const std::function<Rational(long)>& coeff_fn,
                     const char* what) {
    long cap = 8;
    for (int i = 0; i < nil.ring()->nparams(); ++i)
        cap += 2L * std::abs(nil.ring()->param(i).budget_hi) + 8;
    ParamElem acc = ParamElem::constant(nil.ring(), coeff_fn(0));
    ParamElem pw = ParamElem::constant(nil.ring(), Rational(1));
    for (long k = 1; k <= cap; ++k) {
        pw = pw * nil;
        if (pw.is_zero()) {
            if (!nil.is_zero()) {
                // only parameters the argument can actually clip in lose marks
                ExpVec hi(nil.ring()->nparams(), kExactInf);
                for (int i = 0; i < nil.ring()->nparams(); ++i)
                    if (nil.depends_on(i) || nil.exact_hi()[i] < kExactInf)
                        hi[i] = nil.ring()->param(i).budget_hi;
                acc.restrict_exact_hi(hi);
            }
            return acc;
        }
        acc = acc + pw * coeff_fn(k);
    }
    throw NonUnit(std::string(what) + ": argument not nilpotent under truncation");
}

} // namespace

ParamElem ParamElem::invert() const {
    if (is_zero()) throw NonUnit("inverse of zero element");
    // Leading monomial: the lexicographically minimal exponent vector. It must
    // divide the rest within the truncation for the Neumann tail to be
    // nilpotent; otherwise the loop below overflows the cap and reports.
    auto lead = terms_.begin();
    ExpVec le = lead->first;
    Rational lc = lead->second;
    ExpVec mono(ring_->nparams());
    for (int i = 0; i < ring_->nparams(); ++i) mono[i] = -le[i];
    ParamElem inv_lead = monomial(ring_, mono, lc.inv());
    ParamElem tail = *this * inv_lead - constant(ring_, Rational(1));
    ParamElem inv_tail = series_sum(
        tail, [](long k) { return Rational(k % 2 == 0 ? 1 : -1); }, "invert");
    return inv_lead * inv_tail;
}

ParamElem ParamElem::exp_nilpotent() const {
    if (!constant_term().is_zero()) throw NonUnit("exp: nonzero constant term");
    return series_sum(
        *this, [](long k) { return Rational::factorial(k).inv(); }, "exp");
}

ParamElem ParamElem::log_unit() const {
    Rational c = constant_term();
    if (!c.is_one()) throw NonUnit("log: constant term must be 1");
    ParamElem tail = *this - constant(ring_, Rational(1));
    return series_sum(
        tail,
        [](long k) {
            if (k == 0) return Rational(0);
            return Rational(k % 2 == 1 ? 1 : -1) / Rational(k);
        },
        "log");
}

ParamElem ParamElem::sqrt_unit() const {
    Rational c = constant_term();
    if (!c.is_one()) throw NonUnit("sqrt: constant term must be 1");
    ParamElem tail = *this - constant(ring_, Rational(1));
    // (1+x)^{1/2} = sum_k (-1)^{k+1} C(2k,k) / (4^k (2k-1)) x^k
    return series_sum(
        tail,
        [](long k) {
            return Rational(k % 2 == 0 ? -1 : 1) * Rational::binomial(2 * k, k) /
                   (Rational(4).pow(k) * Rational(2 * k - 1));
        },
        "sqrt");
}

ParamElem ParamElem::pow(long e) const {
    if (e < 0) return invert().pow(-e);
    ParamElem acc = constant(ring_, Rational(1));
    ParamElem base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

ParamElem ParamElem::derivative(int param_idx) const {
    ParamElem r(ring_);
    r.exact_hi_ = exact_hi_;
    if (r.exact_hi_[param_idx] < kExactInf)
        r.exact_hi_[param_idx] = sat_add(r.exact_hi_[param_idx], -1);
    for (auto& [e, c] : terms_) {
        if (e[param_idx] == 0) continue;
        ExpVec f = e;
        f[param_idx] -= 1;
        r.terms_[f] = c * Rational(e[param_idx]);
    }
    r.normalize_and_clip();
    return r;
}

} // namespace satokit
