#include "satokit/zseries.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>

#include "satokit/errors.hpp"

namespace satokit {

ZSeries::ZSeries(Ring ring, int z_budget_lo)
    : ring_(std::move(ring)), z_budget_lo_(z_budget_lo), exact_lo_(-kExactInf) {}

ZSeries ZSeries::constant(const Ring& ring, int z_budget_lo, const ParamElem& c) {
    return zpow_elem(ring, z_budget_lo, 0, c);
}

ZSeries ZSeries::constant(const Ring& ring, int z_budget_lo, const Rational& c) {
    return zpow_elem(ring, z_budget_lo, 0, ParamElem::constant(ring, c));
}

ZSeries ZSeries::zpow(const Ring& ring, int z_budget_lo, int k, const Rational& c) {
    return zpow_elem(ring, z_budget_lo, k, ParamElem::constant(ring, c));
}

ZSeries ZSeries::zpow_elem(const Ring& ring, int z_budget_lo, int k, const ParamElem& c) {
    ZSeries r(ring, z_budget_lo);
    if (!c.is_zero() && k >= z_budget_lo) r.coeffs_.emplace(k, c);
    return r;
}

int ZSeries::hi_bound() const { return coeffs_.empty() ? -kExactInf : coeffs_.rbegin()->first; }

int ZSeries::effective_hi() const {
    if (!coeffs_.empty()) return coeffs_.rbegin()->first;
    return exact_lo_ == -kExactInf ? -kExactInf : exact_lo_ - 1;
}

int ZSeries::lo_stored() const { return coeffs_.empty() ? kExactInf : coeffs_.begin()->first; }

void ZSeries::normalize(bool clipped_possible) {
    if (clipped_possible) exact_lo_ = std::max(exact_lo_, (int32_t)z_budget_lo_);
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
        if (it->second.is_zero() || it->first < z_budget_lo_ || it->first < exact_lo_) {
            if (it->first < z_budget_lo_) {
                exact_lo_ = std::max(exact_lo_, (int32_t)z_budget_lo_);
            }
            it = coeffs_.erase(it);
        } else {
            ++it;
        }
    }
}

ZSeries ZSeries::operator+(const ZSeries& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in zseries add");
    ZSeries r(ring_, std::max(z_budget_lo_, o.z_budget_lo_));
    r.coeffs_ = coeffs_;
    for (auto& [k, c] : o.coeffs_) {
        auto [it, fresh] = r.coeffs_.emplace(k, c);
        if (!fresh) it->second = it->second + c;
    }
    r.exact_lo_ = std::max(exact_lo_, o.exact_lo_);
    r.normalize(false);
    return r;
}

ZSeries ZSeries::operator-() const {
    ZSeries r(*this);
    for (auto& [k, c] : r.coeffs_) c = -c;
    return r;
}

ZSeries ZSeries::operator-(const ZSeries& o) const { return *this + (-o); }

ZSeries ZSeries::operator*(const ZSeries& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in zseries mul");
    ZSeries r(ring_, std::max(z_budget_lo_, o.z_budget_lo_));
    if (is_exact_zero() || o.is_exact_zero()) return r;
    int hiA = effective_hi(), hiB = o.effective_hi();
    r.exact_lo_ = std::max(sat_add(exact_lo_, hiB), sat_add(o.exact_lo_, hiA));
    // The true tails extend below the stored minimum whenever the inputs are
    // themselves truncated, so below-budget products are always possible.
    bool may_clip = sat_add(exact_lo_, o.exact_lo_) > -kExactInf ||
                    lo_stored() + o.lo_stored() < r.z_budget_lo_;
    for (auto& [ka, ca] : coeffs_) {
        for (auto& [kb, cb] : o.coeffs_) {
            int k = ka + kb;
            if (k < r.z_budget_lo_) continue;
            ParamElem c = ca * cb;
            auto [it, fresh] = r.coeffs_.emplace(k, c);
            if (!fresh) it->second = it->second + c;
        }
    }
    r.normalize(may_clip);
    return r;
}

ZSeries ZSeries::scale(const ParamElem& c) const {
    ZSeries r(ring_, z_budget_lo_);
    if (c.is_exact_zero()) return r;
    r.exact_lo_ = exact_lo_;
    for (auto& [k, v] : coeffs_) r.coeffs_.emplace(k, v * c);
    r.normalize(false);
    return r;
}

ZSeries ZSeries::scale(const Rational& c) const {
    return scale(ParamElem::constant(ring_, c));
}

ZSeries ZSeries::mul_zpow(int k) const {
    ZSeries r(ring_, z_budget_lo_);
    r.exact_lo_ = sat_add(exact_lo_, k);
    bool dropped = false;
    for (auto& [j, v] : coeffs_) {
        if (j + k >= z_budget_lo_)
            r.coeffs_.emplace(j + k, v);
        else
            dropped = true;
    }
    r.normalize(dropped);
    return r;
}

bool ZSeries::operator==(const ZSeries& o) const {
    return ring_ == o.ring_ && coeffs_ == o.coeffs_;
}

ZSeries ZSeries::ddz() const {
    ZSeries r(ring_, z_budget_lo_);
    r.exact_lo_ = sat_add(exact_lo_, -1);
    bool dropped = false;
    for (auto& [k, v] : coeffs_) {
        if (k == 0) continue;
        if (k - 1 >= z_budget_lo_)
            r.coeffs_.emplace(k - 1, v * Rational(k));
        else
            dropped = true;
    }
    r.normalize(dropped);
    return r;
}

ZSeries ZSeries::integrate() const {
    ZSeries r(ring_, z_budget_lo_);
    r.exact_lo_ = sat_add(exact_lo_, 1);
    for (auto& [k, v] : coeffs_) {
        if (k == -1) {
            if (!v.is_zero()) throw BadInput("integrate: z^{-1} term present (log)");
            continue;
        }
        r.coeffs_.emplace(k + 1, v * Rational(k + 1).inv());
    }
    r.normalize(false);
    return r;
}

namespace {

long series_cap(const ZSeries& s) {
    long cap = 16 + std::abs(s.z_budget_lo()) + std::max(0, s.hi_bound() == -kExactInf ? 0 : s.hi_bound());
    for (int i = 0; i < s.ring()->nparams(); ++i)
        cap += 2L * std::abs(s.ring()->param(i).budget_hi) + 8;
    return cap;
}

ZSeries series_sum(const ZSeries& nil, const std::function<Rational(long)>& coeff_fn,
                   const char* what) {
    long cap = series_cap(nil);
    ZSeries acc = ZSeries::constant(nil.ring(), nil.z_budget_lo(), coeff_fn(0));
    ZSeries pw = ZSeries::constant(nil.ring(), nil.z_budget_lo(), Rational(1));
    // z truncation can only be responsible for the termination when powers of
    // the argument descend in z; purely ascending arguments truncate through
    // their parameter budgets, which the coefficient arithmetic tracks itself.
    bool z_can_clip = !nil.is_zero() && (nil.lo_stored() < 0 || nil.exact_lo() > -kExactInf);
    for (long k = 1; k <= cap; ++k) {
        pw = pw * nil;
        if (pw.is_zero()) {
            if (z_can_clip) acc.restrict_exact_lo(nil.z_budget_lo());
            return acc;
        }
        Rational c = coeff_fn(k);
        if (!c.is_zero()) acc = acc + pw.scale(c);
    }
    throw NonUnit(std::string(what) + ": argument not nilpotent under truncation");
}

} // namespace

ZSeries ZSeries::invert() const {
    if (coeffs_.empty()) throw NonUnit("inverse of zero series");
    // Structural leading monomial: the top z-power among terms sitting at the
    // componentwise-minimal parameter profile. This picks z^n/hbar for
    // potential-type series and the constant 1 for deformation units like
    // 1 - w z; the Neumann loop verifies the choice.
    ExpVec plo(ring_->nparams(), kExactInf);
    for (auto& [k, c] : coeffs_) {
        ExpVec l = c.support_lo();
        for (int i = 0; i < ring_->nparams(); ++i) plo[i] = std::min(plo[i], l[i]);
    }
    int lead_k = -kExactInf;
    Rational lead_c;
    for (auto& [k, c] : coeffs_) {
        auto it = c.terms().find(plo);
        if (it != c.terms().end() && k > lead_k) {
            lead_k = k;
            lead_c = it->second;
        }
    }
    if (lead_k == -kExactInf)
        throw NonUnit("zseries invert: no structural leading monomial");
    ExpVec mono(ring_->nparams());
    for (int i = 0; i < ring_->nparams(); ++i) mono[i] = -plo[i];
    ZSeries inv_lead =
        zpow_elem(ring_, z_budget_lo_, -lead_k, ParamElem::monomial(ring_, mono, lead_c.inv()));
    ZSeries tail = *this * inv_lead - constant(ring_, z_budget_lo_, Rational(1));
    ZSeries inv_tail = series_sum(
        tail, [](long k) { return Rational(k % 2 == 0 ? 1 : -1); }, "zseries invert");
    return inv_lead * inv_tail;
}

ZSeries ZSeries::exp_nilpotent() const {
    if (!coeff_or_zero(0).constant_term().is_zero())
        throw NonUnit("zseries exp: nonzero constant term");
    return series_sum(
        *this, [](long k) { return Rational::factorial(k).inv(); }, "zseries exp");
}

ZSeries ZSeries::log_unit() const {
    if (!coeff_or_zero(0).constant_term().is_one())
        throw NonUnit("zseries log: constant term must be 1");
    ZSeries tail = *this - constant(ring_, z_budget_lo_, Rational(1));
    return series_sum(
        tail,
        [](long k) {
            if (k == 0) return Rational(0);
            return Rational(k % 2 == 1 ? 1 : -1) / Rational(k);
        },
        "zseries log");
}

ZSeries ZSeries::pow(long e) const {
    if (e < 0) return invert().pow(-e);
    ZSeries acc = constant(ring_, z_budget_lo_, Rational(1));
    ZSeries base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

ZSeries ZSeries::shift_z(const ParamElem& r) const {
    if (r.is_zero()) return *this;
    ZSeries z = zpow(ring_, z_budget_lo_, 1);
    ZSeries zr = z + constant(ring_, z_budget_lo_, Rational(1)).scale(r);
    std::optional<ZSeries> zr_inv;
    if (lo_stored() < 0) zr_inv = zr.invert();
    ZSeries out(ring_, z_budget_lo_);
    out.exact_lo_ = exact_lo_;
    for (auto& [k, c] : coeffs_) {
        ZSeries p = (k >= 0) ? zr.pow(k) : zr_inv->pow(-k);
        out = out + p.scale(c);
    }
    return out;
}

ZSeries ZSeries::scale_z(const ParamElem& c) const {
    ZSeries out(ring_, z_budget_lo_);
    out.exact_lo_ = exact_lo_;
    ParamElem cinv = c.invert();
    for (auto& [k, v] : coeffs_) {
        ParamElem f = (k >= 0) ? c.pow(k) : cinv.pow(-k);
        out.coeffs_.emplace(k, v * f);
    }
    out.normalize(false);
    return out;
}

ParamElem ZSeries::coeff(int k) const {
    if (k < exact_lo_ || k < z_budget_lo_) {
        std::ostringstream os;
        os << "z-coefficient request below exact window: z^" << k << " < mark "
           << std::max(exact_lo_, (int32_t)z_budget_lo_);
        throw PrecisionUnderflow(os.str());
    }
    return coeff_or_zero(k);
}

ParamElem ZSeries::coeff_or_zero(int k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? ParamElem(ring_) : it->second;
}

ZSeries ZSeries::plus_part() const {
    ZSeries r(ring_, z_budget_lo_);
    r.exact_lo_ = (exact_lo_ <= 0) ? -kExactInf : exact_lo_;
    for (auto& [k, c] : coeffs_)
        if (k >= 0) r.coeffs_.emplace(k, c);
    return r;
}

ZSeries ZSeries::minus_part() const {
    ZSeries r(ring_, z_budget_lo_);
    r.exact_lo_ = exact_lo_;
    for (auto& [k, c] : coeffs_)
        if (k < 0) r.coeffs_.emplace(k, c);
    return r;
}

ParamElem ZSeries::eval_inv_param(int mu_idx) const {
    ParamElem acc(ring_);
    ExpVec e(ring_->nparams(), 0);
    e[mu_idx] = 1;
    ParamElem mu = ParamElem::monomial(ring_, e, Rational(1));
    for (auto& [k, c] : coeffs_) acc = acc + c * mu.pow(-k);
    // The dropped z-tail (z^k, k < exact_lo) maps to powers mu^{-k} > -exact_lo.
    if (exact_lo_ > -kExactInf) {
        ExpVec hi(ring_->nparams(), kExactInf);
        hi[mu_idx] = -(int)exact_lo_;
        acc.restrict_exact_hi(hi);
    }
    return acc;
}

void ZSeries::restrict_exact_lo(int lo) {
    exact_lo_ = std::max(exact_lo_, (int32_t)lo);
    normalize(false);
}

ZSeries ZSeries::with_budget_lo(int lo) const {
    ZSeries r(*this);
    if (lo > r.z_budget_lo_) {
        r.z_budget_lo_ = lo;
        r.normalize(true);
    }
    return r;
}

ZSeries ZSeries::drop_below(int bound, bool* dropped) const {
    ZSeries r(*this);
    bool any = false;
    for (auto it = r.coeffs_.begin(); it != r.coeffs_.end();) {
        if (it->first < bound) {
            any = true;
            it = r.coeffs_.erase(it);
        } else {
            ++it;
        }
    }
    if (dropped) *dropped = any;
    return r;
}

} // namespace satokit
