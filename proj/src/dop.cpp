#include "satokit/dop.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "satokit/errors.hpp"

namespace satokit {

DOp::DOp(Ring ring, int z_budget_lo, int deg_budget_lo)
    : ring_(std::move(ring)), z_budget_lo_(z_budget_lo), deg_budget_lo_(deg_budget_lo),
      deg_exact_lo_(-kExactInf) {}

DOp DOp::identity(const Ring& r, int zlo, int dlo) {
    return term(r, zlo, dlo, 0, 0, ParamElem::constant(r, Rational(1)));
}

DOp DOp::mul_op(const ZSeries& f, int deg_budget_lo) {
    DOp r(f.ring(), f.z_budget_lo(), deg_budget_lo);
    if (!f.is_zero()) r.coeffs_.emplace(0, f);
    r.normalize(false);
    return r;
}

DOp DOp::d_dz(const Ring& r, int zlo, int dlo, int order) {
    return term(r, zlo, dlo, 0, order, ParamElem::constant(r, Rational(1)));
}

DOp DOp::term(const Ring& r, int zlo, int dlo, int zexp, int dorder, const ParamElem& c) {
    DOp op(r, zlo, dlo);
    if (dorder < 0) throw BadInput("negative derivative order");
    ZSeries s = ZSeries::zpow_elem(r, zlo, zexp, c);
    if (!s.is_zero()) op.coeffs_.emplace(dorder, s);
    op.normalize(false);
    return op;
}

int DOp::top_degree() const {
    int d = -kExactInf;
    for (auto& [m, s] : coeffs_)
        if (!s.is_zero()) d = std::max(d, s.hi_bound() - m);
    // unknown content hides below the degree mark
    if (deg_exact_lo_ > -kExactInf) d = std::max(d, (int)deg_exact_lo_ - 1);
    return d;
}

void DOp::normalize(bool clipped_possible) {
    // The degree truncation is tracked at the object level in deg_exact_lo_;
    // coefficient series keep pure z exactness marks so that composition does
    // not double-count the degree cut across derivative orders.
    if (clipped_possible) deg_exact_lo_ = std::max(deg_exact_lo_, (int32_t)deg_budget_lo_);
    for (auto it = coeffs_.begin(); it != coeffs_.end(); ++it) {
        int m = it->first;
        ZSeries s = it->second.with_budget_lo(z_budget_lo_);
        bool deg_dropped = false;
        s = s.drop_below(deg_budget_lo_ + m, &deg_dropped);
        if (deg_dropped) deg_exact_lo_ = std::max(deg_exact_lo_, (int32_t)deg_budget_lo_);
        it->second = s;
    }
    // Stored data must be exact: erase content below the degree mark (its
    // quality is unknown) and fold empty-but-marked coefficients back into the
    // degree mark, iterating until stable.
    for (int guard = 0; guard < 64; ++guard) {
        bool changed = false;
        for (auto it = coeffs_.begin(); it != coeffs_.end();) {
            int m = it->first;
            ZSeries s = it->second;
            if (deg_exact_lo_ > -kExactInf) s = s.drop_below(sat_add(deg_exact_lo_, m), nullptr);
            if (s.is_zero()) {
                if (s.exact_lo() > -kExactInf) {
                    auto fold = (int32_t)sat_add(s.exact_lo(), -m);
                    if (fold > deg_exact_lo_) {
                        deg_exact_lo_ = fold;
                        changed = true;
                    }
                }
                it = coeffs_.erase(it);
            } else {
                it->second = s;
                ++it;
            }
        }
        if (!changed) break;
    }
}

void DOp::add_term(int dorder, const ZSeries& s) {
    auto it = coeffs_.find(dorder);
    if (it == coeffs_.end())
        coeffs_.emplace(dorder, s);
    else
        it->second = it->second + s;
}

DOp DOp::operator+(const DOp& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in dop add");
    DOp r(ring_, std::max(z_budget_lo_, o.z_budget_lo_),
          std::max(deg_budget_lo_, o.deg_budget_lo_));
    r.coeffs_ = coeffs_;
    for (auto& [m, s] : o.coeffs_) r.add_term(m, s);
    r.deg_exact_lo_ = std::max(deg_exact_lo_, o.deg_exact_lo_);
    r.normalize(false);
    return r;
}

DOp DOp::operator-() const {
    DOp r(*this);
    for (auto& [m, s] : r.coeffs_) s = -s;
    return r;
}

DOp DOp::operator-(const DOp& o) const { return *this + (-o); }

DOp DOp::scale(const ParamElem& c) const {
    DOp r(ring_, z_budget_lo_, deg_budget_lo_);
    if (c.is_exact_zero()) return r;
    r.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, s] : coeffs_) {
        ZSeries sc = s.scale(c);
        if (!sc.is_zero()) r.coeffs_.emplace(m, sc);
    }
    r.normalize(false);
    return r;
}

DOp DOp::scale(const Rational& c) const { return scale(ParamElem::constant(ring_, c)); }

bool DOp::operator==(const DOp& o) const { return ring_ == o.ring_ && coeffs_ == o.coeffs_; }

DOp DOp::compose(const DOp& o) const {
    if (ring_ != o.ring_) throw BadInput("ring mismatch in dop compose");
    DOp r(ring_, std::max(z_budget_lo_, o.z_budget_lo_),
          std::max(deg_budget_lo_, o.deg_budget_lo_));
    bool zeroA = coeffs_.empty() && deg_exact_lo_ == -kExactInf;
    bool zeroB = o.coeffs_.empty() && o.deg_exact_lo_ == -kExactInf;
    if (zeroA || zeroB) return r;
    int topA = top_degree(), topB = o.top_degree();
    r.deg_exact_lo_ = std::max(sat_add(deg_exact_lo_, topB), sat_add(o.deg_exact_lo_, topA));
    for (auto& [m, a] : coeffs_) {
        for (auto& [l, b] : o.coeffs_) {
            // a d^m (b d^l) = sum_i C(m,i) a (d^i b) d^{m-i+l}
            ZSeries bder = b;
            for (int i = 0; i <= m; ++i) {
                if (i > 0) bder = bder.ddz();
                if (bder.is_zero()) {
                    // deeper i only differentiate an exact zero; stop unless
                    // the exactness mark could hide content
                    if (bder.exact_lo() <= bder.z_budget_lo()) break;
                }
                Rational binom = Rational::binomial(m, i);
                ZSeries piece = a * bder;
                if (!binom.is_one()) piece = piece.scale(binom);
                if (!piece.is_zero()) r.add_term(m - i + l, piece);
            }
        }
    }
    // actual degree or z drops are detected inside normalize / the series ops
    r.normalize(false);
    return r;
}

DOp DOp::commutator(const DOp& o) const { return compose(o) - o.compose(*this); }

DOp DOp::adjoint() const {
    DOp acc(ring_, z_budget_lo_, deg_budget_lo_);
    acc.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, a] : coeffs_) {
        // (a(z) d^m)* = (-d)^m a(z)
        DOp dm = d_dz(ring_, z_budget_lo_, deg_budget_lo_, m).scale(Rational(m % 2 == 0 ? 1 : -1));
        acc = acc + dm.compose(mul_op(a, deg_budget_lo_));
    }
    return acc;
}

DOp DOp::project_plus() const {
    DOp r(ring_, z_budget_lo_, deg_budget_lo_);
    r.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, s] : coeffs_) {
        ZSeries p = s.plus_part();
        if (!p.is_zero()) r.coeffs_.emplace(m, p);
    }
    r.normalize(false);
    return r;
}

DOp DOp::project_minus() const {
    DOp r(ring_, z_budget_lo_, deg_budget_lo_);
    r.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, s] : coeffs_) {
        ZSeries p = s.minus_part();
        if (!p.is_zero()) r.coeffs_.emplace(m, p);
    }
    r.normalize(false);
    return r;
}

ZSeries DOp::apply(const ZSeries& f) const {
    ZSeries acc = ZSeries::zero(ring_, std::max(z_budget_lo_, f.z_budget_lo()));
    ZSeries fder = f;
    int prev = 0;
    for (auto& [m, a] : coeffs_) {
        for (int i = prev; i < m; ++i) fder = fder.ddz();
        prev = m;
        acc = acc + a * fder;
    }
    // terms below the degree mark act as unknowns on all of f
    if (deg_exact_lo_ > -kExactInf && !f.is_exact_zero())
        acc.restrict_exact_lo(sat_add(deg_exact_lo_, f.effective_hi()));
    return acc;
}

DOp DOp::exp_neg() const {
    if (top_degree() >= 0)
        throw DegreeNotNegative("exp_neg requires negative filtration degree");
    long cap = 8 + std::abs(deg_budget_lo_);
    for (int i = 0; i < ring_->nparams(); ++i)
        cap += 2L * std::abs(ring_->param(i).budget_hi) + 4;
    DOp acc = identity(ring_, z_budget_lo_, deg_budget_lo_);
    DOp pw = acc;
    for (long k = 1; k <= cap; ++k) {
        pw = pw.compose(*this).scale(Rational(k).inv());
        if (pw.is_zero()) {
            acc.restrict_deg_exact(deg_budget_lo_);
            return acc;
        }
        acc = acc + pw;
    }
    throw NonTerminating("exp_neg did not truncate");
}

DOp DOp::invert() const {
    ParamElem c0 = coeff(0, 0);
    DOp c0op = term(ring_, z_budget_lo_, deg_budget_lo_, 0, 0, c0);
    DOp n = *this - c0op;
    if (!n.is_zero() && n.top_degree() >= 0)
        throw NonUnit("dop invert: correction has non-negative degree");
    ParamElem c0inv = c0.invert();
    DOp ninv = n.scale(c0inv); // now inverting 1 + ninv
    long cap = 8 + std::abs(deg_budget_lo_);
    for (int i = 0; i < ring_->nparams(); ++i)
        cap += 2L * std::abs(ring_->param(i).budget_hi) + 4;
    DOp acc = identity(ring_, z_budget_lo_, deg_budget_lo_);
    DOp pw = acc;
    for (long k = 1; k <= cap; ++k) {
        pw = pw.compose(ninv);
        if (pw.is_zero()) {
            acc = acc.scale(c0inv);
            acc.restrict_deg_exact(deg_budget_lo_);
            return acc;
        }
        acc = (k % 2 == 0) ? acc + pw : acc - pw;
    }
    throw NonUnit("dop invert: not nilpotent under truncation");
}

DOp DOp::compose_pow(long e) const {
    if (e < 0) return invert().compose_pow(-e);
    DOp acc = identity(ring_, z_budget_lo_, deg_budget_lo_);
    DOp base = *this;
    while (e > 0) {
        if (e & 1) acc = acc.compose(base);
        base = base.compose(base);
        e >>= 1;
    }
    return acc;
}

DOp DOp::shift_z_coeffs(const ParamElem& r) const {
    DOp out(ring_, z_budget_lo_, deg_budget_lo_);
    out.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, s] : coeffs_) {
        ZSeries sh = s.shift_z(r);
        if (!sh.is_zero()) out.coeffs_.emplace(m, sh);
    }
    out.normalize(true);
    return out;
}

DOp DOp::scale_z(const ParamElem& c) const {
    DOp out(ring_, z_budget_lo_, deg_budget_lo_);
    out.deg_exact_lo_ = deg_exact_lo_;
    for (auto& [m, s] : coeffs_) {
        ZSeries sc = s.scale_z(c);
        if (!sc.is_zero()) out.coeffs_.emplace(m, sc);
    }
    out.normalize(true);
    return out;
}

ZSeries DOp::coeff_series(int dorder) const {
    auto it = coeffs_.find(dorder);
    ZSeries z = (it != coeffs_.end()) ? it->second : ZSeries::zero(ring_, z_budget_lo_);
    if (deg_exact_lo_ > -kExactInf) z.restrict_exact_lo(sat_add(deg_exact_lo_, dorder));
    // the degree budget bounds the requestable window at this order
    z = z.with_budget_lo(std::max(z_budget_lo_, deg_budget_lo_ + dorder));
    return z;
}

ParamElem DOp::coeff(int zexp, int dorder) const { return coeff_series(dorder).coeff(zexp); }

void DOp::restrict_deg_exact(int d) {
    deg_exact_lo_ = std::max(deg_exact_lo_, (int32_t)d);
    normalize(false);
}

DOp vir_z(const Ring& r, int zlo, int dlo, int m) {
    // l_m = -z^{m+1} d - (m+1)/2 z^m
    DOp a = DOp::term(r, zlo, dlo, m + 1, 1, ParamElem::constant(r, Rational(-1)));
    DOp b = DOp::term(r, zlo, dlo, m, 0, ParamElem::constant(r, Rational(-(m + 1), 2)));
    return a + b;
}

DOp heis_z(const Ring& r, int zlo, int dlo, int m) {
    return DOp::term(r, zlo, dlo, m, 0, ParamElem::constant(r, Rational(1)));
}

SatoElement::SatoElement(DOp op) : op_(std::move(op)) {
    std::string why;
    if (!shape_ok(op_, &why)) throw NotAdmissible("not a Sato group element: " + why);
}

bool SatoElement::shape_ok(const DOp& op, std::string* why) {
    for (auto& [m, s] : op.coeffs()) {
        for (auto& [k, c] : s.coeffs()) {
            if (m == 0 && k == 0) {
                if (!(c == ParamElem::constant(op.ring(), Rational(1)))) {
                    if (why) *why = "constant term differs from 1";
                    return false;
                }
                continue;
            }
            if (k >= 0) {
                std::ostringstream os;
                os << "coefficient at z^" << k << " d^" << m << " outside D_-";
                if (why) *why = os.str();
                return false;
            }
        }
    }
    ParamElem c00 = op.coeff_series(0).coeff_or_zero(0);
    if (!(c00 == ParamElem::constant(op.ring(), Rational(1)))) {
        if (why) *why = "missing unit constant term";
        return false;
    }
    return true;
}

} // namespace satokit
