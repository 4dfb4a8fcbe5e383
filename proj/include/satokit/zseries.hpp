#pragma once

#include <map>

#include "satokit/ring.hpp"

namespace satokit {

// Truncated Laurent series in z with ParamElem coefficients. The support is
// hard-bounded above (finitely many positive powers) and truncated below at
// z_budget_lo; coefficients at exponents >= exact_lo are exact, anything
// below is unknown. Mirrors the H_- = z^{-1}C[[z^{-1}]] picture.
class ZSeries {
  public:
    ZSeries(Ring ring, int z_budget_lo);
    static ZSeries zero(const Ring& ring, int z_budget_lo) { return ZSeries(ring, z_budget_lo); }
    static ZSeries constant(const Ring& ring, int z_budget_lo, const ParamElem& c);
    static ZSeries constant(const Ring& ring, int z_budget_lo, const Rational& c);
    static ZSeries zpow(const Ring& ring, int z_budget_lo, int k,
                        const Rational& c = Rational(1));
    static ZSeries zpow_elem(const Ring& ring, int z_budget_lo, int k, const ParamElem& c);

    const Ring& ring() const { return ring_; }
    int z_budget_lo() const { return z_budget_lo_; }
    int exact_lo() const { return exact_lo_; }
    bool is_zero() const { return coeffs_.empty(); }
    const std::map<int, ParamElem>& coeffs() const { return coeffs_; }

    // Hard upper support bound; -kExactInf when the series is zero.
    int hi_bound() const;
    // Upper bound including possible unknown content just below the exactness
    // mark (relevant when the stored part is empty).
    int effective_hi() const;
    int lo_stored() const;
    // True zero: nothing stored and no unknown region.
    bool is_exact_zero() const { return coeffs_.empty() && exact_lo_ == -kExactInf; }

    ZSeries operator+(const ZSeries& o) const;
    ZSeries operator-(const ZSeries& o) const;
    ZSeries operator*(const ZSeries& o) const;
    ZSeries operator-() const;
    ZSeries scale(const ParamElem& c) const;
    ZSeries scale(const Rational& c) const;
    ZSeries mul_zpow(int k) const;
    bool operator==(const ZSeries& o) const;

    ZSeries ddz() const;
    // Antiderivative with zero constant term; the z^{-1} coefficient must
    // vanish (no log term representable).
    ZSeries integrate() const;

    // Unit inversion: leading (top) coefficient must be an invertible
    // ParamElem monomial-unit; the tail must be nilpotent under truncation.
    ZSeries invert() const;
    ZSeries exp_nilpotent() const;
    ZSeries log_unit() const;
    ZSeries pow(long e) const;

    // Substitution z -> z + r, r a z-free element.
    ZSeries shift_z(const ParamElem& r) const;
    // Substitution z -> c*z, c an invertible z-free element.
    ZSeries scale_z(const ParamElem& c) const;

    // Exact coefficient access; PrecisionUnderflow below exact_lo.
    ParamElem coeff(int k) const;
    ParamElem coeff_or_zero(int k) const;
    ParamElem residue() const { return coeff(-1); }

    // Projections onto z^{>=0} and z^{<0} parts.
    ZSeries plus_part() const;
    ZSeries minus_part() const;

    // Evaluate at z = 1/mu where mu is a laurent ring parameter: z^k -> mu^{-k}.
    ParamElem eval_inv_param(int mu_idx) const;

    void restrict_exact_lo(int lo);
    // Set a deeper clip (larger lo) and drop coefficients below it.
    ZSeries with_budget_lo(int lo) const;
    // Erase stored coefficients below `bound` without touching the exactness
    // marks; the caller accounts for the cut through its own bookkeeping.
    ZSeries drop_below(int bound, bool* dropped = nullptr) const;

  private:
    void normalize(bool clipped_possible);
    Ring ring_;
    int z_budget_lo_;
    std::map<int, ParamElem> coeffs_;
    int32_t exact_lo_;
};

} // namespace satokit
