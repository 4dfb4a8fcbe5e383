#pragma once

#include <map>

#include "satokit/zseries.hpp"

namespace satokit {

// Element of D = C((z^{-1}))[[d/dz]] in normal-ordered form: a map from the
// derivative order m to its z-Laurent coefficient, all z powers to the left.
// deg(z^{-1}) = deg(d/dz) = -1; the filtration degree k - m is hard-bounded
// above and truncated below at deg_budget_lo. The degree truncation is folded
// into each coefficient's z exactness mark, so coeff(k, m) reports honestly.
class DOp {
  public:
    DOp(Ring ring, int z_budget_lo, int deg_budget_lo);
    static DOp zero(const Ring& r, int zlo, int dlo) { return DOp(r, zlo, dlo); }
    static DOp identity(const Ring& r, int zlo, int dlo);
    static DOp mul_op(const ZSeries& f, int deg_budget_lo);
    static DOp d_dz(const Ring& r, int zlo, int dlo, int order = 1);
    // single term c * z^k d^m
    static DOp term(const Ring& r, int zlo, int dlo, int zexp, int dorder, const ParamElem& c);

    const Ring& ring() const { return ring_; }
    int z_budget_lo() const { return z_budget_lo_; }
    int deg_budget_lo() const { return deg_budget_lo_; }
    int deg_exact_lo() const { return deg_exact_lo_; }
    bool is_zero() const { return coeffs_.empty(); }
    const std::map<int, ZSeries>& coeffs() const { return coeffs_; }
    int max_dorder() const { return coeffs_.empty() ? -1 : coeffs_.rbegin()->first; }

    // Hard upper bound of the filtration degree over stored terms.
    int top_degree() const;

    DOp operator+(const DOp& o) const;
    DOp operator-(const DOp& o) const;
    DOp operator-() const;
    DOp scale(const ParamElem& c) const;
    DOp scale(const Rational& c) const;
    bool operator==(const DOp& o) const;

    // Normal-ordered composition and commutator.
    DOp compose(const DOp& o) const;
    DOp commutator(const DOp& o) const;
    // Formal adjoint (z^k d^m)* = (-d)^m z^k.
    DOp adjoint() const;
    // Projections onto D_+ = H_+[[d]] and D_- = H_-[[d]].
    DOp project_plus() const;
    DOp project_minus() const;

    ZSeries apply(const ZSeries& f) const;

    // exp(A) for top_degree(A) < 0.
    DOp exp_neg() const;
    // Inverse of c(1 + N) with N of negative top degree, c a unit scalar part.
    DOp invert() const;
    DOp compose_pow(long e) const;

    // Coefficient substitutions z -> z + r and z -> c z (the derivative part
    // is handled by the caller through the usual transformation laws).
    DOp shift_z_coeffs(const ParamElem& r) const;
    DOp scale_z(const ParamElem& c) const;

    ZSeries coeff_series(int dorder) const;
    ParamElem coeff(int zexp, int dorder) const;

    void restrict_deg_exact(int d);

  private:
    void normalize(bool clipped_possible);
    void add_term(int dorder, const ZSeries& s);
    Ring ring_;
    int z_budget_lo_;
    int deg_budget_lo_;
    std::map<int, ZSeries> coeffs_;
    int32_t deg_exact_lo_;

    friend DOp dop_sum_raw(std::vector<std::pair<int, ZSeries>> parts, const DOp& shape);
};

// z-side Heisenberg-Virasoro generators: l_m = -z^m (z d/dz + (m+1)/2),
// j_m = z^m.
DOp vir_z(const Ring& r, int zlo, int dlo, int m);
DOp heis_z(const Ring& r, int zlo, int dlo, int m);

// Sato group element: G in 1 + D_-, i.e. unit constant term and every other
// normal-ordered coefficient supported in z^{<=-1}.
class SatoElement {
  public:
    explicit SatoElement(DOp op);
    const DOp& op() const { return op_; }
    DOp inv() const { return op_.invert(); }
    static bool shape_ok(const DOp& op, std::string* why = nullptr);

  private:
    DOp op_;
};

} // namespace satokit
