#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "satokit/rational.hpp"

namespace satokit {

// One formal parameter of the coefficient ring. Exponents above budget_hi are
// truncated away (and tracked as unknown); laurent parameters may carry
// negative exponents (hbar, s), all others have hard support >= 0.
struct Param {
    std::string name;
    int budget_hi = 4;
    bool laurent = false;
};

class RingSpec {
  public:
    explicit RingSpec(std::vector<Param> params);
    int nparams() const { return (int)params_.size(); }
    const Param& param(int i) const { return params_[i]; }
    // -1 when absent.
    int index(const std::string& name) const;
    int index_or_throw(const std::string& name) const;

  private:
    std::vector<Param> params_;
    std::map<std::string, int> by_name_;
};

using Ring = std::shared_ptr<const RingSpec>;

Ring make_ring(std::vector<Param> params);
// New ring with one extra parameter appended.
Ring extend_ring(const Ring& r, const Param& extra);

using ExpVec = std::vector<int32_t>;

// Saturated "fully exact" sentinel for exactness marks.
constexpr int32_t kExactInf = 1 << 28;
int32_t sat_add(int32_t a, int32_t b);

// Element of the truncated multi-parameter ring: finitely many monomials in
// the declared parameters with Rational coefficients. Each element carries a
// per-parameter exactness box: coefficients whose exponent vector lies within
// [support, exact_hi] in every coordinate are exact; coordinates above
// exact_hi are unknown (truncated away). Immutable value semantics.
class ParamElem {
  public:
    explicit ParamElem(Ring ring);
    static ParamElem constant(const Ring& ring, const Rational& c);
    static ParamElem from_long(const Ring& ring, long c) { return constant(ring, Rational(c)); }
    static ParamElem monomial(const Ring& ring, const ExpVec& e, const Rational& c);
    static ParamElem param(const Ring& ring, const std::string& name, int power = 1);

    const Ring& ring() const { return ring_; }
    bool is_zero() const { return terms_.empty(); }
    // Empty with no unknown region anywhere.
    bool is_exact_zero() const {
        if (!terms_.empty()) return false;
        for (auto m : exact_hi_)
            if (m < kExactInf) return false;
        return true;
    }
    const std::map<ExpVec, Rational>& terms() const { return terms_; }

    ParamElem operator+(const ParamElem& o) const;
    ParamElem operator-(const ParamElem& o) const;
    ParamElem operator*(const ParamElem& o) const;
    ParamElem operator*(const Rational& c) const;
    ParamElem operator-() const;
    bool operator==(const ParamElem& o) const;

    // Unit inversion: the minimal monomial must divide every term within the
    // truncation and the correction tail must be nilpotent under truncation.
    ParamElem invert() const;
    // exp/log/sqrt of 1 + nilpotent-under-truncation (exp accepts pure
    // nilpotent argument, i.e. no constant term).
    ParamElem exp_nilpotent() const;
    ParamElem log_unit() const;
    ParamElem sqrt_unit() const;
    ParamElem pow(long e) const;

    ParamElem derivative(int param_idx) const;

    // Exact coefficient access: PrecisionUnderflow outside the exactness box.
    Rational coeff(const ExpVec& e) const;
    Rational coeff_or_zero(const ExpVec& e) const;
    Rational constant_term() const { return coeff_or_zero(ExpVec(ring_->nparams(), 0)); }

    const ExpVec& exact_hi() const { return exact_hi_; }
    // Componentwise lower bound of the true support (exact below, see coeff()).
    ExpVec support_lo() const;
    int min_exp(int param_idx) const;
    int max_exp(int param_idx) const;
    bool depends_on(int param_idx) const;
    void restrict_exact_hi(const ExpVec& hi);

    // Sub-element with the given exponent in one parameter; that coordinate is
    // reset to zero in the result (the caller re-multiplies if needed).
    ParamElem select(int param_idx, int exponent) const;
    // Keeps exponents <= max_exp in the given parameter, marks the rest exact
    // only up to max_exp.
    ParamElem truncate_above(int param_idx, int max_exp) const;
    // Drops the parameter coordinate entirely; every stored term must have
    // exponent 0 there. Result lives in `target`, matched by name.
    ParamElem strip_param(const Ring& target, int param_idx) const;
    // Re-expresses the element in a super-ring, matching parameters by name.
    ParamElem cast(const Ring& target) const;

    // Total order across a subset of parameters (for grading arguments).
    static int total_order(const ExpVec& e, const std::vector<int>& idxs);

  private:
    void normalize_and_clip(bool* dropped = nullptr);
    Ring ring_;
    std::map<ExpVec, Rational> terms_;
    ExpVec exact_hi_;
};

inline ParamElem operator*(const Rational& c, const ParamElem& e) { return e * c; }

} // namespace satokit
