#pragma once

#include <functional>
#include <map>
#include <vector>

#include "satokit/ring.hpp"

namespace satokit {

// Monomial in two banks of time variables: t_1,t_2,... and a primed bank
// t'_1,t'_2,... used by bilinear identities. Entries are (index, power),
// sorted by index, powers > 0. Weight of t_k is k.
struct TMono {
    std::vector<std::pair<int, int>> t;
    std::vector<std::pair<int, int>> tp;

    int weight_t() const;
    int weight_tp() const;
    bool operator<(const TMono& o) const;
    bool operator==(const TMono& o) const { return t == o.t && tp == o.tp; }
    static TMono var(int k, int power = 1, bool primed = false);
    std::string str() const;
};

// Polynomial in the time variables over the parameter ring, truncated at a
// total t-weight budget per bank. Coefficients of monomials with weight above
// the exact marks are unknown.
class TPoly {
  public:
    TPoly(Ring ring, int wbudget_t, int wbudget_tp = 0);
    static TPoly constant(const Ring& ring, int wb, const ParamElem& c, int wbp = 0);
    static TPoly constant(const Ring& ring, int wb, const Rational& c, int wbp = 0);
    static TPoly var(const Ring& ring, int wb, int k, bool primed = false, int wbp = 0);

    const Ring& ring() const { return ring_; }
    int wbudget_t() const { return wbudget_t_; }
    int wbudget_tp() const { return wbudget_tp_; }
    int exact_w_t() const { return exact_w_t_; }
    int exact_w_tp() const { return exact_w_tp_; }
    bool is_zero() const { return terms_.empty(); }
    const std::map<TMono, ParamElem>& terms() const { return terms_; }

    TPoly operator+(const TPoly& o) const;
    TPoly operator-(const TPoly& o) const;
    TPoly operator*(const TPoly& o) const;
    TPoly operator-() const;
    TPoly scale(const ParamElem& c) const;
    TPoly scale(const Rational& c) const;
    bool operator==(const TPoly& o) const;

    TPoly ddt(int k, bool primed = false) const;
    TPoly mul_var(int k, bool primed = false) const;

    TPoly invert_unit() const;
    TPoly exp_nilpotent() const;
    TPoly log_unit() const;

    // Exact coefficient; PrecisionUnderflow above the exact weight marks.
    ParamElem coeff(const TMono& m) const;
    ParamElem coeff_or_zero(const TMono& m) const;
    ParamElem constant_term() const { return coeff_or_zero(TMono{}); }

    // Substitutes values for every t_k (unprimed bank); vals(k) must be valid
    // for all k appearing. Weight-unknown terms are accounted for by the
    // mark_restrict callback applied to the result.
    ParamElem substitute_t(const std::function<ParamElem(int)>& vals) const;
    // Substitutes a polynomial for each t_k (unprimed): composition.
    TPoly substitute_t_poly(const std::function<TPoly(int)>& vals) const;

    // Relabels the unprimed bank as the primed bank.
    TPoly to_primed(int new_wbudget_tp) const;
    // Same content in a frame with different weight budgets.
    TPoly reframed(int new_wt, int new_wtp) const;

    int min_weight_t() const;
    int min_weight_tp() const;
    void restrict_exact_w(int wt, int wtp);

    std::vector<std::pair<TMono, ParamElem>> sorted_terms() const;

  private:
    void normalize(bool clipped_possible);
    Ring ring_;
    int wbudget_t_, wbudget_tp_;
    std::map<TMono, ParamElem> terms_;
    int32_t exact_w_t_, exact_w_tp_;
};

} // namespace satokit
