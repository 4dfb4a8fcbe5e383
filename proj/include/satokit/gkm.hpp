#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satokit/grassmann.hpp"
#include "satokit/taukit.hpp"

namespace satokit {

// Definition data of a (possibly deformed) GKM potential
//   U(z) = (z^n + b_{n-1} z^{n-1} + ... + b_1 z + b_0) /
//          (hbar (1 - w_1 z) ... (1 - w_{n+1} z)).
// The deformation roots w_j are z-free ring elements (typically single
// parameters); def_weight assigns each deformation parameter its grading
// weight so that every root has total weight 1 (s carries 1, q carries 2 in
// the cubic-Hodge parametrization).
class Potential {
  public:
    Potential(Ring ring, int z_budget_lo, int deg_budget_lo, int n, std::vector<ParamElem> b,
              std::vector<ParamElem> w, std::map<int, int> def_weight = {});

    const Ring& ring() const { return ring_; }
    int n() const { return n_; }
    int zlo() const { return zlo_; }
    int dlo() const { return dlo_; }
    const std::vector<ParamElem>& b() const { return b_; }
    const std::vector<ParamElem>& roots() const { return w_; }
    const std::map<int, int>& def_weight() const { return def_weight_; }
    bool deformed() const { return deformed_; }
    bool monomial_base() const;

    const ZSeries& U() const { return U_; }
    const ZSeries& Uinv() const { return Uinv_; }
    // V'(z) = hbar * int_0^z U (hbar-free).
    const ZSeries& Vp() const { return Vp_; }
    const ZSeries& V() const { return V_; }
    const ParamElem& c1() const { return c1_; }
    const ParamElem& c2() const { return c2_; }

    // Total deformation order of stored content; 0 for the undeformed case.
    int def_order_budget() const;
    // Restricts a ring element to its total-deformation-order p monomials.
    ParamElem def_order_part(const ParamElem& e, int p) const;
    ZSeries def_order_part(const ZSeries& s, int p) const;
    DOp def_order_part(const DOp& a, int p) const;
    // Euler operator sum w_j d/dw_j over the deformation parameters.
    ParamElem euler_w(const ParamElem& e) const;

  private:
    Ring ring_;
    int zlo_, dlo_, n_;
    std::vector<ParamElem> b_, w_;
    std::map<int, int> def_weight_;
    bool deformed_;
    ZSeries U_, Uinv_, Vp_, V_;
    ParamElem c1_, c2_;
};

// KS operators of Eq.-level GKM: X multiplication series and the raising
// operator Qt = z + U^{-1} d - U'/(2U^2).
struct KSOps {
    ZSeries X;
    DOp Qt;
};
KSOps ks_ops(const Potential& pot);

// Basis integrals Phi_k as truncated series (k >= 1; the extended k <= 0
// adapted vectors are supported as well).
ZSeries phi_basis(const Potential& pot, int k);

// < prefactor (z+phi)^d > where the prefactor is e^{R(phi+z)/hbar} for the
// single-root monomial deformation and 1 otherwise.
ZSeries gkm_bracket_power(const Potential& pot, int d);

// Canonical pair together with the deformed correction series R'(x), stored
// as def-order -> polynomial coefficients in the argument.
struct GkmPair {
    KSPair pq;
    std::map<int, std::vector<ParamElem>> rho; // order p -> coeffs of rho_p(x)
};
GkmPair canonical_pair_gkm(const Potential& pot);

// Bernoulli closed form for the single-parameter monomial deformation
// U = z^n/(hbar(1 - w z)): R'(z) series plus the quantum spectral curve.
struct BernoulliQsc {
    ZSeries Rprime; // polynomial-in-z coefficients per w order
    DOp P;
};
BernoulliQsc bernoulli_qsc(const Potential& pot);

// Wave function via the pivot construction and the quantum-spectral-curve
// recursion; both routes must agree (OracleMismatch otherwise). Also reports
// the pivot coefficients v_m and normalization alpha.
struct WaveReport {
    ZSeries wave;
    std::vector<ParamElem> pivots; // v_m for m >= 2
    ParamElem alpha;
};
WaveReport wave_gkm(const Potential& pot);

SatoElement sato_gkm(const Potential& pot);

// Kontsevich-model Sato element recursion G^{(k)} = (hbar W1 G^{(k-1)} +
// hbar^2 W2 G^{(k-2)})/(3k); returns G^{(0)}..G^{(order)}.
std::vector<DOp> kw_sato_recursion(const Ring& ring, int zlo, int dlo, int order);

// Heisenberg-Virasoro constraint data for the potential.
struct ConstraintTable {
    std::map<std::pair<int, int>, ParamElem> g; // g_{m,j}
    std::map<std::pair<int, int>, ParamElem> h; // h_{m,j}
    std::map<int, ParamElem> theta;             // residue-formula ground truth
    // adjudication data for theta_{-1}: closed forms vs ground truth
    std::optional<ParamElem> theta_m1_closed_lem;   // Lemma closed form as printed
    std::optional<ParamElem> theta_m1_closed_proof; // the proof/strings variant
};
ConstraintTable constraint_table(const Potential& pot, int mmax, int t_weight);

// The operator hat J_m / hat L_m acting on t-polynomials.
TOp constraint_J(const Potential& pot, const ConstraintTable& tbl, int m, int t_weight);
TOp constraint_L(const Potential& pot, const ConstraintTable& tbl, int m, int t_weight);

// Equivalence data between the potential and its monomial base: f(z), the
// a_k Virasoro coefficients and the u_k shift coefficients.
struct EquivalenceMap {
    ZSeries f;
    std::map<int, ParamElem> a; // f = exp(-sum a_k z^{k+1} d/dz) . z
    std::map<int, ParamElem> u; // u_k = [z^k] int (f - eta) U(eta) d eta
};
EquivalenceMap equivalence_map(const Potential& pot);

// Dilaton residual: applies L0 + E_w - hbar^{-1} sum v_k d_k + (n^2+2n)/24 to
// tau and reports the proportionality constant.
struct DilatonReport {
    TPoly residual;     // op(tau) - c tau
    ParamElem constant; // c = E_w log C_U candidate
    std::map<int, ParamElem> v; // the v_k table
};
DilatonReport dilaton_check(const Potential& pot, const TPoly& tau);

// Span membership against the admissible phi basis, eliminating degree by
// degree within each deformation order (the basis is triangular order by
// order even though higher w orders raise the hard z tops).
bool in_span_graded(const Potential& pot, ZSeries f, const std::vector<ZSeries>& phis);

// Root coalescence data: reduced potential and the t-side action
// tau_reduced = e^{sum u_k J_k} e^{w L_1} tau.
struct CoalesceData {
    Potential reduced;
    ParamElem root;
    std::map<int, ParamElem> u;
};
CoalesceData coalesce_roots(const Potential& pot, int first_repeated);

} // namespace satokit
