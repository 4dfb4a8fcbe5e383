#pragma once

#include <optional>
#include <vector>

#include "satokit/dop.hpp"

namespace satokit {

// Canonical Kac-Schwarz pair (P, Q) = (G d G^{-1}, G z G^{-1}).
struct KSPair {
    DOp P;
    DOp Q;
};

// Shape checks for membership in Gr_D: [P,Q]=1, P - d in z^{-1}D_-,
// Q - z in D_-.
bool kspair_shape_ok(const KSPair& pq, std::string* why = nullptr);

// Unique monic solution of P . Psi = 0 for P in d + z^{-1}D_-; coefficients
// come from the triangular recursion on z-depth.
ZSeries wave_solve(const DOp& P);

// The inverse bijection: from a canonical pair to the Sato group element,
// via B_0 = Psi and (k+1) B_{k+1} = [d^k] (Q - z) B.
SatoElement point_from_pair(const KSPair& pq);

KSPair canonical_pair(const SatoElement& G);

// Rewrites an admissible basis of shape Phi_j = z^{j-1}(1 + O(z^{-1})) into
// the unique distinguished basis (each G_k combination lands in H_-).
std::vector<ZSeries> distinguish_basis(const std::vector<ZSeries>& basis);

// Assembles the Sato element from the distinguished combination
// G_k = sum_{m+j=k} (-z)^m/(m! j!) PhiCheck_{j+1}.
SatoElement sato_from_basis(const std::vector<ZSeries>& basis, int max_dorder);

// Dual point (G*)^{-1}.
SatoElement dual_point(const SatoElement& G);

// BA function as x-columns: Psi(z,x) = sum_k x^k psi[k], psi[k] =
// (-1)^k/k! G z^k; dual via (G*)^{-1} e^{xz}.
std::vector<ZSeries> ba_function(const SatoElement& G, int x_order);
std::vector<ZSeries> dual_ba(const SatoElement& G, int x_order);

// Heisenberg-Virasoro actions on a point.
SatoElement hv_act_expneg(const SatoElement& G, const DOp& generator);
SatoElement hv_act_shift(const SatoElement& G, const ParamElem& r);
SatoElement hv_act_scale(const SatoElement& G, const ParamElem& lambda);
// Matching transformations of the canonical pair.
KSPair pair_shift(const KSPair& pq, const ParamElem& r);
KSPair pair_scale(const KSPair& pq, const ParamElem& lambda);

// Two-variable kernel slice: map from w-exponent to a z-series.
struct TwoVar {
    std::map<int, ZSeries> by_w;
    int w_lo = 0, w_hi = 0; // inclusive w window actually populated
};

// Cauchy-Baker-Akhiezer kernel columns in x: K(z,w,x) = sum_j x^j K_j,
// expanded in one of the two regions.
enum class KernelRegion { AbsWGreater, AbsZGreater };
std::vector<TwoVar> cba_kernel(const SatoElement& G, int x_order, KernelRegion region,
                               int w_lo, int w_hi);

// Outer product f(z) g(w) restricted to a w window.
TwoVar outer_product(const ZSeries& fz, const ZSeries& gw, int w_lo, int w_hi);
TwoVar twovar_sub(const TwoVar& a, const TwoVar& b);
bool twovar_is_zero(const TwoVar& a);

// Span membership against a distinguished basis: eliminates nonnegative z
// powers; returns the H_- remainder. Inconclusive windows raise
// PrecisionUnderflow through the coefficient gates.
ZSeries reduce_against_basis(ZSeries f, const std::vector<ZSeries>& dist_basis);
bool in_span(const ZSeries& f, const std::vector<ZSeries>& dist_basis);

// A point of the big cell with its cached wave function and distinguished
// basis (write-once at construction).
class GrassPoint {
  public:
    GrassPoint(SatoElement sato, int basis_count);
    const SatoElement& sato() const { return sato_; }
    const ZSeries& wave() const { return wave_; }
    const std::vector<ZSeries>& dist_basis() const { return basis_; }

  private:
    SatoElement sato_;
    ZSeries wave_;
    std::vector<ZSeries> basis_;
};

} // namespace satokit
