#pragma once

#include <functional>
#include <string>
#include <vector>

#include "satokit/dop.hpp"
#include "satokit/schur.hpp"
#include "satokit/tpoly.hpp"

namespace satokit {

// Tau-function as a weight-truncated t-polynomial with tau(0) = 1.
struct TauSeries {
    TPoly tau;
    std::string provenance;
};

struct PluckerTable {
    std::vector<std::pair<Partition, ParamElem>> minors; // reverse-lex within size
};

// Plucker minors of the distinguished-basis coefficient matrix, up to
// |lambda| <= weight.
PluckerTable plucker_minors(const SatoElement& G, int weight);

// tau(t) = sum_lambda p_lambda s_lambda(t).
TauSeries tau_from_sato(const SatoElement& G, int weight, const std::string& provenance = "");

// Determinant route of the Miwa evaluation: det Phi_i(lambda_j) / Vandermonde,
// with lambda_j = 1/mu_j for laurent ring parameters mu_j (callers pass the
// parameter indices). CoincidentPoints when the symbolic division fails.
ParamElem miwa_determinant(const std::vector<ZSeries>& basis, const std::vector<int>& mu_idx);
// Substitution route: t_k = (1/k) sum_j mu_j^k.
ParamElem miwa_substitute(const TPoly& tau, const std::vector<int>& mu_idx);

// Formal z-residue of e^{xi(t-t',z)} tau(t-[z^{-1}]) tau(t'+[z^{-1}]) to the
// given weights; identically zero iff tau solves KP to this order.
TPoly hirota_residual(const TPoly& tau, int wt, int wtp);

// Linear operators on TPoly. Kept as closures so constraint operators can be
// assembled from ring-coefficient combinations.
using TOp = std::function<TPoly(const TPoly&)>;

TOp hv_J(int m);
TOp hv_L(int m);
TOp top_scale(const ParamElem& c);
TOp top_add(const std::vector<TOp>& ops);
TOp top_compose(const TOp& a, const TOp& b); // a after b
TOp top_identity();

// exp(sum_i coeff_i gen_i) applied to f by the truncated series; generators
// must lower the t-weight or raise a parameter order. NonTerminating else.
TPoly hv_group_apply(const std::vector<std::pair<ParamElem, TOp>>& gens, const TPoly& f);

// sl(2) closed-form substitution flows for m = -1 and m = +1.
TPoly sl2_subst(int m, const ParamElem& u, const TPoly& f);
// The m = 0 flow: t_k -> lambda^k t_k.
TPoly sl2_scale(const ParamElem& lambda, const TPoly& f);

// Residual op(tau) - c tau with c the constant term of op(tau); the pair is
// (residual, c).
std::pair<TPoly, ParamElem> constraint_residual(const TOp& op, const TPoly& tau);

// p_j with t_k -> sign * d/dt_k / k applied to f (the Hirota shift blocks).
TPoly schur_shift_apply(int j, int sign, const TPoly& f);

} // namespace satokit
