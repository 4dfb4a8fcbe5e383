#pragma once

#include <vector>

#include "satokit/rational.hpp"
#include "satokit/tpoly.hpp"

namespace satokit {

// Elementary Schur function p_j: coefficient of z^j in exp(sum_k t_k z^k).
TPoly schur_p(const Ring& ring, int j, int wbudget);

// Partitions lambda_1 >= lambda_2 >= ... > 0.
using Partition = std::vector<int>;
// All partitions of every size 0..max_size, reverse-lexicographic within size.
std::vector<Partition> partitions_up_to(int max_size);

// Schur polynomial s_lambda(t) via the Jacobi-Trudi determinant in schur_p.
TPoly schur_s(const Ring& ring, const Partition& lambda, int wbudget);

// Bernoulli numbers with B_1 = -1/2 and the matching polynomials, so that
// B_n(x+1) - B_n(x) = n x^{n-1} and B_n(0) = B_n.
Rational bernoulli(int n);
// Coefficients of B_n(x) by descending power: index i holds [x^{n-i}].
std::vector<Rational> bernoulli_poly(int n);
Rational bernoulli_poly_at(int n, const Rational& x);

// Moments of the standard Gaussian: 0 for odd j, (j-1)!! for even j.
Rational gaussian_moment(int j);

} // namespace satokit
