#include "satokit/taukit.hpp"

#include <algorithm>
#include <optional>

#include "satokit/errors.hpp"

namespace satokit {

namespace {

// det over a row-major entry accessor by subset DP.
ParamElem subset_det(const Ring& ring, int n,
                     const std::function<ParamElem(int, int)>& entry) {
    if (n == 0) return ParamElem::constant(ring, Rational(1));
    std::vector<std::optional<ParamElem>> dp(1u << n);
    dp[0] = ParamElem::constant(ring, Rational(1));
    for (unsigned s = 1; s < (1u << n); ++s) {
        int row = __builtin_popcount(s) - 1;
        ParamElem acc(ring);
        int pos = 0;
        for (int c = 0; c < n; ++c) {
            if (!(s & (1u << c))) continue;
            ParamElem e = entry(row, c);
            if (!e.is_zero()) {
                ParamElem prod = e * (*dp[s & ~(1u << c)]);
                acc = ((row + pos) % 2 == 0) ? acc + prod : acc - prod;
            }
            ++pos;
        }
        dp[s] = acc;
    }
    return *dp[(1u << n) - 1];
}

} // namespace

PluckerTable plucker_minors(const SatoElement& G, int weight) {
    const DOp& g = G.op();
    const Ring& ring = g.ring();
    // distinguished basis vectors PhiCheck_{i+1} = G z^i for i = 0..weight-1
    std::vector<ZSeries> basis;
    for (int i = 0; i < std::max(weight, 1); ++i)
        basis.push_back(g.apply(ZSeries::zpow(ring, g.z_budget_lo(), i)));
    PluckerTable table;
    for (const Partition& lam : partitions_up_to(weight)) {
        int n = (int)lam.size();
        auto entry = [&](int a, int i) -> ParamElem {
            // m_{r,c} = [z^{r-1}] PhiCheck_c with r = (a+1) - lam_a, c = i+1
            int zexp = (a + 1) - lam[a] - 1;
            return basis[i].coeff(zexp);
        };
        table.minors.push_back({lam, subset_det(ring, n, entry)});
    }
    return table;
}

TauSeries tau_from_sato(const SatoElement& G, int weight, const std::string& provenance) {
    const Ring& ring = G.op().ring();
    PluckerTable table = plucker_minors(G, weight);
    TPoly tau(ring, weight);
    for (auto& [lam, minor] : table.minors) {
        if (minor.is_zero()) continue;
        tau = tau + schur_s(ring, lam, weight).scale(minor);
    }
    // partitions beyond the weight budget were not enumerated
    tau.restrict_exact_w(weight, kExactInf);
    return TauSeries{tau, provenance};
}

namespace {

// Exact synthetic division of f by (mu_i - mu_j); throws if a remainder
// survives within the exact window.
ParamElem divide_by_mu_diff(const ParamElem& f, int i, int j) {
    const Ring& ring = f.ring();
    if (f.is_zero()) return f;
    int hi = f.max_exp(i), lo = f.min_exp(i);
    ParamElem muj = ParamElem::param(ring, ring->param(j).name);
    // f = (mu_i - mu_j) q ; c_k = q_{k-1} - mu_j q_k
    std::map<int, ParamElem> q;
    ParamElem prev(ring); // q_hi = 0
    for (int k = hi; k >= lo; --k) {
        // q_{k-1} = c_k + mu_j q_k
        ParamElem ck = f.select(i, k);
        ParamElem qk1 = ck + muj * prev;
        q.emplace(k - 1, qk1);
        prev = qk1;
    }
    // remainder: q_{lo-1} must vanish
    if (!q.at(lo - 1).is_zero())
        throw CoincidentPoints("symbolic Vandermonde division left a remainder");
    ParamElem mui = ParamElem::param(ring, ring->param(i).name);
    ParamElem out(ring);
    for (auto& [k, c] : q) {
        if (k < lo) continue;
        out = out + c * mui.pow(k);
    }
    return out;
}

} // namespace

ParamElem miwa_determinant(const std::vector<ZSeries>& basis, const std::vector<int>& mu_idx) {
    int n = (int)mu_idx.size();
    if ((int)basis.size() < n) throw InsufficientBasis("miwa determinant needs N basis vectors");
    const Ring& ring = basis[0].ring();
    ParamElem det = subset_det(ring, n, [&](int i, int j) -> ParamElem {
        return basis[i].eval_inv_param(mu_idx[j]);
    });
    // divide by Vandermonde prod_{i<j} (lambda_j - lambda_i) with
    // lambda = 1/mu: (lambda_j - lambda_i) = (mu_i - mu_j) / (mu_i mu_j)
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            ParamElem mui = ParamElem::param(ring, ring->param(mu_idx[i]).name);
            ParamElem muj = ParamElem::param(ring, ring->param(mu_idx[j]).name);
            det = divide_by_mu_diff(det * mui * muj, mu_idx[i], mu_idx[j]);
        }
    return det;
}

ParamElem miwa_substitute(const TPoly& tau, const std::vector<int>& mu_idx) {
    const Ring& ring = tau.ring();
    return tau.substitute_t([&](int k) {
        ParamElem acc(ring);
        for (int mi : mu_idx) {
            ExpVec e(ring->nparams(), 0);
            e[mi] = k;
            acc = acc + ParamElem::monomial(ring, e, Rational(1, k));
        }
        return acc;
    });
}

TPoly schur_shift_apply(int j, int sign, const TPoly& f) {
    const Ring& ring = f.ring();
    TPoly pj = schur_p(ring, j, j);
    TPoly acc(ring, f.wbudget_t(), f.wbudget_tp());
    for (auto& [mono, c] : pj.terms()) {
        Rational scalar(1);
        TPoly term = f;
        for (auto& [k, p] : mono.t) {
            for (int q = 0; q < p; ++q) {
                term = term.ddt(k);
                scalar = scalar * Rational(sign, k);
            }
        }
        acc = acc + term.scale(c * scalar);
    }
    // f's weight marks shift down with the derivative order automatically.
    return acc;
}

TPoly hirota_residual(const TPoly& tau, int wt, int wtp) {
    const Ring& ring = tau.ring();
    // prepare the two shifted factors
    std::vector<TPoly> left, right;
    for (int j = 0;; ++j) {
        TPoly lj = schur_shift_apply(j, -1, tau);
        left.push_back(lj);
        if (j > tau.wbudget_t()) break;
    }
    for (int l = 0;; ++l) {
        TPoly rl = schur_shift_apply(l, 1, tau).to_primed(wtp);
        right.push_back(rl);
        if (l > tau.wbudget_t()) break;
    }
    // p_i(t - t') columns
    int imax = wt + wtp + 1;
    std::vector<TPoly> xi;
    for (int i = 0; i <= imax; ++i) {
        TPoly pi = schur_p(ring, i, i);
        TPoly acc(ring, wt, wtp);
        for (auto& [mono, c] : pi.terms()) {
            TPoly term = TPoly::constant(ring, wt, c, wtp);
            for (auto& [k, p] : mono.t)
                for (int q = 0; q < p; ++q) {
                    TPoly tk = TPoly::var(ring, wt, k, false, wtp) -
                               TPoly::var(ring, wt, k, true, wtp);
                    term = term * tk;
                }
            acc = acc + term;
        }
        xi.push_back(acc);
    }
    TPoly res(ring, wt, wtp);
    for (int j = 0; j < (int)left.size(); ++j) {
        if (left[j].is_zero() && left[j].exact_w_t() >= kExactInf) continue;
        for (int l = 0; l < (int)right.size(); ++l) {
            int i = j + l - 1;
            if (i < 0 || i > imax) continue;
            TPoly prod = xi[i] * left[j].reframed(wt, wtp) * right[l].reframed(wt, wtp);
            res = res + prod;
        }
    }
    return res;
}

TOp hv_J(int m) {
    return [m](const TPoly& f) {
        if (m > 0) return f.ddt(m);
        if (m == 0) return TPoly(f.ring(), f.wbudget_t(), f.wbudget_tp());
        return f.mul_var(-m).scale(Rational(-m));
    };
}

TOp hv_L(int m) {
    return [m](const TPoly& f) {
        TPoly acc(f.ring(), f.wbudget_t(), f.wbudget_tp());
        // quadratic creation part: (1/2) sum_{a+b=-m} a b t_a t_b
        if (m < 0) {
            for (int a = 1; a <= -m - 1; ++a) {
                int b = -m - a;
                acc = acc + f.mul_var(a).mul_var(b).scale(Rational(a * b, 2));
            }
        }
        // mixing part: sum_k k t_k d/dt_{k+m}
        for (int k = std::max(1, 1 - m); k <= f.wbudget_t() + std::abs(m) + 1; ++k) {
            TPoly d = f.ddt(k + m);
            if (d.is_zero() && d.exact_w_t() >= kExactInf) continue;
            acc = acc + d.mul_var(k).scale(Rational(k));
        }
        // annihilation part: (1/2) sum_{a+b=m} d^2/dt_a dt_b
        if (m > 0) {
            for (int a = 1; a <= m - 1; ++a) {
                int b = m - a;
                acc = acc + f.ddt(a).ddt(b).scale(Rational(1, 2));
            }
        }
        return acc;
    };
}

TOp top_scale(const ParamElem& c) {
    return [c](const TPoly& f) { return f.scale(c); };
}

TOp top_add(const std::vector<TOp>& ops) {
    return [ops](const TPoly& f) {
        TPoly acc(f.ring(), f.wbudget_t(), f.wbudget_tp());
        for (auto& op : ops) acc = acc + op(f);
        return acc;
    };
}

TOp top_compose(const TOp& a, const TOp& b) {
    return [a, b](const TPoly& f) { return a(b(f)); };
}

TOp top_identity() {
    return [](const TPoly& f) { return f; };
}

TPoly hv_group_apply(const std::vector<std::pair<ParamElem, TOp>>& gens, const TPoly& f) {
    const Ring& ring = f.ring();
    long cap = 8 + f.wbudget_t() + f.wbudget_tp();
    for (int i = 0; i < ring->nparams(); ++i)
        cap += 2L * std::abs(ring->param(i).budget_hi) + 4;
    auto gen_apply = [&](const TPoly& x) {
        TPoly acc(ring, x.wbudget_t(), x.wbudget_tp());
        for (auto& [c, op] : gens) acc = acc + op(x).scale(c);
        return acc;
    };
    TPoly acc = f;
    TPoly pw = f;
    for (long k = 1; k <= cap; ++k) {
        pw = gen_apply(pw).scale(Rational(k).inv());
        // A dead term died of parameter clipping; the marks of the surviving
        // summands already carry the honest weight information.
        if (pw.is_zero()) return acc;
        acc = acc + pw;
    }
    throw NonTerminating("hv_group_apply: generator sum does not truncate");
}

TPoly sl2_scale(const ParamElem& lambda, const TPoly& f) {
    // t_k -> lambda^k t_k (the m = 0 flow with lambda = e^{-u})
    const Ring& ring = f.ring();
    TPoly acc(ring, f.wbudget_t(), f.wbudget_tp());
    acc.restrict_exact_w(f.exact_w_t(), f.exact_w_tp());
    for (auto& [mono, c] : f.terms()) {
        long deg = 0;
        for (auto& [k, p] : mono.t) deg += (long)k * p;
        TPoly term = TPoly::constant(ring, f.wbudget_t(), c, f.wbudget_tp()) *
                     TPoly::constant(ring, f.wbudget_t(), Rational(1), f.wbudget_tp())
                         .scale(lambda.pow(deg));
        for (auto& [k, p] : mono.t)
            for (int q = 0; q < p; ++q) term = term.mul_var(k);
        for (auto& [k, p] : mono.tp)
            for (int q = 0; q < p; ++q) term = term.mul_var(k, true);
        acc = acc + term;
    }
    return acc;
}

TPoly sl2_subst(int m, const ParamElem& u, const TPoly& f) {
    const Ring& ring = f.ring();
    if (m == 0) throw BadInput("sl2_subst: use sl2_scale for m = 0");
    int wb = f.wbudget_t();
    auto tk_image = [&](int k) -> TPoly {
        TPoly acc(ring, wb, f.wbudget_tp());
        if (m == -1) {
            // t_k(u) = sum_j (-u)^j (k+j)!/(k! j!) t_{k+j}
            for (int j = 0; k + j <= wb; ++j) {
                Rational c = Rational::factorial(k + j) /
                             (Rational::factorial(k) * Rational::factorial(j));
                ParamElem cu = ParamElem::constant(ring, c) * (-u).pow(j);
                acc = acc + TPoly::var(ring, wb, k + j, false, f.wbudget_tp()).scale(cu);
            }
            // deeper t's fall outside the weight budget
            acc.restrict_exact_w(wb, f.wbudget_tp());
        } else {
            // m = +1: t_k(u) = sum_{j=1..k} (-u)^{k-j} (k-1)!/((j-1)!(k-j)!) t_j
            for (int j = 1; j <= k; ++j) {
                Rational c = Rational::factorial(k - 1) /
                             (Rational::factorial(j - 1) * Rational::factorial(k - j));
                ParamElem cu = ParamElem::constant(ring, c) * (-u).pow(k - j);
                acc = acc + TPoly::var(ring, wb, j, false, f.wbudget_tp()).scale(cu);
            }
        }
        return acc;
    };
    return f.substitute_t_poly(tk_image);
}

std::pair<TPoly, ParamElem> constraint_residual(const TOp& op, const TPoly& tau) {
    TPoly image = op(tau);
    ParamElem c = image.constant_term();
    TPoly resid = image - tau.scale(c);
    return {resid, c};
}

} // namespace satokit
