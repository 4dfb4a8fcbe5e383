#include "satokit/grassmann.hpp"

#include <algorithm>
#include <sstream>

#include "satokit/errors.hpp"

namespace satokit {

bool kspair_shape_ok(const KSPair& pq, std::string* why) {
    const Ring& r = pq.P.ring();
    DOp one = DOp::identity(r, pq.P.z_budget_lo(), pq.P.deg_budget_lo());
    DOp c = pq.P.commutator(pq.Q) - one;
    if (!c.is_zero()) {
        if (why) *why = "[P,Q] differs from 1";
        return false;
    }
    DOp dP = pq.P - DOp::d_dz(r, pq.P.z_budget_lo(), pq.P.deg_budget_lo());
    for (auto& [m, s] : dP.coeffs())
        for (auto& [k, cc] : s.coeffs())
            if (k >= -1) {
                if (why) {
                    std::ostringstream os;
                    os << "P - d has term at z^" << k << " d^" << m << " outside z^{-1}D_-";
                    *why = os.str();
                }
                return false;
            }
    DOp z = DOp::term(r, pq.Q.z_budget_lo(), pq.Q.deg_budget_lo(), 1, 0,
                      ParamElem::constant(r, Rational(1)));
    DOp dQ = pq.Q - z;
    for (auto& [m, s] : dQ.coeffs())
        for (auto& [k, cc] : s.coeffs())
            if (k >= 0) {
                if (why) {
                    std::ostringstream os;
                    os << "Q - z has term at z^" << k << " d^" << m << " outside D_-";
                    *why = os.str();
                }
                return false;
            }
    return true;
}

ZSeries wave_solve(const DOp& P) {
    const Ring& r = P.ring();
    int zlo = P.z_budget_lo();
    DOp M = P - DOp::d_dz(r, zlo, P.deg_budget_lo());
    for (auto& [m, s] : M.coeffs())
        for (auto& [k, c] : s.coeffs())
            if (k >= -1) throw NotQSCShape("operator is not in d + z^{-1}D_-");
    ZSeries psi = ZSeries::constant(r, zlo, Rational(1));
    for (int k = 1; -k >= zlo; ++k) {
        ZSeries rhs = M.apply(psi);
        if (-k - 1 < rhs.exact_lo()) {
            psi.restrict_exact_lo(-k + 1);
            return psi;
        }
        ParamElem ak = rhs.coeff_or_zero(-k - 1) * Rational(1, k);
        if (!ak.is_zero()) psi = psi + ZSeries::zpow_elem(r, zlo, -k, ak);
    }
    return psi;
}

SatoElement point_from_pair(const KSPair& pq) {
    std::string why;
    if (!kspair_shape_ok(pq, &why)) throw PairInconsistent(why);
    const Ring& r = pq.P.ring();
    int zlo = pq.P.z_budget_lo(), dlo = pq.P.deg_budget_lo();
    DOp z = DOp::term(r, zlo, dlo, 1, 0, ParamElem::constant(r, Rational(1)));
    DOp qmz = pq.Q - z;
    ZSeries b0 = wave_solve(pq.P);
    DOp B = DOp::mul_op(b0, dlo);
    int max_order = std::max(0, -dlo);
    for (int k = 0; k < max_order; ++k) {
        DOp C = qmz.compose(B);
        ZSeries bk1 = C.coeff_series(k).scale(Rational(1, k + 1));
        if (bk1.is_zero() && bk1.exact_lo() == -kExactInf) continue;
        B = B + DOp::mul_op(bk1, dlo).compose(DOp::d_dz(r, zlo, dlo, k + 1));
    }
    return SatoElement(B);
}

KSPair canonical_pair(const SatoElement& G) {
    const DOp& g = G.op();
    DOp gi = G.inv();
    const Ring& r = g.ring();
    DOp d = DOp::d_dz(r, g.z_budget_lo(), g.deg_budget_lo());
    DOp z = DOp::term(r, g.z_budget_lo(), g.deg_budget_lo(), 1, 0,
                      ParamElem::constant(r, Rational(1)));
    return KSPair{g.compose(d).compose(gi), g.compose(z).compose(gi)};
}

std::vector<ZSeries> distinguish_basis(const std::vector<ZSeries>& basis) {
    if (basis.empty()) throw InsufficientBasis("empty basis");
    const Ring& r = basis[0].ring();
    int zlo = basis[0].z_budget_lo();
    ParamElem one = ParamElem::constant(r, Rational(1));
    // admissibility requires Phi_{j+1} = z^j (1 + O(z^{-1}))
    for (size_t j = 0; j < basis.size(); ++j) {
        if (basis[j].hi_bound() > (int)j)
            throw NotAdmissible("basis vector exceeds leading power z^{j-1}");
        if (!(basis[j].coeff_or_zero((int)j) == one))
            throw NotAdmissible("basis leading coefficients not unitriangular");
    }

    std::vector<ZSeries> dist;
    dist.reserve(basis.size());
    for (int k = 0; k < (int)basis.size(); ++k) {
        // T_k = sum_{m=1..k} (-z)^m/(m!(k-m)!) PhiCheck_{k-m+1} is known;
        // G_k = T_k + PhiCheck_{k+1}/k! must land in H_- + delta_{k,0}.
        ZSeries Tk = ZSeries::zero(r, zlo);
        for (int m = 1; m <= k; ++m) {
            Rational c = Rational(m % 2 == 0 ? 1 : -1) /
                         (Rational::factorial(m) * Rational::factorial(k - m));
            Tk = Tk + dist[k - m].mul_zpow(m).scale(c);
        }
        ZSeries need = -Tk.scale(Rational::factorial(k));
        if (k == 0) need = need + ZSeries::constant(r, zlo, Rational(1));
        // triangular solve: PhiCheck_{k+1} = sum gamma_d Phi_{d+1} matching
        // the nonnegative part of `need`
        ZSeries phck = ZSeries::zero(r, zlo);
        ZSeries resid = need;
        for (int d = k; d >= 0; --d) {
            ParamElem cd = resid.coeff_or_zero(d);
            if (cd.is_zero()) continue;
            phck = phck + basis[d].scale(cd);
            resid = resid - basis[d].scale(cd);
        }
        if (!resid.plus_part().is_zero())
            throw NotAdmissible("defconstr plus-part could not be matched");
        if (!(phck.coeff_or_zero(k) == one))
            throw NotAdmissible("distinguished solve lost unitriangularity");
        // verify the defining membership directly
        ZSeries comb = Tk + phck.scale(Rational::factorial(k).inv());
        if (k == 0) comb = comb - ZSeries::constant(r, zlo, Rational(1));
        if (!comb.plus_part().is_zero())
            throw NotAdmissible("defconstr membership failed");
        dist.push_back(phck);
    }
    return dist;
}

SatoElement sato_from_basis(const std::vector<ZSeries>& basis, int max_dorder) {
    std::vector<ZSeries> dist = distinguish_basis(basis);
    if ((int)dist.size() < max_dorder + 1)
        throw InsufficientBasis("need at least max_dorder + 1 basis vectors");
    const Ring& r = dist[0].ring();
    int zlo = dist[0].z_budget_lo();
    int dlo = zlo; // shared degree budget
    DOp G = DOp::zero(r, zlo, dlo);
    for (int k = 0; k <= max_dorder; ++k) {
        ZSeries gk = ZSeries::zero(r, zlo);
        for (int m = 0; m <= k; ++m) {
            int j = k - m;
            Rational c = Rational(m % 2 == 0 ? 1 : -1) /
                         (Rational::factorial(m) * Rational::factorial(j));
            gk = gk + dist[j].mul_zpow(m).scale(c);
        }
        if (gk.is_zero()) continue;
        G = G + DOp::mul_op(gk, dlo).compose(DOp::d_dz(r, zlo, dlo, k));
    }
    return SatoElement(G);
}

SatoElement dual_point(const SatoElement& G) {
    return SatoElement(G.op().adjoint().invert());
}

std::vector<ZSeries> ba_function(const SatoElement& G, int x_order) {
    std::vector<ZSeries> cols;
    const DOp& g = G.op();
    for (int k = 0; k <= x_order; ++k) {
        ZSeries zk = ZSeries::zpow(g.ring(), g.z_budget_lo(), k);
        Rational c = Rational(k % 2 == 0 ? 1 : -1) / Rational::factorial(k);
        cols.push_back(g.apply(zk).scale(c));
    }
    return cols;
}

std::vector<ZSeries> dual_ba(const SatoElement& G, int x_order) {
    DOp gd = G.op().adjoint().invert();
    std::vector<ZSeries> cols;
    for (int k = 0; k <= x_order; ++k) {
        ZSeries zk = ZSeries::zpow(gd.ring(), gd.z_budget_lo(), k);
        cols.push_back(gd.apply(zk).scale(Rational::factorial(k).inv()));
    }
    return cols;
}

SatoElement hv_act_expneg(const SatoElement& G, const DOp& generator) {
    return SatoElement(generator.exp_neg().compose(G.op()));
}

SatoElement hv_act_shift(const SatoElement& G, const ParamElem& r) {
    return SatoElement(G.op().shift_z_coeffs(r));
}

SatoElement hv_act_scale(const SatoElement& G, const ParamElem& lambda) {
    // a_m(z) d^m -> lambda^{-m} a_m(lambda z) d^m
    DOp g = G.op().scale_z(lambda);
    ParamElem li = lambda.invert();
    DOp out = DOp::zero(g.ring(), g.z_budget_lo(), g.deg_budget_lo());
    for (auto& [m, s] : g.coeffs())
        out = out + DOp::mul_op(s.scale(li.pow(m)), g.deg_budget_lo())
                        .compose(DOp::d_dz(g.ring(), g.z_budget_lo(), g.deg_budget_lo(), m));
    return SatoElement(out);
}

KSPair pair_shift(const KSPair& pq, const ParamElem& r) {
    DOp P = pq.P.shift_z_coeffs(r);
    DOp Q = pq.Q.shift_z_coeffs(r);
    DOp rop = DOp::term(pq.Q.ring(), pq.Q.z_budget_lo(), pq.Q.deg_budget_lo(), 0, 0, r);
    return KSPair{P, Q - rop};
}

KSPair pair_scale(const KSPair& pq, const ParamElem& lambda) {
    ParamElem li = lambda.invert();
    auto transform = [&](const DOp& a, const ParamElem& pre) {
        DOp sc = a.scale_z(lambda);
        DOp out = DOp::zero(a.ring(), a.z_budget_lo(), a.deg_budget_lo());
        for (auto& [m, s] : sc.coeffs())
            out = out + DOp::mul_op(s.scale(li.pow(m)), a.deg_budget_lo())
                            .compose(DOp::d_dz(a.ring(), a.z_budget_lo(), a.deg_budget_lo(), m));
        return out.scale(pre);
    };
    return KSPair{transform(pq.P, lambda), transform(pq.Q, li)};
}

TwoVar outer_product(const ZSeries& fz, const ZSeries& gw, int w_lo, int w_hi) {
    TwoVar out;
    out.w_lo = w_lo;
    out.w_hi = w_hi;
    for (auto& [wk, c] : gw.coeffs()) {
        if (wk < w_lo || wk > w_hi) continue;
        out.by_w.emplace(wk, fz.scale(c));
    }
    return out;
}

TwoVar twovar_sub(const TwoVar& a, const TwoVar& b) {
    TwoVar out = a;
    out.w_lo = std::max(a.w_lo, b.w_lo);
    out.w_hi = std::min(a.w_hi, b.w_hi);
    for (auto& [wk, s] : b.by_w) {
        auto it = out.by_w.find(wk);
        if (it == out.by_w.end())
            out.by_w.emplace(wk, -s);
        else
            it->second = it->second - s;
    }
    for (auto it = out.by_w.begin(); it != out.by_w.end();) {
        if (it->first < out.w_lo || it->first > out.w_hi)
            it = out.by_w.erase(it);
        else
            ++it;
    }
    return out;
}

bool twovar_is_zero(const TwoVar& a) {
    for (auto& [wk, s] : a.by_w)
        if (!s.is_zero()) return false;
    return true;
}

std::vector<TwoVar> cba_kernel(const SatoElement& G, int x_order, KernelRegion region,
                               int w_lo, int w_hi) {
    const DOp& g = G.op();
    const Ring& r = g.ring();
    int zlo = g.z_budget_lo();
    DOp gdualinv = g.adjoint().invert();

    // base expansions of e^{x(w-z)}/(w-z) by x-order
    // order 0: the region expansion of 1/(w-z); order j>=1: (w-z)^{j-1}/j!
    auto apply_both = [&](const TwoVar& base) {
        // act with G on z in every w-column, then with (G*)^{-1} on w
        TwoVar mid;
        mid.w_lo = base.w_lo;
        mid.w_hi = base.w_hi;
        for (auto& [wk, s] : base.by_w) mid.by_w.emplace(wk, g.apply(s));
        // transpose to z-major, act on w, transpose back
        std::map<int, ZSeries> by_z;
        for (auto& [wk, s] : mid.by_w)
            for (auto& [zk, c] : s.coeffs()) {
                auto it = by_z.find(zk);
                if (it == by_z.end()) {
                    ZSeries col = ZSeries::zpow_elem(r, std::min(w_lo, zlo), wk, c);
                    by_z.emplace(zk, col);
                } else {
                    it->second = it->second + ZSeries::zpow_elem(r, std::min(w_lo, zlo), wk, c);
                }
            }
        TwoVar out;
        out.w_lo = base.w_lo;
        out.w_hi = base.w_hi;
        for (auto& [zk, col] : by_z) {
            ZSeries acted = gdualinv.apply(col);
            for (auto& [wk, c] : acted.coeffs()) {
                if (wk < out.w_lo || wk > out.w_hi) continue;
                auto it = out.by_w.find(wk);
                ZSeries piece = ZSeries::zpow_elem(r, zlo, zk, c);
                if (it == out.by_w.end())
                    out.by_w.emplace(wk, piece);
                else
                    it->second = it->second + piece;
            }
        }
        return out;
    };

    std::vector<TwoVar> cols;
    for (int j = 0; j <= x_order; ++j) {
        TwoVar base;
        base.w_lo = w_lo;
        base.w_hi = w_hi;
        if (j == 0) {
            if (region == KernelRegion::AbsWGreater) {
                // 1/(w-z) = sum_{k>=0} z^k w^{-k-1}
                for (int k = 0; -k - 1 >= w_lo; ++k)
                    base.by_w.emplace(-k - 1, ZSeries::zpow(r, zlo, k));
            } else {
                // -sum_{k>=0} w^k z^{-k-1}
                for (int k = 0; k <= w_hi; ++k)
                    base.by_w.emplace(k, ZSeries::zpow(r, zlo, -k - 1, Rational(-1)));
            }
        } else {
            // (w-z)^{j-1}/j!
            for (int i = 0; i <= j - 1; ++i) {
                int wk = j - 1 - i;
                if (wk < w_lo || wk > w_hi) continue;
                Rational c = Rational::binomial(j - 1, i) *
                             Rational(i % 2 == 0 ? 1 : -1) / Rational::factorial(j);
                base.by_w.emplace(wk, ZSeries::zpow(r, zlo, i, c));
            }
        }
        cols.push_back(apply_both(base));
    }
    return cols;
}

ZSeries reduce_against_basis(ZSeries f, const std::vector<ZSeries>& dist_basis) {
    for (int d = f.hi_bound(); d >= 0; --d) {
        ParamElem c = f.coeff_or_zero(d);
        if (c.is_zero()) continue;
        if (d >= (int)dist_basis.size())
            throw InsufficientBasis("reduction needs basis vector beyond cache");
        f = f - dist_basis[d].scale(c);
    }
    return f;
}

bool in_span(const ZSeries& f, const std::vector<ZSeries>& dist_basis) {
    ZSeries rem = reduce_against_basis(f, dist_basis);
    return rem.is_zero();
}

GrassPoint::GrassPoint(SatoElement sato, int basis_count)
    : sato_(std::move(sato)),
      wave_(sato_.op().apply(
          ZSeries::constant(sato_.op().ring(), sato_.op().z_budget_lo(), Rational(1)))) {
    for (int k = 1; k <= basis_count; ++k) {
        basis_.push_back(sato_.op().apply(
            ZSeries::zpow(sato_.op().ring(), sato_.op().z_budget_lo(), k - 1)));
    }
}

} // namespace satokit
