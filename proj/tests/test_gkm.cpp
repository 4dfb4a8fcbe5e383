#include <doctest.h>

#include "satokit/errors.hpp"
#include "satokit/gkm.hpp"

using namespace satokit;

namespace {

constexpr int kZlo = -12;
constexpr int kDlo = -12;

Ring kw_ring() { return make_ring({{"hbar", 40, true}}); }
Ring w_ring(int whi = 4) { return make_ring({{"hbar", 40, true}, {"w", whi, false}}); }

Potential kw_pot(const Ring& r) { return Potential(r, kZlo, kDlo, 1, {}, {}); }

Potential defmon_pot(const Ring& r, int n) {
    std::vector<ParamElem> roots;
    roots.push_back(ParamElem::param(r, "w"));
    return Potential(r, kZlo, kDlo, n, {}, roots);
}

ExpVec hb(const Ring& r, int hpow, int wpow = -1) {
    ExpVec e(r->nparams(), 0);
    e[r->index_or_throw("hbar")] = hpow;
    if (wpow >= 0) e[r->index_or_throw("w")] = wpow;
    return e;
}

} // namespace

TEST_CASE("potential construction") {
    Ring r = w_ring();
    SUBCASE("kw potential") {
        Potential kw = kw_pot(r);
        ExpVec eh(r->nparams(), 0); eh[0] = -1;
        CHECK(kw.U().coeff(1).coeff(eh) == Rational(1));
    }
    SUBCASE("deformed n=1: U = z/(hbar(1-wz))") {
        Potential p = defmon_pot(r, 1);
        // U = sum_k w^k z^{k+1} / hbar
        for (int k = 0; k <= 4; ++k) {
            ExpVec e = hb(r, -1, k);
            CHECK(p.U().coeff(k + 1).coeff(e) == Rational(1));
        }
        // c1 = 0 (second root zero), c2 = -hbar w
        CHECK(p.c1().is_zero());
        ExpVec e2 = hb(r, 1, 1);
        CHECK(p.c2().coeff(e2) == Rational(-1));
        // X = -z/w - log(1-wz)/w^2 expands to z^2/2 + w z^3/3 + ...
        KSOps ks = ks_ops(p);
        CHECK(ks.X.coeff(2).coeff(hb(r, 0, 0)) == Rational(1, 2));
        CHECK(ks.X.coeff(3).coeff(hb(r, 0, 1)) == Rational(1, 3));
        CHECK(ks.X.coeff(4).coeff(hb(r, 0, 2)) == Rational(1, 4));
    }
    SUBCASE("two-root deformation c1") {
        Ring r2 = make_ring({{"hbar", 40, true}, {"w1", 3, false}, {"w2", 3, false}});
        std::vector<ParamElem> roots = {ParamElem::param(r2, "w1"), ParamElem::param(r2, "w2")};
        Potential p(r2, kZlo, kDlo, 1, {}, roots);
        // c1 = hbar w1 w2
        ExpVec e(r2->nparams(), 0);
        e[0] = 1; e[1] = 1; e[2] = 1;
        CHECK(p.c1().coeff(e) == Rational(1));
        // c2 = -c1 (b0-free): -hbar(w1 + w2) for n=1 from the expansion
        ExpVec f1(r2->nparams(), 0);
        f1[0] = 1; f1[1] = 1;
        CHECK(p.c2().coeff(f1) == Rational(-1));
    }
}

TEST_CASE("kw ks operators and basis") {
    Ring r = kw_ring();
    Potential kw = kw_pot(r);
    KSOps ks = ks_ops(kw);
    ParamElem one = ParamElem::constant(r, Rational(1));

    SUBCASE("Qt matches Eq.-level KW pair") {
        // Qt = z + hbar(z^{-1} d - 1/(2z^2)), X = z^2/2
        CHECK(ks.Qt.coeff(1, 0) == one);
        ExpVec h1 = hb(r, 1);
        CHECK(ks.Qt.coeff(-1, 1).coeff(h1) == Rational(1));
        CHECK(ks.Qt.coeff(-2, 0).coeff(h1) == Rational(-1, 2));
        CHECK(ks.X.coeff(2) == ParamElem::constant(r, Rational(1, 2)));
    }
    SUBCASE("[Qt, X] = hbar") {
        DOp x = DOp::mul_op(ks.X, kDlo);
        DOp c = ks.Qt.commutator(x);
        DOp expect = DOp::term(r, kZlo, kDlo, 0, 0, ParamElem::param(r, "hbar"));
        CHECK((c - expect).is_zero());
    }
    SUBCASE("phi basis leading structure and Eq. cgz value") {
        ZSeries phi1 = phi_basis(kw, 1);
        CHECK(phi1.coeff(0) == one);
        // 5 hbar / (24 z^3)
        CHECK(phi1.coeff(-3).coeff(hb(r, 1)) == Rational(5, 24));
        // phi_k = z^{k-1}(1 + O(z^{-1}))
        for (int k = 2; k <= 5; ++k) {
            ZSeries pk = phi_basis(kw, k);
            CHECK(pk.hi_bound() == k - 1);
            CHECK(pk.coeff(k - 1) == one);
        }
    }
    SUBCASE("Qt raises the basis") {
        for (int k = 1; k <= 4; ++k) {
            ZSeries lhs = ks.Qt.apply(phi_basis(kw, k));
            ZSeries rhs = phi_basis(kw, k + 1);
            CHECK((lhs - rhs).is_zero());
        }
    }
    SUBCASE("lowering operator: (V'(Qt) - X)/hbar sends phi_k to (k-1)phi_{k-1}") {
        GkmPair gp = canonical_pair_gkm(kw);
        for (int k = 1; k <= 4; ++k) {
            ZSeries lhs = gp.pq.P.apply(phi_basis(kw, k));
            ZSeries rhs = (k == 1) ? ZSeries::zero(r, kZlo)
                                   : phi_basis(kw, k - 1).scale(Rational(k - 1));
            CHECK((lhs - rhs).is_zero());
        }
    }
    SUBCASE("canonical pair equals Eq. bKW") {
        GkmPair gp = canonical_pair_gkm(kw);
        // P = d + hbar W^2/2
        DOp W = DOp::term(r, kZlo, kDlo, -1, 1, one) +
                DOp::term(r, kZlo, kDlo, -2, 0, ParamElem::constant(r, Rational(-1, 2)));
        DOp expectP = DOp::d_dz(r, kZlo, kDlo) +
                      W.compose(W).scale(ParamElem::param(r, "hbar") * Rational(1, 2));
        CHECK((gp.pq.P - expectP).is_zero());
        CHECK(kspair_shape_ok(gp.pq));
    }
}

TEST_CASE("kw wave and sato element") {
    Ring r = kw_ring();
    Potential kw = kw_pot(r);

    SUBCASE("wave dual-route agreement and Eq. cgz coefficient") {
        WaveReport wr = wave_gkm(kw);
        CHECK(wr.wave.coeff(0) == ParamElem::constant(r, Rational(1)));
        CHECK(wr.wave.coeff(-3).coeff(hb(r, 1)) == Rational(5, 24));
    }
    SUBCASE("sato element through hbar^2 matches the recursion") {
        SatoElement g = sato_gkm(kw);
        auto rec = kw_sato_recursion(r, kZlo, kDlo, 3);
        // G^{(1)} = hbar W1/3 with W1 = 5/(8z^3) - 3 d/(2z^2) + 3 d^2/(2z)
        CHECK(rec[1].coeff(-3, 0).coeff(hb(r, 1)) == Rational(5, 24));
        CHECK(rec[1].coeff(-2, 1).coeff(hb(r, 1)) == Rational(-1, 2));
        CHECK(rec[1].coeff(-1, 2).coeff(hb(r, 1)) == Rational(1, 2));
        DOp total = rec[0] + rec[1] + rec[2] + rec[3];
        DOp diff = g.op() - total;
        // degrees above -12 must agree (G^{(4)} has degree -12)
        bool clean = true;
        for (auto& [m, s] : diff.coeffs())
            for (auto& [k, c] : s.coeffs())
                if (k - m > -12 && !c.is_zero()) clean = false;
        CHECK(clean);
        // distinguished basis from G matches phi_basis
        for (int k = 1; k <= 3; ++k) {
            ZSeries from_g = g.op().apply(ZSeries::zpow(r, kZlo, k - 1));
            CHECK((from_g - phi_basis(kw, k)).is_zero());
        }
    }
    SUBCASE("dual point of KW is the GKM with -U (basis check)") {
        // W_{-U}: U -> -U means hbar -> -hbar in every formula here, since
        // U = z/hbar; compare (G*)^{-1} z^{k-1} with the phi basis of -U.
        SatoElement g = sato_gkm(kw);
        DOp gdualinv = g.op().adjoint().invert();
        // build -U potential by flipping the sign of z^n: use b trick: U0 with
        // leading -1 is not representable; instead check duality through the
        // pair transforms P -> -P*, Q -> Q*.
        GkmPair gp = canonical_pair_gkm(kw);
        KSPair dual = canonical_pair(dual_point(g));
        CHECK((dual.P + gp.pq.P.adjoint()).is_zero());
        CHECK((dual.Q - gp.pq.Q.adjoint()).is_zero());
        (void)gdualinv;
    }
}

TEST_CASE("deformed n=1 model") {
    Ring r = w_ring(4);
    Potential p = defmon_pot(r, 1);

    SUBCASE("Qt = Q_KW - hbar w d (Eq. Simpbq)") {
        KSOps ks = ks_ops(p);
        Potential kw(r, kZlo, kDlo, 1, {}, {});
        KSOps kk = ks_ops(kw);
        DOp diff = ks.Qt - kk.Qt;
        DOp expect = DOp::d_dz(r, kZlo, kDlo)
                         .scale(ParamElem::param(r, "hbar") * ParamElem::param(r, "w") *
                                Rational(-1));
        CHECK((diff - expect).is_zero());
    }
    SUBCASE("canonical pair shape and w=0 reduction") {
        GkmPair gp = canonical_pair_gkm(p);
        std::string why;
        CHECK_MESSAGE(kspair_shape_ok(gp.pq, &why), why);
        Potential kw(r, kZlo, kDlo, 1, {}, {});
        GkmPair kwp = canonical_pair_gkm(kw);
        DOp p0 = p.def_order_part(gp.pq.P, 0);
        CHECK((p0 - kwp.pq.P).is_zero());
        DOp q0 = p.def_order_part(gp.pq.Q, 0);
        CHECK((q0 - kwp.pq.Q).is_zero());
    }
    SUBCASE("bernoulli closed form matches the recursion through w^4") {
        GkmPair gp = canonical_pair_gkm(p);
        BernoulliQsc bq = bernoulli_qsc(p);
        DOp diff = gp.pq.P - bq.P;
        CHECK(diff.is_zero());
        // R' from the recursion: rho tables match the closed form
        for (auto& [order, coeffs] : gp.rho) {
            for (int d = 0; d < (int)coeffs.size(); ++d) {
                ParamElem closed = p.def_order_part(bq.Rprime.coeff_or_zero(d), order);
                CHECK((coeffs[d] - closed).is_zero());
            }
        }
    }
    SUBCASE("P annihilates the wave function; dual-route oracle") {
        WaveReport wr = wave_gkm(p);
        GkmPair gp = canonical_pair_gkm(p);
        CHECK(gp.pq.P.apply(wr.wave).is_zero());
        // w-linear term of Phi_1 lies at z^{-1-n+1+...}: Lemma-level window
        ZSeries phi1 = phi_basis(p, 1);
        ZSeries w1 = p.def_order_part(phi1, 1);
        CHECK(w1.hi_bound() <= 1 + 1 - 3);
    }
    SUBCASE("sato element via B route matches point_from_pair route") {
        SatoElement viaB = sato_gkm(p);
        GkmPair gp = canonical_pair_gkm(p);
        SatoElement viaPair = point_from_pair(gp.pq);
        CHECK((viaB.op() - viaPair.op()).is_zero());
        // G . 1 is the wave function; the distinguished vectors G z^{k-1}
        // stay inside the span of the admissible phi basis
        WaveReport wr = wave_gkm(p);
        ZSeries g1 = viaB.op().apply(ZSeries::constant(r, kZlo, Rational(1)));
        CHECK((g1 - wr.wave).is_zero());
        std::vector<ZSeries> phis;
        for (int m = 1; m <= 8; ++m) phis.push_back(phi_basis(p, m));
        for (int k = 2; k <= 3; ++k) {
            ZSeries from_g = viaB.op().apply(ZSeries::zpow(r, kZlo, k - 1));
            CHECK(in_span_graded(p, from_g, phis));
        }
    }
    SUBCASE("hermite corollary at first order in c2") {
        // PhiCheck_k = <e^{R/hbar} c2^{(k-1)/2} He_{k-1}((z+phi)/sqrt(c2))>:
        // expanding to first order in c2 means keeping the w^0 and w^1 parts.
        SatoElement g = sato_gkm(p);
        for (int k = 1; k <= 3; ++k) {
            ZSeries lhs = g.op().apply(ZSeries::zpow(r, kZlo, k - 1));
            // the hermite polynomial expansion:
            // c2^{(k-1)/2} He_{k-1}(x/sqrt(c2)) = sum_j (-c2/2)^j (k-1)!/(j!(k-1-2j)!) x^{k-1-2j}
            ZSeries rhs = ZSeries::zero(r, kZlo);
            for (int j = 0; 2 * j <= k - 1; ++j) {
                Rational c = Rational::factorial(k - 1) /
                             (Rational::factorial(j) * Rational::factorial(k - 1 - 2 * j));
                ParamElem coeff = (p.c2() * Rational(-1, 2)).pow(j) * c;
                // <e^{R/hbar} (z+phi)^{k-1-2j}> = extended basis integral
                rhs = rhs + gkm_bracket_power(p, k - 1 - 2 * j).scale(coeff);
            }
            ZSeries diff = lhs - rhs;
            // compare through w^1 only (first order in c2 = -hbar w)
            ZSeries d0 = p.def_order_part(diff, 0);
            ZSeries d1 = p.def_order_part(diff, 1);
            CHECK(d0.is_zero());
            CHECK(d1.is_zero());
        }
    }
}

TEST_CASE("deformed n=2 model") {
    Ring r = w_ring(3);
    Potential p = defmon_pot(r, 2);
    SUBCASE("bernoulli vs recursion") {
        GkmPair gp = canonical_pair_gkm(p);
        BernoulliQsc bq = bernoulli_qsc(p);
        CHECK((gp.pq.P - bq.P).is_zero());
        CHECK(kspair_shape_ok(gp.pq));
    }
    SUBCASE("dual-route wave oracle (criterion 8 core)") {
        WaveReport wr = wave_gkm(p);
        CHECK(wr.wave.coeff(0) == ParamElem::constant(r, Rational(1)));
    }
}

TEST_CASE("monomial quantum spectral curve limit") {
    // w -> 0 limit of the bernoulli P equals (Qt^{n+1} - z^{n+1})/((n+1)hbar)
    for (int n : {1, 2}) {
        Ring r = w_ring(3);
        Potential p = defmon_pot(r, n);
        BernoulliQsc bq = bernoulli_qsc(p);
        DOp at0 = p.def_order_part(bq.P, 0);
        Potential mon(r, kZlo, kDlo, n, {}, {});
        GkmPair mp = canonical_pair_gkm(mon);
        CHECK((at0 - mp.pq.P).is_zero());
    }
}
