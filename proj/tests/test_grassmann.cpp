#include <doctest.h>

#include <random>

#include "satokit/errors.hpp"
#include "satokit/grassmann.hpp"

using namespace satokit;

namespace {

Ring plainring() { return make_ring({{"hbar", 40, true}, {"a", 6, false}}); }

constexpr int kZlo = -12;
constexpr int kDlo = -12;

DOp random_sato(const Ring& r, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> zexp(-3, -1);
    std::uniform_int_distribution<int> dord(0, 2);
    std::uniform_int_distribution<int> numer(-3, 3);
    std::uniform_int_distribution<int> denom(1, 3);
    std::uniform_int_distribution<int> nterms(2, 4);
    for (;;) {
        DOp g = DOp::identity(r, kZlo, kDlo);
        int n = nterms(rng);
        for (int i = 0; i < n; ++i) {
            int num = numer(rng);
            if (num == 0) continue;
            g = g + DOp::term(r, kZlo, kDlo, zexp(rng), dord(rng),
                              ParamElem::constant(r, Rational(num, denom(rng))));
        }
        if (SatoElement::shape_ok(g)) return g;
    }
}

ZSeries zp(const Ring& r, int k, const Rational& c = Rational(1)) {
    return ZSeries::zpow(r, kZlo, k, c);
}

} // namespace

TEST_CASE("wave_solve basics") {
    Ring r = plainring();
    SUBCASE("P = d gives 1") {
        ZSeries psi = wave_solve(DOp::d_dz(r, kZlo, kDlo));
        CHECK(psi.coeff(0).constant_term() == Rational(1));
        CHECK(psi.hi_bound() == 0);
        CHECK((psi - ZSeries::constant(r, kZlo, Rational(1))).is_zero());
    }
    SUBCASE("P = d + a z^{-2} gives exp(a/z)") {
        ParamElem a = ParamElem::param(r, "a");
        DOp P = DOp::d_dz(r, kZlo, kDlo) + DOp::term(r, kZlo, kDlo, -2, 0, a);
        ZSeries psi = wave_solve(P);
        // exp(a/z) truncated: coefficient of z^{-k} is a^k/k!
        ZSeries expected = ZSeries::zpow_elem(r, kZlo, -1, a).exp_nilpotent();
        CHECK((psi - expected).is_zero());
        // direct differentiation cross-check
        CHECK(P.apply(psi).is_zero());
    }
    SUBCASE("shape rejection") {
        DOp bad = DOp::d_dz(r, kZlo, kDlo) +
                  DOp::term(r, kZlo, kDlo, -1, 0, ParamElem::constant(r, Rational(1)));
        CHECK_THROWS_AS(wave_solve(bad), NotQSCShape);
    }
}

TEST_CASE("canonical pair and bijection") {
    Ring r = plainring();
    SUBCASE("G = 1 gives (d, z)") {
        SatoElement one(DOp::identity(r, kZlo, kDlo));
        KSPair pq = canonical_pair(one);
        CHECK((pq.P - DOp::d_dz(r, kZlo, kDlo)).is_zero());
        CHECK((pq.Q - DOp::term(r, kZlo, kDlo, 1, 0, ParamElem::constant(r, Rational(1))))
                  .is_zero());
        SatoElement back = point_from_pair(pq);
        CHECK((back.op() - one.op()).is_zero());
    }
    SUBCASE("multiplication operator G = 1 + a/z") {
        ParamElem a = ParamElem::param(r, "a");
        DOp g = DOp::identity(r, kZlo, kDlo) + DOp::term(r, kZlo, kDlo, -1, 0, a);
        KSPair pq = canonical_pair(SatoElement(g));
        // P = d - g'/g = d + a z^{-2} - a^2 z^{-3} + ..., Q = z
        CHECK((pq.Q - DOp::term(r, kZlo, kDlo, 1, 0, ParamElem::constant(r, Rational(1))))
                  .is_zero());
        CHECK(pq.P.coeff(-2, 0) == a);
        CHECK(pq.P.coeff(-3, 0) == -(a * a));
        CHECK(kspair_shape_ok(pq));
    }
    SUBCASE("randomized round trips (criterion 1 core)") {
        std::mt19937_64 rng(20240817);
        for (int trial = 0; trial < 20; ++trial) {
            DOp g = random_sato(r, rng);
            KSPair pq = canonical_pair(SatoElement(g));
            std::string why;
            CHECK_MESSAGE(kspair_shape_ok(pq, &why), why);
            SatoElement back = point_from_pair(pq);
            DOp diff = back.op() - g;
            CHECK_MESSAGE(diff.is_zero(), "round trip failed at trial " << trial);
        }
    }
    SUBCASE("pair inconsistency raises") {
        DOp P = DOp::d_dz(r, kZlo, kDlo);
        DOp Q = DOp::term(r, kZlo, kDlo, 1, 0, ParamElem::constant(r, Rational(1))) +
                DOp::term(r, kZlo, kDlo, -1, 0, ParamElem::constant(r, Rational(1)));
        CHECK_THROWS_AS(point_from_pair(KSPair{P, Q}), PairInconsistent);
    }
}

TEST_CASE("distinguished basis") {
    Ring r = plainring();
    SUBCASE("H_+ monomials are their own distinguished basis") {
        std::vector<ZSeries> basis;
        for (int j = 0; j < 5; ++j) basis.push_back(zp(r, j));
        auto dist = distinguish_basis(basis);
        for (int j = 0; j < 5; ++j) CHECK((dist[j] - basis[j]).is_zero());
        SatoElement g = sato_from_basis(basis, 3);
        CHECK((g.op() - DOp::identity(r, kZlo, kDlo)).is_zero());
    }
    SUBCASE("triangular correction for {1, z + 1/z, z^2}") {
        std::vector<ZSeries> basis;
        basis.push_back(zp(r, 0));
        basis.push_back(zp(r, 1) + zp(r, -1));
        basis.push_back(zp(r, 2));
        basis.push_back(zp(r, 3));
        auto dist = distinguish_basis(basis);
        // PhiCheck_1 = Phi_1 = 1; G_1 = PhiCheck_2 - z PhiCheck_1 in H_- forces
        // PhiCheck_2 = Phi_2 (its z^0 part is empty) and so on; the solve must
        // reproduce vectors satisfying the membership, verified internally.
        CHECK((dist[0] - basis[0]).is_zero());
        CHECK(dist[1].coeff(1).constant_term() == Rational(1));
        // G_2 membership: PhiCheck_3/2 - z PhiCheck_2 + z^2/2 PhiCheck_1 in H_-
        ZSeries g2 = dist[2].scale(Rational(1, 2)) - dist[1].mul_zpow(1) +
                     dist[0].mul_zpow(2).scale(Rational(1, 2));
        CHECK(g2.plus_part().is_zero());
    }
    SUBCASE("non-admissible input rejected") {
        std::vector<ZSeries> basis;
        basis.push_back(zp(r, 0).scale(Rational(2)));
        CHECK_THROWS_AS(distinguish_basis(basis), NotAdmissible);
    }
}

TEST_CASE("sato element round trip through basis") {
    Ring r = plainring();
    std::mt19937_64 rng(5);
    DOp g = random_sato(r, rng);
    // basis Phi_k = G z^{k-1} is already distinguished; rebuilding G from it
    // must return the same element
    std::vector<ZSeries> basis;
    for (int k = 0; k <= 6; ++k) basis.push_back(g.apply(zp(r, k)));
    SatoElement g2 = sato_from_basis(basis, g.max_dorder());
    CHECK((g2.op() - g).is_zero());
}

TEST_CASE("distinguished basis action laws and orthonormality") {
    Ring r = plainring();
    std::mt19937_64 rng(11);
    DOp gop = random_sato(r, rng);
    SatoElement g(gop);
    GrassPoint pt(g, 8);
    KSPair pq = canonical_pair(g);

    // P Psi = 0
    CHECK(pq.P.apply(pt.wave()).is_zero());
    // Q PhiCheck_k = PhiCheck_{k+1}, P PhiCheck_k = (k-1) PhiCheck_{k-1}
    for (int k = 1; k <= 5; ++k) {
        ZSeries qk = pq.Q.apply(pt.dist_basis()[k - 1]);
        CHECK((qk - pt.dist_basis()[k]).is_zero());
        if (k >= 2) {
            ZSeries pk = pq.P.apply(pt.dist_basis()[k - 1]);
            CHECK((pk - pt.dist_basis()[k - 2].scale(Rational(k - 1))).is_zero());
        }
    }
    // residue pairing: res PhiCheck_k PhiCheck^perp_m = delta_{k+m,1}
    DOp gdualinv = gop.adjoint().invert();
    for (int k = 1; k <= 4; ++k) {
        for (int m = 1 - k - 3; m <= 4; ++m) {
            ZSeries dual = gdualinv.apply(zp(r, m - 1));
            ZSeries prod = pt.dist_basis()[k - 1] * dual;
            ParamElem res = prod.residue();
            if (k + m == 1)
                CHECK(res == ParamElem::constant(r, Rational(1)));
            else
                CHECK(res.is_zero());
        }
    }
}

TEST_CASE("uniqueness: perturbing P breaks stabilization") {
    Ring r = plainring();
    std::mt19937_64 rng(17);
    DOp gop = random_sato(r, rng);
    SatoElement g(gop);
    GrassPoint pt(g, 10);
    KSPair pq = canonical_pair(g);
    DOp pert = pq.P + DOp::term(r, kZlo, kDlo, -2, 0, ParamElem::constant(r, Rational(1)));
    // applying the perturbed P to two basis vectors must leave the span
    bool fails = false;
    for (int k = 2; k <= 3; ++k) {
        ZSeries img = pert.apply(pt.dist_basis()[k - 1]);
        if (!in_span(img, pt.dist_basis())) fails = true;
    }
    CHECK(fails);
    // the canonical P keeps everything inside
    for (int k = 2; k <= 3; ++k) {
        ZSeries img = pq.P.apply(pt.dist_basis()[k - 1]);
        CHECK(in_span(img, pt.dist_basis()));
    }
}

TEST_CASE("dual point and BA functions") {
    Ring r = plainring();
    std::mt19937_64 rng(23);
    DOp gop = random_sato(r, rng);
    SatoElement g(gop);

    SUBCASE("dual is an involution") {
        SatoElement d = dual_point(g);
        SatoElement dd = dual_point(d);
        CHECK((dd.op() - g.op()).is_zero());
    }
    SUBCASE("dual pair transforms as P -> -P*, Q -> Q*") {
        KSPair pq = canonical_pair(g);
        KSPair dpq = canonical_pair(dual_point(g));
        CHECK((dpq.P + pq.P.adjoint()).is_zero());
        CHECK((dpq.Q - pq.Q.adjoint()).is_zero());
    }
    SUBCASE("BA columns reproduce the distinguished basis up to sign") {
        GrassPoint pt(g, 5);
        auto cols = ba_function(g, 4);
        for (int k = 0; k <= 4; ++k) {
            ZSeries expect = pt.dist_basis()[k].scale(
                Rational(k % 2 == 0 ? 1 : -1) / Rational::factorial(k));
            CHECK((cols[k] - expect).is_zero());
        }
    }
    SUBCASE("G = 1 gives e^{-xz} columns") {
        SatoElement one(DOp::identity(r, kZlo, kDlo));
        auto cols = ba_function(one, 3);
        for (int k = 0; k <= 3; ++k) {
            ZSeries expect = zp(r, k, Rational(k % 2 == 0 ? 1 : -1) * Rational::factorial(k).inv());
            CHECK((cols[k] - expect).is_zero());
        }
    }
    SUBCASE("hirota pairing of BA columns") {
        auto psi = ba_function(g, 3);
        auto psid = dual_ba(g, 3);
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; b <= 3; ++b) {
                ParamElem res = (psi[a] * psid[b]).residue();
                CHECK(res.is_zero());
            }
    }
}

TEST_CASE("hv actions") {
    Ring r = plainring();
    std::mt19937_64 rng(29);
    DOp gop = random_sato(r, rng);
    SatoElement g(gop);

    SUBCASE("identity generator leaves G") {
        SatoElement h = hv_act_expneg(g, DOp::zero(r, kZlo, kDlo));
        CHECK((h.op() - g.op()).is_zero());
    }
    SUBCASE("negative generator acts by left composition, pair conjugates") {
        DOp gen = vir_z(r, kZlo, kDlo, -2).scale(ParamElem::constant(r, Rational(1, 2)));
        SatoElement h = hv_act_expneg(g, gen);
        DOp e = gen.exp_neg();
        KSPair pq = canonical_pair(g);
        KSPair hpq = canonical_pair(h);
        DOp ei = e.invert();
        CHECK((hpq.P - e.compose(pq.P).compose(ei)).is_zero());
        CHECK((hpq.Q - e.compose(pq.Q).compose(ei)).is_zero());
    }
    SUBCASE("shift transforms the pair per the substitution law") {
        ParamElem rr = ParamElem::constant(r, Rational(1, 2));
        SatoElement h = hv_act_shift(g, rr);
        KSPair pq = canonical_pair(g);
        KSPair expect = pair_shift(pq, rr);
        KSPair got = canonical_pair(h);
        CHECK((got.P - expect.P).is_zero());
        CHECK((got.Q - expect.Q).is_zero());
    }
    SUBCASE("scaling transforms the pair per the scaling law") {
        ParamElem lam = ParamElem::constant(r, Rational(2));
        SatoElement h = hv_act_scale(g, lam);
        KSPair pq = canonical_pair(g);
        // e^s P(e^s z, e^{-s} d), e^{-s} Q(e^s z, e^{-s} d) with lambda = e^s
        KSPair expect = pair_scale(pq, lam);
        KSPair got = canonical_pair(h);
        CHECK((got.P - expect.P).is_zero());
        CHECK((got.Q - expect.Q).is_zero());
    }
}

TEST_CASE("cba kernel") {
    Ring r = plainring();
    SUBCASE("G = 1, x = 0 region expansions") {
        SatoElement one(DOp::identity(r, kZlo, kDlo));
        auto cols = cba_kernel(one, 0, KernelRegion::AbsWGreater, -9, 4);
        // 1/(w-z): coefficient of w^{-k-1} is z^k
        for (int k = 0; k <= 5; ++k) {
            auto it = cols[0].by_w.find(-k - 1);
            REQUIRE(it != cols[0].by_w.end());
            CHECK((it->second - zp(r, k)).is_zero());
        }
    }
    SUBCASE("Fay identity and basis expansion for a random point") {
        std::mt19937_64 rng(31);
        SatoElement g(random_sato(r, rng));
        int wlo = -8, whi = 3;
        auto cols = cba_kernel(g, 3, KernelRegion::AbsWGreater, wlo, whi);
        auto psi = ba_function(g, 3);
        auto psid = dual_ba(g, 3);
        // d_x K = Psi(z,x) Psi_perp(w,x): (j+1) K_{j+1} = sum_{a+b=j} psi_a psid_b
        DOp gdualinv = g.op().adjoint().invert();
        for (int j = 0; j <= 2; ++j) {
            TwoVar lhs = cols[j + 1];
            for (auto& [wk, s] : lhs.by_w) s = s.scale(Rational(j + 1));
            TwoVar rhs;
            rhs.w_lo = wlo;
            rhs.w_hi = whi;
            bool first = true;
            for (int a = 0; a <= j; ++a) {
                TwoVar piece = outer_product(psi[a], psid[j - a], wlo, whi);
                rhs = first ? piece : [&] {
                    TwoVar s2 = rhs;
                    for (auto& [wk, s] : piece.by_w) {
                        auto it = s2.by_w.find(wk);
                        if (it == s2.by_w.end())
                            s2.by_w.emplace(wk, s);
                        else
                            it->second = it->second + s;
                    }
                    return s2;
                }();
                first = false;
            }
            TwoVar diff = twovar_sub(lhs, rhs);
            CHECK(twovar_is_zero(diff));
        }
        // iota_{|w|>|z|} K_0 = sum_{k>=0} PhiCheck_{k+1}(z) PhiCheck^perp_{-k}(w)
        TwoVar expect;
        expect.w_lo = wlo;
        expect.w_hi = whi;
        bool first = true;
        for (int k = 0; -k - 1 >= wlo - 2; ++k) {
            ZSeries phik = g.op().apply(zp(r, k));
            ZSeries dualk = gdualinv.apply(zp(r, -k - 1));
            TwoVar piece = outer_product(phik, dualk, wlo, whi);
            if (first) {
                expect = piece;
                first = false;
            } else {
                for (auto& [wk, s] : piece.by_w) {
                    auto it = expect.by_w.find(wk);
                    if (it == expect.by_w.end())
                        expect.by_w.emplace(wk, s);
                    else
                        it->second = it->second + s;
                }
            }
        }
        TwoVar diff = twovar_sub(cols[0], expect);
        // compare only within a safely exact inner window
        for (auto& [wk, s] : diff.by_w) {
            if (wk < wlo + 2 || wk > whi - 1) continue;
            ZSeries inner = s;
            inner.restrict_exact_lo(kZlo + 3);
            CHECK(inner.is_zero());
        }
    }
}
