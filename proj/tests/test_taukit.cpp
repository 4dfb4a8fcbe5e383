#include <doctest.h>

#include <random>

#include "satokit/errors.hpp"
#include "satokit/grassmann.hpp"
#include "satokit/taukit.hpp"

using namespace satokit;

namespace {

constexpr int kZlo = -12;
constexpr int kDlo = -12;

Ring aring() { return make_ring({{"hbar", 40, true}, {"a", 8, false}}); }

DOp random_sato(const Ring& r, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> zexp(-3, -1);
    std::uniform_int_distribution<int> dord(0, 2);
    std::uniform_int_distribution<int> numer(-2, 2);
    std::uniform_int_distribution<int> denom(1, 2);
    for (;;) {
        DOp g = DOp::identity(r, kZlo, kDlo);
        for (int i = 0; i < 3; ++i) {
            int num = numer(rng);
            if (num == 0) continue;
            g = g + DOp::term(r, kZlo, kDlo, zexp(rng), dord(rng),
                              ParamElem::constant(r, Rational(num, denom(rng))));
        }
        if (SatoElement::shape_ok(g)) return g;
    }
}

} // namespace

TEST_CASE("tau_from_sato basics") {
    Ring r = aring();
    SUBCASE("identity gives tau = 1") {
        SatoElement one(DOp::identity(r, kZlo, kDlo));
        TauSeries tau = tau_from_sato(one, 6);
        CHECK(tau.tau.constant_term() == ParamElem::constant(r, Rational(1)));
        TPoly rest = tau.tau - TPoly::constant(r, 6, Rational(1));
        CHECK(rest.is_zero());
    }
    SUBCASE("vacuum orbit: multiplication by 1 + a/z") {
        ParamElem a = ParamElem::param(r, "a");
        DOp g = DOp::identity(r, kZlo, kDlo) + DOp::term(r, kZlo, kDlo, -1, 0, a);
        TauSeries tau = tau_from_sato(SatoElement(g), 6);
        // G = exp(sum_j c_j z^{-j}) with c_j = (-1)^{j+1} a^j / j and the
        // j_{-j} <-> j t_j identification gives tau = exp(sum (-1)^{j+1} a^j t_j)
        TPoly expected(r, 6);
        {
            TPoly arg(r, 6);
            for (int k = 1; k <= 6; ++k) {
                ParamElem c = a.pow(k) * Rational(k % 2 == 1 ? 1 : -1);
                arg = arg + TPoly::var(r, 6, k).scale(c);
            }
            expected = arg.exp_nilpotent();
        }
        CHECK((tau.tau - expected).is_zero());
        // its Hirota residual vanishes
        TPoly res = hirota_residual(tau.tau, 4, 4);
        CHECK(res.is_zero());
    }
    SUBCASE("principal specialization equals the wave function") {
        DOp g = random_sato(r, 101);
        SatoElement G(g);
        TauSeries tau = tau_from_sato(G, 8);
        // evaluate at t_k = z^{-k}/k via a laurent mu parameter = z^{-1}
        Ring rmu = make_ring({{"hbar", 40, true}, {"a", 8, false}, {"mu", 14, true}});
        DOp gmu = DOp::zero(rmu, kZlo, kDlo);
        // rebuild the same element in the extended ring
        for (auto& [m, s] : g.coeffs())
            for (auto& [k, c] : s.coeffs())
                gmu = gmu + DOp::term(rmu, kZlo, kDlo, k, m, c.cast(rmu));
        SatoElement Gmu(gmu);
        TauSeries taumu = tau_from_sato(Gmu, 8);
        int mu = rmu->index("mu");
        ParamElem spec = taumu.tau.substitute_t([&](int k) {
            ExpVec e(rmu->nparams(), 0);
            e[mu] = k;
            return ParamElem::monomial(rmu, e, Rational(1, k));
        });
        ZSeries wave = gmu.apply(ZSeries::constant(rmu, kZlo, Rational(1)));
        ParamElem wave_mu = wave.eval_inv_param(mu);
        ParamElem diff = spec - wave_mu;
        // compare through mu^8 (t-weight budget)
        ExpVec hi(rmu->nparams(), kExactInf);
        hi[mu] = 8;
        diff.restrict_exact_hi(hi);
        CHECK(diff.is_zero());
    }
}

TEST_CASE("hirota residual") {
    Ring r = aring();
    SUBCASE("tau = 1") {
        TPoly one = TPoly::constant(r, 5, Rational(1));
        CHECK(hirota_residual(one, 4, 4).is_zero());
    }
    SUBCASE("negative control tau = 1 + t2") {
        TPoly tau = TPoly::constant(r, 5, Rational(1)) + TPoly::var(r, 5, 2);
        TPoly res = hirota_residual(tau, 3, 3);
        CHECK_FALSE(res.is_zero());
    }
}

TEST_CASE("heisenberg-virasoro t-side operators") {
    Ring r = aring();
    int wb = 8;
    SUBCASE("L0 is the euler operator") {
        TPoly t3 = TPoly::var(r, wb, 3);
        TPoly img = hv_L(0)(t3);
        CHECK((img - t3.scale(Rational(3))).is_zero());
    }
    SUBCASE("L_{-2} on 1 gives t1^2/2") {
        TPoly one = TPoly::constant(r, wb, Rational(1));
        TPoly img = hv_L(-2)(one);
        TPoly expect = TPoly::var(r, wb, 1).mul_var(1).scale(Rational(1, 2));
        CHECK((img - expect).is_zero());
    }
    SUBCASE("commutator with central term: [L2, L_{-2}] = 4 L0 + 1/2") {
        // apply to a basis of polynomials of weight <= 4
        std::vector<TPoly> probes;
        probes.push_back(TPoly::constant(r, wb, Rational(1)));
        probes.push_back(TPoly::var(r, wb, 1));
        probes.push_back(TPoly::var(r, wb, 2));
        probes.push_back(TPoly::var(r, wb, 1).mul_var(1));
        probes.push_back(TPoly::var(r, wb, 4));
        probes.push_back(TPoly::var(r, wb, 3).mul_var(1));
        for (auto& f : probes) {
            TPoly lhs = hv_L(2)(hv_L(-2)(f)) - hv_L(-2)(hv_L(2)(f));
            TPoly rhs = hv_L(0)(f).scale(Rational(4)) + f.scale(Rational(1, 2));
            CHECK((lhs - rhs).is_zero());
        }
        // [J_k, J_{-k}] = k on probes
        for (auto& f : probes) {
            TPoly lhs = hv_J(2)(hv_J(-2)(f)) - hv_J(-2)(hv_J(2)(f));
            CHECK((lhs - f.scale(Rational(2))).is_zero());
        }
    }
    SUBCASE("group action matches tau transport (1Vir)") {
        DOp g = random_sato(r, 55);
        SatoElement G(g);
        int w = 6;
        TauSeries tau = tau_from_sato(G, w);
        // generator: a combination of j_{-1}, j_{-2} and l_{-2}
        Rational a1(1, 2), a2(-1, 3), b2(1, 4);
        DOp zgen = heis_z(r, kZlo, kDlo, -1).scale(a1) + heis_z(r, kZlo, kDlo, -2).scale(a2) +
                   vir_z(r, kZlo, kDlo, -2).scale(b2);
        SatoElement G2 = hv_act_expneg(G, zgen);
        TauSeries tau2 = tau_from_sato(G2, w);
        std::vector<std::pair<ParamElem, TOp>> gens = {
            {ParamElem::constant(r, a1), hv_J(-1)},
            {ParamElem::constant(r, a2), hv_J(-2)},
            {ParamElem::constant(r, b2), hv_L(-2)},
        };
        TPoly moved = hv_group_apply(gens, tau.tau);
        // tau2 = C * moved with C constant
        ParamElem C = tau2.tau.constant_term() * moved.constant_term().invert();
        TPoly diff = tau2.tau - moved.scale(C);
        CHECK(diff.is_zero());
    }
}

TEST_CASE("sl2 substitutions") {
    Ring r = make_ring({{"hbar", 40, true}, {"u", 6, false}});
    int wb = 6;
    ParamElem u = ParamElem::param(r, "u");
    TPoly f = TPoly::var(r, wb, 1).mul_var(2) + TPoly::var(r, wb, 3).scale(Rational(2));

    SUBCASE("m=0 scale roundtrip") {
        ParamElem lam = ParamElem::constant(r, Rational(1)) + u;
        TPoly g = sl2_scale(lam, f);
        TPoly h = sl2_scale(lam.invert(), g);
        CHECK((h - f).is_zero());
    }
    SUBCASE("m=-1 substitution equals the exponential") {
        TPoly via_subst = sl2_subst(-1, u, f);
        std::vector<std::pair<ParamElem, TOp>> gens = {{-u, hv_L(-1)}};
        TPoly via_exp = hv_group_apply(gens, f);
        CHECK((via_subst - via_exp).is_zero());
    }
    SUBCASE("m=+1 substitution equals the exponential") {
        TPoly via_subst = sl2_subst(1, u, f);
        std::vector<std::pair<ParamElem, TOp>> gens = {{-u, hv_L(1)}};
        TPoly via_exp = hv_group_apply(gens, f);
        CHECK((via_subst - via_exp).is_zero());
    }
}

TEST_CASE("miwa evaluation two routes") {
    Ring r = make_ring({{"hbar", 40, true},
                        {"a", 8, false},
                        {"mu1", 14, true},
                        {"mu2", 14, true},
                        {"mu3", 14, true}});
    SUBCASE("monomial basis gives 1") {
        std::vector<ZSeries> basis;
        for (int j = 0; j < 3; ++j) basis.push_back(ZSeries::zpow(r, kZlo, j));
        std::vector<int> mus = {r->index("mu1"), r->index("mu2")};
        ParamElem v = miwa_determinant(basis, mus);
        CHECK(v == ParamElem::constant(r, Rational(1)));
    }
    SUBCASE("determinant equals substitution for a random point, N=2 and N=3") {
        DOp g = random_sato(r, 7);
        SatoElement G(g);
        TauSeries tau = tau_from_sato(G, 7);
        std::vector<ZSeries> basis;
        for (int j = 0; j < 3; ++j)
            basis.push_back(g.apply(ZSeries::zpow(r, kZlo, j)));
        for (int N = 2; N <= 3; ++N) {
            std::vector<int> mus;
            for (int j = 1; j <= N; ++j) mus.push_back(r->index("mu" + std::to_string(j)));
            ParamElem det_route = miwa_determinant(basis, mus);
            ParamElem sub_route = miwa_substitute(tau.tau, mus);
            ParamElem diff = det_route - sub_route;
            // trust the comparison through total mu-order ~ weight budget
            ExpVec hi(r->nparams(), kExactInf);
            for (int mi : mus) hi[mi] = 5;
            diff.restrict_exact_hi(hi);
            CHECK(diff.is_zero());
        }
    }
}

TEST_CASE("constraint residual plumbing") {
    Ring r = aring();
    TPoly tau = TPoly::constant(r, 6, Rational(1)) + TPoly::var(r, 6, 1);
    // (J_1 - 1) tau: J_1 tau = 1 -> c = 1, residual = 1 - tau*1... the
    // constraint extractor reports c and residual = J_1 tau - c tau.
    auto [resid, c] = constraint_residual(hv_J(1), tau);
    CHECK(c == ParamElem::constant(r, Rational(1)));
    CHECK_FALSE(resid.is_zero());
}
