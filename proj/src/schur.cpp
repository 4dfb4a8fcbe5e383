#include "satokit/schur.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>

#include "satokit/errors.hpp"

namespace satokit {

TPoly schur_p(const Ring& ring, int j, int wbudget) {
    if (j < 0) throw BadInput("schur_p: negative index");
    // p_0 = 1, j p_j = sum_{k=1..j} k t_k p_{j-k}.
    std::vector<TPoly> p;
    p.push_back(TPoly::constant(ring, wbudget, Rational(1)));
    for (int m = 1; m <= j; ++m) {
        TPoly acc(ring, wbudget);
        for (int k = 1; k <= m; ++k)
            acc = acc + p[m - k].mul_var(k).scale(Rational(k));
        p.push_back(acc.scale(Rational(1, m)));
    }
    return p[j];
}

std::vector<Partition> partitions_up_to(int max_size) {
    std::vector<Partition> all;
    all.push_back({});
    for (int n = 1; n <= max_size; ++n) {
        // reverse-lexicographic enumeration of partitions of n
        Partition cur(n, 1);
        cur.clear();
        std::function<void(int, int)> rec = [&](int rem, int maxpart) {
            if (rem == 0) {
                all.push_back(cur);
                return;
            }
            for (int k = std::min(rem, maxpart); k >= 1; --k) {
                cur.push_back(k);
                rec(rem - k, k);
                cur.pop_back();
            }
        };
        rec(n, n);
    }
    return all;
}

TPoly schur_s(const Ring& ring, const Partition& lambda, int wbudget) {
    int l = (int)lambda.size();
    if (l == 0) return TPoly::constant(ring, wbudget, Rational(1));
    // det( p_{lambda_i - i + j} )_{i,j=1..l} by subset dynamic programming:
    // dp[S] = minor of the first popcount(S) rows and column set S.
    int maxidx = lambda[0] + l;
    std::vector<TPoly> pcache;
    for (int j = 0; j <= maxidx; ++j) pcache.push_back(schur_p(ring, j, wbudget));
    TPoly zero(ring, wbudget);
    auto entry = [&](int i, int j) -> const TPoly& {
        int idx = lambda[i] - (i + 1) + (j + 1);
        return idx < 0 ? zero : pcache[idx];
    };
    std::vector<std::optional<TPoly>> dp(1u << l);
    dp[0] = TPoly::constant(ring, wbudget, Rational(1));
    for (unsigned s = 1; s < (1u << l); ++s) {
        int row = __builtin_popcount(s) - 1;
        TPoly acc(ring, wbudget);
        int pos = 0;
        for (int c = 0; c < l; ++c) {
            if (!(s & (1u << c))) continue;
            const TPoly& e = entry(row, c);
            if (!e.is_zero()) {
                TPoly prod = e * (*dp[s & ~(1u << c)]);
                acc = ((row + pos) % 2 == 0) ? acc + prod : acc - prod;
            }
            ++pos;
        }
        dp[s] = acc;
    }
    return *dp[(1u << l) - 1];
}

namespace {

const std::vector<Rational>& bernoulli_table(int upto) {
    static std::vector<Rational> table;
    while ((int)table.size() <= upto) {
        int n = (int)table.size();
        if (n == 0) {
            table.push_back(Rational(1));
            continue;
        }
        // sum_{k=0}^{n} C(n+1,k) B_k = 0
        Rational s(0);
        for (int k = 0; k < n; ++k) s += Rational::binomial(n + 1, k) * table[k];
        table.push_back(-s / Rational::binomial(n + 1, n));
    }
    return table;
}

} // namespace

Rational bernoulli(int n) {
    if (n < 0) throw BadInput("bernoulli: negative index");
    return bernoulli_table(n)[n];
}

std::vector<Rational> bernoulli_poly(int n) {
    if (n < 0) throw BadInput("bernoulli_poly: negative index");
    const auto& B = bernoulli_table(n);
    std::vector<Rational> c(n + 1);
    for (int k = 0; k <= n; ++k) c[k] = Rational::binomial(n, k) * B[k];
    return c; // c[k] is the coefficient of x^{n-k}
}

Rational bernoulli_poly_at(int n, const Rational& x) {
    auto c = bernoulli_poly(n);
    Rational acc(0);
    for (int k = 0; k <= n; ++k) acc += c[k] * x.pow(n - k);
    return acc;
}

Rational gaussian_moment(int j) {
    if (j < 0) throw BadInput("gaussian_moment: negative index");
    if (j % 2 == 1) return Rational(0);
    return Rational::double_factorial(j - 1);
}

} // namespace satokit
