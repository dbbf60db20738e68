#include <gtest/gtest.h>

#include <weblin/upoly.hpp>

#include <random>

using namespace weblin;

namespace {

Big q(const char *s) { return Big(parse_rational(s)); }

bool close(const Big &a, const Big &b, const Big &rel)
{
    return abs(a - b) <= rel * max(Big(1), max(abs(a), abs(b)));
}

UPoly random_poly(std::mt19937 &rng, int deg)
{
    std::uniform_int_distribution<int> d(-50, 50);
    UPoly p;
    for (int k = 0; k <= deg; ++k)
        p.c.push_back(Big(static_cast<long>(d(rng))) / Big(7));
    if (p.c.back().is_zero())
        p.c.back() = Big(3);
    return p;
}

} // namespace

TEST(Big, DefaultPrecisionIs256)
{
    EXPECT_EQ(Big(1).precision(), 256);
    PrecisionScope ps(512);
    EXPECT_EQ(Big(1).precision(), 512);
}

TEST(Big, ExponentRangeHoldsHugeMagnitudes)
{
    Big x = pow(Big(10), 100000L);
    EXPECT_TRUE(x.is_finite());
    EXPECT_EQ(x.decimal(10).second, 100000);
    Big y = Big(1) / x;
    EXPECT_EQ(y.decimal(10).second, -100000);
}

TEST(Big, DecimalParsingIsExact)
{
    EXPECT_EQ(parse_rational("0.1"), mpq_class(1, 10));
    EXPECT_EQ(parse_rational("-2.50"), mpq_class(-5, 2));
    EXPECT_EQ(parse_rational("1/10"), mpq_class(1, 10));
    EXPECT_EQ(parse_rational("1.5e2"), mpq_class(150));
    EXPECT_THROW(parse_rational("1..2"), std::invalid_argument);
}

TEST(Big, DecimalMantissa)
{
    auto [m, e] = (Big(-1046) * pow(Big(10), 182L)).decimal(8);
    EXPECT_EQ(m, "-1.046");
    EXPECT_EQ(e, 185);
}

TEST(Resultant, LinearFactors)
{
    Big a = q("3/7"), b = q("-5/3");
    UPoly f{-a, Big(1)}, g{-b, Big(1)};
    EXPECT_TRUE(close(resultant(f, g), a - b, Big(1e-70)));
}

TEST(Resultant, SharedRootGivesZero)
{
    UPoly f{Big(2), Big(-3), Big(1)}, g{Big(-1), Big(1)};
    EXPECT_TRUE(abs(resultant(f, g)) <= Big(1e-70));
}

TEST(Resultant, SwapSign)
{
    std::mt19937 rng(7);
    for (int t = 0; t < 20; ++t) {
        UPoly f = random_poly(rng, 1 + t % 6), g = random_poly(rng, 2 + t % 5);
        Big s = ((f.degree() * g.degree()) % 2) ? Big(-1) : Big(1);
        EXPECT_TRUE(close(resultant(f, g), s * resultant(g, f), Big::pow2(-128)));
    }
}

TEST(Resultant, VanishesExactlyWhenGcdNontrivial)
{
    std::mt19937 rng(11);
    for (int t = 0; t < 10; ++t) {
        UPoly common = random_poly(rng, 1 + t % 2);
        UPoly f = random_poly(rng, 3) * common, g = random_poly(rng, 4) * common;
        UPoly f2 = random_poly(rng, 4), g2 = random_poly(rng, 5);
        Big scale = pow(norm_inf(f), 5L) * pow(norm_inf(g), 4L);
        EXPECT_LE(abs(resultant(f, g)), default_trim_eps() * scale);
        EXPECT_GE(approx_gcd({f, g}, default_trim_eps()).g.degree(), common.degree());
        Big scale2 = pow(norm_inf(f2), 5L) * pow(norm_inf(g2), 4L);
        EXPECT_GT(abs(resultant(f2, g2)), default_trim_eps() * scale2);
        EXPECT_EQ(approx_gcd({f2, g2}, default_trim_eps()).g.degree(), 0);
    }
}

TEST(ComplexRoots, SquareRootOfTwo)
{
    auto r = complex_roots(UPoly{Big(-2), Big(0), Big(1)});
    ASSERT_EQ(r.size(), 2u);
    for (auto &z : r) {
        EXPECT_TRUE(close(abs(z.re), sqrt(Big(2)), Big(1e-70)));
        EXPECT_LE(abs(z.im), Big(1e-70));
    }
}

TEST(ComplexRoots, TripleRootCluster)
{
    auto r = complex_roots(UPoly{Big(-1), Big(3), Big(-3), Big(1)});
    ASSERT_EQ(r.size(), 3u);
    for (auto &z : r)
        EXPECT_LE((z - Cplx(Big(1))).abs(), Big(1e-20));
}

TEST(ComplexRoots, SeventeenthRootsOfMinusOne)
{
    UPoly p;
    p.c.assign(18, Big());
    p.c[0] = Big(1);
    p.c[17] = Big(1);
    auto r = complex_roots(p);
    ASSERT_EQ(r.size(), 17u);
    for (auto &z : r)
        EXPECT_TRUE(close(z.abs(), Big(1), Big(1e-70)));
}

TEST(ComplexRoots, ProductReconstructsPolynomial)
{
    std::mt19937 rng(3);
    for (int t = 0; t < 5; ++t) {
        UPoly f = random_poly(rng, 8 + 4 * t);
        auto r = complex_roots(f);
        std::vector<Cplx> prod{Cplx(f.lead())};
        for (auto &z : r) {
            std::vector<Cplx> next(prod.size() + 1);
            for (size_t k = 0; k < prod.size(); ++k) {
                next[k + 1] = next[k + 1] + prod[k];
                next[k] = next[k] - prod[k] * z;
            }
            prod = next;
        }
        Big n = norm_inf(f);
        for (size_t k = 0; k < f.c.size(); ++k) {
            EXPECT_LE(abs(prod[k].re - f.c[k]), default_trim_eps() * n);
            EXPECT_LE(abs(prod[k].im), default_trim_eps() * n);
        }
    }
}

TEST(RealRoots, NoneForPositiveQuadratic)
{
    EXPECT_TRUE(real_roots(UPoly{Big(1), Big(0), Big(1)}).roots.empty());
}

TEST(RealRoots, CubicRoots)
{
    auto r = real_roots(UPoly{Big(0), Big(-1), Big(0), Big(1)});
    ASSERT_EQ(r.roots.size(), 3u);
    EXPECT_TRUE(close(r.roots[0].value, Big(-1), Big(1e-60)));
    EXPECT_LE(abs(r.roots[1].value), Big(1e-60));
    EXPECT_TRUE(close(r.roots[2].value, Big(1), Big(1e-60)));
    EXPECT_FALSE(r.ill_conditioned);
}

TEST(RealRoots, RationalRoot)
{
    auto r = real_roots(UPoly{-q("3/7"), Big(1)});
    ASSERT_EQ(r.roots.size(), 1u);
    EXPECT_TRUE(close(r.roots[0].value, q("3/7"), Big(1e-70)));
}

TEST(RealRoots, DoubleRootMultiplicity)
{
    // (u-2)^2 (u+1)
    UPoly p = UPoly{Big(-2), Big(1)} * UPoly{Big(-2), Big(1)} * UPoly{Big(1), Big(1)};
    auto r = real_roots(p);
    ASSERT_EQ(r.roots.size(), 2u);
    EXPECT_EQ(r.roots[0].multiplicity, 1);
    EXPECT_EQ(r.roots[1].multiplicity, 2);
    EXPECT_TRUE(close(r.roots[1].value, Big(2), Big(1e-30)));
}

TEST(ApproxGcd, CommonLinearFactor)
{
    auto g = approx_gcd({UPoly{Big(-1), Big(0), Big(1)}, UPoly{Big(1), Big(-2), Big(1)}}, default_trim_eps());
    ASSERT_EQ(g.g.degree(), 1);
    EXPECT_TRUE(close(g.g.c[0], Big(-1), Big(1e-60)));
}

TEST(ApproxGcd, Coprime)
{
    auto g = approx_gcd({UPoly{Big(1), Big(0), Big(1)}, UPoly{Big(-3), Big(1)}}, default_trim_eps());
    EXPECT_EQ(g.g.degree(), 0);
}

TEST(ApproxGcd, SeveralInputs)
{
    std::mt19937 rng(5);
    UPoly common{q("-1/3"), Big(1)};
    std::vector<UPoly> ps;
    for (int k = 0; k < 5; ++k)
        ps.push_back(random_poly(rng, 10 + 3 * k) * common);
    auto g = approx_gcd(ps, default_trim_eps());
    ASSERT_EQ(g.g.degree(), 1);
    EXPECT_TRUE(close(g.g.c[0], q("-1/3"), Big(1e-30)));
}

TEST(GeneralizedResultants, HandExpansion)
{
    UPoly T = UPoly{Big(-1), Big(1)} * UPoly{Big(-2), Big(1)};
    auto r = generalized_resultants(T, {UPoly{Big(-1), Big(1)}, UPoly{Big(-2), Big(1)}});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_LE(abs(r.at({2, 0})), Big(1e-60));
    EXPECT_TRUE(close(r.at({1, 1}), Big(-1), Big(1e-60)));
    EXPECT_LE(abs(r.at({0, 2})), Big(1e-60));
}

TEST(GeneralizedResultants, CommonRootKillsAll)
{
    UPoly T = UPoly{Big(-1), Big(1)} * UPoly{Big(-2), Big(1)};
    auto r = generalized_resultants(T, {UPoly{Big(-1), Big(1)}, UPoly{Big(-1), Big(1)} * UPoly{Big(3), Big(1)}});
    for (auto &[k, v] : r)
        EXPECT_LE(abs(v), Big(1e-60));
}

TEST(GeneralizedResultants, CountForDegreeSeventeen)
{
    std::mt19937 rng(9);
    UPoly T = random_poly(rng, 17);
    EXPECT_EQ(generalized_resultants(T, {random_poly(rng, 18), random_poly(rng, 18)}).size(), 18u);
}

TEST(GeneralizedResultants, SinglePencilIsResultant)
{
    std::mt19937 rng(13);
    for (int t = 0; t < 5; ++t) {
        UPoly T = random_poly(rng, 3 + t), S = random_poly(rng, 2 + t);
        auto r = generalized_resultants(T, {S});
        ASSERT_EQ(r.size(), 1u);
        EXPECT_TRUE(close(r.begin()->second, resultant(T, S), Big::pow2(-120)));
    }
}
