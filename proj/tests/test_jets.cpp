#include <gtest/gtest.h>

#include "corpus.hpp"

#include <weblin/jet.hpp>

using namespace weblin;

namespace {

Big q(const char *s) { return Big(parse_rational(s)); }

bool close(const Big &a, const Big &b, const Big &rel)
{
    return abs(a - b) <= rel * max(Big(1), max(abs(a), abs(b)));
}

void expect_same(const Jet2 &a, const Jet2 &b, const Big &rel)
{
    ASSERT_EQ(a.order(), b.order());
    for (size_t k = 0; k < a.coefficients().size(); ++k)
        EXPECT_TRUE(close(a.coefficients()[k], b.coefficients()[k], rel)) << k;
}

} // namespace

TEST(Jet, ExpAtOrigin)
{
    Jet2 j = jet_lift(parse("exp(x)"), make_point(Big(0), Big(0)), 3);
    Big f(1);
    for (int i = 0; i <= 3; ++i) {
        if (i > 0)
            f *= Big(i);
        EXPECT_TRUE(close(j.at(i, 0), Big(1) / f, Big(1e-70)));
        for (int jj = 1; i + jj <= 3; ++jj)
            EXPECT_TRUE(j.at(i, jj).is_zero());
    }
    EXPECT_EQ(j.coefficients().size(), 10u);
}

TEST(Jet, Quadratic)
{
    Jet2 j = jet_lift(parse("x^2+x*y+y^2"), make_point(q("0.1"), Big(1)), 2);
    EXPECT_TRUE(close(j.at(0, 0), q("1.11"), Big(1e-70)));
    EXPECT_TRUE(close(j.at(1, 0), q("1.2"), Big(1e-70)));
    EXPECT_TRUE(close(j.at(0, 1), q("2.1"), Big(1e-70)));
    EXPECT_TRUE(close(j.at(2, 0), Big(1), Big(1e-70)));
    EXPECT_TRUE(close(j.at(1, 1), Big(1), Big(1e-70)));
    EXPECT_TRUE(close(j.at(0, 2), Big(1), Big(1e-70)));
}

TEST(Jet, SqrtWeb)
{
    Jet2 j = jet_lift(parse("x+sqrt(x^2-y)"), make_point(Big(0), Big(-1)), 1);
    EXPECT_TRUE(close(j.at(0, 0), Big(1), Big(1e-70)));
    EXPECT_TRUE(close(j.at(1, 0), Big(1), Big(1e-70)));
    EXPECT_TRUE(close(j.at(0, 1), q("-1/2"), Big(1e-70)));
}

TEST(Jet, DomainErrors)
{
    EXPECT_THROW(jet_lift(parse("sqrt(x)"), make_point(Big(0), Big(0)), 3), DomainError);
    EXPECT_THROW(jet_lift(parse("1/x"), make_point(Big(0), Big(1)), 3), DomainError);
    EXPECT_THROW(jet_lift(parse("log(x)"), make_point(Big(-1), Big(1)), 3), DomainError);
}

TEST(Jet, Partials)
{
    PointRef p = make_point(q("1/3"), q("2/7"));
    expect_same(jet_lift(parse("x*y"), p, 5).partial_x(), jet_lift(parse("y"), p, 4), Big(1e-70));
    Jet2 g = jet_lift(parse("sin(x*y^2)*exp(x-y)"), p, 6);
    expect_same(g.partial_x().partial_y(), g.partial_y().partial_x(), Big(1e-70));
    Jet2 c = Jet2::constant(p, 4, Big(5)).partial_x();
    for (auto &v : c.coefficients())
        EXPECT_TRUE(v.is_zero());
    EXPECT_THROW(Jet2::constant(p, 0, Big(1)).partial_x(), std::domain_error);
}

TEST(Jet, Arithmetic)
{
    PointRef p = make_point(q("0.3"), q("0.2"));
    Jet2 a = jet_lift(parse("exp(x)*cos(y) + 2"), p, 8), b = jet_lift(parse("1/(1+x*y)"), p, 8);
    EXPECT_TRUE(close((a * b).value(), a.value() * b.value(), Big(1e-70)));
    Jet2 one = a / a;
    EXPECT_TRUE(close(one.value(), Big(1), Big(1e-70)));
    for (size_t k = 1; k < one.coefficients().size(); ++k)
        EXPECT_LE(abs(one.coefficients()[k]), Big(1e-70));
    expect_same(jet_exp(jet_log(a)), a, Big(1e-70));
    // product rule
    expect_same((a * b).partial_x(), a.partial_x() * b + a * b.partial_x(), Big::pow2(-128));
    EXPECT_THROW(a * jet_lift(parse("x"), make_point(Big(0), Big(0)), 3), std::invalid_argument);
}

TEST(Jet, TruncationConsistency)
{
    PointRef p = make_point(q("1.5"), q("0.3"));
    for (auto &src : corpus::expressions()) {
        Expr e = parse(src);
        expect_same(jet_lift(e, p, 9).truncated(4), jet_lift(e, p, 4), Big(1e-70));
    }
}

TEST(Jet, ExampleWebsAgainstSymbolicOracle)
{
    EXPECT_LE(corpus::symbolic_vs_jet(parse("x^2+x*y+y^2"), mpq_class(1, 10), 1, 6), Big(1e-50));
    EXPECT_LE(corpus::symbolic_vs_jet(parse("(x+y)*exp(-x)"), 0, mpq_class(1, 10), 6), Big(1e-50));
}
