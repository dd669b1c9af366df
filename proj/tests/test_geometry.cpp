#include "support.hpp"

#include <gtest/gtest.h>

using namespace magbump;

TEST(Bump, ConstructionRejectsBadShapes)
{
    EXPECT_THROW(Bump::disk({0, 0}, 0, 1), Error);
    EXPECT_THROW(Bump::disk({0, 0}, -1, 1), Error);
    EXPECT_THROW(Bump::disk({0, 0}, 1, 0), Error);
    EXPECT_THROW(Bump::ellipse({0, 0}, 1, 2, 0, 1), Error);
    EXPECT_THROW(Bump::ellipse({0, 0}, 1, 0, 0, 1), Error);
    EXPECT_THROW(Bump::disk({std::nan(""), 0}, 1, 1), Error);
}

TEST(Bump, DiskCurvatureIsReciprocalRadius)
{
    const Bump d = Bump::disk({2, 3}, 0.8, 1);
    const auto [lo, hi] = d.curvature_range();
    EXPECT_DOUBLE_EQ(lo, 1.25);
    EXPECT_DOUBLE_EQ(hi, 1.25);
    EXPECT_NEAR(d.curvature(0.3), 1.25, 1e-14);
    EXPECT_NEAR(d.perimeter(), two_pi * 0.8, 1e-14);
}

TEST(Bump, EllipseCurvatureRangeAndPerimeter)
{
    const Bump e = Bump::ellipse({1, -1}, 2.0, 0.5, 0.4, 1);
    const auto [lo, hi] = e.curvature_range();
    EXPECT_NEAR(lo, 0.5 / 4.0, 1e-15);
    EXPECT_NEAR(hi, 2.0 / 0.25, 1e-15);
    double sampled_lo = 1e9;
    double sampled_hi = 0;
    double length = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double t = two_pi * i / n;
        sampled_lo = std::min(sampled_lo, e.curvature_at_parameter(t));
        sampled_hi = std::max(sampled_hi, e.curvature_at_parameter(t));
        // periodic trapezoid rule: exponentially accurate for smooth integrands
        length += (e.point_at_parameter(t + 1e-6) - e.point_at_parameter(t - 1e-6)).norm() / 2e-6 * two_pi / n;
    }
    EXPECT_NEAR(sampled_lo, lo, 1e-9);
    EXPECT_NEAR(sampled_hi, hi, 1e-9);
    EXPECT_NEAR(e.perimeter(), length, 1e-6);
}

TEST(Bump, ArclengthRoundTrip)
{
    const Bump e = Bump::ellipse({0, 0}, 1.7, 0.9, -0.8, 1);
    for (double s = 0; s < e.perimeter(); s += 0.173) {
        const Vec2 p = e.point(s);
        EXPECT_NEAR(e.level(p), 0.0, 1e-14);
        EXPECT_NEAR(e.arclength_at(p), s, 1e-11);
        // unit speed in s
        const double h = 1e-6;
        EXPECT_NEAR((e.point(s + h) - e.point(s - h)).norm() / (2 * h), 1.0, 1e-8);
        // tangent is counter-clockwise, normal outward
        EXPECT_GT(cross(e.point(s) - e.center(), e.tangent(s)), 0.0);
        EXPECT_GT((e.point(s) - e.center()).dot(e.normal(s)), 0.0);
    }
}

TEST(Bump, SupportFunctionMatchesSampling)
{
    const Bump e = Bump::ellipse({0.3, 2}, 1.4, 0.6, 1.1, 1);
    for (double phi = 0; phi < two_pi; phi += 0.3) {
        const Vec2 d = unit_from_angle(phi);
        double best = -1e9;
        for (int i = 0; i < 20000; ++i) best = std::max(best, e.point_at_parameter(two_pi * i / 20000).dot(d));
        EXPECT_NEAR(e.support(d), best, 1e-7);
    }
}

TEST(Classify, WeakStrongNeither)
{
    EXPECT_EQ(classify_field(Bump::disk({0, 0}, 1, 0.5)), FieldRegime::Weak);
    EXPECT_EQ(classify_field(Bump::disk({0, 0}, 1, -0.5)), FieldRegime::Weak);
    EXPECT_EQ(classify_field(Bump::disk({0, 0}, 1, 2)), FieldRegime::Strong);
    EXPECT_EQ(classify_field(Bump::disk({0, 0}, 1, -2)), FieldRegime::Strong);
    // curvature of this ellipse ranges over [0.25, 2]
    EXPECT_EQ(classify_field(Bump::ellipse({0, 0}, 2, 1, 0, 1)), FieldRegime::Neither);
    EXPECT_EQ(classify_field(Bump::ellipse({0, 0}, 2, 1, 0, 0.2)), FieldRegime::Weak);
    EXPECT_EQ(classify_field(Bump::ellipse({0, 0}, 2, 1, 0, -2.5)), FieldRegime::Strong);
}

TEST(Scene, OverlapsAreRejected)
{
    EXPECT_THROW(Scene({Bump::disk({0, 0}, 1, 1), Bump::disk({1.5, 0}, 1, 1)}), Error);
    EXPECT_THROW(Scene({Bump::disk({0, 0}, 1, 1), Bump::ellipse({2.5, 0}, 2, 0.5, 0, 1)}), Error);
    try {
        Scene({Bump::disk({0, 0}, 1, 1), Bump::disk({1.5, 0}, 1, 1)});
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OverlappingBumps);
    }
}

TEST(Scene, GapMatchesGridOracle)
{
    const Bump p = Bump::ellipse({0, 0}, 2, 0.7, 0.3, 1);
    const Bump q = Bump::ellipse({3.5, 2.5}, 1.2, 0.4, -1.0, 1);
    const Bump r = Bump::disk({-4, 1}, 1.1, 1);
    EXPECT_NEAR(bump_distance(p, q), test::gap_grid(p, q), 1e-9);
    EXPECT_NEAR(bump_distance(p, r), test::gap_grid(p, r), 1e-9);
    EXPECT_NEAR(bump_distance(Bump::disk({0, 0}, 1, 1), Bump::disk({5, 0}, 2, 1)), 2.0, 1e-12);
    const Scene scene({p, q, r});
    EXPECT_NEAR(scene.gap(0), std::min(bump_distance(p, q), bump_distance(p, r)), 1e-15);
    EXPECT_THROW(Scene({p}).gap(0), Error);
}

TEST(AlphaMin, TwoBumpsUseTheConvention)
{
    EXPECT_DOUBLE_EQ(alpha_min(test::two_disks(3)), pi / 3);
    EXPECT_THROW(alpha_min(Scene({Bump::disk({0, 0}, 1, 1)})), Error);
}

TEST(AlphaMin, EquilateralSceneMatchesGridOracle)
{
    const Scene scene = test::equilateral(10);
    const double value = alpha_min(scene);
    EXPECT_NEAR(value, test::alpha_min_grid(scene), 1e-6);
    EXPECT_GT(value, 0.7);
    EXPECT_LT(value, pi / 3);
}

TEST(AlphaMin, RandomScenesMatchGridOracle)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<Bump> bumps;
        for (int i = 0; i < 3; ++i) {
            const Vec2 c = (6 + 2 * unit(rng)) * unit_from_angle(two_pi * i / 3 + 0.5 * unit(rng));
            if (unit(rng) < 0.5) bumps.push_back(Bump::disk(c, 0.8 + 0.6 * unit(rng), 5));
            else bumps.push_back(Bump::ellipse(c, 1.2, 0.6, two_pi * unit(rng), 5));
        }
        const Scene scene(bumps);
        EXPECT_NEAR(alpha_min(scene), test::alpha_min_grid(scene), 1e-6) << "trial " << trial;
    }
}

TEST(AlphaMin, CollinearScenesAreRejected)
{
    const Scene line({Bump::disk({-5, 0}, 1, 5), Bump::disk({0, 0}, 1, 5), Bump::disk({5, 0}, 1, 5)});
    EXPECT_FALSE(check_no_three_on_line(line));
    try {
        alpha_min(line);
        FAIL() << "expected CollinearBumps";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CollinearBumps);
    }
    // offset enough that no line meets all three
    const Scene bent({Bump::disk({-5, 0}, 1, 5), Bump::disk({0, 2.5}, 1, 5), Bump::disk({5, 0}, 1, 5)});
    EXPECT_TRUE(check_no_three_on_line(bent));
}

TEST(Threshold, SolvesTheDefiningRelationAndObeysTheBound)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double d = 0.1 + 20 * unit(rng);
        const double alpha = 0.01 + (pi / 3 - 0.01) * unit(rng);
        const double kappa = 0.05 + 10 * unit(rng);
        const double x = very_strong_threshold(d, alpha, kappa);
        EXPECT_NEAR(1 / d, x * (x - kappa) * alpha / (x + kappa), 1e-12 * std::max(1.0, 1 / d));
        EXPECT_LE(x, 1 / (d * alpha) + 2 * kappa);
        EXPECT_NEAR(x, test::threshold_bisection(d, alpha, kappa), 1e-10 * x);
    }
    EXPECT_THROW(very_strong_threshold(0, 1, 1), Error);
}

TEST(Regime, EquilateralSceneIsVeryStrongAtTenButNotJustAboveOne)
{
    const SceneRegime strong = classify_scene(test::equilateral(10));
    EXPECT_TRUE(strong.very_strong);
    EXPECT_TRUE(strong.all_strong());
    EXPECT_NEAR(strong.gaps[0], 8.0, 1e-12);
    const SceneRegime marginal = classify_scene(test::equilateral(1.05));
    EXPECT_TRUE(marginal.all_strong());
    EXPECT_FALSE(marginal.very_strong);
    const SceneRegime single = classify_scene(Scene({Bump::disk({0, 0}, 1, 5)}));
    EXPECT_TRUE(single.single_bump);
    EXPECT_FALSE(single.very_strong);
}
