#include "support.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace magbump;
using test::section_distance;

namespace {

Word periodic(std::initializer_list<std::size_t> one_based)
{
    Word w;
    for (std::size_t s : one_based) w.symbols.push_back(s - 1);
    return w;
}

const Scene& triangle()
{
    static const Scene scene = test::equilateral(10);
    return scene;
}

/// Orbits of every admissible word up to period 5, computed once.
const std::map<std::vector<std::size_t>, PeriodicOrbit>& census()
{
    static const auto orbits = [] {
        std::map<std::vector<std::size_t>, PeriodicOrbit> out;
        for (std::size_t p = 2; p <= 5; ++p)
            for (const Word& w : enumerate_periodic_words(3, p)) out.emplace(w.symbols, find_periodic_orbit(triangle(), w));
        return out;
    }();
    return orbits;
}

} // namespace

TEST(Words, Admissibility)
{
    EXPECT_TRUE(is_admissible(periodic({1, 2, 3})));
    EXPECT_FALSE(is_admissible(periodic({1, 2, 1})));
    EXPECT_FALSE(is_admissible(periodic({2})));
    Word seg = periodic({1, 1, 2});
    seg.kind = WordKind::Segment;
    EXPECT_FALSE(is_admissible(seg));
    seg = periodic({1, 2, 1});
    seg.kind = WordKind::Segment;
    EXPECT_TRUE(is_admissible(seg));
    EXPECT_TRUE(is_admissible(Word{{}, WordKind::Segment}));
}

TEST(Words, ParseAndFormat)
{
    const Word w = parse_word("1, 3,2", WordKind::Periodic, 3);
    EXPECT_EQ(w.symbols, (std::vector<std::size_t>{0, 2, 1}));
    EXPECT_EQ(format_word(w), "1,3,2");
    EXPECT_TRUE(parse_word("", WordKind::Segment, 3).symbols.empty());
    for (const char* bad : {"0", "4", "1,,2", "a", "1,2,", "-1"})
        EXPECT_THROW(parse_word(bad, WordKind::Periodic, 3), Error) << bad;
}

TEST(Words, Shift)
{
    EXPECT_EQ(shift(periodic({1, 2, 3})).symbols, periodic({2, 3, 1}).symbols);
    Word seg = periodic({1, 2, 3});
    seg.kind = WordKind::Segment;
    EXPECT_EQ(shift(seg).symbols, periodic({2, 3}).symbols);
}

TEST(Words, EnumerationMatchesTransferMatrixCount)
{
    for (std::size_t n = 2; n <= 5; ++n)
        for (std::size_t p = 1; p <= 7; ++p) {
            const auto words = enumerate_periodic_words(n, p);
            EXPECT_EQ(static_cast<long long>(words.size()), count_periodic_words(n, p)) << n << " " << p;
            // closed walks on the complete graph: (n-1)^p + (n-1)(-1)^p
            const long long closed = static_cast<long long>(std::pow(n - 1, p)) + (p % 2 ? -1 : 1) * (long long)(n - 1);
            EXPECT_EQ(count_periodic_words(n, p), closed);
        }
    EXPECT_EQ(enumerate_periodic_words(3, 5).size(), 30u);
}

TEST(PoincareMap, ChangesTheSymbol)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int mapped = 0;
    for (int i = 0; i < 300; ++i) {
        SectionState x{static_cast<std::size_t>(3 * unit(rng)), 0, std::sin(pi * (unit(rng) - 0.5)), Side::Inward};
        x.s = unit(rng) * triangle().bump(x.bump).perimeter();
        try {
            const SectionState y = poincare_map(x, triangle());
            EXPECT_NE(y.bump, x.bump);
            EXPECT_EQ(y.side, Side::Inward);
            EXPECT_LT(std::abs(y.u), 1.0);
            ++mapped;
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == ErrorCode::Escaped || e.code() == ErrorCode::GlancingNearby);
        }
    }
    EXPECT_GT(mapped, 10);
}

TEST(PoincareMap, RotationEquivariance)
{
    // rotating the triangle by 120 degrees maps bump k to bump k+1 and shifts arclength by 2 pi / 3
    const Scene& scene = triangle();
    for (double s : {0.3, 2.0, 4.4})
        for (double u : {-0.4, 0.1, 0.5}) {
            const SectionState x{0, s, u, Side::Inward};
            SectionState y;
            try {
                y = poincare_map(x, scene);
            } catch (const Error&) {
                continue;
            }
            const SectionState rx{1, s + two_pi / 3, u, Side::Inward};
            const SectionState ry = poincare_map(rx, scene);
            EXPECT_EQ(ry.bump, (y.bump + 1) % 3);
            EXPECT_NEAR(arclength_difference(ry.s, y.s + two_pi / 3, two_pi), 0.0, 1e-10);
            EXPECT_NEAR(ry.u, y.u, 1e-10);
        }
}

TEST(PoincareMap, MirrorEquivarianceWithReversedField)
{
    // the mirror x -> -x swaps the two disks and flips the field sign
    const Scene scene = test::two_disks(6, 3);
    const Scene mirrored = test::two_disks(-6, 3);
    for (double s : {2.6, 3.0, 3.5})
        for (double u : {-0.3, 0.0, 0.2}) {
            const SectionState x{1, s, u, Side::Inward};
            SectionState y;
            try {
                y = poincare_map(x, scene);
            } catch (const Error&) {
                continue;
            }
            // arclength angle theta -> pi - theta, tangent reverses
            const SectionState mx{0, pi - s, -u, Side::Inward};
            const SectionState my = poincare_map(mx, mirrored);
            EXPECT_EQ(my.bump, 1 - y.bump);
            EXPECT_NEAR(arclength_difference(my.s, pi - y.s, two_pi), 0.0, 1e-10);
            EXPECT_NEAR(my.u, -y.u, 1e-10);
        }
}

TEST(PoincareMap, ReversedFieldGivesTheInverse)
{
    const Scene& scene = triangle();
    const Scene reversed = test::reversed_fields(scene);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    while (checked < 50) {
        SectionState x{static_cast<std::size_t>(3 * unit(rng)), 0, -0.9 + 1.8 * unit(rng), Side::Inward};
        x.s = unit(rng) * scene.bump(x.bump).perimeter();
        PoincareStep step;
        try {
            step = poincare_step(x, scene);
        } catch (const Error&) {
            continue;
        }
        // run backwards from the arrival point with the field reversed
        Limits limits;
        limits.max_events = 2;
        const Orbit back = propagate(State{step.arrival.q, -step.arrival.v, std::nullopt}, reversed, limits);
        ASSERT_EQ(back.events.size(), 2u);
        const State& leave = back.events[1].state;
        const SectionState recovered = to_section(State{leave.q, -leave.v, std::nullopt}, back.events[1].bump, scene);
        EXPECT_LT(section_distance(recovered, x, scene), 1e-9);
        ++checked;
    }
}

TEST(Itinerary, RecordsEntriesInOrder)
{
    Orbit o;
    EXPECT_THROW(itinerary(o), Error);
    o.events.push_back(Event{EventKind::Entry, 0, 0, {}});
    o.events.push_back(Event{EventKind::Exit, 0, 1, {}});
    o.events.push_back(Event{EventKind::Glancing, 1, 2, {}});
    o.events.push_back(Event{EventKind::Entry, 2, 3, {}});
    o.events.push_back(Event{EventKind::Exit, 2, 4, {}});
    o.events.push_back(Event{EventKind::Entry, 1, 5, {}});
    EXPECT_EQ(itinerary(o).symbols, (std::vector<std::size_t>{0, 2, 1}));
}

TEST(Itinerary, LongOrbitsHaveAdmissibleItineraries)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 from = 14.0 * unit_from_angle(two_pi * unit(rng));
        const Vec2 target(-3 + 6 * unit(rng), -3 + 6 * unit(rng));
        const Orbit o = propagate(State{from, (target - from).normalized(), std::nullopt}, triangle());
        if (o.events.empty() || o.glancing_encountered) continue;
        Word w = itinerary(o);
        EXPECT_TRUE(is_admissible(w));
    }
}

TEST(PeriodicOrbits, EveryWordUpToPeriodFiveConverges)
{
    for (const auto& [symbols, orbit] : census()) {
        Word w{symbols, WordKind::Periodic};
        EXPECT_LT(orbit.residual, 1e-10) << format_word(w);
        const Monodromy m = monodromy(triangle(), orbit);
        EXPECT_NEAR(m.determinant, 1.0, 1e-8) << format_word(w);
        EXPECT_LT(std::abs(m.matrix.determinant() - 1.0), 1e-12 * m.matrix.squaredNorm()) << format_word(w);
        EXPECT_TRUE(m.hyperbolic) << format_word(w);
        // replay through the full scene reproduces the word
        const Orbit replayed = replay(triangle(), orbit);
        EXPECT_EQ(replayed.itinerary(), symbols) << format_word(w);
    }
}

TEST(PeriodicOrbits, ConjugacyWithTheShift)
{
    const Scene& scene = triangle();
    for (const auto& [symbols, orbit] : census()) {
        const Word w{symbols, WordKind::Periodic};
        const PeriodicOrbit& shifted = census().at(shift(w).symbols);
        const SectionState image = poincare_map(orbit.states[0], scene);
        EXPECT_LT(section_distance(image, shifted.states[0], scene), 1e-8) << format_word(w);
        // the whole cycle, not just the basepoint
        for (std::size_t k = 0; k < w.size(); ++k)
            EXPECT_LT(section_distance(orbit.states[(k + 1) % w.size()], shifted.states[k], scene), 1e-8);
    }
}

TEST(PeriodicOrbits, TraceIsInvariantUnderRotationOfTheBasepoint)
{
    for (const auto& [symbols, orbit] : census()) {
        const Word w{symbols, WordKind::Periodic};
        const double a = monodromy(triangle(), orbit).trace;
        const double b = monodromy(triangle(), census().at(shift(w).symbols)).trace;
        EXPECT_NEAR(a, b, 1e-8 * std::max(1.0, std::abs(a)));
    }
}

TEST(PeriodicOrbits, IndependentSeedsAgree)
{
    for (std::size_t p = 2; p <= 3; ++p)
        for (const Word& w : enumerate_periodic_words(3, p)) {
            const PeriodicOrbit& reference = census().at(w.symbols);
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                const PeriodicOrbit other = find_periodic_orbit(triangle(), w, OrbitSearch{32, seed});
                for (std::size_t k = 0; k < p; ++k)
                    EXPECT_LT(section_distance(other.states[k], reference.states[k], triangle()), 1e-8);
            }
        }
}

TEST(PeriodicOrbits, RotationMapsOrbitToOrbit)
{
    const PeriodicOrbit& a = census().at({0, 1});
    const PeriodicOrbit& b = census().at({1, 2});
    for (std::size_t k = 0; k < 2; ++k) {
        SectionState rotated = a.states[k];
        rotated.bump = (rotated.bump + 1) % 3;
        rotated.s += two_pi / 3;
        EXPECT_LT(section_distance(rotated, b.states[k], triangle()), 1e-8);
    }
}

TEST(PeriodicOrbits, PreconditionsAreEnforced)
{
    try {
        find_periodic_orbit(triangle(), periodic({1, 2, 1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InadmissibleWord);
    }
    EXPECT_THROW(find_periodic_orbit(triangle(), periodic({1, 4})), Error);
    try {
        find_periodic_orbit(test::equilateral(1.05), periodic({1, 2}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotVeryStrong);
    }
}

TEST(ScatteringOrbits, EmptyWordIsAFreeLine)
{
    const ScatteringOrbit o = find_scattering_orbit(triangle(), Word{{}, WordKind::Segment}, 0.3, 0.3);
    EXPECT_TRUE(o.orbit.events.empty());
    EXPECT_NEAR(wrap_angle(o.outgoing.phi - 0.3), 0.0, 1e-15);
    EXPECT_THROW(find_scattering_orbit(triangle(), Word{{}, WordKind::Segment}, 0.3, 0.5), Error);
}

TEST(ScatteringOrbits, TwoSymbolWordIsRealized)
{
    Word w = periodic({1, 2});
    w.kind = WordKind::Segment;
    for (double phi_out : {0.5, 2.5}) {
        const ScatteringOrbit o = find_scattering_orbit(triangle(), w, 0.3, phi_out);
        EXPECT_LT(o.residual, 1e-10);
        EXPECT_EQ(o.orbit.itinerary(), w.symbols);
        EXPECT_NEAR(wrap_angle(o.incoming.phi - 0.3), 0.0, 1e-15);
        EXPECT_NEAR(wrap_angle(angle_of(o.orbit.final_state.v) - phi_out), 0.0, 1e-10);
        EXPECT_EQ(o.orbit.termination, Termination::Escaped);
    }
}

TEST(ScatteringOrbits, DirectionsAlongTwoBumpsAreExcluded)
{
    const Scene& scene = triangle();
    const double along = angle_of(scene.bump(1).center() - scene.bump(0).center());
    EXPECT_TRUE(direction_excluded(scene, along));
    Word w = periodic({1, 2});
    w.kind = WordKind::Segment;
    try {
        find_scattering_orbit(scene, w, along, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ExcludedDirection);
    }
    EXPECT_FALSE(direction_excluded(scene, 0.3));
}
