#pragma once

#include "magbump/linearization.hpp"

#include <algorithm>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace magbump {

enum class ConeMembership { Inside, Boundary, Outside };

inline const char* to_string(ConeMembership m)
{
    switch (m) {
    case ConeMembership::Inside: return "inside";
    case ConeMembership::Boundary: return "boundary";
    case ConeMembership::Outside: return "outside";
    }
    return "?";
}

/// Coordinates of xi in the cone basis e_l = (1, 0), e_u = (d, 1).
struct ConeCoordinates {
    double lambda_l;
    double lambda_u;
    ConeMembership membership;
    /// lambda_l * lambda_u / |xi|^2; positive strictly inside.
    double margin;
};

inline ConeCoordinates in_cone(const Vec2& xi, double d)
{
    if (!(d > 0)) throw Error(ErrorCode::DomainError, "cone parameter d must be positive");
    const double norm2 = xi.squaredNorm();
    if (norm2 == 0) throw Error(ErrorCode::ZeroVector, "cone membership of the zero vector");
    ConeCoordinates c;
    c.lambda_u = xi.y();
    c.lambda_l = xi.x() - d * xi.y();
    const double product = c.lambda_l * c.lambda_u;
    c.margin = product / norm2;
    c.membership = product > 0 ? ConeMembership::Inside
                   : product == 0 ? ConeMembership::Boundary
                                  : ConeMembership::Outside;
    return c;
}

// ---- arc-gap function ------------------------------------------------------------------

namespace detail {
inline void check_arc_gap_domain(double alpha, double r)
{
    if (!(alpha >= 0 && alpha <= pi) || !(r >= 0 && r < 1))
        throw Error(ErrorCode::DomainError, "f_arc_gap needs alpha in [0, pi] and r in [0, 1)");
}
} // namespace detail

/// f(alpha) = alpha - 2 atan(r sin(alpha) / (1 + r cos(alpha))).
inline double f_arc_gap(double alpha, double r)
{
    detail::check_arc_gap_domain(alpha, r);
    return alpha - 2.0 * std::atan(r * std::sin(alpha) / (1.0 + r * std::cos(alpha)));
}

inline double f_arc_gap_derivative(double alpha, double r)
{
    detail::check_arc_gap_domain(alpha, r);
    return (1 - r * r) / (r * r + 2 * r * std::cos(alpha) + 1);
}

/// Linear lower bound ((1 - r)/(1 + r)) alpha.
inline double f_arc_gap_bound(double alpha, double r) { return (1 - r) / (1 + r) * alpha; }

// ---- invariance check ------------------------------------------------------------------

struct ConeCheckSpec {
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    unsigned parallel = 1;
    /// Give up after samples * attempt_factor candidate draws.
    std::size_t attempt_factor = 1000;
    int histogram_bins = 10;
};

struct ConeSample {
    SectionState x;
    std::size_t target;
    double determinant;
    double margin_lower; ///< image of e_l against the arrival cone (d_m)
    double margin_upper; ///< image of e_u against the arrival cone (d_m)
    double margin_departure; ///< min over both generators against a cone with d_l
};

struct BumpMarginStats {
    std::size_t samples = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> histogram;
    double histogram_max = 0;
};

struct ConeReport {
    bool very_strong = false;
    std::size_t accepted = 0;
    std::size_t attempts = 0;
    std::size_t skipped_escaped = 0;
    std::size_t skipped_glancing = 0;
    std::size_t violations = 0;
    std::size_t determinant_failures = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    double min_margin_departure = std::numeric_limits<double>::infinity();
    std::vector<BumpMarginStats> per_bump;
    std::vector<ConeSample> samples;

    bool pass() const
    {
        return accepted > 0 && violations == 0 && determinant_failures == 0 && min_margin > 0;
    }
};

/// Sample inward section states (uniform in arclength and inward angle), push both cone
/// generators through the linearized bump-to-bump map and check that their images lie
/// strictly inside the arrival cone. Escaping and near-tangent samples are skipped and counted.
inline ConeReport cone_invariance_check(const Scene& scene, const ConeCheckSpec& spec = {},
                                        const Tolerances& tol = {})
{
    const SceneRegime regime = classify_scene(scene, tol);
    if (!regime.all_strong()) throw Error(ErrorCode::NotStrong, "cone check needs strong fields on every bump");

    ConeReport report;
    report.very_strong = regime.very_strong;
    report.per_bump.resize(scene.size());

    enum class Outcome { Accepted, Escaped, Glancing };
    struct Result {
        Outcome outcome = Outcome::Escaped;
        ConeSample sample{};
        std::exception_ptr error;
    };

    auto evaluate = [&](const SectionState& x) {
        Result r;
        try {
            const PoincareDerivative d = linearize_poincare(x, scene, std::nullopt, tol);
            const double dl = scene.gap(x.bump);
            const double dm = scene.gap(d.step.target);
            const Vec2 img_l = d.jacobi * Vec2(1, 0);
            const Vec2 img_u = d.jacobi * Vec2(dl, 1);
            r.sample.x = x;
            r.sample.target = d.step.target;
            r.sample.determinant = d.jacobi.determinant();
            r.sample.margin_lower = in_cone(img_l, dm).margin;
            r.sample.margin_upper = in_cone(img_u, dm).margin;
            r.sample.margin_departure = std::min(in_cone(img_l, dl).margin, in_cone(img_u, dl).margin);
            r.outcome = Outcome::Accepted;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::GlancingNearby) r.outcome = Outcome::Glancing;
            else if (e.code() == ErrorCode::NotInDomain || e.code() == ErrorCode::Escaped) r.outcome = Outcome::Escaped;
            else r.error = std::current_exception();
        }
        return r;
    };

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, scene.size() - 1);
    const std::size_t max_attempts = spec.samples * spec.attempt_factor;
    const unsigned workers = std::max(1u, spec.parallel);
    const std::size_t batch = 256;

    while (report.accepted < spec.samples && report.attempts < max_attempts) {
        // candidates are drawn sequentially so results do not depend on the worker count
        std::vector<SectionState> candidates(batch);
        for (auto& c : candidates) {
            c.bump = pick(rng);
            c.s = unit(rng) * scene.bump(c.bump).perimeter();
            c.u = std::sin((unit(rng) - 0.5) * pi);
            c.side = Side::Inward;
        }
        std::vector<Result> results(batch);
        if (workers == 1) {
            for (std::size_t i = 0; i < batch; ++i) results[i] = evaluate(candidates[i]);
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    for (std::size_t i = w; i < batch; i += workers) results[i] = evaluate(candidates[i]);
                });
            }
            for (auto& t : pool) t.join();
        }
        for (const auto& r : results) {
            if (report.accepted >= spec.samples || report.attempts >= max_attempts) break;
            ++report.attempts;
            if (r.error) std::rethrow_exception(r.error);
            if (r.outcome == Outcome::Escaped) {
                ++report.skipped_escaped;
                continue;
            }
            if (r.outcome == Outcome::Glancing) {
                ++report.skipped_glancing;
                continue;
            }
            ++report.accepted;
            const ConeSample& s = r.sample;
            const double m = std::min(s.margin_lower, s.margin_upper);
            if (!(m > 0)) ++report.violations;
            if (std::abs(s.determinant - 1) > 1e-8) ++report.determinant_failures;
            report.min_margin = std::min(report.min_margin, m);
            report.min_margin_departure = std::min(report.min_margin_departure, s.margin_departure);
            auto& stats = report.per_bump[s.x.bump];
            ++stats.samples;
            stats.min_margin = std::min(stats.min_margin, m);
            report.samples.push_back(s);
        }
    }

    // histograms of min(margin_lower, margin_upper) per departure bump
    const int bins = std::max(1, spec.histogram_bins);
    for (std::size_t l = 0; l < scene.size(); ++l) {
        auto& stats = report.per_bump[l];
        stats.histogram.assign(static_cast<std::size_t>(bins), 0);
        for (const auto& s : report.samples)
            if (s.x.bump == l) stats.histogram_max = std::max(stats.histogram_max, std::min(s.margin_lower, s.margin_upper));
        for (const auto& s : report.samples) {
            if (s.x.bump != l) continue;
            const double m = std::min(s.margin_lower, s.margin_upper);
            int bin = stats.histogram_max > 0 ? static_cast<int>(m / stats.histogram_max * bins) : 0;
            bin = std::clamp(bin, 0, bins - 1);
            ++stats.histogram[static_cast<std::size_t>(bin)];
        }
    }
    return report;
}

} // namespace magbump
