#pragma once

#include "magbump/linearization.hpp"
#include "magbump/scattering.hpp"

#include <Eigen/Dense>

#include <boost/math/tools/toms748_solve.hpp>

#include <charconv>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace magbump {

enum class WordKind { Periodic, Segment };

/// Finite symbol sequence over the bump alphabet (0-based internally, 1-based in text).
struct Word {
    std::vector<std::size_t> symbols;
    WordKind kind = WordKind::Periodic;

    std::size_t size() const { return symbols.size(); }
    bool operator==(const Word&) const = default;
};

inline bool is_admissible(const Word& w)
{
    for (std::size_t k = 0; k + 1 < w.size(); ++k)
        if (w.symbols[k] == w.symbols[k + 1]) return false;
    if (w.kind == WordKind::Periodic && w.size() >= 2 && w.symbols.front() == w.symbols.back()) return false;
    if (w.kind == WordKind::Periodic && w.size() == 1) return false;
    return true;
}

/// Parse "1,2,3" (1-based symbols) over an alphabet of `alphabet` bumps.
inline Word parse_word(std::string_view text, WordKind kind, std::size_t alphabet)
{
    Word w;
    w.kind = kind;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view token = text.substr(pos, comma - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (token.empty()) {
            if (text.empty()) break;
            throw Error(ErrorCode::ParseError, "empty symbol in word '" + std::string(text) + "'");
        }
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size() || value < 1 || value > alphabet)
            throw Error(ErrorCode::ParseError, "symbol '" + std::string(token) + "' is not in 1.." +
                                                   std::to_string(alphabet));
        w.symbols.push_back(value - 1);
        pos = comma + 1;
    }
    return w;
}

inline std::string format_word(const Word& w)
{
    std::string out;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(w.symbols[k] + 1);
    }
    return out;
}

/// Left shift: periodic words rotate, segments drop their first symbol.
inline Word shift(const Word& w)
{
    Word out = w;
    if (w.symbols.empty()) return out;
    out.symbols.erase(out.symbols.begin());
    if (w.kind == WordKind::Periodic) out.symbols.push_back(w.symbols.front());
    return out;
}

/// All cyclically admissible periodic words of length p over n symbols.
inline std::vector<Word> enumerate_periodic_words(std::size_t n, std::size_t p)
{
    std::vector<Word> out;
    if (p == 0 || n == 0) return out;
    Word w;
    w.symbols.assign(p, 0);
    while (true) {
        if (is_admissible(w)) out.push_back(w);
        std::size_t k = p;
        while (k > 0) {
            --k;
            if (++w.symbols[k] < n) break;
            w.symbols[k] = 0;
            if (k == 0) return out;
        }
    }
}

/// trace((ones - I)^p): the number of closed admissible paths of length p.
inline long long count_periodic_words(std::size_t n, std::size_t p)
{
    const auto size = static_cast<Eigen::Index>(n);
    using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
    IntMatrix a = IntMatrix::Ones(size, size) - IntMatrix::Identity(size, size);
    IntMatrix power = IntMatrix::Identity(size, size);
    for (std::size_t k = 0; k < p; ++k) power = power * a;
    return power.trace();
}

inline SectionState poincare_map(const SectionState& x, const Scene& scene, const Tolerances& tol = {})
{
    return poincare_step(x, scene, std::nullopt, tol).to;
}

inline Word itinerary(const Orbit& orbit)
{
    Word w;
    w.kind = WordKind::Segment;
    for (std::size_t b : orbit.itinerary()) w.symbols.push_back(b);
    if (w.symbols.empty()) throw Error(ErrorCode::NoEvents, "orbit meets no bump");
    return w;
}

// ---- periodic orbits -------------------------------------------------------------------

struct OrbitSearch {
    int grid = 32;
    /// 0 uses the centered grid; other values jitter the grid offsets.
    std::uint64_t seed = 0;
};

struct PeriodicOrbit {
    Word word;
    std::vector<SectionState> states;
    double residual = 0;
    int iterations = 0;
    /// Residual history, seed residual first.
    std::vector<double> trace;
};

struct Monodromy {
    Mat2 matrix;
    double determinant;
    double trace;
    bool hyperbolic;
};

namespace detail {

struct ShootingEval {
    Eigen::VectorXd residual;
    std::vector<PoincareDerivative> derivatives;
};

inline ShootingEval shooting_residual(const std::vector<SectionState>& xs, const Word& w, const Scene& scene,
                                      bool with_derivative, const Tolerances& tol)
{
    const std::size_t p = xs.size();
    ShootingEval out;
    out.residual.resize(static_cast<Eigen::Index>(2 * p));
    for (std::size_t k = 0; k < p; ++k) {
        const std::size_t next = (k + 1) % p;
        const std::size_t target = w.symbols[next];
        SectionState y;
        if (with_derivative) {
            out.derivatives.push_back(linearize_poincare(xs[k], scene, target, tol));
            y = out.derivatives.back().step.to;
        } else {
            y = poincare_step(xs[k], scene, target, tol).to;
        }
        const auto row = static_cast<Eigen::Index>(2 * k);
        out.residual(row) = arclength_difference(y.s, xs[next].s, scene.bump(target).perimeter());
        out.residual(row + 1) = y.u - xs[next].u;
    }
    return out;
}

/// Seed tuple minimizing the summed squared grid mismatch around the cycle, found by dynamic
/// programming over per-symbol grids with local transitions.
inline std::vector<SectionState> seed_cycle(const Word& w, const Scene& scene, const OrbitSearch& search,
                                            const Tolerances& tol)
{
    const int n = search.grid;
    const std::size_t p = w.size();
    double offset_s = 0.5;
    double offset_u = 0.5;
    if (search.seed != 0) {
        std::mt19937_64 rng(search.seed);
        std::uniform_real_distribution<double> unit(0.05, 0.95);
        offset_s = unit(rng);
        offset_u = unit(rng);
    }
    auto node_state = [&](std::size_t bump, int node) {
        const int i = node / n;
        const int j = node % n;
        SectionState x;
        x.bump = bump;
        x.s = (i + offset_s) / n * scene.bump(bump).perimeter();
        x.u = -1.0 + 2.0 * (j + offset_u) / n;
        return x;
    };

    // fractional grid coordinates of each node's image on the next layer
    struct Image {
        bool valid = false;
        double fs = 0;
        double fu = 0;
    };
    std::vector<std::vector<Image>> images(p);
    std::unordered_map<std::size_t, std::vector<Image>> cache;
    for (std::size_t k = 0; k < p; ++k) {
        const std::size_t from = w.symbols[k];
        const std::size_t to = w.symbols[(k + 1) % p];
        const std::size_t key = from * scene.size() + to;
        auto it = cache.find(key);
        if (it == cache.end()) {
            std::vector<Image> layer(static_cast<std::size_t>(n * n));
            for (int node = 0; node < n * n; ++node) {
                try {
                    const SectionState y = poincare_step(node_state(from, node), scene, to, tol).to;
                    Image& img = layer[static_cast<std::size_t>(node)];
                    img.fs = y.s / scene.bump(to).perimeter() * n - offset_s;
                    img.fu = (y.u + 1.0) / 2.0 * n - offset_u;
                    img.valid = true;
                } catch (const Error&) {
                }
            }
            it = cache.emplace(key, std::move(layer)).first;
        }
        images[k] = it->second;
    }

    // valid nodes per layer: those whose targeted image exists
    std::vector<std::vector<int>> valid(p);
    for (std::size_t k = 0; k < p; ++k)
        for (int node = 0; node < n * n; ++node)
            if (images[k][static_cast<std::size_t>(node)].valid) valid[k].push_back(node);
    auto cost = [&](const Image& img, int node) {
        const double ds = std::remainder(img.fs - node / n, static_cast<double>(n));
        const double du = img.fu - node % n;
        return ds * ds + du * du;
    };

    // min-plus dynamic programming around the cycle, one pass per start node
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best_nodes;
    std::vector<std::vector<double>> dist(p);
    std::vector<std::vector<std::size_t>> prev(p);
    for (int start : valid[0]) {
        const Image& first = images[0][static_cast<std::size_t>(start)];
        if (p == 1) break;
        dist[1].assign(valid[1].size(), 0.0);
        for (std::size_t j = 0; j < valid[1].size(); ++j) dist[1][j] = cost(first, valid[1][j]);
        for (std::size_t k = 1; k + 1 < p; ++k) {
            dist[k + 1].assign(valid[k + 1].size(), std::numeric_limits<double>::infinity());
            prev[k + 1].assign(valid[k + 1].size(), 0);
            for (std::size_t i = 0; i < valid[k].size(); ++i) {
                const double base = dist[k][i];
                if (base >= best_cost) continue;
                const Image& img = images[k][static_cast<std::size_t>(valid[k][i])];
                for (std::size_t j = 0; j < valid[k + 1].size(); ++j) {
                    const double c = base + cost(img, valid[k + 1][j]);
                    if (c < dist[k + 1][j]) {
                        dist[k + 1][j] = c;
                        prev[k + 1][j] = i;
                    }
                }
            }
        }
        double closing = std::numeric_limits<double>::infinity();
        std::size_t last = 0;
        for (std::size_t i = 0; i < valid[p - 1].size(); ++i) {
            const double c = dist[p - 1][i] + cost(images[p - 1][static_cast<std::size_t>(valid[p - 1][i])], start);
            if (c < closing) {
                closing = c;
                last = i;
            }
        }
        if (!(closing < best_cost)) continue;
        best_cost = closing;
        best_nodes.assign(p, 0);
        best_nodes[0] = start;
        std::size_t idx = last;
        for (std::size_t k = p - 1; k >= 1; --k) {
            best_nodes[k] = valid[k][idx];
            if (k >= 2) idx = prev[k][idx];
        }
    }
    if (best_nodes.empty())
        throw Error(ErrorCode::NoConvergence, "no seed cycle on the grid for word " + format_word(w));

    std::vector<SectionState> xs;
    for (std::size_t k = 0; k < p; ++k) xs.push_back(node_state(w.symbols[k], best_nodes[k]));
    return xs;
}

} // namespace detail

/// Periodic orbit realizing a cyclically admissible word: multiple shooting on the section
/// states (s_k, u_k) with damped Newton and the analytic bump-to-bump derivative.
inline PeriodicOrbit find_periodic_orbit(const Scene& scene, const Word& word, const OrbitSearch& search = {},
                                         const Tolerances& tol = {})
{
    if (word.kind != WordKind::Periodic || word.size() < 2 || !is_admissible(word))
        throw Error(ErrorCode::InadmissibleWord, "need a cyclically admissible periodic word of period >= 2");
    for (std::size_t s : word.symbols)
        if (s >= scene.size()) throw Error(ErrorCode::InadmissibleWord, "symbol outside the alphabet");
    if (!classify_scene(scene, tol).very_strong)
        throw Error(ErrorCode::NotVeryStrong, "periodic orbit search needs very strong fields");

    const std::size_t p = word.size();
    PeriodicOrbit out;
    out.word = word;
    std::vector<SectionState> xs = detail::seed_cycle(word, scene, search, tol);

    auto sup = [](const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); };
    auto normalize = [&](SectionState& x) {
        const double per = scene.bump(x.bump).perimeter();
        x.s = std::fmod(x.s, per);
        if (x.s < 0) x.s += per;
    };

    detail::ShootingEval eval = detail::shooting_residual(xs, word, scene, true, tol);
    out.trace.push_back(sup(eval.residual));
    const double polish = tol.newton_residual * 1e-2;
    int iteration = 0;
    for (; iteration < tol.newton_max_iterations && sup(eval.residual) > polish; ++iteration) {
        const auto dim = static_cast<Eigen::Index>(2 * p);
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t k = 0; k < p; ++k) {
            const auto r = static_cast<Eigen::Index>(2 * k);
            const auto c = static_cast<Eigen::Index>(2 * ((k + 1) % p));
            jac.block<2, 2>(r, r) += eval.derivatives[k].section;
            jac.block<2, 2>(r, c) -= Mat2::Identity();
        }
        const Eigen::VectorXd delta = jac.fullPivLu().solve(-eval.residual);

        const double norm0 = eval.residual.norm();
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-10) {
            std::vector<SectionState> trial = xs;
            bool inside = true;
            for (std::size_t k = 0; k < p; ++k) {
                trial[k].s += lambda * delta(static_cast<Eigen::Index>(2 * k));
                trial[k].u += lambda * delta(static_cast<Eigen::Index>(2 * k + 1));
                normalize(trial[k]);
                if (!(std::abs(trial[k].u) < 1)) inside = false;
            }
            if (inside) {
                try {
                    detail::ShootingEval next = detail::shooting_residual(trial, word, scene, true, tol);
                    if (next.residual.norm() < (1 - 1e-4 * lambda) * norm0) {
                        xs = std::move(trial);
                        eval = std::move(next);
                        accepted = true;
                        break;
                    }
                } catch (const Error&) {
                }
            }
            lambda *= 0.5;
        }
        out.trace.push_back(sup(eval.residual));
        if (!accepted) break; // stagnation at rounding level, or a genuine failure
    }
    out.iterations = iteration;
    out.residual = sup(eval.residual);
    if (!(out.residual < tol.newton_residual)) {
        std::string msg = "word " + format_word(word) + ": best residual " + std::to_string(out.residual) +
                          " after " + std::to_string(iteration) + " iterations; trace";
        for (double r : out.trace) msg += " " + std::to_string(r);
        throw Error(ErrorCode::NoConvergence, msg);
    }

    // the targeted flights must not be obstructed by other bumps
    for (std::size_t k = 0; k < p; ++k) {
        const PoincareStep real = poincare_step(xs[k], scene, std::nullopt, tol);
        if (real.target != word.symbols[(k + 1) % p])
            throw Error(ErrorCode::NoConvergence, "solution of word " + format_word(word) + " is obstructed");
    }
    out.states = std::move(xs);
    return out;
}

inline Monodromy monodromy(const Scene& scene, const PeriodicOrbit& orbit, const Tolerances& tol = {})
{
    Mat2 product = Mat2::Identity();
    double det = 1;
    const std::size_t p = orbit.states.size();
    for (std::size_t k = 0; k < p; ++k) {
        const auto d = linearize_poincare(orbit.states[k], scene, orbit.word.symbols[(k + 1) % p], tol);
        product = d.jacobi * product;
        det *= d.jacobi.determinant();
    }
    Monodromy m;
    m.matrix = product;
    // product of the per-step determinants
    m.determinant = det;
    m.trace = product.trace();
    m.hyperbolic = std::abs(m.trace) > 2;
    return m;
}

/// Full-scene propagation of a periodic orbit for `turns` periods, started just upstream of x_0.
inline Orbit replay(const Scene& scene, const PeriodicOrbit& orbit, std::size_t turns = 1,
                    const Tolerances& tol = {})
{
    const State entry = to_state(orbit.states.front(), scene);
    const double backoff = 0.25 * scene.gap(entry.inside.value());
    State start{entry.q - backoff * entry.v, entry.v, std::nullopt};
    Limits limits;
    limits.max_events = 2 * orbit.states.size() * turns;
    return propagate(start, scene, limits, GlancingPolicy::Straight, tol);
}

// ---- scattering connections ------------------------------------------------------------

/// True when some oriented line of direction phi meets two bumps.
inline bool direction_excluded(const Scene& scene, double phi)
{
    std::vector<std::pair<double, double>> spans;
    for (const auto& b : scene.bumps()) spans.push_back(line_support(b, phi));
    for (std::size_t i = 0; i < spans.size(); ++i)
        for (std::size_t j = i + 1; j < spans.size(); ++j)
            if (spans[i].first <= spans[j].second && spans[j].first <= spans[i].second) return true;
    return false;
}

struct ScatteringOrbit {
    OrientedLine incoming;
    OrientedLine outgoing;
    Orbit orbit;
    double residual = 0;
};

struct ScatteringSearch {
    int samples = 20000;
};

namespace detail {

/// Outgoing direction after following the line through the word's bumps in order, each
/// flight aimed at the next symbol. nullopt when a flight misses its bump.
inline std::optional<double> targeted_exit_direction(const Scene& scene, const Word& w, const OrientedLine& line,
                                                     const Tolerances& tol)
{
    State s = line_to_state(line, scene.radius() + 1.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const std::size_t b = w.symbols[k];
        const auto enc = ray_encounter(scene.bump(b), b, s.q, s.v, tol);
        if (!enc || enc->glancing) return std::nullopt;
        State entry{enc->point, s.v, b};
        if (std::abs(entry.v.dot(scene.bump(b).normal_at(entry.q))) < tol.glancing_cutoff) return std::nullopt;
        s = arc_exit(entry, scene.bump(b), tol).exit;
    }
    return angle_of(s.v);
}

} // namespace detail

/// Scattering orbit entering with direction phi_in, visiting the segment word in order and
/// leaving with direction phi_out (1-D shooting on the incoming angular momentum).
inline ScatteringOrbit find_scattering_orbit(const Scene& scene, const Word& word, double phi_in, double phi_out,
                                             const ScatteringSearch& search = {}, const Tolerances& tol = {})
{
    if (!is_admissible(word)) throw Error(ErrorCode::InadmissibleWord, "word is not admissible");
    for (std::size_t s : word.symbols)
        if (s >= scene.size()) throw Error(ErrorCode::InadmissibleWord, "symbol outside the alphabet");
    if (direction_excluded(scene, phi_in) || direction_excluded(scene, phi_out))
        throw Error(ErrorCode::ExcludedDirection, "direction along a line meeting two bumps");

    ScatteringOrbit out;
    if (word.symbols.empty()) {
        if (std::abs(wrap_angle(phi_out - phi_in)) > tol.newton_residual)
            throw Error(ErrorCode::NotFound, "free lines keep their direction");
        out.incoming = OrientedLine{phi_in, scene.radius() + 1.0};
        out.orbit = propagate(line_to_state(out.incoming, scene.radius() + 1.0), scene, Limits{},
                              GlancingPolicy::Straight, tol);
        if (!out.orbit.events.empty()) throw Error(ErrorCode::NotFound, "free line meets a bump");
        out.outgoing = state_to_line(out.orbit.final_state);
        return out;
    }
    if (!classify_scene(scene, tol).very_strong)
        throw Error(ErrorCode::NotVeryStrong, "scattering orbit search needs very strong fields");

    const auto [lo, hi] = line_support(scene.bump(word.symbols.front()), phi_in);
    const auto mismatch = [&](double L) -> std::optional<double> {
        const auto dir = detail::targeted_exit_direction(scene, word, OrientedLine{phi_in, L}, tol);
        if (!dir) return std::nullopt;
        return wrap_angle(*dir - phi_out);
    };

    std::optional<double> prev_value;
    double prev_L = lo;
    double best_residual = std::numeric_limits<double>::infinity();
    for (int i = 1; i < search.samples; ++i) {
        const double L = lo + (hi - lo) * i / search.samples;
        const auto value = mismatch(L);
        if (value && prev_value && (*value) * (*prev_value) <= 0 && std::abs(*value - *prev_value) < pi) {
            const auto g = [&](double x) {
                const auto m = mismatch(x);
                return m ? *m : std::numeric_limits<double>::quiet_NaN();
            };
            std::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                g, prev_L, L, *prev_value, *value,
                [](double a, double b) { return std::abs(a - b) <= 4 * std::numeric_limits<double>::epsilon() * (1 + std::abs(a)); },
                iters);
            const double root = std::abs(g(bracket.first)) < std::abs(g(bracket.second)) ? bracket.first
                                                                                            : bracket.second;
            const OrientedLine line{phi_in, root};
            Orbit orbit = propagate(line_to_state(line, scene.radius() + 1.0), scene, Limits{},
                                    GlancingPolicy::Straight, tol);
            const double residual = std::abs(wrap_angle(angle_of(orbit.final_state.v) - phi_out));
            best_residual = std::min(best_residual, residual);
            if (orbit.termination == Termination::Escaped && orbit.itinerary() == word.symbols &&
                residual < tol.newton_residual) {
                out.incoming = line;
                out.orbit = std::move(orbit);
                out.outgoing = state_to_line(out.orbit.final_state);
                out.residual = residual;
                return out;
            }
        }
        prev_value = value;
        prev_L = L;
    }
    if (std::isfinite(best_residual))
        throw Error(ErrorCode::NoConvergence, "best scattering residual " + std::to_string(best_residual));
    throw Error(ErrorCode::NotFound, "no orbit realizes word " + format_word(word));
}

} // namespace magbump
