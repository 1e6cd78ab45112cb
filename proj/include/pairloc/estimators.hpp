#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pairloc/disorder.hpp"
#include "pairloc/msa.hpp"
#include "pairloc/spectral.hpp"
#include "pairloc/stats.hpp"

namespace pairloc {

namespace detail {

inline constexpr std::uint64_t kOuterTag = 0x6f75746572ULL;
inline constexpr std::uint64_t kInnerTag = 0x696e6e6572ULL;

/// Counts replicates satisfying a predicate. Chunked so that thread counts
/// never change the result (integer sums commute).
template <class Pred>
long count_replicates(long n, int threads, Pred&& pred) {
    if (n <= 0) throw std::invalid_argument("count_replicates: no samples");
    if (threads <= 1) {
        long k = 0;
        for (long r = 0; r < n; ++r)
            if (pred(r)) ++k;
        return k;
    }
    std::vector<long> partial(static_cast<std::size_t>(threads), 0);
    std::vector<std::thread> pool;
    const long chunk = (n + threads - 1) / threads;
    for (int tidx = 0; tidx < threads; ++tidx) {
        const long lo = tidx * chunk, hi = std::min<long>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, tidx, lo, hi] {
            long k = 0;
            for (long r = lo; r < hi; ++r)
                if (pred(r)) ++k;
            partial[static_cast<std::size_t>(tidx)] = k;
        });
    }
    for (auto& th : pool) th.join();
    long k = 0;
    for (long p : partial) k += p;
    return k;
}

inline Segment hull(const Segment& a, const Segment& b) {
    return Segment(std::min(a.a, b.a), std::max(a.b, b.b));
}

inline Segment sampling_window(const SubSquare& sq) {
    return hull(project(sq, Axis::horizontal), project(sq, Axis::vertical));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wegner-type estimates
// ---------------------------------------------------------------------------

/// B = 2(a|g| - b - 1): the decay exponent of the averaged characteristic
/// function. The companion value with -b+1 appears in the intermediate step
/// of the derivation and is reported alongside the data.
struct DecayExponents {
    real B = 0;      // 2(a|g| - b - 1)
    real B_alt = 0;  // 2(a|g| - b + 1)
    bool applicable() const { return B > 0; }
};

inline DecayExponents decay_exponents(const DisorderSpec& spec) {
    const auto cb = char_bound_params(spec);
    DecayExponents d;
    d.B = 2.0 * (cb.a * std::abs(spec.g) - cb.b - 1.0);
    d.B_alt = 2.0 * (cb.a * std::abs(spec.g) - cb.b + 1.0);
    return d;
}

inline real wegner_bound_value(const SubSquare& sq, real B, real r, bool conditional) {
    const real vol = static_cast<real>(sq.hseg.size()) * static_cast<real>(sq.vseg.size());
    return (conditional ? 4.0 : 2.0) / (std::numbers::pi * B) * vol * r;
}

struct WegnerResult {
    ProbEstimate est;
    DecayExponents exponents;
};

/// P{ dist[E, spec(H_Lambda)] < r } over n disorder replicates, against the
/// Wegner-type bound (2 / pi B) (2L1+1)(2L2+1) r when B > 0.
inline WegnerResult wegner_mc(const DisorderSpec& spec, const SubSquare& sq,
                              const InteractionSpec& inter, Statistics stat, real E, real r, long n,
                              int threads = 1) {
    if (!(r >= 0)) throw std::invalid_argument("wegner_mc: r must be nonnegative");
    const Segment window = detail::sampling_window(sq);
    const long k = detail::count_replicates(n, threads, [&](long rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const auto evs = eigenvalues_only(build_h2(sq, V, inter, spec.g, stat));
        real dist = std::numeric_limits<real>::infinity();
        for (Eigen::Index j = 0; j < evs.size(); ++j) dist = std::min(dist, std::abs(evs(j) - E));
        return dist < r;
    });
    WegnerResult out;
    out.exponents = decay_exponents(spec);
    std::optional<real> bound;
    if (out.exponents.applicable()) bound = wegner_bound_value(sq, out.exponents.B, r, false);
    out.est = make_prob_estimate(k, n, bound, BoundSide::upper);
    return out;
}

/// Conditional variant. The potential over the conditioning segments is
/// frozen per outer draw; the inner loop estimates the conditional
/// probability and the maximum over outer draws approximates the sup. The
/// target energy is either fixed or an eigenvalue of an operator measurable
/// with respect to the conditioned field.
struct ConditionalWegnerConfig {
    SubSquare target;                    // Lambda' = I1 x J1
    std::optional<SubSquare> cond_sq;    // Lambda'' = I2 x J2 (measurable-energy variant)
    real E = 0;
    bool energy_from_cond = false;       // eps = eigenvalue of H_{Lambda''} nearest E
    real r = 0;
    long n_outer = 1;
    long n_inner = 1;
    InteractionSpec inter;
    Statistics stat = Statistics::fermionic;
};

struct ConditionalWegnerResult {
    ProbEstimate sup_est;  // CI of the worst outer draw
    DecayExponents exponents;
    long n_outer = 0;
    real worst_energy = 0;
};

inline ConditionalWegnerResult wegner_conditional_mc(const DisorderSpec& spec,
                                                     const ConditionalWegnerConfig& cfg) {
    const Segment I1 = project(cfg.target, Axis::horizontal);
    const Segment J1 = project(cfg.target, Axis::vertical);
    std::vector<Segment> frozen;
    if (cfg.cond_sq) {
        const Segment I2 = project(*cfg.cond_sq, Axis::horizontal);
        const Segment J2 = project(*cfg.cond_sq, Axis::vertical);
        const bool i1_free = !I1.intersects(J1) && !I1.intersects(I2) && !I1.intersects(J2);
        const bool j1_free = !J1.intersects(I1) && !J1.intersects(I2) && !J1.intersects(J2);
        if (!i1_free && !j1_free)
            throw std::invalid_argument(
                "wegner_conditional_mc: neither projection of the target is free of the others");
        frozen = {I2, J2};
    } else {
        if (I1.intersects(J1))
            throw std::invalid_argument("wegner_conditional_mc: projections not disjoint");
        frozen = {J1};
    }
    if (cfg.n_outer <= 0 || cfg.n_inner <= 0)
        throw std::invalid_argument("wegner_conditional_mc: no samples");

    Segment window = I1;
    window = detail::hull(window, J1);
    for (const Segment& f : frozen) window = detail::hull(window, f);

    auto frozen_contains = [&frozen](index_t x) {
        for (const Segment& f : frozen)
            if (f.contains(x)) return true;
        return false;
    };

    ConditionalWegnerResult out;
    out.exponents = decay_exponents(spec);
    out.n_outer = cfg.n_outer;
    long worst_k = -1;
    for (long o = 0; o < cfg.n_outer; ++o) {
        const std::uint64_t outer_rep =
            rng::derive_key(spec.master_seed, detail::kOuterTag, static_cast<std::uint64_t>(o));
        PotentialSample sample;
        sample.window = window;
        sample.values.assign(static_cast<std::size_t>(window.size()), 0.0);
        for (index_t x = window.a; x <= window.b; ++x)
            if (frozen_contains(x))
                sample.values[static_cast<std::size_t>(x - window.a)] =
                    potential_value(spec, outer_rep, x);

        real E_target = cfg.E;
        if (cfg.energy_from_cond) {
            if (!cfg.cond_sq)
                throw std::invalid_argument("wegner_conditional_mc: no conditioning square");
            const auto evs =
                eigenvalues_only(build_h2(*cfg.cond_sq, sample, cfg.inter, spec.g, cfg.stat));
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < evs.size(); ++j)
                if (std::abs(evs(j) - cfg.E) < std::abs(evs(best) - cfg.E)) best = j;
            E_target = evs(best);
        }

        long k = 0;
        for (long i = 0; i < cfg.n_inner; ++i) {
            const std::uint64_t inner_rep =
                rng::derive_key(spec.master_seed, detail::kInnerTag,
                                static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(i));
            PotentialSample full = sample;
            for (index_t x = window.a; x <= window.b; ++x)
                if (!frozen_contains(x))
                    full.values[static_cast<std::size_t>(x - window.a)] =
                        potential_value(spec, inner_rep, x);
            const auto evs = eigenvalues_only(build_h2(cfg.target, full, cfg.inter, spec.g, cfg.stat));
            real dist = std::numeric_limits<real>::infinity();
            for (Eigen::Index j = 0; j < evs.size(); ++j)
                dist = std::min(dist, std::abs(evs(j) - E_target));
            if (dist < cfg.r) ++k;
        }
        if (k > worst_k) {
            worst_k = k;
            out.worst_energy = E_target;
        }
    }
    std::optional<real> bound;
    if (out.exponents.applicable())
        bound = wegner_bound_value(cfg.target, out.exponents.B, cfg.r, true);
    out.sup_est = make_prob_estimate(worst_k, cfg.n_inner, bound, BoundSide::upper);
    return out;
}

// ---------------------------------------------------------------------------
// Resonance and tunneling probabilities
// ---------------------------------------------------------------------------

/// P{ Lambda is E-R } with the bound |Lambda|^2 ||f||_inf exp(-L^beta).
inline ProbEstimate resonance_prob_mc(const DisorderSpec& spec, const SubSquare& sq,
                                      const InteractionSpec& inter, Statistics stat, real E, long n,
                                      real beta, int threads = 1) {
    if (!sq.has_center()) throw std::invalid_argument("resonance_prob_mc: square not centered");
    const index_t L = sq.hseg.radius();
    const Segment window = detail::sampling_window(sq);
    const real threshold = std::exp(-std::pow(static_cast<real>(L), beta));
    const long k = detail::count_replicates(n, threads, [&](long rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const auto evs = eigenvalues_only(build_h2(sq, V, inter, spec.g, stat));
        real dist = std::numeric_limits<real>::infinity();
        for (Eigen::Index j = 0; j < evs.size(); ++j) dist = std::min(dist, std::abs(evs(j) - E));
        return dist < threshold;
    });
    const real volume = static_cast<real>(sq.site_count());
    const real bound = volume * volume * pdf_sup_norm(spec) * threshold;
    return make_prob_estimate(k, n, bound, BoundSide::upper);
}

/// P{ Lambda^(1)_L is m-NT } with the bound 1 - L^{-q} from below.
inline ProbEstimate tunneling_prob_mc(const DisorderSpec& spec, const Segment& window, real m,
                                      long n, real q, int threads = 1) {
    if (!window.is_centered()) throw std::invalid_argument("tunneling_prob_mc: window not centered");
    const index_t L = window.radius();
    const long k = detail::count_replicates(n, threads, [&](long rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const auto sd = eig_sym(build_h1(window, V, spec.g));
        return !classify_tunneling(sd, window, m).tunneling;
    });
    const real bound = 1.0 - std::pow(static_cast<real>(L), -q);
    return make_prob_estimate(k, n, bound, BoundSide::lower);
}

// ---------------------------------------------------------------------------
// Pair events over an energy interval
// ---------------------------------------------------------------------------

enum class PairQuantifier { forall_E, exists_E };
enum class PairEventKind { both_singular, both_resonant };

struct PairEventConfig {
    EnergyInterval I;
    real grid_spacing = 0;  // 0: exp(-L^beta)/10
    real m = 1;
    long n = 0;
    PairQuantifier quantifier = PairQuantifier::forall_E;
    PairEventKind kind = PairEventKind::both_singular;
    real beta = 0.5;
    real p = 6.0;  // bound L^{-2p}
    int threads = 1;
};

struct PairEventResult {
    ProbEstimate est;
    bool l_distant = false;
    ProjectionCase proj_case = ProjectionCase::none;
    long grid_points = 0;
};

namespace detail {

template <class Site>
bool resonant_at(const Spectral<Site>& sd, real E, real threshold) {
    return spectral_dist(sd, E) < threshold;
}

template <class Site, class VolumeTag>
struct PairVolume;  // specialized below

struct Pair1Volume {
    Segment window;
    index_t center;
    index_t L;
};

struct Pair2Volume {
    SubSquare sq;
    Site2 center;
    index_t L;
};

template <class SD, class SingularFn>
bool pair_event_holds(const SD& sdA, const SD& sdB, const std::vector<real>& grid,
                      PairQuantifier quant, PairEventKind kind, real res_thrA, real res_thrB,
                      SingularFn&& singular) {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const real E = grid[gi];
        bool at_E;
        if (kind == PairEventKind::both_resonant)
            at_E = resonant_at(sdA, E, res_thrA) && resonant_at(sdB, E, res_thrB);
        else
            at_E = singular(sdA, 0, E) && singular(sdB, 1, E);
        if (quant == PairQuantifier::exists_E && at_E) return true;
        if (quant == PairQuantifier::forall_E && !at_E) return false;
    }
    return quant == PairQuantifier::forall_E;
}

}  // namespace detail

/// Two-particle pair event: per replicate, evaluates "both sub-squares are
/// (E,m)-S" (or both E-R) over the energy grid under the chosen quantifier.
inline PairEventResult pair_event_mc(const DisorderSpec& spec, const SubSquare& sqA,
                                     const SubSquare& sqB, const InteractionSpec& inter,
                                     Statistics stat, const PairEventConfig& cfg) {
    if (!sqA.has_center() || !sqB.has_center())
        throw std::invalid_argument("pair_event_mc: sub-squares must be centered");
    const index_t LA = sqA.hseg.radius(), LB = sqB.hseg.radius();
    const index_t L = std::min(LA, LB);
    const real spacing =
        cfg.grid_spacing > 0 ? cfg.grid_spacing : default_grid_spacing(L, cfg.beta);
    const std::vector<real> grid = energy_grid(cfg.I, spacing);
    const real thrA = std::exp(-std::pow(static_cast<real>(LA), cfg.beta));
    const real thrB = std::exp(-std::pow(static_cast<real>(LB), cfg.beta));

    Segment window = detail::hull(detail::sampling_window(sqA), detail::sampling_window(sqB));
    const SubSquare* sqs[2] = {&sqA, &sqB};
    const index_t Ls[2] = {LA, LB};

    const long k = detail::count_replicates(cfg.n, cfg.threads, [&](long rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const Spectral2 sdA = eig_sym(build_h2(sqA, V, inter, spec.g, stat));
        const Spectral2 sdB = eig_sym(build_h2(sqB, V, inter, spec.g, stat));
        const Spectral2* sds[2] = {&sdA, &sdB};
        auto singular = [&](const Spectral2& sd, int which, real E) {
            const auto res = classify_singular(sd, sqs[which]->center(), *sqs[which], E, cfg.m,
                                               Ls[which], false);
            return res.singular;
        };
        return detail::pair_event_holds(sdA, sdB, grid, cfg.quantifier, cfg.kind, thrA, thrB,
                                        [&](const Spectral2& sd, int which, real E) {
                                            (void)sds;
                                            return singular(sd, which, E);
                                        });
    });

    PairEventResult out;
    out.grid_points = static_cast<long>(grid.size());
    out.l_distant = is_l_distant(sqA, sqB, L);
    out.proj_case = projection_disjointness_case(sqA, sqB);
    const real bound = std::pow(static_cast<real>(L), -2.0 * cfg.p);
    out.est = make_prob_estimate(k, cfg.n, bound, BoundSide::upper);
    return out;
}

/// Single-particle pair event on two segments.
inline PairEventResult pair_event_mc(const DisorderSpec& spec, const Segment& segX,
                                     const Segment& segY, const PairEventConfig& cfg) {
    if (!segX.is_centered() || !segY.is_centered())
        throw std::invalid_argument("pair_event_mc: segments must be centered");
    const index_t LA = segX.radius(), LB = segY.radius();
    const index_t L = std::min(LA, LB);
    const real spacing =
        cfg.grid_spacing > 0 ? cfg.grid_spacing : default_grid_spacing(L, cfg.beta);
    const std::vector<real> grid = energy_grid(cfg.I, spacing);
    const real thrA = std::exp(-std::pow(static_cast<real>(LA), cfg.beta));
    const real thrB = std::exp(-std::pow(static_cast<real>(LB), cfg.beta));
    const Segment window = detail::hull(segX, segY);
    const Segment* segs[2] = {&segX, &segY};
    const index_t Ls[2] = {LA, LB};

    const long k = detail::count_replicates(cfg.n, cfg.threads, [&](long rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const Spectral1 sdA = eig_sym(build_h1(segX, V, spec.g));
        const Spectral1 sdB = eig_sym(build_h1(segY, V, spec.g));
        return detail::pair_event_holds(
            sdA, sdB, grid, cfg.quantifier, cfg.kind, thrA, thrB,
            [&](const Spectral1& sd, int which, real E) {
                return classify_singular(sd, segs[which]->center(), *segs[which], E, cfg.m,
                                         Ls[which], false)
                    .singular;
            });
    });

    PairEventResult out;
    out.grid_points = static_cast<long>(grid.size());
    out.l_distant = segment_gap(segX, segY) > 8 * L;
    out.proj_case = segX.intersects(segY) ? ProjectionCase::none : ProjectionCase::case_B_all_disjoint;
    const real bound = std::pow(static_cast<real>(L), -2.0 * cfg.p);
    out.est = make_prob_estimate(k, cfg.n, bound, BoundSide::upper);
    return out;
}

// ---------------------------------------------------------------------------
// Direct-sum pair events (one or both squares off-diagonal)
// ---------------------------------------------------------------------------

struct DirectSumConfig {
    EnergyInterval I;
    real grid_spacing = 0;
    real m_next = 1;   // mass at the larger scale (event B)
    real m_small = 1;  // mass at the smaller scale (event C)
    real m0 = 2;       // base mass (event T uses m0 + 1)
    index_t L_small = 1;
    long n = 0;
    real beta = 0.5;
    real p = 6.0;
    real q = 24.0;
    int threads = 1;
};

struct DirectSumResult {
    ProbEstimate event_B;  // exists E in I: both squares (E, m_next)-S
    ProbEstimate event_C;  // some radius-L_small sub-segment of Jtilde is m_small-T
    ProbEstimate event_D;  // exists E in I: both squares E-R
    ProbEstimate event_T;  // some radius-L_big sub-segment of Jtilde is (m0+1)-T
    real target = 0;       // L_big^{-2p}
    bool l_distant = false;
};

namespace detail {

/// Merged union of segments, then all centered sub-segments of given radius.
inline std::vector<Segment> subsegments_of_union(std::vector<Segment> segs, index_t radius) {
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.a < b.a; });
    std::vector<Segment> merged;
    for (const Segment& s : segs) {
        if (!merged.empty() && s.a <= merged.back().b + 1)
            merged.back() = Segment(merged.back().a, std::max(merged.back().b, s.b));
        else
            merged.push_back(s);
    }
    std::vector<Segment> out;
    for (const Segment& run : merged)
        for (index_t c = run.a + radius; c + radius <= run.b; ++c)
            out.push_back(Segment::centered(c, radius));
    return out;
}

}  // namespace detail

/// Joint frequencies of the events entering the off-diagonal inductive step,
/// reported with the scale target L^{-2p}.
inline DirectSumResult direct_sum_event_mc(const DisorderSpec& spec, const SubSquare& sqA,
                                           const SubSquare& sqB, const InteractionSpec& inter,
                                           Statistics stat, const DirectSumConfig& cfg) {
    if (!sqA.has_center() || !sqB.has_center())
        throw std::invalid_argument("direct_sum_event_mc: sub-squares must be centered");
    const DiagonalStrip strip(inter.d);
    const bool a_off = classify_diagonal(sqA, strip) == DiagonalClass::off_diagonal;
    const bool b_off = classify_diagonal(sqB, strip) == DiagonalClass::off_diagonal;
    if (!a_off && !b_off)
        throw std::invalid_argument("direct_sum_event_mc: need at least one off-diagonal square");
    const index_t L_big = std::min(sqA.hseg.radius(), sqB.hseg.radius());
    const real spacing =
        cfg.grid_spacing > 0 ? cfg.grid_spacing : default_grid_spacing(L_big, cfg.beta);
    const std::vector<real> grid = energy_grid(cfg.I, spacing);
    const real thrA = std::exp(-std::pow(static_cast<real>(sqA.hseg.radius()), cfg.beta));
    const real thrB = std::exp(-std::pow(static_cast<real>(sqB.hseg.radius()), cfg.beta));

    const std::vector<Segment> projections = {
        project(sqA, Axis::horizontal), project(sqA, Axis::vertical),
        project(sqB, Axis::horizontal), project(sqB, Axis::vertical)};
    const std::vector<Segment> small_candidates =
        detail::subsegments_of_union(projections, cfg.L_small);
    const std::vector<Segment> big_candidates = detail::subsegments_of_union(projections, L_big);

    Segment window = projections[0];
    for (const Segment& s : projections) window = detail::hull(window, s);

    long kB = 0, kC = 0, kD = 0, kT = 0;
    for (long rep = 0; rep < cfg.n; ++rep) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(rep));
        const Spectral2 sdA = eig_sym(build_h2(sqA, V, inter, spec.g, stat));
        const Spectral2 sdB = eig_sym(build_h2(sqB, V, inter, spec.g, stat));

        bool evB = false, evD = false;
        for (const real E : grid) {
            if (!evD && detail::resonant_at(sdA, E, thrA) && detail::resonant_at(sdB, E, thrB))
                evD = true;
            if (!evB &&
                classify_singular(sdA, sqA.center(), sqA, E, cfg.m_next, sqA.hseg.radius(), false)
                    .singular &&
                classify_singular(sdB, sqB.center(), sqB, E, cfg.m_next, sqB.hseg.radius(), false)
                    .singular)
                evB = true;
            if (evB && evD) break;
        }
        auto any_tunneling = [&](const std::vector<Segment>& cands, real m) {
            for (const Segment& seg : cands) {
                const auto sd1 = eig_sym(build_h1(seg, V, spec.g));
                if (classify_tunneling(sd1, seg, m).tunneling) return true;
            }
            return false;
        };
        if (evB) ++kB;
        if (evD) ++kD;
        if (any_tunneling(small_candidates, cfg.m_small)) ++kC;
        if (any_tunneling(big_candidates, cfg.m0 + 1.0)) ++kT;
    }

    DirectSumResult out;
    out.target = std::pow(static_cast<real>(L_big), -2.0 * cfg.p);
    out.l_distant = is_l_distant(sqA, sqB, L_big);
    out.event_B = make_prob_estimate(kB, cfg.n, out.target, BoundSide::upper);
    out.event_C = make_prob_estimate(
        kC, cfg.n, std::pow(static_cast<real>(cfg.L_small), -cfg.q), BoundSide::upper);
    out.event_D = make_prob_estimate(
        kD, cfg.n, std::pow(static_cast<real>(cfg.L_small), -cfg.q), BoundSide::upper);
    out.event_T = make_prob_estimate(kT, cfg.n, std::pow(static_cast<real>(L_big), -cfg.q),
                                     BoundSide::upper);
    return out;
}

}  // namespace pairloc
