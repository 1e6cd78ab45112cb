#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "pairloc/disorder.hpp"
#include "pairloc/operators.hpp"
#include "pairloc/rng.hpp"
#include "pairloc/spectral.hpp"

namespace pairloc {

/// Summary of simulated jump-process paths (diagnostics for the estimator).
struct PathStats {
    long n_paths = 0;
    long n_alive = 0;      // survived absorption and returned to the start site
    double mean_jumps = 0;  // over all paths
};

namespace detail {

inline constexpr std::uint64_t kMolchanovTag = 0x6d6f6c6368ULL;

// Jump-process domains. Each provides the full-lattice neighbor structure,
// the diagonal potential energy W, and the hop weight of an edge; jumps to
// sites outside the domain absorb the path.

struct SegmentDomainFixed {
    const Segment& window;
    const PotentialSample& V;
    real g;

    static constexpr int degree() { return 2; }
    static index_t neighbor(index_t x, int dir) { return dir == 0 ? x - 1 : x + 1; }
    bool contains(index_t x) const { return window.contains(x); }
    real w(index_t x) const { return g * V.at(x); }
    static real edge_weight(index_t, index_t) { return 1.0; }
};

struct SegmentDomainAveraged {
    const Segment& window;
    const DisorderSpec& spec;
    std::uint64_t replicate;

    static constexpr int degree() { return 2; }
    static index_t neighbor(index_t x, int dir) { return dir == 0 ? x - 1 : x + 1; }
    bool contains(index_t x) const { return window.contains(x); }
    real w(index_t x) const { return spec.g * potential_value(spec, replicate, x); }
    static real edge_weight(index_t, index_t) { return 1.0; }
};

struct SquareDomainFixed {
    const SubSquare& sq;
    Statistics stat;
    const PotentialSample& V;
    const InteractionSpec& inter;
    real g;

    static constexpr int degree() { return 4; }
    static Site2 neighbor(Site2 s, int dir) {
        switch (dir) {
            case 0: return {s.x1 - 1, s.x2};
            case 1: return {s.x1 + 1, s.x2};
            case 2: return {s.x1, s.x2 - 1};
            default: return {s.x1, s.x2 + 1};
        }
    }
    bool contains(Site2 s) const {
        if (!sq.contains(s)) return false;
        return stat == Statistics::bosonic || s.x1 != s.x2;
    }
    real w(Site2 s) const { return potential_energy_2p(s, V, inter, g); }
    real edge_weight(Site2 a, Site2 b) const {
        return (stat == Statistics::bosonic && (a.x1 == a.x2 || b.x1 == b.x2)) ? 2.0 : 1.0;
    }
};

struct SquareDomainAveraged {
    const SubSquare& sq;
    Statistics stat;
    const InteractionSpec& inter;
    const DisorderSpec& spec;
    std::uint64_t replicate;

    static constexpr int degree() { return 4; }
    static Site2 neighbor(Site2 s, int dir) { return SquareDomainFixed::neighbor(s, dir); }
    bool contains(Site2 s) const {
        if (!sq.contains(s)) return false;
        return stat == Statistics::bosonic || s.x1 != s.x2;
    }
    real w(Site2 s) const {
        return inter.at(s) + spec.g * (potential_value(spec, replicate, s.x1) +
                                       potential_value(spec, replicate, s.x2));
    }
    real edge_weight(Site2 a, Site2 b) const {
        return (stat == Statistics::bosonic && (a.x1 == a.x2 || b.x1 == b.x2)) ? 2.0 : 1.0;
    }
};

/// One trajectory of the continuous-time jump process with total rate equal
/// to the lattice degree, uniform jumps, absorption outside the domain.
/// Returns the path functional
///   1(X(t)=u) * prod(edge weights) * i^{K sign t} * exp(i sign t int W),
/// whose mean times e^{degree*|t|} is <delta_u, exp(itH) delta_u>.
template <class Domain, class Site>
std::complex<real> one_path(const Domain& dom, const Site& u, real t, rng::SequentialRng& rn,
                            long& jumps_out) {
    const real t_abs = std::abs(t);
    const int sgn = t < 0 ? -1 : 1;
    const real rate = static_cast<real>(Domain::degree());
    Site x = u;
    real clock = 0, phase = 0, weight = 1;
    long jumps = 0;
    while (true) {
        const real hold = rn.exponential(rate);
        if (clock + hold >= t_abs) {
            phase += dom.w(x) * (t_abs - clock);
            break;
        }
        phase += dom.w(x) * hold;
        clock += hold;
        const Site y = Domain::neighbor(x, static_cast<int>(rn.below(Domain::degree())));
        if (!dom.contains(y)) {
            jumps_out = jumps + 1;
            return {0, 0};
        }
        weight *= dom.edge_weight(x, y);
        x = y;
        ++jumps;
    }
    jumps_out = jumps;
    if (!(x == u)) return {0, 0};
    static constexpr std::complex<real> kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    int km = static_cast<int>(jumps % 4);
    if (sgn < 0) km = (4 - km) % 4;
    return weight * kIPow[km] * std::polar<real>(1.0, static_cast<real>(sgn) * phase);
}

struct PathRunResult {
    ComplexEstimate estimate;
    PathStats stats;
};

template <class DomainFactory, class Site>
PathRunResult run_paths(DomainFactory&& make_domain, const Site& u, real t, long n_paths,
                        std::uint64_t seed) {
    if (n_paths <= 0) throw std::invalid_argument("molchanov: need n_paths > 0");
    ComplexAccumulator acc;
    PathStats stats;
    stats.n_paths = n_paths;
    double total_jumps = 0;
    for (long p = 0; p < n_paths; ++p) {
        rng::SequentialRng rn(rng::derive_key(seed, kMolchanovTag, static_cast<std::uint64_t>(p)));
        auto dom = make_domain(static_cast<std::uint64_t>(p));
        long jumps = 0;
        const std::complex<real> z = one_path(dom, u, t, rn, jumps);
        total_jumps += static_cast<double>(jumps);
        if (z != std::complex<real>{0, 0}) ++stats.n_alive;
        acc.add(z);
    }
    PathRunResult out;
    out.estimate = acc.estimate();
    const real pref = std::exp(static_cast<real>(decltype(make_domain(0))::degree()) * std::abs(t));
    out.estimate.value *= pref;
    out.estimate.stderr_ *= pref;
    stats.mean_jumps = total_jumps / static_cast<double>(n_paths);
    out.stats = stats;
    return out;
}

}  // namespace detail

/// Path-integral estimate of <delta_u, exp(itH) delta_u> for a fixed segment sample.
inline detail::PathRunResult molchanov_estimate(const Segment& window, const PotentialSample& V,
                                                real g, index_t u, real t, long n_paths,
                                                std::uint64_t seed) {
    if (!window.contains(u)) throw std::invalid_argument("molchanov: start site outside window");
    return detail::run_paths(
        [&](std::uint64_t) { return detail::SegmentDomainFixed{window, V, g}; }, u, t, n_paths,
        seed);
}

/// Path-integral estimate for a fixed two-particle sample.
inline detail::PathRunResult molchanov_estimate(const SubSquare& sq, Statistics stat,
                                                const PotentialSample& V,
                                                const InteractionSpec& inter, real g, Site2 u,
                                                real t, long n_paths, std::uint64_t seed) {
    detail::SquareDomainFixed probe{sq, stat, V, inter, g};
    if (!probe.contains(u)) throw std::invalid_argument("molchanov: start site outside domain");
    return detail::run_paths([&](std::uint64_t) { return probe; }, u, t, n_paths, seed);
}

/// Disorder-averaged variant: each path carries its own field replicate, so
/// the mean estimates E<delta_u, exp(itH) delta_u> (the characteristic
/// function of the averaged spectral measure).
inline detail::PathRunResult molchanov_disorder_averaged(const DisorderSpec& spec,
                                                         const Segment& window, index_t u, real t,
                                                         long n_paths) {
    if (!window.contains(u)) throw std::invalid_argument("molchanov: start site outside window");
    return detail::run_paths(
        [&](std::uint64_t rep) {
            return detail::SegmentDomainAveraged{window, spec, rep};
        },
        u, t, n_paths, spec.master_seed);
}

inline detail::PathRunResult molchanov_disorder_averaged(const DisorderSpec& spec,
                                                         const SubSquare& sq, Statistics stat,
                                                         const InteractionSpec& inter, Site2 u,
                                                         real t, long n_paths) {
    detail::SquareDomainAveraged probe{sq, stat, inter, spec, 0};
    if (!probe.contains(u)) throw std::invalid_argument("molchanov: start site outside domain");
    return detail::run_paths(
        [&](std::uint64_t rep) {
            return detail::SquareDomainAveraged{sq, stat, inter, spec, rep};
        },
        u, t, n_paths, spec.master_seed);
}

}  // namespace pairloc
