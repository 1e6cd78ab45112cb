#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairloc/spectral.hpp"

namespace pairloc {

/// Exponents of the scale recursion. The working point is
/// p = 6, q = 24, alpha = 3/2, beta = 1/2.
struct MsaParams {
    real p = 6.0;
    real q = 24.0;
    real alpha = 1.5;
    real beta = 0.5;

    void validate() const {
        if (!(p > 0 && q > 0 && alpha > 0 && beta > 0))
            throw std::invalid_argument("MsaParams: exponents must be positive");
    }
};

/// Length/mass sequences L_{k+1} = ceil(L_k^alpha),
/// m_k = m_0 prod_{j=1..k} (1 - 8 L_0^{-j/2}).
struct ScaleSchedule {
    index_t L0 = 0;
    real m0 = 0;
    std::vector<index_t> lengths;  // L_0 .. L_k (may stop early on overflow)
    std::vector<real> masses;      // m_0 .. m_kmax
    bool truncated = false;
    std::vector<std::string> warnings;

    real mass_product(std::size_t k) const { return masses.at(k) / m0; }
    real m_infinity_estimate() const { return masses.back(); }
};

namespace detail {

inline index_t isqrt_floor(unsigned __int128 v) {
    index_t r = static_cast<index_t>(std::sqrt(static_cast<long double>(v)));
    while (static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(r) > v) --r;
    while (static_cast<unsigned __int128>(r + 1) * static_cast<unsigned __int128>(r + 1) <= v) ++r;
    return r;
}

/// Smallest integer >= L^alpha, or nullopt when it would leave the int64 range.
inline std::optional<index_t> next_scale(index_t L, real alpha) {
    constexpr real kMax = 4.0e18;
    if (alpha * std::log(static_cast<real>(L)) > std::log(kMax)) return std::nullopt;
    if (alpha == 1.5) {
        // exact: smallest n with n^2 >= L^3
        const unsigned __int128 cube = static_cast<unsigned __int128>(L) *
                                       static_cast<unsigned __int128>(L) *
                                       static_cast<unsigned __int128>(L);
        index_t n = isqrt_floor(cube);
        if (static_cast<unsigned __int128>(n) * static_cast<unsigned __int128>(n) < cube) ++n;
        return n;
    }
    const long double x = powl(static_cast<long double>(L), static_cast<long double>(alpha));
    auto c = static_cast<index_t>(floorl(x));
    return (static_cast<long double>(c) >= x) ? c : c + 1;
}

}  // namespace detail

inline ScaleSchedule schedule(index_t L0, real m0, const MsaParams& params, int k_max) {
    params.validate();
    if (L0 < 2 || !(m0 > 0)) throw std::invalid_argument("schedule: need L0 >= 2 and m0 > 0");
    if (k_max < 0) throw std::invalid_argument("schedule: k_max must be nonnegative");
    ScaleSchedule s;
    s.L0 = L0;
    s.m0 = m0;
    if (L0 < 256) s.warnings.push_back("L0 below the recommended 256");
    if (m0 <= 2) s.warnings.push_back("m0 below the recommended bound m0 > 2");
    if (m0 * static_cast<real>(L0) < std::pow(static_cast<real>(L0), params.beta))
        s.warnings.push_back("initial decay weaker than the resonance threshold");

    s.lengths.push_back(L0);
    s.masses.push_back(m0);
    real mass = m0;
    for (int k = 1; k <= k_max; ++k) {
        if (!s.truncated) {
            auto next = detail::next_scale(s.lengths.back(), params.alpha);
            if (next)
                s.lengths.push_back(*next);
            else
                s.truncated = true;
        }
        mass *= 1.0 - 8.0 * std::pow(static_cast<real>(L0), -0.5 * static_cast<real>(k));
        s.masses.push_back(mass);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Classifiers
// ---------------------------------------------------------------------------

struct ResonanceResult {
    bool resonant = false;
    real dist = 0;       // witness
    real threshold = 0;  // exp(-L^beta)
};

template <class Site>
ResonanceResult classify_resonant(const Spectral<Site>& sd, real E, index_t L, real beta) {
    if (L < 1) throw std::invalid_argument("classify_resonant: L must be >= 1");
    ResonanceResult r;
    r.threshold = std::exp(-std::pow(static_cast<real>(L), beta));
    r.dist = spectral_dist(sd, E);
    r.resonant = r.dist < r.threshold;
    return r;
}

struct SingularityResult {
    bool singular = false;
    real max_abs_green = 0;  // witness
    real threshold = 0;      // exp(-m L)
    Eigen::Index argmax_index = -1;
};

namespace detail {

/// Largest |G(center, u; E)| over the given boundary indices; +inf when E is
/// inside the resonant guard (the resolvent blows up there).
template <class Site>
std::pair<real, Eigen::Index> max_abs_boundary_green(const Spectral<Site>& sd, Eigen::Index ic,
                                                     const std::vector<Eigen::Index>& boundary,
                                                     real E) {
    const real guard = kResonantGuard * std::max<real>(1.0, sd.spectral_radius());
    if (spectral_dist(sd, E) < guard)
        return {std::numeric_limits<real>::infinity(), boundary.empty() ? -1 : boundary.front()};
    real best = 0;
    Eigen::Index arg = -1;
    for (Eigen::Index iu : boundary) {
        const real gval = std::abs(green_by_index(sd, ic, iu, E));
        if (gval > best || arg < 0) {
            best = gval;
            arg = iu;
        }
    }
    return {best, arg};
}

template <class Site>
std::vector<Eigen::Index> basis_indices_of(const Spectral<Site>& sd,
                                           const std::vector<Site>& sites) {
    std::vector<Eigen::Index> out;
    out.reserve(sites.size());
    for (const Site& s : sites) {
        auto it = std::lower_bound(sd.basis.begin(), sd.basis.end(), s);
        if (it != sd.basis.end() && *it == s)
            out.push_back(static_cast<Eigen::Index>(it - sd.basis.begin()));
    }
    return out;
}

}  // namespace detail

/// Two-particle singularity test: max |G(center, u; E)| over the inner vertex
/// boundary against exp(-m L). Boundary sites absent from the basis (the
/// diagonal under fermionic statistics) carry zero amplitude and are skipped.
inline SingularityResult classify_singular(const Spectral2& sd, Site2 center, const SubSquare& sq,
                                           real E, real m, index_t L, bool throw_on_resonant = true) {
    SingularityResult r;
    r.threshold = std::exp(-m * static_cast<real>(L));
    auto boundary = detail::basis_indices_of(sd, boundary_sites(sq));
    auto [best, arg] = detail::max_abs_boundary_green(sd, sd.index_of(center), boundary, E);
    if (std::isinf(best) && throw_on_resonant)
        throw std::domain_error("classify_singular: resonant energy");
    r.max_abs_green = best;
    r.argmax_index = arg;
    r.singular = !(best <= r.threshold);
    return r;
}

/// Single-particle variant: boundary is the two endpoints x +- L.
inline SingularityResult classify_singular(const Spectral1& sd, index_t center,
                                           const Segment& window, real E, real m, index_t L,
                                           bool throw_on_resonant = true) {
    SingularityResult r;
    r.threshold = std::exp(-m * static_cast<real>(L));
    std::vector<Eigen::Index> boundary =
        detail::basis_indices_of(sd, std::vector<index_t>{window.a, window.b});
    auto [best, arg] = detail::max_abs_boundary_green(sd, sd.index_of(center), boundary, E);
    if (std::isinf(best) && throw_on_resonant)
        throw std::domain_error("classify_singular: resonant energy");
    r.max_abs_green = best;
    r.argmax_index = arg;
    r.singular = !(best <= r.threshold);
    return r;
}

struct TunnelingResult {
    bool tunneling = false;
    real sum = 0;        // witness
    real threshold = 0;  // exp(-m L)
};

/// Eigenfunction correlation sum between the center and both endpoints of a
/// centered segment: sum_j sum_{y = x +- L} |psi_j(x) psi_j(y)|.
inline TunnelingResult classify_tunneling(const Spectral1& sd, const Segment& window, real m) {
    if (!window.is_centered())
        throw std::invalid_argument("classify_tunneling: window not centered");
    const index_t L = window.radius();
    if (L < 1) throw std::invalid_argument("classify_tunneling: radius must be >= 1");
    TunnelingResult r;
    r.threshold = std::exp(-m * static_cast<real>(L));
    const Eigen::Index ic = sd.index_of(window.center());
    const Eigen::Index ia = sd.index_of(window.a);
    const Eigen::Index ib = sd.index_of(window.b);
    for (Eigen::Index j = 0; j < sd.dim(); ++j) {
        const real pc = std::abs(sd.eigenvectors(ic, j));
        r.sum += pc * (std::abs(sd.eigenvectors(ia, j)) + std::abs(sd.eigenvectors(ib, j)));
    }
    r.tunneling = !(r.sum <= r.threshold);
    return r;
}

// ---------------------------------------------------------------------------
// Mass arithmetic
// ---------------------------------------------------------------------------

enum class MassDegradeVariant { lemma31, lemma43, eq53 };

inline real mass_degrade(real m, index_t L, real beta, MassDegradeVariant variant) {
    if (!(m > 0)) throw std::invalid_argument("mass_degrade: m must be positive");
    const real Lr = static_cast<real>(L);
    switch (variant) {
        case MassDegradeVariant::lemma31:
            return m - std::pow(Lr, -(1.0 - beta));
        case MassDegradeVariant::lemma43:
            return m - 3.0 * std::pow(Lr, -(1.0 - beta));
        case MassDegradeVariant::eq53:
            return m - (2.0 * std::log(2.0 * Lr + 1.0) + std::pow(Lr, beta)) / Lr;
    }
    throw std::invalid_argument("mass_degrade: unknown variant");
}

// ---------------------------------------------------------------------------
// Deterministic implication checks
// ---------------------------------------------------------------------------

struct ImplicationOutcome {
    bool hypotheses_hold = false;
    bool conclusion_holds = false;
    real m_prime = 0;
    ResonanceResult resonance;
    SingularityResult singularity;
    TunnelingResult tunneling_h;  // horizontal projection (or the segment itself)
    TunnelingResult tunneling_v;  // vertical projection (square variant only)

    bool holds() const { return !hypotheses_hold || conclusion_holds; }
};

/// Segment variant: E-NR and m-NT (m >= 2) imply (E, m - L^{beta-1})-NS.
inline ImplicationOutcome check_implication_nr_nt_ns(const Segment& window,
                                                     const PotentialSample& V, real g, real E,
                                                     real m, real beta) {
    if (!(m >= 2)) throw std::invalid_argument("check_implication: segment variant needs m >= 2");
    if (!window.is_centered()) throw std::invalid_argument("check_implication: window not centered");
    const index_t L = window.radius();
    ImplicationOutcome out;
    out.m_prime = mass_degrade(m, L, beta, MassDegradeVariant::lemma31);
    const auto sd = eig_sym(build_h1(window, V, g));
    out.resonance = classify_resonant(sd, E, L, beta);
    out.tunneling_h = classify_tunneling(sd, window, m);
    out.hypotheses_hold = !out.resonance.resonant && !out.tunneling_h.tunneling;
    if (out.hypotheses_hold) {
        out.singularity = classify_singular(sd, window.center(), window, E, out.m_prime, L, false);
        out.conclusion_holds = !out.singularity.singular;
    }
    return out;
}

/// Off-diagonal-square variant: the square E-NR plus both 1D projections m-NT
/// imply (E, m - 3 L^{beta-1})-NS.
inline ImplicationOutcome check_implication_nr_nt_ns(const SubSquare& sq, const DiagonalStrip& strip,
                                                     const PotentialSample& V, real g, real E,
                                                     real m, real beta) {
    if (!sq.has_center()) throw std::invalid_argument("check_implication: square not centered");
    if (classify_diagonal(sq, strip) != DiagonalClass::off_diagonal)
        throw std::invalid_argument("check_implication: square variant needs an off-diagonal square");
    const index_t L = sq.hseg.radius();
    ImplicationOutcome out;
    out.m_prime = mass_degrade(m, L, beta, MassDegradeVariant::lemma43);
    const Segment ph = project(sq, Axis::horizontal), pv = project(sq, Axis::vertical);
    const auto sd2 = eig_sym(build_h2(sq, V, InteractionSpec::none(), g, Statistics::fermionic));
    out.resonance = classify_resonant(sd2, E, L, beta);
    out.tunneling_h = classify_tunneling(eig_sym(build_h1(ph, V, g)), ph, m);
    out.tunneling_v = classify_tunneling(eig_sym(build_h1(pv, V, g)), pv, m);
    out.hypotheses_hold =
        !out.resonance.resonant && !out.tunneling_h.tunneling && !out.tunneling_v.tunneling;
    if (out.hypotheses_hold) {
        out.singularity = classify_singular(sd2, sq.center(), sq, E, out.m_prime, L, false);
        out.conclusion_holds = !out.singularity.singular;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Singular sub-square counting
// ---------------------------------------------------------------------------

enum class CountMode { diagonal_pairwise_distant, off_diagonal_disjoint, all_disjoint };

struct CountOptions {
    CountMode mode = CountMode::diagonal_pairwise_distant;
    DistantRule rule = DistantRule::eight_l;
    real beta = 0.5;
};

/// Greedy-maximal number of singular sub-squares of radius L_small inside
/// sq_big, compatible in the sense of the mode (pairwise L-distant for
/// diagonal ones, pairwise window-disjoint otherwise). Centers are scanned
/// lexicographically; under fermionic statistics centers on the diagonal have
/// no basis vector and are skipped.
inline int count_singular_subsquares(const SubSquare& sq_big, const PotentialSample& V,
                                     const InteractionSpec& inter, real g, Statistics stat, real E,
                                     real m, index_t L_small, const CountOptions& opt) {
    if (!sq_big.has_center()) throw std::invalid_argument("count: big square not centered");
    const index_t L_big = sq_big.hseg.radius();
    if (L_small >= L_big) throw std::invalid_argument("count: L_small must be < big radius");
    const DiagonalStrip strip(inter.d);
    std::vector<SubSquare> accepted;
    int count = 0;
    for (index_t u1 = sq_big.hseg.a + L_small; u1 <= sq_big.hseg.b - L_small; ++u1) {
        for (index_t u2 = sq_big.vseg.a + L_small; u2 <= sq_big.vseg.b - L_small; ++u2) {
            if (u1 < u2) continue;                                      // stay in {x1 >= x2}
            if (stat == Statistics::fermionic && u1 == u2) continue;    // center must be in basis
            const SubSquare cand = SubSquare::centered({u1, u2}, L_small, sq_big.clip);
            if (cand.empty()) continue;
            const bool diag = classify_diagonal(cand, strip) == DiagonalClass::diagonal;
            if (opt.mode == CountMode::diagonal_pairwise_distant && !diag) continue;
            if (opt.mode == CountMode::off_diagonal_disjoint && diag) continue;
            bool compatible = true;
            for (const SubSquare& acc : accepted) {
                const bool ok = opt.mode == CountMode::diagonal_pairwise_distant
                                    ? pairwise_distant(cand, acc, L_small, inter.d, opt.rule)
                                    : dist_inf(cand, acc) > 0;
                if (!ok) {
                    compatible = false;
                    break;
                }
            }
            if (!compatible) continue;
            const auto sd = eig_sym(build_h2(cand, V, inter, g, stat));
            const auto sing = classify_singular(sd, {u1, u2}, cand, E, m, L_small, false);
            if (sing.singular) {
                accepted.push_back(cand);
                ++count;
            }
        }
    }
    return count;
}

/// Large-square implication (the resolvent-expansion step): E-NR plus at most
/// K disjoint (E, m)-S sub-squares of radius L_small imply (E, m_next)-NS.
/// Unlike the other two checks this one only holds asymptotically in L, so
/// violations at desk scale are data, not errors.
inline ImplicationOutcome check_implication_bounded_count(const SubSquare& sq_big,
                                                          const PotentialSample& V,
                                                          const InteractionSpec& inter, real g,
                                                          Statistics stat, real E, real m,
                                                          real m_next, index_t L_small, int K,
                                                          const CountOptions& opt) {
    if (!sq_big.has_center()) throw std::invalid_argument("check: big square not centered");
    const index_t L_big = sq_big.hseg.radius();
    ImplicationOutcome out;
    out.m_prime = m_next;
    const auto sd = eig_sym(build_h2(sq_big, V, inter, g, stat));
    out.resonance = classify_resonant(sd, E, L_big, opt.beta);
    CountOptions copt = opt;
    copt.mode = CountMode::all_disjoint;
    const int n_sing = count_singular_subsquares(sq_big, V, inter, g, stat, E, m, L_small, copt);
    out.hypotheses_hold = !out.resonance.resonant && n_sing <= K;
    if (out.hypotheses_hold) {
        out.singularity = classify_singular(sd, sq_big.center(), sq_big, E, m_next, L_big, false);
        out.conclusion_holds = !out.singularity.singular;
    }
    return out;
}

/// Site scan behind the large-|g| singularity bound: some site of a singular
/// sub-square has |W(u) - E| below the scan threshold tau (printed default
/// exp(mL) + 4).
inline bool resonant_site_exists(const SubSquare& sq, const PotentialSample& V,
                                 const InteractionSpec& inter, real g, real E, real tau) {
    for (const Site2& u : sq.sites())
        if (std::abs(potential_energy_2p(u, V, inter, g) - E) < tau) return true;
    return false;
}

inline real lemma45_default_tau(real m, index_t L) {
    return std::exp(m * static_cast<real>(L)) + 4.0;
}

// ---------------------------------------------------------------------------
// Eigenfunction mass estimation
// ---------------------------------------------------------------------------

struct MassFit {
    real m_hat = 0;
    real r2 = 0;
    long n_points = 0;
    bool underflow_flagged = false;
};

namespace detail {
inline index_t site_distance_sq(index_t a, index_t b) { return (a - b) * (a - b); }
inline index_t site_distance_sq(Site2 a, Site2 b) {
    return (a.x1 - b.x1) * (a.x1 - b.x1) + (a.x2 - b.x2) * (a.x2 - b.x2);
}
}  // namespace detail

/// Least-squares fit of log|psi| against Euclidean distance from the center
/// over radii in [r_lo, r_hi]; m_hat is the negated slope. The decay-rate
/// definition is a limsup, so each exact-distance class contributes its
/// largest amplitude (oscillatory states have structural zeros that would
/// otherwise dominate the log fit).
template <class Site>
MassFit estimate_mass(const Spectral<Site>& sd, Eigen::Index eig_index, const Site& center,
                      real r_lo, real r_hi) {
    if (eig_index < 0 || eig_index >= sd.dim())
        throw std::out_of_range("estimate_mass: eigenvector index");
    constexpr real kFloor = 1e-300;
    MassFit fit;
    const Eigen::Index ic = sd.index_of(center);
    std::map<index_t, real> shell_max;  // squared distance -> max |psi|
    for (Eigen::Index i = 0; i < sd.dim(); ++i) {
        const index_t d2 = detail::site_distance_sq(sd.basis[static_cast<std::size_t>(i)],
                                                    sd.basis[static_cast<std::size_t>(ic)]);
        const real r = std::sqrt(static_cast<real>(d2));
        if (r < r_lo || r > r_hi) continue;
        const real a = std::abs(sd.eigenvectors(i, eig_index));
        auto [it, inserted] = shell_max.try_emplace(d2, a);
        if (!inserted && a > it->second) it->second = a;
    }
    real sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    long n = 0;
    for (const auto& [d2, amp] : shell_max) {
        const real r = std::sqrt(static_cast<real>(d2));
        real a = amp;
        if (a < kFloor) {
            a = kFloor;
            fit.underflow_flagged = true;
        }
        const real y = std::log(a);
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
        syy += y * y;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("estimate_mass: fewer than two fit points");
    const real den = static_cast<real>(n) * sxx - sx * sx;
    if (den == 0) throw std::invalid_argument("estimate_mass: degenerate distances");
    const real slope = (static_cast<real>(n) * sxy - sx * sy) / den;
    const real intercept = (sy - slope * sx) / static_cast<real>(n);
    const real ss_tot = syy - sy * sy / static_cast<real>(n);
    const real ss_res = syy - intercept * sy - slope * sxy;
    fit.m_hat = -slope;
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.n_points = n;
    return fit;
}

template <class Site>
Eigen::Index eigen_index_nearest(const Spectral<Site>& sd, real E) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < sd.dim(); ++j)
        if (std::abs(sd.eigenvalues(j) - E) < std::abs(sd.eigenvalues(best) - E)) best = j;
    return best;
}

template <class Site>
Eigen::Index argmax_amplitude(const Spectral<Site>& sd, Eigen::Index eig_index) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < sd.dim(); ++i)
        if (std::abs(sd.eigenvectors(i, eig_index)) > std::abs(sd.eigenvectors(best, eig_index)))
            best = i;
    return best;
}

// ---------------------------------------------------------------------------
// Energy grids for the quantified events
// ---------------------------------------------------------------------------

struct EnergyInterval {
    real lo = 0;
    real hi = 0;
};

inline real default_grid_spacing(index_t L, real beta) {
    return std::exp(-std::pow(static_cast<real>(L), beta)) / 10.0;
}

inline std::vector<real> energy_grid(const EnergyInterval& I, real spacing) {
    if (!(spacing > 0)) throw std::invalid_argument("energy_grid: spacing must be positive");
    if (I.hi < I.lo) throw std::invalid_argument("energy_grid: empty interval");
    std::vector<real> out;
    const auto steps = static_cast<long>(std::floor((I.hi - I.lo) / spacing));
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (long i = 0; i <= steps; ++i) out.push_back(I.lo + static_cast<real>(i) * spacing);
    return out;
}

}  // namespace pairloc
