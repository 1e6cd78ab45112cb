#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pairloc/lattice.hpp"
#include "pairloc/rng.hpp"
#include "pairloc/types.hpp"

namespace pairloc {

enum class DistributionKind { cauchy, gaussian };

/// The IID external field: distribution, amplitude g and the master seed of
/// the site-keyed streams.
struct DisorderSpec {
    DistributionKind kind = DistributionKind::cauchy;
    real param = 1.0;  // cauchy scale / gaussian sigma
    real g = 1.0;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (!(param > 0)) throw std::invalid_argument("DisorderSpec: scale must be positive");
    }
};

/// Parameters (a, b) of the characteristic-function envelope
/// |E exp(itV)| <= b exp(-a|t|).
struct CharBoundParams {
    real a = 0;
    real b = 1;
};

/// Cauchy(scale) satisfies the envelope exactly with (a, b) = (scale, 1).
/// Gaussian(sigma) has |E exp(itV)| = exp(-sigma^2 t^2 / 2); with a = sigma
/// the envelope holds for all t once b = exp(a^2 / (2 sigma^2)) = sqrt(e).
inline CharBoundParams char_bound_params(const DisorderSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case DistributionKind::cauchy:
            return {spec.param, 1.0};
        case DistributionKind::gaussian:
            return {spec.param, std::exp(0.5)};
    }
    throw std::invalid_argument("char_bound_params: unsupported distribution");
}

/// Sup-norm of the single-site probability density.
inline real pdf_sup_norm(const DisorderSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case DistributionKind::cauchy:
            return 1.0 / (std::numbers::pi * spec.param);
        case DistributionKind::gaussian:
            return 1.0 / (spec.param * std::sqrt(2.0 * std::numbers::pi));
    }
    throw std::invalid_argument("pdf_sup_norm: unsupported distribution");
}

namespace detail {
inline constexpr std::uint64_t kPotentialTag = 0x706f74656e7469ULL;  // stream domain tag

inline real draw_site_value(const DisorderSpec& spec, std::uint64_t replicate, index_t x) {
    const std::uint64_t h =
        rng::derive_key(spec.master_seed, kPotentialTag, replicate, rng::zigzag(x));
    return spec.kind == DistributionKind::cauchy ? rng::cauchy_from_u64(h, spec.param)
                                                 : rng::gaussian_from_u64(h, spec.param);
}
}  // namespace detail

/// Value of the field at one site; a pure function of (seed, replicate, x).
inline real potential_value(const DisorderSpec& spec, std::uint64_t replicate, index_t x) {
    return detail::draw_site_value(spec, replicate, x);
}

/// A realization of the field over a 1D window.
struct PotentialSample {
    Segment window;
    std::vector<real> values;  // indexed by x - window.a

    real at(index_t x) const {
        if (!window.contains(x)) throw std::out_of_range("PotentialSample: site outside window");
        return values[static_cast<std::size_t>(x - window.a)];
    }
    bool covers(const Segment& s) const { return window.a <= s.a && s.b <= window.b; }
};

inline PotentialSample sample_potential(const DisorderSpec& spec, const Segment& window,
                                        std::uint64_t replicate) {
    PotentialSample out;
    out.window = window;
    out.values.resize(static_cast<std::size_t>(window.size()));
    for (index_t x = window.a; x <= window.b; ++x)
        out.values[static_cast<std::size_t>(x - window.a)] = potential_value(spec, replicate, x);
    return out;
}

/// Redraws the field outside the frozen segments from a fresh stream keyed by
/// `replicate`; frozen sites keep their values.
inline PotentialSample conditional_resample(const DisorderSpec& spec, const PotentialSample& sample,
                                            const std::vector<Segment>& frozen,
                                            std::uint64_t replicate) {
    for (const Segment& f : frozen)
        if (!sample.covers(f))
            throw std::invalid_argument("conditional_resample: frozen set not contained in window");
    PotentialSample out = sample;
    for (index_t x = sample.window.a; x <= sample.window.b; ++x) {
        bool keep = false;
        for (const Segment& f : frozen)
            if (f.contains(x)) {
                keep = true;
                break;
            }
        if (!keep)
            out.values[static_cast<std::size_t>(x - sample.window.a)] =
                potential_value(spec, replicate, x);
    }
    return out;
}

/// Finite-range two-body interaction U(x) = profile[x1-x2] for 0 <= x1-x2 <= d.
struct InteractionSpec {
    index_t d = 0;
    std::vector<real> profile;  // u_r for r = 0..d

    InteractionSpec() : profile{0.0} {}
    InteractionSpec(index_t d_, std::vector<real> profile_) : d(d_), profile(std::move(profile_)) {
        if (d < 0) throw std::invalid_argument("InteractionSpec: negative range");
        if (profile.size() != static_cast<std::size_t>(d) + 1)
            throw std::invalid_argument("InteractionSpec: profile must have d+1 entries");
    }

    static InteractionSpec none() { return InteractionSpec(0, {0.0}); }
    static InteractionSpec constant(index_t d, real u) {
        return InteractionSpec(d, std::vector<real>(static_cast<std::size_t>(d) + 1, u));
    }

    real at(Site2 u) const {
        const index_t r = u.x1 - u.x2;
        return (r >= 0 && r <= d) ? profile[static_cast<std::size_t>(r)] : 0.0;
    }
};

/// W(u) = U(u) + g V(u1) + g V(u2) for a two-particle configuration.
inline real potential_energy_2p(Site2 u, const PotentialSample& V, const InteractionSpec& inter,
                                real g) {
    if (u.x1 < u.x2) throw std::invalid_argument("potential_energy_2p: site above diagonal");
    return inter.at(u) + g * V.at(u.x1) + g * V.at(u.x2);
}

}  // namespace pairloc
