#pragma once

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pairloc/types.hpp"

namespace pairloc {

/// Lattice segment [a,b] (inclusive endpoints, intersected with the integers).
struct Segment {
    index_t a = 0;
    index_t b = 0;

    Segment() = default;
    Segment(index_t a_, index_t b_) : a(a_), b(b_) {
        if (a > b) throw std::invalid_argument("Segment: a > b");
    }

    static Segment centered(index_t u, index_t radius) {
        if (radius < 0) throw std::invalid_argument("Segment: negative radius");
        return Segment(u - radius, u + radius);
    }

    index_t size() const { return b - a + 1; }
    bool contains(index_t x) const { return a <= x && x <= b; }
    bool intersects(const Segment& o) const { return a <= o.b && o.a <= b; }

    /// True when the segment has center/radius form (odd site count).
    bool is_centered() const { return ((b - a) & 1) == 0; }
    index_t center() const {
        if (!is_centered()) throw std::invalid_argument("Segment: not centered");
        return (a + b) / 2;
    }
    index_t radius() const {
        if (!is_centered()) throw std::invalid_argument("Segment: not centered");
        return (b - a) / 2;
    }

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Gap between segments in one dimension (0 when they intersect).
inline index_t segment_gap(const Segment& s, const Segment& t) {
    return std::max<index_t>({0, t.a - s.b, s.a - t.b});
}

/// A lattice sub-square: a product of two segments, optionally intersected
/// with the sub-diagonal half-plane {x1 >= x2}.
struct SubSquare {
    Segment hseg;       // x1 window
    Segment vseg;       // x2 window
    bool clip = true;   // intersect with {x1 >= x2}

    SubSquare() = default;
    SubSquare(Segment h, Segment v, bool clip_ = true) : hseg(h), vseg(v), clip(clip_) {}

    static SubSquare centered(Site2 u, index_t radius, bool clip = true) {
        return SubSquare(Segment::centered(u.x1, radius), Segment::centered(u.x2, radius), clip);
    }

    bool contains(Site2 s) const {
        return hseg.contains(s.x1) && vseg.contains(s.x2) && (!clip || s.x1 >= s.x2);
    }

    bool empty() const { return clip && hseg.b < vseg.a; }

    /// Whether the half-plane restriction actually removes box sites.
    bool effectively_clipped() const { return clip && hseg.a < vseg.b; }

    /// Range of x1 - x2 attained over the site set.
    std::pair<index_t, index_t> diff_range() const {
        if (empty()) throw std::invalid_argument("SubSquare: empty window");
        index_t lo = hseg.a - vseg.b;
        if (clip) lo = std::max<index_t>(lo, 0);
        return {lo, hseg.b - vseg.a};
    }

    std::vector<Site2> sites() const {
        if (empty()) throw std::invalid_argument("SubSquare: empty window");
        std::vector<Site2> out;
        out.reserve(static_cast<std::size_t>(hseg.size() * vseg.size()));
        for (index_t x1 = hseg.a; x1 <= hseg.b; ++x1)
            for (index_t x2 = vseg.a; x2 <= vseg.b; ++x2)
                if (!clip || x1 >= x2) out.push_back({x1, x2});
        return out;
    }

    index_t site_count() const {
        if (empty()) return 0;
        index_t n = 0;
        for (index_t x1 = hseg.a; x1 <= hseg.b; ++x1) {
            index_t lo = vseg.a, hi = clip ? std::min(vseg.b, x1) : vseg.b;
            if (hi >= lo) n += hi - lo + 1;
        }
        return n;
    }

    bool has_center() const { return hseg.is_centered() && vseg.is_centered(); }
    Site2 center() const { return {hseg.center(), vseg.center()}; }

    friend bool operator==(const SubSquare&, const SubSquare&) = default;
};

/// Interaction support {z : 0 <= z1 - z2 <= d} around the diagonal.
struct DiagonalStrip {
    index_t d = 0;

    explicit DiagonalStrip(index_t d_) : d(d_) {
        if (d < 0) throw std::invalid_argument("DiagonalStrip: negative range");
    }
    bool contains(Site2 z) const { return z.x1 - z.x2 >= 0 && z.x1 - z.x2 <= d; }
};

enum class Axis { horizontal = 1, vertical = 2 };

/// Coordinate projection actually attained by the (possibly clipped) site set.
inline Segment project(const SubSquare& sq, Axis axis) {
    if (sq.empty()) throw std::invalid_argument("project: empty window");
    if (!sq.clip) return axis == Axis::horizontal ? sq.hseg : sq.vseg;
    if (axis == Axis::horizontal)
        return Segment(std::max(sq.hseg.a, sq.vseg.a), sq.hseg.b);
    return Segment(sq.vseg.a, std::min(sq.vseg.b, sq.hseg.b));
}

enum class DiagonalClass { diagonal, off_diagonal };

inline DiagonalClass classify_diagonal(const SubSquare& sq, const DiagonalStrip& strip) {
    auto [lo, hi] = sq.diff_range();
    return (lo <= strip.d && hi >= 0) ? DiagonalClass::diagonal : DiagonalClass::off_diagonal;
}

/// Sites of sq with at least one nearest neighbor (in Z^2) outside the site set.
inline std::vector<Site2> boundary_sites(const SubSquare& sq) {
    std::vector<Site2> out;
    for (const Site2& s : sq.sites()) {
        const Site2 nbrs[4] = {{s.x1 - 1, s.x2}, {s.x1 + 1, s.x2}, {s.x1, s.x2 - 1}, {s.x1, s.x2 + 1}};
        for (const Site2& n : nbrs) {
            if (!sq.contains(n)) {
                out.push_back(s);
                break;
            }
        }
    }
    return out;
}

namespace detail {

/// Max-norm distance from a point to the site set of a sub-square.
inline index_t point_to_window_dist(Site2 p, const SubSquare& sq) {
    const index_t a = sq.hseg.a, b = sq.hseg.b, c = sq.vseg.a, d = sq.vseg.b;
    index_t r = std::max<index_t>({0, a - p.x1, p.x1 - b, c - p.x2, p.x2 - d});
    if (!sq.effectively_clipped()) return r;
    auto feasible = [&](index_t rr) {
        // nearest representative must satisfy x1' >= x2'
        return std::min(b, p.x1 + rr) >= std::max(c, p.x2 - rr);
    };
    if (feasible(r)) return r;
    index_t lo = r, hi = std::max<index_t>(r, 1);
    while (!feasible(hi)) hi *= 2;
    while (lo + 1 < hi) {
        index_t mid = lo + (hi - lo) / 2;
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline bool windows_intersect(const SubSquare& A, const SubSquare& B) {
    const index_t a = std::max(A.hseg.a, B.hseg.a), b = std::min(A.hseg.b, B.hseg.b);
    const index_t c = std::max(A.vseg.a, B.vseg.a), d = std::min(A.vseg.b, B.vseg.b);
    if (a > b || c > d) return false;
    if (A.clip || B.clip) return b >= c;  // some site of the common box has x1 >= x2
    return true;
}

}  // namespace detail

/// Max-norm set distance between two sub-squares:
/// min over site pairs of max(|dx1|, |dx2|).
inline index_t dist_inf(const SubSquare& A, const SubSquare& B) {
    if (A.empty() || B.empty()) throw std::invalid_argument("dist_inf: empty window");
    if (detail::windows_intersect(A, B)) return 0;
    if (!A.effectively_clipped() && !B.effectively_clipped())
        return std::max(segment_gap(A.hseg, B.hseg), segment_gap(A.vseg, B.vseg));
    // The minimum over one window is attained on its boundary; scan the
    // smaller one and use the O(log) point-to-window distance for the other.
    const bool scan_a = A.site_count() <= B.site_count();
    const SubSquare& S = scan_a ? A : B;
    const SubSquare& T = scan_a ? B : A;
    index_t best = std::numeric_limits<index_t>::max();
    for (const Site2& s : boundary_sites(S))
        best = std::min(best, detail::point_to_window_dist(s, T));
    return best;
}

/// Definition of an L-distant pair: set distance strictly greater than 8L.
inline bool is_l_distant(const SubSquare& A, const SubSquare& B, index_t L) {
    if (L <= 0) throw std::invalid_argument("is_l_distant: L must be positive");
    return dist_inf(A, B) > 8 * L;
}

/// Alternate separation rule surfaced for the singular-count experiments.
enum class DistantRule { eight_l, six_l_plus_2d };

inline bool pairwise_distant(const SubSquare& A, const SubSquare& B, index_t L, index_t d,
                             DistantRule rule) {
    const index_t dist = dist_inf(A, B);
    return rule == DistantRule::eight_l ? dist > 8 * L : dist >= 6 * L + 2 * d;
}

enum class ProjectionCase { case_A_one_projection_free, case_B_all_disjoint, none };

/// Classifies the four attained projections I1, J1, I2, J2 of a pair of
/// sub-squares. case_B (cross-disjoint unions) is checked before case_A so
/// that pairs qualifying for both report the stronger independence property.
inline ProjectionCase projection_disjointness_case(const SubSquare& A, const SubSquare& B) {
    const Segment segs[4] = {project(A, Axis::horizontal), project(A, Axis::vertical),
                             project(B, Axis::horizontal), project(B, Axis::vertical)};
    const Segment &I1 = segs[0], &J1 = segs[1], &I2 = segs[2], &J2 = segs[3];
    const bool cross_disjoint = !I1.intersects(I2) && !I1.intersects(J2) &&
                                !J1.intersects(I2) && !J1.intersects(J2);
    if (cross_disjoint) return ProjectionCase::case_B_all_disjoint;
    for (int i = 0; i < 4; ++i) {
        bool free = true;
        for (int j = 0; j < 4 && free; ++j)
            if (j != i && segs[i].intersects(segs[j])) free = false;
        if (free) return ProjectionCase::case_A_one_projection_free;
    }
    return ProjectionCase::none;
}

}  // namespace pairloc
