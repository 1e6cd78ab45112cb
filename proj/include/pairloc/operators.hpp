#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pairloc/disorder.hpp"
#include "pairloc/lattice.hpp"
#include "pairloc/types.hpp"

namespace pairloc {

enum class Statistics { bosonic, fermionic };

/// Dense real-symmetric finite-volume operator together with its basis map.
/// The basis is ordered lexicographically so matrix dumps are reproducible.
template <class Site>
struct Hamiltonian {
    std::vector<Site> basis;
    MatrixXr matrix;

    // provenance
    Statistics statistics = Statistics::fermionic;
    real g = 0;
    index_t interaction_range = 0;

    Eigen::Index dim() const { return matrix.rows(); }

    Eigen::Index index_of(const Site& s) const {
        auto it = std::lower_bound(basis.begin(), basis.end(), s);
        if (it == basis.end() || *it != s)
            throw std::out_of_range("Hamiltonian: site not in basis");
        return static_cast<Eigen::Index>(it - basis.begin());
    }

    bool in_basis(const Site& s) const {
        auto it = std::lower_bound(basis.begin(), basis.end(), s);
        return it != basis.end() && *it == s;
    }
};

using Hamiltonian1 = Hamiltonian<index_t>;
using Hamiltonian2 = Hamiltonian<Site2>;

/// Single-particle operator on a segment: unit hops between neighbors that
/// both lie in the window, diagonal g V(x).
inline Hamiltonian1 build_h1(const Segment& window, const PotentialSample& V, real g) {
    if (!V.covers(window)) throw std::invalid_argument("build_h1: window not covered by sample");
    Hamiltonian1 h;
    h.g = g;
    const Eigen::Index n = static_cast<Eigen::Index>(window.size());
    h.basis.reserve(static_cast<std::size_t>(n));
    for (index_t x = window.a; x <= window.b; ++x) h.basis.push_back(x);
    h.matrix = MatrixXr::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h.matrix(i, i) = g * V.at(window.a + i);
        if (i + 1 < n) {
            h.matrix(i, i + 1) = 1.0;
            h.matrix(i + 1, i) = 1.0;
        }
    }
    return h;
}

/// Interacting two-particle operator on a clipped sub-square. Fermionic
/// statistics removes the diagonal sites from the basis; bosonic statistics
/// keeps them and doubles the hop weight on edges touching the diagonal.
inline Hamiltonian2 build_h2(const SubSquare& sq, const PotentialSample& V,
                             const InteractionSpec& inter, real g, Statistics stat) {
    if (sq.empty()) throw std::invalid_argument("build_h2: empty window");
    if (sq.diff_range().first < 0)
        throw std::invalid_argument("build_h2: window not contained in {x1 >= x2}");
    if (!V.covers(project(sq, Axis::horizontal)) || !V.covers(project(sq, Axis::vertical)))
        throw std::invalid_argument("build_h2: window not covered by sample");

    Hamiltonian2 h;
    h.statistics = stat;
    h.g = g;
    h.interaction_range = inter.d;
    for (const Site2& s : sq.sites()) {
        if (stat == Statistics::fermionic && s.x1 == s.x2) continue;
        h.basis.push_back(s);
    }
    if (h.basis.empty()) throw std::invalid_argument("build_h2: empty basis");

    const Eigen::Index n = static_cast<Eigen::Index>(h.basis.size());
    h.matrix = MatrixXr::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Site2 s = h.basis[static_cast<std::size_t>(i)];
        h.matrix(i, i) = potential_energy_2p(s, V, inter, g);
        const Site2 fwd[2] = {{s.x1 + 1, s.x2}, {s.x1, s.x2 + 1}};
        for (const Site2& t : fwd) {
            if (!h.in_basis(t)) continue;
            const Eigen::Index j = h.index_of(t);
            const real w = (s.x1 == s.x2 || t.x1 == t.x2) ? 2.0 : 1.0;
            h.matrix(i, j) = w;
            h.matrix(j, i) = w;
        }
    }
    return h;
}

/// Non-interacting two-particle operator on a full product basis.
inline Hamiltonian2 build_h2_ni(const Segment& segA, const Segment& segB,
                                const PotentialSample& V, real g) {
    if (!V.covers(segA) || !V.covers(segB))
        throw std::invalid_argument("build_h2_ni: window not covered by sample");
    Hamiltonian2 h;
    h.g = g;
    for (index_t x1 = segA.a; x1 <= segA.b; ++x1)
        for (index_t x2 = segB.a; x2 <= segB.b; ++x2) h.basis.push_back({x1, x2});

    const Eigen::Index n = static_cast<Eigen::Index>(h.basis.size());
    h.matrix = MatrixXr::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Site2 s = h.basis[static_cast<std::size_t>(i)];
        // same summation order as the interacting builder so off-diagonal
        // squares agree entry-for-entry
        h.matrix(i, i) = g * V.at(s.x1) + g * V.at(s.x2);
        const Site2 fwd[2] = {{s.x1 + 1, s.x2}, {s.x1, s.x2 + 1}};
        for (const Site2& t : fwd) {
            if (!h.in_basis(t)) continue;
            const Eigen::Index j = h.index_of(t);
            h.matrix(i, j) = 1.0;
            h.matrix(j, i) = 1.0;
        }
    }
    return h;
}

/// Sorted eigenvalues (used by the tensor-sum identity check below; the full
/// decomposition lives in spectral.hpp).
template <class Site>
VectorXr eigenvalues_only(const Hamiltonian<Site>& h) {
    Eigen::SelfAdjointEigenSolver<MatrixXr> solver(h.matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigenvalues_only: eigensolver failed");
    return solver.eigenvalues();
}

/// Verifies that spec(h2) equals the pairwise sums of spec(h1a) and spec(h1b).
inline bool tensor_sum_check(const Hamiltonian1& h1a, const Hamiltonian1& h1b,
                             const Hamiltonian2& h2, real tol) {
    const Eigen::Index na = h1a.dim(), nb = h1b.dim();
    if (na * nb != h2.dim()) throw std::invalid_argument("tensor_sum_check: dimension mismatch");
    const VectorXr ea = eigenvalues_only(h1a);
    const VectorXr eb = eigenvalues_only(h1b);
    const VectorXr e2 = eigenvalues_only(h2);
    std::vector<real> sums;
    sums.reserve(static_cast<std::size_t>(na * nb));
    for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < nb; ++j) sums.push_back(ea(i) + eb(j));
    std::sort(sums.begin(), sums.end());
    real maxdev = 0;
    for (Eigen::Index k = 0; k < e2.size(); ++k)
        maxdev = std::max(maxdev, std::abs(sums[static_cast<std::size_t>(k)] - e2(k)));
    return maxdev <= tol;
}

/// Debug dump: basis header then an "i j value" triplet per nonzero entry.
template <class Site>
void dump_triplets(const Hamiltonian<Site>& h, std::ostream& os) {
    os << "# basis " << h.basis.size() << "\n";
    for (std::size_t k = 0; k < h.basis.size(); ++k) {
        if constexpr (std::is_same_v<Site, index_t>)
            os << "# " << k << " " << h.basis[k] << "\n";
        else
            os << "# " << k << " " << h.basis[k].x1 << " " << h.basis[k].x2 << "\n";
    }
    for (Eigen::Index i = 0; i < h.dim(); ++i)
        for (Eigen::Index j = 0; j < h.dim(); ++j)
            if (h.matrix(i, j) != 0.0) os << i << " " << j << " " << h.matrix(i, j) << "\n";
}

}  // namespace pairloc
