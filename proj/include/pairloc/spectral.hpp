#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pairloc/operators.hpp"

namespace pairloc {

/// Full orthonormal eigendecomposition of a Hamiltonian, basis-aligned.
template <class Site>
struct Spectral {
    std::vector<Site> basis;
    VectorXr eigenvalues;   // ascending
    MatrixXr eigenvectors;  // column j pairs with eigenvalues(j)

    Eigen::Index dim() const { return eigenvalues.size(); }

    Eigen::Index index_of(const Site& s) const {
        auto it = std::lower_bound(basis.begin(), basis.end(), s);
        if (it == basis.end() || *it != s)
            throw std::out_of_range("Spectral: site not in basis");
        return static_cast<Eigen::Index>(it - basis.begin());
    }

    real spectral_radius() const {
        if (eigenvalues.size() == 0) return 0;
        return std::max(std::abs(eigenvalues(0)), std::abs(eigenvalues(eigenvalues.size() - 1)));
    }
};

using Spectral1 = Spectral<index_t>;
using Spectral2 = Spectral<Site2>;

template <class Site>
Spectral<Site> eig_sym(const Hamiltonian<Site>& h) {
    if (!h.matrix.allFinite()) throw std::invalid_argument("eig_sym: non-finite entries");
    Eigen::SelfAdjointEigenSolver<MatrixXr> solver(h.matrix);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eig_sym: eigensolver failed");
    Spectral<Site> sd;
    sd.basis = h.basis;
    sd.eigenvalues = solver.eigenvalues();
    sd.eigenvectors = solver.eigenvectors();
    return sd;
}

/// dist[E, spec(H)] = min_j |E_j - E|.
template <class Site>
real spectral_dist(const Spectral<Site>& sd, real E) {
    real best = std::numeric_limits<real>::infinity();
    for (Eigen::Index j = 0; j < sd.dim(); ++j) best = std::min(best, std::abs(sd.eigenvalues(j) - E));
    return best;
}

inline constexpr real kResonantGuard = 1e-12;

/// Green's function <(H-E)^{-1} delta_y, delta_u> by eigen-expansion.
template <class Site>
real green_by_index(const Spectral<Site>& sd, Eigen::Index iy, Eigen::Index iu, real E) {
    const real guard = kResonantGuard * std::max<real>(1.0, sd.spectral_radius());
    if (spectral_dist(sd, E) < guard) throw std::domain_error("green: resonant energy");
    real sum = 0;
    for (Eigen::Index j = 0; j < sd.dim(); ++j)
        sum += sd.eigenvectors(iy, j) * sd.eigenvectors(iu, j) / (sd.eigenvalues(j) - E);
    return sum;
}

template <class Site>
real green(const Spectral<Site>& sd, const Site& y, const Site& u, real E) {
    return green_by_index(sd, sd.index_of(y), sd.index_of(u), E);
}

/// Monte Carlo estimate of a complex quantity with its standard error.
struct ComplexEstimate {
    std::complex<real> value{0, 0};
    real stderr_ = 0;
    long n = 0;
};

namespace detail {

class ComplexAccumulator {
  public:
    void add(std::complex<real> z) {
        n_ += 1;
        sum_ += z;
        sumsq_ += std::norm(z);
    }
    ComplexEstimate estimate() const {
        ComplexEstimate e;
        e.n = n_;
        if (n_ == 0) return e;
        e.value = sum_ / static_cast<real>(n_);
        if (n_ > 1) {
            const real var = (sumsq_ - std::norm(sum_) / static_cast<real>(n_)) /
                             static_cast<real>(n_ - 1);
            e.stderr_ = std::sqrt(std::max<real>(var, 0) / static_cast<real>(n_));
        }
        return e;
    }

  private:
    long n_ = 0;
    std::complex<real> sum_{0, 0};
    real sumsq_ = 0;
};

template <class Site>
std::complex<real> khat_single(const Spectral<Site>& sd, Eigen::Index iu, real t) {
    std::complex<real> z{0, 0};
    for (Eigen::Index j = 0; j < sd.dim(); ++j) {
        const real w = sd.eigenvectors(iu, j) * sd.eigenvectors(iu, j);
        z += w * std::polar<real>(1.0, t * sd.eigenvalues(j));
    }
    return z;
}

}  // namespace detail

/// Disorder-averaged characteristic function <delta_u, exp(itH) delta_u> of a
/// single-particle segment operator.
inline ComplexEstimate khat_direct(const DisorderSpec& spec, const Segment& window, real t, long n,
                                   index_t u) {
    detail::ComplexAccumulator acc;
    for (long r = 0; r < n; ++r) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(r));
        const auto sd = eig_sym(build_h1(window, V, spec.g));
        acc.add(detail::khat_single(sd, sd.index_of(u), t));
    }
    return acc.estimate();
}

/// Two-particle variant on a sub-square.
inline ComplexEstimate khat_direct(const DisorderSpec& spec, const SubSquare& sq,
                                   const InteractionSpec& inter, Statistics stat, real t, long n,
                                   Site2 u) {
    const Segment h = project(sq, Axis::horizontal), v = project(sq, Axis::vertical);
    const Segment window(std::min(h.a, v.a), std::max(h.b, v.b));
    detail::ComplexAccumulator acc;
    for (long r = 0; r < n; ++r) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(r));
        const auto sd = eig_sym(build_h2(sq, V, inter, spec.g, stat));
        acc.add(detail::khat_single(sd, sd.index_of(u), t));
    }
    return acc.estimate();
}

/// Histogram estimate of the density of the disorder-averaged spectral measure.
struct SpectralMeasureEstimate {
    std::vector<real> grid;     // bin edges, ascending
    std::vector<real> density;  // estimated density per bin
    long n_samples = 0;

    real total_mass() const {
        real m = 0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) m += density[i] * (grid[i + 1] - grid[i]);
        return m;
    }
};

namespace detail {
template <class Site>
void accumulate_measure(const Spectral<Site>& sd, Eigen::Index iu, const std::vector<real>& grid,
                        std::vector<real>& mass) {
    for (Eigen::Index j = 0; j < sd.dim(); ++j) {
        const real e = sd.eigenvalues(j);
        auto it = std::upper_bound(grid.begin(), grid.end(), e);
        if (it == grid.begin() || it == grid.end()) continue;
        mass[static_cast<std::size_t>(it - grid.begin()) - 1] +=
            sd.eigenvectors(iu, j) * sd.eigenvectors(iu, j);
    }
}
}  // namespace detail

inline SpectralMeasureEstimate spectral_measure(const DisorderSpec& spec, const SubSquare& sq,
                                                const InteractionSpec& inter, Statistics stat,
                                                std::vector<real> grid, long n, Site2 u) {
    if (grid.size() < 2) throw std::invalid_argument("spectral_measure: need at least one bin");
    const Segment h = project(sq, Axis::horizontal), v = project(sq, Axis::vertical);
    const Segment window(std::min(h.a, v.a), std::max(h.b, v.b));
    std::vector<real> mass(grid.size() - 1, 0.0);
    for (long r = 0; r < n; ++r) {
        const PotentialSample V = sample_potential(spec, window, static_cast<std::uint64_t>(r));
        const auto sd = eig_sym(build_h2(sq, V, inter, spec.g, stat));
        detail::accumulate_measure(sd, sd.index_of(u), grid, mass);
    }
    SpectralMeasureEstimate est;
    est.grid = std::move(grid);
    est.n_samples = n;
    est.density.resize(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i)
        est.density[i] = mass[i] / (static_cast<real>(n) * (est.grid[i + 1] - est.grid[i]));
    return est;
}

}  // namespace pairloc
