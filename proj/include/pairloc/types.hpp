#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace pairloc {

using real = double;
using index_t = std::int64_t;

using MatrixXr = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXr = Eigen::Matrix<real, Eigen::Dynamic, 1>;

/// A two-particle configuration (x1, x2); the physical domain is x1 >= x2.
struct Site2 {
    index_t x1 = 0;
    index_t x2 = 0;

    friend bool operator==(const Site2&, const Site2&) = default;
    friend auto operator<=>(const Site2&, const Site2&) = default;
};

}  // namespace pairloc
