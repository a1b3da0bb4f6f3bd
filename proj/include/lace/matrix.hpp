#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace lace {

// Row-major so that one row is one cell.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

}  // namespace lace
