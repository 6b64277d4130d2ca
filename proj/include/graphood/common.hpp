#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace graphood {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t count) {
    if (count == 0) throw std::invalid_argument("uniform_index: empty range");
    std::uniform_int_distribution<std::size_t> dist(0, count - 1);
    return dist(rng);
}

inline Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = scale * dist(rng);
    return m;
}

/// Symmetric Gaussian noise with zero diagonal; entries drawn on the upper
/// triangle and mirrored, so the draw count is n*(n-1)/2.
inline Matrix symmetric_noise(Rng& rng, Eigen::Index n) {
    Matrix m = Matrix::Zero(n, n);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double z = dist(rng);
            m(i, j) = z;
            m(j, i) = z;
        }
    }
    return m;
}

/// Mirror the upper triangle onto the lower one and clear the diagonal.
inline Matrix symmetrize_upper(const Matrix& a) {
    Matrix out = a;
    const Eigen::Index n = a.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) out(j, i) = out(i, j);
    }
    return out;
}

inline bool is_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

}  // namespace graphood
