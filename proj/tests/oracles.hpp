// Independent brute-force reference implementations used only by tests.
// Everything here materializes dense dummy matrices and explicit loops on
// purpose; none of it shares code with the library's estimation path.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gravity/design.hpp"
#include "gravity/types.hpp"

namespace oracle {

// Explicit dummy matrix for the FE layout: every level of the first
// dimension, level 0 dropped for each later dimension (no intercept).
inline Eigen::MatrixXd dummy_matrix(const std::vector<gravity::FixedEffectDimension>& layout,
                                    Eigen::Index n) {
    Eigen::Index q = 0;
    for (std::size_t d = 0; d < layout.size(); ++d)
        q += layout[d].n_levels - (d == 0 ? 0 : 1);
    Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(n, q);
    Eigen::Index col0 = 0;
    for (std::size_t d = 0; d < layout.size(); ++d) {
        const int skip = d == 0 ? -1 : 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int lvl = layout[d].level[static_cast<std::size_t>(i)];
            if (lvl == skip) continue;
            dmat(i, col0 + lvl - (skip == 0 ? 1 : 0)) = 1.0;
        }
        col0 += layout[d].n_levels - (d == 0 ? 0 : 1);
    }
    return dmat;
}

inline double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) > 0.0) dev += y(i) * std::log(y(i) / mu(i)) - (y(i) - mu(i));
        else dev += mu(i);
    }
    return 2.0 * dev;
}

struct DensePoissonFit {
    Eigen::VectorXd coef;    // over [X, dummies]
    Eigen::VectorXd mu;
    Eigen::MatrixXd z;       // the dense design [X, dummies]
    bool converged = false;
};

// Newton-Raphson Poisson regression on the dense design with step halving.
inline DensePoissonFit dense_poisson_newton(const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& y,
                                            const std::vector<gravity::FixedEffectDimension>& layout,
                                            int max_iter = 200, double tol = 1e-12) {
    const Eigen::Index n = y.size();
    Eigen::MatrixXd dmat = dummy_matrix(layout, n);
    Eigen::MatrixXd z(n, x.cols() + dmat.cols());
    z << x, dmat;

    DensePoissonFit fit;
    fit.z = z;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(z.cols());
    Eigen::VectorXd mu = (z * beta).array().exp();
    double dev = poisson_deviance(y, mu);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd h = z.transpose() * mu.asDiagonal() * z;
        Eigen::VectorXd grad = z.transpose() * (y - mu);
        Eigen::VectorXd step = h.colPivHouseholderQr().solve(grad);
        double scale = 1.0;
        Eigen::VectorXd beta_new = beta + step;
        Eigen::VectorXd mu_new = (z * beta_new).array().exp();
        double dev_new = poisson_deviance(y, mu_new);
        for (int hv = 0; hv < 50 && (!std::isfinite(dev_new) || dev_new > dev + 1e-12); ++hv) {
            scale *= 0.5;
            beta_new = beta + scale * step;
            mu_new = (z * beta_new).array().exp();
            dev_new = poisson_deviance(y, mu_new);
        }
        const double move = (beta_new - beta).cwiseAbs().maxCoeff();
        beta = beta_new;
        mu = mu_new;
        dev = dev_new;
        if (move < tol) {
            fit.converged = true;
            break;
        }
    }
    fit.coef = beta;
    fit.mu = mu;
    return fit;
}

// Dense weighted projection residual: columns minus their projection onto
// the dummy span, via a pivoted solve of the normal equations.
inline Eigen::MatrixXd dense_projection_residual(const Eigen::MatrixXd& cols,
                                                 const Eigen::VectorXd& w,
                                                 const std::vector<gravity::FixedEffectDimension>& layout) {
    Eigen::MatrixXd dmat = dummy_matrix(layout, cols.rows());
    Eigen::MatrixXd a = dmat.transpose() * w.asDiagonal() * dmat;
    Eigen::MatrixXd b = dmat.transpose() * w.asDiagonal() * cols;
    Eigen::MatrixXd coef = a.completeOrthogonalDecomposition().solve(b);
    return cols - dmat * coef;
}

// Full dense cluster sandwich at the given fitted values; returns the
// leading x.cols() x x.cols() block.
inline Eigen::MatrixXd dense_cluster_sandwich(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& mu,
                                              const std::vector<gravity::FixedEffectDimension>& layout,
                                              const std::vector<int>& cluster_id,
                                              int n_clusters) {
    const Eigen::Index n = y.size();
    Eigen::MatrixXd dmat = dummy_matrix(layout, n);
    Eigen::MatrixXd z(n, x.cols() + dmat.cols());
    z << x, dmat;

    Eigen::MatrixXd a = z.transpose() * mu.asDiagonal() * z;
    std::vector<Eigen::VectorXd> s(static_cast<std::size_t>(n_clusters),
                                   Eigen::VectorXd::Zero(z.cols()));
    for (Eigen::Index i = 0; i < n; ++i)
        s[static_cast<std::size_t>(cluster_id[static_cast<std::size_t>(i)])] +=
            (y(i) - mu(i)) * z.row(i).transpose();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(z.cols(), z.cols());
    for (const auto& sc : s) meat += sc * sc.transpose();

    Eigen::MatrixXd a_inv = a.completeOrthogonalDecomposition().pseudoInverse();
    const double dof = static_cast<double>(n_clusters) / (n_clusters - 1.0);
    Eigen::MatrixXd v = dof * a_inv * meat * a_inv;
    return v.topLeftCorner(x.cols(), x.cols());
}

// Spherical law of cosines, an algebraically different great-circle route.
inline double law_of_cosines_km(double lat1, double lon1, double lat2, double lon2) {
    const double rad = 3.14159265358979323846 / 180.0;
    double c = std::sin(lat1 * rad) * std::sin(lat2 * rad) +
               std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::cos((lon2 - lon1) * rad);
    c = std::min(1.0, std::max(-1.0, c));
    return 6371.0 * std::acos(c);
}

// Rank by Gaussian elimination with partial pivoting.
inline int gaussian_rank(Eigen::MatrixXd m, double tol = 1e-9) {
    int rank = 0;
    Eigen::Index row = 0;
    for (Eigen::Index col = 0; col < m.cols() && row < m.rows(); ++col) {
        Eigen::Index piv = row;
        for (Eigen::Index r = row + 1; r < m.rows(); ++r)
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        if (std::abs(m(piv, col)) < tol) continue;
        m.row(piv).swap(m.row(row));
        for (Eigen::Index r = row + 1; r < m.rows(); ++r)
            m.row(r) -= (m(r, col) / m(row, col)) * m.row(row);
        ++row;
        ++rank;
    }
    return rank;
}

}  // namespace oracle
