#pragma once

#include "gravity/estimator.hpp"

namespace gravity {

enum class ClusterDim : std::uint8_t { Pair, Reporter, Counterparty };

std::string to_string(ClusterDim d);
ClusterDim cluster_dim_from_string(const std::string& s);

struct ClusteredVcov {
    Eigen::MatrixXd vcov;  // over retained coefficients
    ClusterDim cluster_dimension = ClusterDim::Pair;
    int n_clusters = 0;
    double dof_correction = 1.0;  // G/(G-1)

    double se(std::size_t i) const;
};

/// Cluster-robust sandwich A^{-1} B A^{-1} with A = sum_i mu_i x_i x_i',
/// B = sum_c s_c s_c' over per-cluster score sums, scaled by G/(G-1).
/// Clusters are reduced in sorted key order, so the result is independent
/// of observation order.
ClusteredVcov cluster_vcov(const FitResult& fit, ClusterDim cluster);

/// Two-sided normal-critical-value interval beta +/- z(level) * se.
std::pair<double, double> confidence_interval(double beta, double se, double level = 0.95);

/// Inverse standard normal CDF (Acklam's rational approximation plus one
/// Halley refinement).
double normal_quantile(double prob);

}  // namespace gravity
