#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "gravity/design.hpp"

namespace gravity {

enum class SeparationPolicy : std::uint8_t { DropAndRefit, Error };

struct FitConfig {
    double tol_deviance = 1e-9;  // relative deviance change
    double tol_coef = 1e-8;      // max absolute coefficient step
    double tol_demean = 1e-10;   // max within-group weighted mean
    int max_iter_irls = 200;
    int max_iter_demean = 10000;
    SeparationPolicy separation_policy = SeparationPolicy::DropAndRefit;
};

struct DroppedObservation {
    ObsKey key;
    std::string reason;
};

struct FitResult {
    std::vector<std::string> coef_names;
    Eigen::VectorXd beta;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<DroppedObservation> dropped;

    // estimation sample and solution state, kept for inference
    std::vector<ObsKey> rows;
    Eigen::VectorXd outcome;
    Eigen::VectorXd fitted;       // exp(x beta + FE)
    Eigen::MatrixXd x_demeaned;   // regressors weighted-demeaned at the solution

    double coefficient(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Weighted within-group demeaning across all FE dimensions by cyclic
/// alternating projections, in place. Returns the number of sweeps.
int absorb_fixed_effects(Eigen::MatrixXd& columns, const Eigen::VectorXd& weights,
                         const std::vector<FixedEffectDimension>& layout, double tol,
                         int max_iter);

/// Row indices whose zero outcome is perfectly predicted (separated), found
/// by the iterative least-squares rectifier over regressors and FE. Levels
/// of any FE dimension whose outcomes are all zero are flagged first.
std::vector<std::size_t> detect_separation(const DesignSpec& design,
                                           const FitConfig& config = {});

/// Poisson pseudo maximum likelihood via IRLS with FE absorption.
FitResult fit_ppml(const DesignSpec& design, const FitConfig& config = {});

/// Poisson deviance, with the y*log(y/mu) term zero at y = 0.
double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

}  // namespace gravity
