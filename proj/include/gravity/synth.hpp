#pragma once

#include "gravity/geo.hpp"
#include "gravity/panel.hpp"

namespace gravity {

/// Gravity data-generating process used for estimator validation.
struct DgpConfig {
    int n_reporters = 10;
    int n_counterparties = 20;
    int n_asean = 3;  // leading reporters tagged ASEAN
    int n_oecd = 4;   // next reporters tagged OECD; the rest ROW
    int year_first = 2007;
    int year_last = 2011;
    std::map<Group, double> true_beta = {{Group::ASEAN, -1.0},
                                         {Group::OECD, -0.5},
                                         {Group::ROW, -0.8}};
    double intercept = 10.0;           // base log mean
    double fe_scale_reporter = 0.5;    // sd of reporter-year effects
    double fe_scale_counterparty = 0.5;
    double zero_inflation = 0.0;       // structural-zero probability, [0, 1)
    std::uint64_t seed = 1;
};

struct SynthData {
    Panel panel;
    DistanceTable distances;
    GroupAssignment groups;
    std::map<CountryCode, GeoPoint> cities;
    std::map<std::string, double> truth;  // column name -> true coefficient
};

/// Draw y ~ Poisson(exp(beta_g ln d + delta_it + theta_jt)) on a synthetic
/// country set with cities uniform on the sphere. Fully reproducible from
/// the seed.
SynthData generate_panel(const DgpConfig& config);

}  // namespace gravity
