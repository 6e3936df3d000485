#pragma once

#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "gravity/geo.hpp"
#include "gravity/panel.hpp"

namespace gravity {

struct RegressorColumn {
    std::string name;
    std::vector<double> values;  // one per design row
};

enum class FeDim : std::uint8_t { ReporterYear, CounterpartyYear, Pair };

std::string to_string(FeDim d);

/// One categorical fixed-effect dimension, encoded as dense level ids.
struct FixedEffectDimension {
    FeDim kind;
    std::vector<std::int32_t> level;  // one per design row, in [0, n_levels)
    std::int32_t n_levels = 0;
};

/// A fully materialized estimation problem: rows, outcome, regressors, and
/// fixed-effect layout. Rows follow the panel's canonical key order.
struct DesignSpec {
    std::vector<ObsKey> rows;
    std::vector<double> outcome;
    std::vector<RegressorColumn> regressors;
    std::vector<FixedEffectDimension> fixed_effects;
    std::optional<int> base_year;
    std::vector<std::string> collinearity_report;  // dropped column names

    std::size_t n_rows() const { return rows.size(); }
    nlohmann::json diagnostics() const;
};

/// Natural log of distance with a 1 km floor.
double log_distance(double km);

/// Dense level encoding for one FE dimension over a row set. Level ids are
/// assigned in sorted key order, so the encoding is row-order independent.
FixedEffectDimension encode_fe_dimension(FeDim kind, const std::vector<ObsKey>& rows);

/// Baseline layout: ln(distance) interacted with the reporter-group
/// dummies, reporter-year and counterparty-year fixed effects, no pair FE.
/// With exclude_singapore a fourth residual-bucket column is added for SGP.
DesignSpec build_baseline_design(const Panel& panel, const DistanceTable& distances,
                                 const GroupAssignment& groups);

/// Time-varying layout: ln(distance) x year x group interactions for every
/// non-base year, with reporter-year, counterparty-year, and pair FE. ROW
/// interactions are off by default.
DesignSpec build_timevarying_design(const Panel& panel, const DistanceTable& distances,
                                    const GroupAssignment& groups, int base_year = 2007,
                                    bool include_row_interactions = false);

/// Drop regressors that vanish after FE absorption (or duplicate earlier
/// columns), listing them in the collinearity report.
DesignSpec detect_collinear(const DesignSpec& design, double tolerance = 1e-7);

}  // namespace gravity
