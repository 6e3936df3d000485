#include "gravity/design.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gravity/estimator.hpp"

namespace gravity {

std::string to_string(FeDim d) {
    switch (d) {
        case FeDim::ReporterYear: return "reporter_year";
        case FeDim::CounterpartyYear: return "counterparty_year";
        case FeDim::Pair: return "pair";
    }
    return "?";
}

double log_distance(double km) { return std::log(std::max(km, 1.0)); }

FixedEffectDimension encode_fe_dimension(FeDim kind, const std::vector<ObsKey>& rows) {
    auto key_of = [kind](const ObsKey& k) -> std::tuple<std::string, std::string, int> {
        switch (kind) {
            case FeDim::ReporterYear: return {k.reporter.str(), "", k.year};
            case FeDim::CounterpartyYear: return {k.counterparty.str(), "", k.year};
            case FeDim::Pair: return {k.reporter.str(), k.counterparty.str(), 0};
        }
        return {};
    };
    std::map<std::tuple<std::string, std::string, int>, std::int32_t> ids;
    for (const auto& r : rows) ids.emplace(key_of(r), 0);
    std::int32_t next = 0;
    for (auto& [key, id] : ids) id = next++;

    FixedEffectDimension dim;
    dim.kind = kind;
    dim.n_levels = next;
    dim.level.reserve(rows.size());
    for (const auto& r : rows) dim.level.push_back(ids.at(key_of(r)));
    return dim;
}

namespace {

std::vector<ObsKey> estimation_rows(const Panel& panel) {
    std::vector<ObsKey> rows;
    for (const auto& o : panel.observations())
        if (o.key.instrument != Instrument::Total) rows.push_back(o.key);
    return rows;
}

std::vector<double> outcome_for(const Panel& panel, const std::vector<ObsKey>& rows) {
    std::vector<double> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(panel.find(r)->value);
    return y;
}

std::string column_name(Group g, std::optional<int> year = std::nullopt) {
    std::string n = "lndist_x_" + to_string(g);
    if (year) n += "_" + std::to_string(*year);
    return n;
}

}  // namespace

DesignSpec build_baseline_design(const Panel& panel, const DistanceTable& distances,
                                 const GroupAssignment& groups) {
    DesignSpec d;
    d.rows = estimation_rows(panel);
    d.outcome = outcome_for(panel, d.rows);

    std::vector<Group> cols = {Group::ASEAN, Group::OECD, Group::ROW};
    if (groups.exclude_singapore()) cols.push_back(Group::SGP_BUCKET);

    for (Group g : cols)
        d.regressors.push_back({column_name(g), std::vector<double>(d.rows.size(), 0.0)});
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto& key = d.rows[i];
        const Group g = groups.group_of(key.reporter);
        const double lnd = log_distance(distances.km(key.reporter, key.counterparty));
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (cols[c] == g) d.regressors[c].values[i] = lnd;
    }
    d.fixed_effects.push_back(encode_fe_dimension(FeDim::ReporterYear, d.rows));
    d.fixed_effects.push_back(encode_fe_dimension(FeDim::CounterpartyYear, d.rows));
    return d;
}

DesignSpec build_timevarying_design(const Panel& panel, const DistanceTable& distances,
                                    const GroupAssignment& groups, int base_year,
                                    bool include_row_interactions) {
    DesignSpec d;
    d.rows = estimation_rows(panel);
    d.outcome = outcome_for(panel, d.rows);
    d.base_year = base_year;

    std::set<int> years;
    for (const auto& r : d.rows) years.insert(r.year);
    if (years.size() < 2)
        throw SingleYearPanelError("time-varying design needs at least two years");

    std::vector<Group> gcols = {Group::ASEAN, Group::OECD};
    if (include_row_interactions) gcols.push_back(Group::ROW);

    std::vector<std::pair<int, Group>> cols;
    for (int y : years) {
        if (y == base_year) continue;
        for (Group g : gcols) cols.emplace_back(y, g);
    }
    for (const auto& [y, g] : cols)
        d.regressors.push_back({column_name(g, y), std::vector<double>(d.rows.size(), 0.0)});

    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto& key = d.rows[i];
        if (key.year == base_year) continue;
        const Group g = groups.group_of(key.reporter);
        const double lnd = log_distance(distances.km(key.reporter, key.counterparty));
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (cols[c].first == key.year && cols[c].second == g)
                d.regressors[c].values[i] = lnd;
    }
    d.fixed_effects.push_back(encode_fe_dimension(FeDim::ReporterYear, d.rows));
    d.fixed_effects.push_back(encode_fe_dimension(FeDim::CounterpartyYear, d.rows));
    d.fixed_effects.push_back(encode_fe_dimension(FeDim::Pair, d.rows));
    return d;
}

DesignSpec detect_collinear(const DesignSpec& design, double tolerance) {
    const auto n = static_cast<Eigen::Index>(design.n_rows());
    const auto p = static_cast<Eigen::Index>(design.regressors.size());
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            x(i, j) = design.regressors[static_cast<std::size_t>(j)]
                          .values[static_cast<std::size_t>(i)];

    Eigen::VectorXd orig_norm(p);
    for (Eigen::Index j = 0; j < p; ++j) orig_norm(j) = x.col(j).norm();

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    absorb_fixed_effects(x, ones, design.fixed_effects, 1e-12, 100000);

    // sequential projection on previously kept columns catches duplicates
    std::vector<Eigen::Index> kept;
    std::vector<bool> drop(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd r = x.col(j);
        for (Eigen::Index k : kept) {
            const double denom = x.col(k).squaredNorm();
            if (denom > 0.0) r -= (x.col(k).dot(r) / denom) * x.col(k);
        }
        if (orig_norm(j) == 0.0 || r.norm() < tolerance * orig_norm(j)) {
            drop[static_cast<std::size_t>(j)] = true;
        } else {
            x.col(j) = r;
            kept.push_back(j);
        }
    }
    if (kept.empty())
        throw AllColumnsDroppedError("every regressor is collinear with the fixed effects");

    DesignSpec out = design;
    out.regressors.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& col = design.regressors[static_cast<std::size_t>(j)];
        if (drop[static_cast<std::size_t>(j)])
            out.collinearity_report.push_back(col.name);
        else
            out.regressors.push_back(col);
    }
    return out;
}

nlohmann::json DesignSpec::diagnostics() const {
    nlohmann::json j;
    j["n_rows"] = rows.size();
    j["columns"] = nlohmann::json::array();
    for (const auto& c : regressors) j["columns"].push_back(c.name);
    j["fixed_effects"] = nlohmann::json::array();
    for (const auto& fe : fixed_effects)
        j["fixed_effects"].push_back({{"dimension", to_string(fe.kind)},
                                      {"n_levels", fe.n_levels}});
    if (base_year) j["base_year"] = *base_year;
    j["dropped_collinear"] = collinearity_report;
    return j;
}

}  // namespace gravity
