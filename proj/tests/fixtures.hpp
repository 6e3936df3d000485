// Shared test fixtures: small deterministic panels and geographies.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "gravity/design.hpp"
#include "gravity/geo.hpp"
#include "gravity/panel.hpp"

namespace fixtures {

using namespace gravity;

inline CountryCode cc(const char* s) { return CountryCode(s); }

struct SmallWorld {
    Panel panel;
    DistanceTable distances;
    GroupAssignment groups;
};

// 3 reporters (one per group) x 4 counterparties x 2 years with Poisson-like
// values and a sprinkle of zeros. Fully deterministic.
inline SmallWorld small_world(unsigned seed = 7, double zero_share = 0.25) {
    std::map<CountryCode, GeoPoint> cities = {
        {cc("SGP"), {1.352, 103.820}},   {cc("DEU"), {52.520, 13.405}},
        {cc("BRA"), {-23.551, -46.633}}, {cc("USA"), {40.713, -74.006}},
        {cc("JPN"), {35.676, 139.650}},  {cc("ZAF"), {-26.204, 28.047}},
        {cc("IND"), {19.076, 72.878}},
    };
    std::vector<CountryCode> reporters = {cc("SGP"), cc("DEU"), cc("BRA")};
    std::vector<CountryCode> partners = {cc("USA"), cc("JPN"), cc("ZAF"), cc("IND")};

    SmallWorld w;
    w.distances = build_distance_table(cities);
    w.groups = GroupAssignment({{cc("SGP"), Group::ASEAN},
                                {cc("DEU"), Group::OECD},
                                {cc("BRA"), Group::ROW},
                                {cc("USA"), Group::OECD},
                                {cc("JPN"), Group::OECD},
                                {cc("ZAF"), Group::ROW},
                                {cc("IND"), Group::ROW}},
                               false);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Observation> obs;
    for (const auto& r : reporters)
        for (const auto& c : partners)
            for (int year : {2007, 2008}) {
                double v = 0.0;
                if (unit(rng) >= zero_share)
                    v = std::floor(1.0 + 500.0 * unit(rng));
                obs.push_back({{r, c, year, Instrument::Debt}, v});
            }
    w.panel = Panel(std::move(obs), {}, Basis::NationalityRestated);
    return w;
}

// Same geography, outcomes exactly exponential in the gravity index with no
// noise: y = exp(a + beta_g ln d). PPML fits these data perfectly, so
// within-cell rescalings are absorbed exactly by the fixed effects.
inline SmallWorld noiseless_world() {
    auto w = small_world(7, 0.0);
    std::map<Group, double> beta = {{Group::ASEAN, -1.0},
                                    {Group::OECD, -0.5},
                                    {Group::ROW, -0.8}};
    auto obs = w.panel.observations();
    for (auto& o : obs) {
        const double lnd = std::log(w.distances.km(o.key.reporter, o.key.counterparty));
        const Group g = w.groups.group_of(o.key.reporter);
        o.value = std::exp(10.0 + beta.at(g) * lnd);
    }
    w.panel = Panel(std::move(obs), {}, w.panel.basis());
    return w;
}

inline Panel panel_from_csv(const std::string& csv, Basis basis = Basis::NationalityRestated) {
    std::istringstream ss(csv);
    return ingest_panel(ss, basis);
}

inline Eigen::MatrixXd design_matrix(const DesignSpec& d) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n_rows()),
                      static_cast<Eigen::Index>(d.regressors.size()));
    for (std::size_t j = 0; j < d.regressors.size(); ++j)
        for (std::size_t i = 0; i < d.n_rows(); ++i)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                d.regressors[j].values[i];
    return x;
}

inline Eigen::VectorXd outcome_vector(const DesignSpec& d) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(d.n_rows()));
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        y(static_cast<Eigen::Index>(i)) = d.outcome[i];
    return y;
}

}  // namespace fixtures
