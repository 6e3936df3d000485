#include "gravity/synth.hpp"

#include <cmath>
#include <random>

#include "gravity/design.hpp"

namespace gravity {

namespace {

std::string synth_code(char prefix, int index) {
    std::string s(3, 'A');
    s[0] = prefix;
    s[1] = static_cast<char>('A' + index / 26);
    s[2] = static_cast<char>('A' + index % 26);
    return s;
}

GeoPoint uniform_city(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lat = std::asin(2.0 * unit(rng) - 1.0) * 180.0 / 3.14159265358979323846;
    double lon = 360.0 * unit(rng) - 180.0;
    if (lon <= -180.0) lon = 180.0;
    return GeoPoint(lat, lon);
}

}  // namespace

SynthData generate_panel(const DgpConfig& config) {
    if (config.n_reporters < 2 || config.n_counterparties < 2)
        throw InputError("DGP needs at least 2 reporters and 2 counterparties");
    if (!(config.zero_inflation >= 0.0 && config.zero_inflation < 1.0))
        throw InputError("zero_inflation must lie in [0, 1)");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SynthData out;
    std::vector<CountryCode> reporters, counterparties;
    std::map<CountryCode, Group> membership;
    for (int i = 0; i < config.n_reporters; ++i) {
        CountryCode c(synth_code('R', i));
        reporters.push_back(c);
        membership[c] = i < config.n_asean              ? Group::ASEAN
                        : i < config.n_asean + config.n_oecd ? Group::OECD
                                                             : Group::ROW;
        out.cities[c] = uniform_city(rng);
    }
    for (int j = 0; j < config.n_counterparties; ++j) {
        CountryCode c(synth_code('C', j));
        counterparties.push_back(c);
        out.cities[c] = uniform_city(rng);
    }
    out.groups = GroupAssignment(std::move(membership), false);
    out.distances = build_distance_table(out.cities);

    const int n_years = config.year_last - config.year_first + 1;
    std::map<std::pair<CountryCode, int>, double> delta, theta;
    for (const auto& r : reporters)
        for (int t = 0; t < n_years; ++t)
            delta[{r, config.year_first + t}] = config.fe_scale_reporter * normal(rng);
    for (const auto& c : counterparties)
        for (int t = 0; t < n_years; ++t)
            theta[{c, config.year_first + t}] = config.fe_scale_counterparty * normal(rng);

    std::vector<Observation> obs;
    for (const auto& r : reporters) {
        const Group g = out.groups.group_of(r);
        const double beta = config.true_beta.at(g);
        for (const auto& c : counterparties) {
            if (r == c) continue;
            const double lnd = log_distance(out.distances.km(r, c));
            for (int t = 0; t < n_years; ++t) {
                const int year = config.year_first + t;
                double value = 0.0;
                if (!(config.zero_inflation > 0.0 && unit(rng) < config.zero_inflation)) {
                    const double mean = std::exp(config.intercept + beta * lnd +
                                                 delta[{r, year}] + theta[{c, year}]);
                    std::poisson_distribution<long> pois(mean);
                    value = static_cast<double>(pois(rng));
                }
                obs.push_back({{r, c, year, Instrument::Debt}, value});
            }
        }
    }
    out.panel = Panel(std::move(obs), {}, Basis::NationalityRestated);
    for (const auto& [g, b] : config.true_beta)
        out.truth["lndist_x_" + to_string(g)] = b;
    return out;
}

}  // namespace gravity
