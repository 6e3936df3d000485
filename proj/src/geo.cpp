#include "gravity/geo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace gravity {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

std::pair<CountryCode, CountryCode> ordered(const CountryCode& a, const CountryCode& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    return out;
}

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = a.lat * kDegToRad;
    const double lat2 = b.lat * kDegToRad;
    const double dlat = (b.lat - a.lat) * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

void DistanceTable::set(const CountryCode& a, const CountryCode& b, double km) {
    if (a == b) throw InputError("self-pair distance for " + a.str());
    if (!(km > 0.0)) throw InputError("non-positive distance for " + a.str() + "-" + b.str());
    table_[ordered(a, b)] = km;
}

double DistanceTable::km(const CountryCode& a, const CountryCode& b) const {
    auto it = table_.find(ordered(a, b));
    if (it == table_.end())
        throw MissingDistanceError("no distance for pair " + a.str() + "-" + b.str());
    return it->second;
}

bool DistanceTable::has(const CountryCode& a, const CountryCode& b) const {
    return table_.count(ordered(a, b)) > 0;
}

DistanceTable build_distance_table(const std::map<CountryCode, GeoPoint>& cities) {
    DistanceTable t;
    for (auto i = cities.begin(); i != cities.end(); ++i)
        for (auto j = std::next(i); j != cities.end(); ++j)
            t.set(i->first, j->first, haversine_km(i->second, j->second));
    return t;
}

std::map<CountryCode, GeoPoint> read_city_file(std::istream& in, char delimiter) {
    std::map<CountryCode, GeoPoint> cities;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto fields = split_line(line, delimiter);
        if (fields.size() != 3)
            throw MalformedRowError("city file line " + std::to_string(line_no) +
                                    ": expected 3 fields");
        if (first) {
            first = false;
            if (fields[0] == "country") continue;
        }
        cities[CountryCode(fields[0])] = GeoPoint(std::stod(fields[1]), std::stod(fields[2]));
    }
    return cities;
}

DistanceTable read_distance_file(std::istream& in, char delimiter) {
    DistanceTable t;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto fields = split_line(line, delimiter);
        if (fields.size() != 3)
            throw MalformedRowError("distance file line " + std::to_string(line_no) +
                                    ": expected 3 fields");
        if (first) {
            first = false;
            if (fields[0] == "reporter") continue;
        }
        t.set(CountryCode(fields[0]), CountryCode(fields[1]), std::stod(fields[2]));
    }
    return t;
}

void write_distance_table(std::ostream& out, const DistanceTable& table, char delimiter) {
    const char d = delimiter;
    out << "reporter" << d << "counterparty" << d << "dist_km\n";
    char buf[64];
    for (const auto& [pair, km] : table.entries()) {
        std::snprintf(buf, sizeof buf, "%.17g", km);
        out << pair.first.str() << d << pair.second.str() << d << buf << '\n';
    }
}

std::vector<double> BinHistogram::totals() const {
    std::vector<double> t(static_cast<std::size_t>(n_bins), 0.0);
    for (const auto& [tag, sums] : sums_by_tag)
        for (int b = 0; b < n_bins; ++b) t[static_cast<std::size_t>(b)] += sums[b];
    return t;
}

int distance_bin(double km, double bin_width_km, int n_bins) {
    int b = static_cast<int>(std::floor(km / bin_width_km));
    return std::clamp(b, 0, n_bins - 1);
}

std::map<BinSliceKey, BinHistogram> bin_holdings(const Panel& panel,
                                                 const DistanceTable& distances,
                                                 const GroupAssignment& groups,
                                                 const CounterpartyTagger& tagger,
                                                 double bin_width_km, int n_bins) {
    std::map<BinSliceKey, BinHistogram> out;
    for (const auto& o : panel.observations()) {
        if (o.value != 0.0 && !distances.has(o.key.reporter, o.key.counterparty))
            throw MissingDistanceError("no distance for pair " + o.key.reporter.str() + "-" +
                                       o.key.counterparty.str());
        if (!distances.has(o.key.reporter, o.key.counterparty)) continue;
        const double d = distances.km(o.key.reporter, o.key.counterparty);
        const int b = distance_bin(d, bin_width_km, n_bins);
        const std::string tag = tagger ? tagger(o.key.counterparty) : std::string("all");
        BinSliceKey slice{groups.group_of(o.key.reporter), o.key.year, o.key.instrument};
        auto& hist = out[slice];
        hist.bin_width_km = bin_width_km;
        hist.n_bins = n_bins;
        auto& sums = hist.sums_by_tag[tag];
        if (sums.empty()) sums.assign(static_cast<std::size_t>(n_bins), 0.0);
        sums[static_cast<std::size_t>(b)] += o.value;
    }
    return out;
}

}  // namespace gravity
