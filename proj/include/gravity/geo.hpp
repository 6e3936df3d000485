#pragma once

#include <functional>
#include <iosfwd>

#include "gravity/panel.hpp"
#include "gravity/types.hpp"

namespace gravity {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, (-180, 180]

    GeoPoint() = default;
    GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
        if (lat < -90.0 || lat > 90.0)
            throw InputError("latitude out of range: " + std::to_string(lat));
        if (lon <= -180.0 || lon > 180.0)
            throw InputError("longitude out of range: " + std::to_string(lon));
    }
};

/// Great-circle distance on a sphere of radius 6371 km, in kilometers.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Symmetric pairwise country-to-country distance lookup.
class DistanceTable {
  public:
    DistanceTable() = default;

    void set(const CountryCode& a, const CountryCode& b, double km);
    double km(const CountryCode& a, const CountryCode& b) const;
    bool has(const CountryCode& a, const CountryCode& b) const;
    std::size_t n_pairs() const { return table_.size(); }
    const std::map<std::pair<CountryCode, CountryCode>, double>& entries() const {
        return table_;
    }

  private:
    // keyed with the lexicographically smaller code first
    std::map<std::pair<CountryCode, CountryCode>, double> table_;
};

/// All unordered pairs over `cities`; self-pairs excluded.
DistanceTable build_distance_table(const std::map<CountryCode, GeoPoint>& cities);

/// `country,lat,lon` file.
std::map<CountryCode, GeoPoint> read_city_file(std::istream& in, char delimiter = ',');

/// Precomputed `reporter,counterparty,dist_km` file (CEPII-style), loaded
/// verbatim and overriding any computation.
DistanceTable read_distance_file(std::istream& in, char delimiter = ',');

void write_distance_table(std::ostream& out, const DistanceTable& table,
                          char delimiter = ',');

/// Counterparty label for the stacked histogram (e.g. {USA, CHN, other}).
using CounterpartyTagger = std::function<std::string(const CountryCode&)>;

struct BinSliceKey {
    Group group;
    int year;
    Instrument instrument;
    auto operator<=>(const BinSliceKey&) const = default;
};

/// Summed USD million by distance bin, per counterparty tag.
struct BinHistogram {
    double bin_width_km = 2000.0;
    int n_bins = 10;
    std::map<std::string, std::vector<double>> sums_by_tag;  // tag -> per-bin totals

    std::vector<double> totals() const;  // per-bin sums over tags
};

/// Bins are left-closed right-open; distances at or beyond n_bins*width
/// clamp into the last bin.
int distance_bin(double km, double bin_width_km = 2000.0, int n_bins = 10);

std::map<BinSliceKey, BinHistogram> bin_holdings(
    const Panel& panel, const DistanceTable& distances, const GroupAssignment& groups,
    const CounterpartyTagger& tagger = nullptr, double bin_width_km = 2000.0,
    int n_bins = 10);

}  // namespace gravity
