#pragma once

#include <optional>

#include "gravity/panel.hpp"

namespace gravity {

/// Group allocation shares of one reporter's holdings in a (year, instrument) slice.
struct AllocationRow {
    CountryCode reporter;
    int year = 0;
    Instrument instrument = Instrument::Debt;
    double share_oecd = 0.0;
    double share_asean = 0.0;
    double share_row = 0.0;
    double total_usd_mn = 0.0;
    bool defined = true;  // false when the reporter total is zero
};

using AllocationTable = std::vector<AllocationRow>;

AllocationTable allocation_shares(const Panel& panel, const GroupAssignment& groups,
                                  int year, Instrument instrument);

struct DestinationRank {
    CountryCode counterparty;
    double value_usd_mn = 0.0;
    double share = 0.0;  // of the slice total
};

/// Destinations by summed value across reporters, descending; ties broken by
/// country code.
std::vector<DestinationRank> top_destinations(const Panel& panel, int year,
                                              Instrument instrument, std::size_t k = 10);

struct DiffEntry {
    CountryCode counterparty;
    double diff_usd_mn = 0.0;  // nationality - residency
};

/// Per-reporter restatement diff: full union-of-keys differences plus the
/// top-k by absolute magnitude.
struct DiffRanking {
    CountryCode reporter;
    std::size_t k = 10;
    std::vector<DiffEntry> top;            // sorted by |diff| descending, <= k entries
    std::map<CountryCode, double> diffs;   // complete union diff
};

std::vector<DiffRanking> restatement_diff(const Panel& residency, const Panel& nationality,
                                          int year, std::size_t k = 10,
                                          std::optional<Instrument> instrument = std::nullopt);

/// One haven-to-target attribution under the stated reallocation hypothesis.
struct PassthroughAttribution {
    CountryCode target;
    double target_rise = 0.0;
    double haven_drop_total = 0.0;
    double attributed = 0.0;  // min(haven drops, target rise)
    double residual = 0.0;    // target rise not covered by haven drops
    std::vector<std::pair<CountryCode, double>> haven_drops;  // per-haven trail
};

/// Heuristic back-of-envelope attribution: drops in havens are assumed to
/// reappear as rises in targets. Output is labeled heuristic wherever it is
/// serialized.
std::vector<PassthroughAttribution> passthrough_estimate(
    const DiffRanking& diffs,
    const std::vector<std::pair<CountryCode, CountryCode>>& hypothesis);

}  // namespace gravity
