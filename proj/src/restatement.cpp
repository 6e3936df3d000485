#include "gravity/restatement.hpp"

#include <algorithm>

namespace gravity {

AllocationTable allocation_shares(const Panel& panel, const GroupAssignment& groups,
                                  int year, Instrument instrument) {
    std::map<CountryCode, std::array<double, 3>> sums;  // OECD, ASEAN, ROW
    std::map<CountryCode, double> totals;
    for (const auto& o : panel.observations()) {
        if (o.key.year != year || o.key.instrument != instrument) continue;
        auto& s = sums[o.key.reporter];
        // counterparty group; SGP bucket only applies to reporters
        Group g = Group::ROW;
        auto it = groups.membership().find(o.key.counterparty);
        if (it != groups.membership().end()) g = it->second;
        switch (g) {
            case Group::OECD: s[0] += o.value; break;
            case Group::ASEAN: s[1] += o.value; break;
            default: s[2] += o.value; break;
        }
        totals[o.key.reporter] += o.value;
    }

    AllocationTable table;
    for (const auto& [reporter, s] : sums) {
        AllocationRow row;
        row.reporter = reporter;
        row.year = year;
        row.instrument = instrument;
        row.total_usd_mn = totals[reporter];
        if (row.total_usd_mn > 0.0) {
            row.share_oecd = s[0] / row.total_usd_mn;
            row.share_asean = s[1] / row.total_usd_mn;
            row.share_row = s[2] / row.total_usd_mn;
        } else {
            row.defined = false;
        }
        table.push_back(row);
    }
    return table;
}

std::vector<DestinationRank> top_destinations(const Panel& panel, int year,
                                              Instrument instrument, std::size_t k) {
    std::map<CountryCode, double> sums;
    double total = 0.0;
    for (const auto& o : panel.observations()) {
        if (o.key.year != year || o.key.instrument != instrument) continue;
        sums[o.key.counterparty] += o.value;
        total += o.value;
    }
    std::vector<DestinationRank> ranked;
    ranked.reserve(sums.size());
    for (const auto& [cpy, v] : sums)
        ranked.push_back({cpy, v, total > 0.0 ? v / total : 0.0});
    std::sort(ranked.begin(), ranked.end(), [](const DestinationRank& a, const DestinationRank& b) {
        if (a.value_usd_mn != b.value_usd_mn) return a.value_usd_mn > b.value_usd_mn;
        return a.counterparty < b.counterparty;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

std::vector<DiffRanking> restatement_diff(const Panel& residency, const Panel& nationality,
                                          int year, std::size_t k,
                                          std::optional<Instrument> instrument) {
    auto slice_ok = [&](const ObsKey& key) {
        return key.year == year && (!instrument || key.instrument == *instrument) &&
               key.instrument != Instrument::Total;
    };
    bool year_present = false;
    std::map<CountryCode, std::map<CountryCode, double>> diff;
    for (const auto& o : nationality.observations()) {
        if (!slice_ok(o.key)) continue;
        year_present = true;
        diff[o.key.reporter][o.key.counterparty] += o.value;
    }
    for (const auto& o : residency.observations()) {
        if (!slice_ok(o.key)) continue;
        year_present = true;
        diff[o.key.reporter][o.key.counterparty] -= o.value;
    }
    if (!year_present)
        throw YearAbsentError("neither panel has observations for year " +
                              std::to_string(year));

    std::vector<DiffRanking> out;
    for (auto& [reporter, by_cpy] : diff) {
        DiffRanking r;
        r.reporter = reporter;
        r.k = k;
        r.diffs = by_cpy;
        for (const auto& [cpy, d] : by_cpy)
            if (d != 0.0) r.top.push_back({cpy, d});
        std::sort(r.top.begin(), r.top.end(), [](const DiffEntry& a, const DiffEntry& b) {
            const double ma = std::abs(a.diff_usd_mn), mb = std::abs(b.diff_usd_mn);
            if (ma != mb) return ma > mb;
            return a.counterparty < b.counterparty;
        });
        if (r.top.size() > k) r.top.resize(k);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PassthroughAttribution> passthrough_estimate(
    const DiffRanking& diffs,
    const std::vector<std::pair<CountryCode, CountryCode>>& hypothesis) {
    auto diff_of = [&](const CountryCode& c) {
        auto it = diffs.diffs.find(c);
        return it == diffs.diffs.end() ? 0.0 : it->second;
    };

    // havens grouped per target, in hypothesis order
    std::vector<CountryCode> targets;
    std::map<CountryCode, std::vector<CountryCode>> havens_by_target;
    for (const auto& [haven, target] : hypothesis) {
        if (!havens_by_target.count(target)) targets.push_back(target);
        havens_by_target[target].push_back(haven);
    }

    std::vector<PassthroughAttribution> out;
    for (const auto& target : targets) {
        PassthroughAttribution a;
        a.target = target;
        a.target_rise = std::max(0.0, diff_of(target));
        for (const auto& haven : havens_by_target[target]) {
            const double drop = std::max(0.0, -diff_of(haven));
            a.haven_drops.emplace_back(haven, drop);
            a.haven_drop_total += drop;
        }
        a.attributed = std::min(a.haven_drop_total, a.target_rise);
        a.residual = a.target_rise - a.attributed;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace gravity
