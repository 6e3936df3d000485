#pragma once

#include <iosfwd>
#include <optional>

#include "gravity/types.hpp"

namespace gravity {

/// Immutable, canonically sorted collection of bilateral observations.
///
/// Zeros are stored as observations; keys whose value cell was absent or
/// suppressed in the source are tracked separately as "recorded missing" and
/// never enter an estimation sample unless explicitly converted.
class Panel {
  public:
    Panel() = default;
    Panel(std::vector<Observation> obs, std::vector<ObsKey> missing, Basis basis);

    const std::vector<Observation>& observations() const { return obs_; }
    const std::vector<ObsKey>& missing_keys() const { return missing_; }
    Basis basis() const { return basis_; }
    std::size_t size() const { return obs_.size(); }
    bool empty() const { return obs_.empty(); }

    std::set<CountryCode> reporters() const;
    std::set<CountryCode> counterparties() const;
    std::set<int> years() const;

    const Observation* find(const ObsKey& key) const;

    /// Subset with a single instrument; Total rows never survive a filter.
    Panel filter_instrument(Instrument k) const;
    /// Subset with a single year.
    Panel filter_year(int year) const;
    /// Drop every observation whose reporter is in `excluded`.
    Panel exclude_reporters(const std::set<CountryCode>& excluded) const;

  private:
    std::vector<Observation> obs_;   // sorted by key, unique
    std::vector<ObsKey> missing_;    // sorted, unique
    Basis basis_ = Basis::ResidencyRestated;
};

/// Column-name mapping for delimiter-separated input.
struct ColumnMap {
    std::string year = "year";
    std::string reporter = "reporter";
    std::string counterparty = "counterparty";
    std::string instrument = "instrument";
    std::string value = "value_usd_mn";
};

struct IngestOptions {
    char delimiter = ',';
    int year_min = 2007;
    int year_max = 2017;
    /// Cells that are empty or "C" (confidentiality-suppressed) become
    /// recorded-missing instead of failing the row.
    bool suppressed_as_missing = true;
};

struct IngestReport {
    std::size_t rows_loaded = 0;
    std::size_t rows_missing_value = 0;
    std::size_t rows_suppressed = 0;
    std::size_t rows_total_instrument = 0;  // "Total" rows kept but flagged
};

/// Parse a delimiter-separated stream into a validated Panel.
Panel ingest_panel(std::istream& source, Basis basis, const ColumnMap& schema = {},
                   const IngestOptions& opts = {}, IngestReport* report = nullptr);

/// Write a panel back out in the canonical ingestion format.
void write_panel(std::ostream& out, const Panel& panel, char delimiter = ',');

/// Extend a panel so every key in `universe` is present; absent keys get
/// value zero. Recorded-missing keys stay missing unless `missing_as_zero`.
Panel merge_zero_fill(const Panel& panel, const std::set<ObsKey>& universe,
                      bool missing_as_zero = false);

/// Convenience: the full reporter x counterparty x year x instrument cross
/// product over the sets present in the panel (self-pairs excluded).
std::set<ObsKey> full_universe(const Panel& panel);

/// Reporter-group mapping for the distance interaction dummies.
class GroupAssignment {
  public:
    GroupAssignment() = default;
    GroupAssignment(std::map<CountryCode, Group> membership, bool exclude_singapore);

    /// Group used for regressor construction. With exclude_singapore set,
    /// SGP reports Group::SGP_BUCKET regardless of its listed membership.
    Group group_of(const CountryCode& reporter) const;
    bool exclude_singapore() const { return exclude_singapore_; }
    const std::map<CountryCode, Group>& membership() const { return membership_; }

    /// Every group that actually labels at least one of `reporters`.
    std::vector<Group> active_groups(const std::set<CountryCode>& reporters) const;

  private:
    std::map<CountryCode, Group> membership_;
    bool exclude_singapore_ = false;
};

/// Validate that `membership` covers every reporter in the panel.
GroupAssignment assign_groups(const Panel& panel,
                              const std::vector<std::pair<CountryCode, Group>>& membership,
                              bool exclude_singapore);

/// Load a `country,group` file.
std::vector<std::pair<CountryCode, Group>> read_group_file(std::istream& in,
                                                           char delimiter = ',');

}  // namespace gravity
