#include "gravity/panel.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace gravity {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw MalformedRowError("line " + std::to_string(line_no) +
                                ": cannot parse number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, std::size_t line_no) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw MalformedRowError("line " + std::to_string(line_no) +
                                ": cannot parse integer '" + s + "'");
    return v;
}

std::string key_str(const ObsKey& k) {
    return k.reporter.str() + "," + k.counterparty.str() + "," + std::to_string(k.year) +
           "," + to_string(k.instrument);
}

}  // namespace

Panel::Panel(std::vector<Observation> obs, std::vector<ObsKey> missing, Basis basis)
    : obs_(std::move(obs)), missing_(std::move(missing)), basis_(basis) {
    std::sort(obs_.begin(), obs_.end(),
              [](const Observation& a, const Observation& b) { return a.key < b.key; });
    std::sort(missing_.begin(), missing_.end());
    missing_.erase(std::unique(missing_.begin(), missing_.end()), missing_.end());
    for (std::size_t i = 1; i < obs_.size(); ++i)
        if (obs_[i].key == obs_[i - 1].key)
            throw DuplicateKeyError("duplicate observation key: " + key_str(obs_[i].key));
    for (const auto& o : obs_) {
        if (o.value < 0.0)
            throw NegativeValueError("negative value for key " + key_str(o.key));
        if (o.key.reporter == o.key.counterparty)
            throw InputError("self-pair observation: " + key_str(o.key));
    }
}

std::set<CountryCode> Panel::reporters() const {
    std::set<CountryCode> s;
    for (const auto& o : obs_) s.insert(o.key.reporter);
    return s;
}

std::set<CountryCode> Panel::counterparties() const {
    std::set<CountryCode> s;
    for (const auto& o : obs_) s.insert(o.key.counterparty);
    return s;
}

std::set<int> Panel::years() const {
    std::set<int> s;
    for (const auto& o : obs_) s.insert(o.key.year);
    return s;
}

const Observation* Panel::find(const ObsKey& key) const {
    auto it = std::lower_bound(obs_.begin(), obs_.end(), key,
                               [](const Observation& o, const ObsKey& k) { return o.key < k; });
    if (it != obs_.end() && it->key == key) return &*it;
    return nullptr;
}

Panel Panel::filter_instrument(Instrument k) const {
    std::vector<Observation> obs;
    std::vector<ObsKey> missing;
    for (const auto& o : obs_)
        if (o.key.instrument == k && k != Instrument::Total) obs.push_back(o);
    for (const auto& m : missing_)
        if (m.instrument == k && k != Instrument::Total) missing.push_back(m);
    return Panel(std::move(obs), std::move(missing), basis_);
}

Panel Panel::filter_year(int year) const {
    std::vector<Observation> obs;
    std::vector<ObsKey> missing;
    for (const auto& o : obs_)
        if (o.key.year == year) obs.push_back(o);
    for (const auto& m : missing_)
        if (m.year == year) missing.push_back(m);
    return Panel(std::move(obs), std::move(missing), basis_);
}

Panel Panel::exclude_reporters(const std::set<CountryCode>& excluded) const {
    std::vector<Observation> obs;
    std::vector<ObsKey> missing;
    for (const auto& o : obs_)
        if (!excluded.count(o.key.reporter)) obs.push_back(o);
    for (const auto& m : missing_)
        if (!excluded.count(m.reporter)) missing.push_back(m);
    return Panel(std::move(obs), std::move(missing), basis_);
}

Panel ingest_panel(std::istream& source, Basis basis, const ColumnMap& schema,
                   const IngestOptions& opts, IngestReport* report) {
    std::string line;
    if (!std::getline(source, line))
        throw MalformedRowError("line 1: empty input, header row required");
    auto header = split_line(line, opts.delimiter);
    for (auto& h : header) h = trim(h);

    auto col_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw MalformedRowError("header is missing required column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_year = col_index(schema.year);
    const std::size_t c_rep = col_index(schema.reporter);
    const std::size_t c_cpy = col_index(schema.counterparty);
    const std::size_t c_ins = col_index(schema.instrument);
    const std::size_t c_val = col_index(schema.value);
    const std::size_t n_cols = header.size();

    IngestReport rep;
    std::vector<Observation> obs;
    std::vector<ObsKey> missing;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_line(line, opts.delimiter);
        if (fields.size() != n_cols)
            throw MalformedRowError("line " + std::to_string(line_no) + ": expected " +
                                    std::to_string(n_cols) + " fields, got " +
                                    std::to_string(fields.size()));
        for (auto& f : fields) f = trim(f);

        ObsKey key;
        key.reporter = CountryCode(fields[c_rep]);
        key.counterparty = CountryCode(fields[c_cpy]);
        key.year = parse_int(fields[c_year], line_no);
        key.instrument = instrument_from_string(fields[c_ins]);
        if (key.year < opts.year_min || key.year > opts.year_max)
            throw MalformedRowError("line " + std::to_string(line_no) + ": year " +
                                    std::to_string(key.year) + " outside sample window " +
                                    std::to_string(opts.year_min) + "-" +
                                    std::to_string(opts.year_max));
        if (key.instrument == Instrument::Total) ++rep.rows_total_instrument;

        const std::string& cell = fields[c_val];
        if (cell.empty()) {
            missing.push_back(key);
            ++rep.rows_missing_value;
            continue;
        }
        if (opts.suppressed_as_missing && cell == "C") {
            missing.push_back(key);
            ++rep.rows_suppressed;
            continue;
        }
        double v = parse_double(cell, line_no);
        if (v < 0.0) {
            if (opts.suppressed_as_missing) {
                // CPIS publishes negative sentinels for suppressed cells.
                missing.push_back(key);
                ++rep.rows_suppressed;
                continue;
            }
            throw NegativeValueError("line " + std::to_string(line_no) +
                                     ": negative value " + cell);
        }
        obs.push_back({key, v});
        ++rep.rows_loaded;
    }
    if (report) *report = rep;
    return Panel(std::move(obs), std::move(missing), basis);
}

void write_panel(std::ostream& out, const Panel& panel, char delimiter) {
    const char d = delimiter;
    out << "year" << d << "reporter" << d << "counterparty" << d << "instrument" << d
        << "value_usd_mn\n";
    char buf[64];
    for (const auto& o : panel.observations()) {
        std::snprintf(buf, sizeof buf, "%.17g", o.value);
        out << o.key.year << d << o.key.reporter.str() << d << o.key.counterparty.str() << d
            << to_string(o.key.instrument) << d << buf << '\n';
    }
    for (const auto& m : panel.missing_keys())
        out << m.year << d << m.reporter.str() << d << m.counterparty.str() << d
            << to_string(m.instrument) << d << '\n';
}

Panel merge_zero_fill(const Panel& panel, const std::set<ObsKey>& universe,
                      bool missing_as_zero) {
    for (const auto& o : panel.observations())
        if (!universe.count(o.key))
            throw UniverseSmallerThanPanelError("universe lacks panel key " + key_str(o.key));

    std::set<ObsKey> missing(panel.missing_keys().begin(), panel.missing_keys().end());
    std::vector<Observation> obs = panel.observations();
    std::vector<ObsKey> still_missing;
    std::set<ObsKey> present;
    for (const auto& o : obs) present.insert(o.key);

    for (const auto& key : universe) {
        if (present.count(key)) continue;
        if (missing.count(key) && !missing_as_zero) {
            still_missing.push_back(key);
            continue;
        }
        obs.push_back({key, 0.0});
    }
    return Panel(std::move(obs), std::move(still_missing), panel.basis());
}

std::set<ObsKey> full_universe(const Panel& panel) {
    std::set<ObsKey> u;
    auto reps = panel.reporters();
    auto cpys = panel.counterparties();
    auto yrs = panel.years();
    std::set<Instrument> instruments;
    for (const auto& o : panel.observations()) instruments.insert(o.key.instrument);
    for (const auto& r : reps)
        for (const auto& c : cpys) {
            if (r == c) continue;
            for (int y : yrs)
                for (auto k : instruments) u.insert({r, c, y, k});
        }
    // keys only reachable through recorded-missing rows still belong in it
    for (const auto& m : panel.missing_keys()) u.insert(m);
    return u;
}

GroupAssignment::GroupAssignment(std::map<CountryCode, Group> membership,
                                 bool exclude_singapore)
    : membership_(std::move(membership)), exclude_singapore_(exclude_singapore) {}

Group GroupAssignment::group_of(const CountryCode& reporter) const {
    if (exclude_singapore_ && reporter.str() == "SGP") return Group::SGP_BUCKET;
    auto it = membership_.find(reporter);
    if (it == membership_.end())
        throw UnassignedReporterError("reporter " + reporter.str() + " has no group");
    return it->second;
}

std::vector<Group> GroupAssignment::active_groups(const std::set<CountryCode>& reporters) const {
    std::set<Group> seen;
    for (const auto& r : reporters) seen.insert(group_of(r));
    std::vector<Group> out;
    for (Group g : {Group::ASEAN, Group::OECD, Group::ROW, Group::SGP_BUCKET})
        if (seen.count(g)) out.push_back(g);
    return out;
}

GroupAssignment assign_groups(const Panel& panel,
                              const std::vector<std::pair<CountryCode, Group>>& membership,
                              bool exclude_singapore) {
    std::map<CountryCode, Group> map;
    for (const auto& [code, group] : membership) map[code] = group;
    GroupAssignment assignment(std::move(map), exclude_singapore);
    for (const auto& r : panel.reporters()) assignment.group_of(r);  // throws if uncovered
    return assignment;
}

std::vector<std::pair<CountryCode, Group>> read_group_file(std::istream& in, char delimiter) {
    std::vector<std::pair<CountryCode, Group>> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_line(line, delimiter);
        if (fields.size() != 2)
            throw MalformedRowError("group file line " + std::to_string(line_no) +
                                    ": expected 2 fields");
        for (auto& f : fields) f = trim(f);
        if (!header_checked) {
            header_checked = true;
            if (fields[0] == "country") continue;  // header row optional
        }
        out.emplace_back(CountryCode(fields[0]), group_from_string(fields[1]));
    }
    return out;
}

}  // namespace gravity
