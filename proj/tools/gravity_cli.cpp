// Batch command-line front-end: ingestion, distances, estimation, histogram
// and restatement analytics, synthetic data generation.
//
// Every command stages its artifacts in memory and writes them only after the
// whole computation succeeded, so an input error never leaves partial output.
// A manifest.json with a deterministic config hash accompanies every artifact
// directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gravity/design.hpp"
#include "gravity/estimator.hpp"
#include "gravity/geo.hpp"
#include "gravity/inference.hpp"
#include "gravity/panel.hpp"
#include "gravity/restatement.hpp"
#include "gravity/synth.hpp"

namespace {

using namespace gravity;
using nlohmann::json;

std::string fmtg(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Staged artifact writer: nothing touches the filesystem until commit().
class Emitter {
  public:
    explicit Emitter(std::string out_dir) : dir_(std::move(out_dir)) {}

    void add(const std::string& name, std::string content) {
        files_.emplace_back(name, std::move(content));
    }

    void commit(json manifest) {
        manifest["config_hash"] = hex64(fnv1a64(manifest.dump()));
        files_.emplace_back("manifest.json", manifest.dump(2) + "\n");
        std::filesystem::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
            if (!out) throw InputError("cannot write " + name + " under " + dir_);
            out << content;
        }
    }

  private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path);
    return in;
}

Panel load_panel(const std::string& path, Basis basis, IngestReport* report = nullptr) {
    auto in = open_input(path);
    return ingest_panel(in, basis, {}, {}, report);
}

DistanceTable load_distances(const std::string& distances_path,
                             const std::string& cities_path) {
    // a precomputed distance file is loaded verbatim and overrides computation
    if (!distances_path.empty()) {
        auto in = open_input(distances_path);
        return read_distance_file(in);
    }
    if (!cities_path.empty()) {
        auto in = open_input(cities_path);
        return build_distance_table(read_city_file(in));
    }
    throw InputError("either --distances or --cities is required");
}

std::set<CountryCode> parse_codes(const std::vector<std::string>& raw) {
    std::set<CountryCode> out;
    for (const auto& s : raw) out.insert(CountryCode(s));
    return out;
}

// ---------------------------------------------------------------------------
// Shared flag bundles
// ---------------------------------------------------------------------------

struct CommonArgs {
    std::string in;
    std::string out = ".";
    std::string basis = "nationality";
    std::string instrument = "debt";
    std::string groups;
    std::string distances;
    std::string cities;
    std::vector<std::string> exclude_reporters;
    int year = 2017;
};

void add_io_flags(CLI::App* cmd, CommonArgs& a, bool need_in = true) {
    auto* in = cmd->add_option("--in", a.in, "Input panel CSV")->envname("GRAVITY_IN");
    if (need_in) in->required();
    cmd->add_option("--out", a.out, "Output directory")->envname("GRAVITY_OUT");
    cmd->add_option("--basis", a.basis, "residency|nationality|cpis")
        ->envname("GRAVITY_BASIS");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ingest(const CommonArgs& a) {
    IngestReport report;
    Panel panel = load_panel(a.in, basis_from_string(a.basis), &report);

    std::ostringstream csv;
    write_panel(csv, panel);
    json rep = {{"rows_loaded", report.rows_loaded},
                {"rows_missing_value", report.rows_missing_value},
                {"rows_suppressed", report.rows_suppressed},
                {"rows_total_instrument", report.rows_total_instrument},
                {"reporters", panel.reporters().size()},
                {"counterparties", panel.counterparties().size()}};

    Emitter em(a.out);
    em.add("panel.csv", csv.str());
    em.add("ingest_report.json", rep.dump(2) + "\n");
    em.commit({{"command", "ingest"}, {"in", a.in}, {"basis", a.basis}, {"out", a.out}});
    return 0;
}

int cmd_distance(const CommonArgs& a) {
    auto table = load_distances(a.distances, a.cities);
    std::ostringstream csv;
    write_distance_table(csv, table);

    Emitter em(a.out);
    em.add("distances.csv", csv.str());
    em.commit({{"command", "distance"},
               {"cities", a.cities},
               {"distances", a.distances},
               {"out", a.out}});
    return 0;
}

struct EstimateArgs : CommonArgs {
    std::string spec = "baseline";
    std::string cluster = "pair";
    int base_year = 2007;
    double level = 0.95;
    bool exclude_singapore = false;
    bool include_row = false;
    bool zero_fill = false;
    std::string separation = "drop";
};

int cmd_estimate(const EstimateArgs& a) {
    Panel panel = load_panel(a.in, basis_from_string(a.basis));
    panel = panel.filter_instrument(instrument_from_string(a.instrument));
    if (a.zero_fill) panel = merge_zero_fill(panel, full_universe(panel));
    if (!a.exclude_reporters.empty())
        panel = panel.exclude_reporters(parse_codes(a.exclude_reporters));
    if (panel.empty()) throw InputError("no observations left after filtering");

    if (a.groups.empty()) throw InputError("--groups is required for estimate");
    auto gin = open_input(a.groups);
    auto groups = assign_groups(panel, read_group_file(gin), a.exclude_singapore);
    auto distances = load_distances(a.distances, a.cities);

    if (a.spec != "baseline" && a.spec != "timevarying")
        throw InputError("unknown --spec: " + a.spec + " (expected baseline|timevarying)");
    DesignSpec design =
        a.spec == "baseline"
            ? build_baseline_design(panel, distances, groups)
            : build_timevarying_design(panel, distances, groups, a.base_year,
                                       a.include_row);
    design = detect_collinear(design);

    FitConfig config;
    if (a.separation == "error") config.separation_policy = SeparationPolicy::Error;
    else if (a.separation != "drop")
        throw InputError("unknown --separation: " + a.separation);
    auto fit = fit_ppml(design, config);

    std::ostringstream csv;
    csv << "name,beta,se,ci_lo,ci_hi,n_obs,n_clusters\n";
    json meta = fit.to_json();
    meta["design"] = design.diagnostics();
    if (fit.converged) {
        auto vcov = cluster_vcov(fit, cluster_dim_from_string(a.cluster));
        for (std::size_t j = 0; j < fit.coef_names.size(); ++j) {
            const double beta = fit.beta(static_cast<Eigen::Index>(j));
            const double se = vcov.se(j);
            auto [lo, hi] = confidence_interval(beta, se, a.level);
            csv << fit.coef_names[j] << ',' << fmtg(beta) << ',' << fmtg(se) << ','
                << fmtg(lo) << ',' << fmtg(hi) << ',' << fit.rows.size() << ','
                << vcov.n_clusters << '\n';
        }
        meta["cluster"] = {{"dimension", to_string(vcov.cluster_dimension)},
                           {"n_clusters", vcov.n_clusters},
                           {"dof_correction", vcov.dof_correction}};
    } else {
        // partial result: coefficients without inference
        for (std::size_t j = 0; j < fit.coef_names.size(); ++j)
            csv << fit.coef_names[j] << ',' << fmtg(fit.beta(static_cast<Eigen::Index>(j)))
                << ",,,," << fit.rows.size() << ",\n";
    }

    Emitter em(a.out);
    em.add("coefficients.csv", csv.str());
    em.add("fit.json", meta.dump(2) + "\n");
    em.commit({{"command", "estimate"},
               {"in", a.in},
               {"basis", a.basis},
               {"instrument", a.instrument},
               {"spec", a.spec},
               {"base_year", a.base_year},
               {"cluster", a.cluster},
               {"level", a.level},
               {"groups", a.groups},
               {"distances", a.distances},
               {"cities", a.cities},
               {"exclude_reporter", a.exclude_reporters},
               {"exclude_singapore", a.exclude_singapore},
               {"include_row", a.include_row},
               {"zero_fill", a.zero_fill},
               {"separation", a.separation},
               {"out", a.out}});
    return fit.converged ? 0 : 2;
}

struct BinsArgs : CommonArgs {
    std::vector<std::string> tags;  // counterparties given their own tag
};

int cmd_bins(const BinsArgs& a) {
    Panel panel = load_panel(a.in, basis_from_string(a.basis));
    if (!a.exclude_reporters.empty())
        panel = panel.exclude_reporters(parse_codes(a.exclude_reporters));
    if (a.groups.empty()) throw InputError("--groups is required for bins");
    auto gin = open_input(a.groups);
    auto groups = assign_groups(panel, read_group_file(gin), false);
    auto distances = load_distances(a.distances, a.cities);

    CounterpartyTagger tagger;
    if (!a.tags.empty()) {
        auto tagged = parse_codes(a.tags);
        tagger = [tagged](const CountryCode& c) {
            return tagged.count(c) ? c.str() : std::string("other");
        };
    }

    Emitter em(a.out);
    auto hists = bin_holdings(panel, distances, groups, tagger);
    for (const auto& [slice, hist] : hists) {
        std::ostringstream csv;
        csv << "bin,km_lo,km_hi,tag,usd_bn\n";
        for (const auto& [tag, sums] : hist.sums_by_tag)
            for (int b = 0; b < hist.n_bins; ++b)
                csv << b << ',' << fmtg(b * hist.bin_width_km) << ','
                    << fmtg((b + 1) * hist.bin_width_km) << ',' << tag << ','
                    << fmtg(sums[b] / 1000.0) << '\n';
        em.add("bins_" + to_string(slice.group) + "_" + std::to_string(slice.year) + "_" +
                   to_string(slice.instrument) + ".csv",
               csv.str());
    }
    em.commit({{"command", "bins"},
               {"in", a.in},
               {"basis", a.basis},
               {"groups", a.groups},
               {"distances", a.distances},
               {"cities", a.cities},
               {"tags", a.tags},
               {"exclude_reporter", a.exclude_reporters},
               {"out", a.out}});
    return 0;
}

int cmd_shares(const CommonArgs& a) {
    Panel panel = load_panel(a.in, basis_from_string(a.basis));
    if (a.groups.empty()) throw InputError("--groups is required for shares");
    auto gin = open_input(a.groups);
    GroupAssignment groups(
        [&] {
            std::map<CountryCode, Group> m;
            for (const auto& [c, g] : read_group_file(gin)) m[c] = g;
            return m;
        }(),
        false);

    auto table = allocation_shares(panel, groups, a.year,
                                   instrument_from_string(a.instrument));
    std::ostringstream csv;
    csv << "reporter,year,share_oecd,share_asean,share_row\n";
    for (const auto& row : table) {
        csv << row.reporter.str() << ',' << row.year << ',';
        if (row.defined)
            csv << fmtg(row.share_oecd) << ',' << fmtg(row.share_asean) << ','
                << fmtg(row.share_row);
        else
            csv << ",,";  // zero total: shares undefined
        csv << '\n';
    }

    Emitter em(a.out);
    em.add("shares.csv", csv.str());
    em.commit({{"command", "shares"},
               {"in", a.in},
               {"basis", a.basis},
               {"instrument", a.instrument},
               {"year", a.year},
               {"groups", a.groups},
               {"out", a.out}});
    return 0;
}

struct TopkArgs : CommonArgs {
    std::size_t k = 10;
};

int cmd_topk(const TopkArgs& a) {
    Panel panel = load_panel(a.in, basis_from_string(a.basis));
    const Instrument instrument = instrument_from_string(a.instrument);

    // network-chart edge list: largest bilateral edges of the slice
    std::vector<Observation> slice;
    for (const auto& o : panel.observations())
        if (o.key.year == a.year && o.key.instrument == instrument)
            slice.push_back(o);
    std::sort(slice.begin(), slice.end(), [](const Observation& x, const Observation& y) {
        if (x.value != y.value) return x.value > y.value;
        return x.key < y.key;
    });
    if (slice.size() > a.k) slice.resize(a.k);

    std::ostringstream csv;
    csv << "source,destination,value_usd_mn\n";
    for (const auto& o : slice)
        csv << o.key.reporter.str() << ',' << o.key.counterparty.str() << ','
            << fmtg(o.value) << '\n';

    Emitter em(a.out);
    em.add("edges.csv", csv.str());
    em.commit({{"command", "topk"},
               {"in", a.in},
               {"basis", a.basis},
               {"instrument", a.instrument},
               {"year", a.year},
               {"k", a.k},
               {"out", a.out}});
    return 0;
}

struct RestateArgs {
    std::string residency;
    std::string nationality;
    std::string instrument;  // empty: all non-total instruments combined
    std::string out = ".";
    int year = 2017;
    std::size_t k = 10;
};

int cmd_restate_diff(const RestateArgs& a) {
    Panel res = load_panel(a.residency, Basis::ResidencyRestated);
    Panel nat = load_panel(a.nationality, Basis::NationalityRestated);
    std::optional<Instrument> instrument;
    if (!a.instrument.empty()) instrument = instrument_from_string(a.instrument);

    auto diffs = restatement_diff(res, nat, a.year, a.k, instrument);
    std::ostringstream csv;
    csv << "reporter,counterparty,diff_usd_mn\n";
    for (const auto& r : diffs)
        for (const auto& e : r.top)
            csv << r.reporter.str() << ',' << e.counterparty.str() << ','
                << fmtg(e.diff_usd_mn) << '\n';

    Emitter em(a.out);
    em.add("diff.csv", csv.str());
    em.commit({{"command", "restate-diff"},
               {"residency", a.residency},
               {"nationality", a.nationality},
               {"instrument", a.instrument},
               {"year", a.year},
               {"k", a.k},
               {"out", a.out}});
    return 0;
}

struct SynthArgs {
    std::string out = ".";
    DgpConfig config;
    double beta_asean = -1.0;
    double beta_oecd = -0.5;
    double beta_row = -0.8;
};

int cmd_synth(SynthArgs& a) {
    a.config.true_beta = {{Group::ASEAN, a.beta_asean},
                          {Group::OECD, a.beta_oecd},
                          {Group::ROW, a.beta_row}};
    auto data = generate_panel(a.config);

    std::ostringstream panel_csv, dist_csv, city_csv, group_csv;
    write_panel(panel_csv, data.panel);
    write_distance_table(dist_csv, data.distances);
    city_csv << "country,lat,lon\n";
    for (const auto& [c, p] : data.cities)
        city_csv << c.str() << ',' << fmtg(p.lat) << ',' << fmtg(p.lon) << '\n';
    group_csv << "country,group\n";
    for (const auto& [c, g] : data.groups.membership())
        group_csv << c.str() << ',' << to_string(g) << '\n';

    Emitter em(a.out);
    em.add("panel.csv", panel_csv.str());
    em.add("distances.csv", dist_csv.str());
    em.add("cities.csv", city_csv.str());
    em.add("groups.csv", group_csv.str());
    em.add("truth.json", json(data.truth).dump(2) + "\n");
    em.commit({{"command", "synth"},
               {"n_reporters", a.config.n_reporters},
               {"n_counterparties", a.config.n_counterparties},
               {"n_asean", a.config.n_asean},
               {"n_oecd", a.config.n_oecd},
               {"year_first", a.config.year_first},
               {"year_last", a.config.year_last},
               {"beta_asean", a.beta_asean},
               {"beta_oecd", a.beta_oecd},
               {"beta_row", a.beta_row},
               {"intercept", a.config.intercept},
               {"zero_inflation", a.config.zero_inflation},
               {"seed", a.config.seed},
               {"out", a.out}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gravity-model toolkit for bilateral portfolio holdings"};
    app.require_subcommand(1);

    CommonArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize a panel CSV");
    add_io_flags(ingest, ingest_args);

    CommonArgs dist_args;
    auto* distance = app.add_subcommand("distance", "Build or relay a distance table");
    distance->add_option("--cities", dist_args.cities, "country,lat,lon CSV")
        ->envname("GRAVITY_CITIES");
    distance->add_option("--distances", dist_args.distances, "precomputed distance CSV")
        ->envname("GRAVITY_DISTANCES");
    distance->add_option("--out", dist_args.out, "Output directory")->envname("GRAVITY_OUT");

    EstimateArgs est_args;
    auto* estimate = app.add_subcommand("estimate", "Fit a PPML gravity specification");
    add_io_flags(estimate, est_args);
    estimate->add_option("--instrument", est_args.instrument, "debt|equity")
        ->envname("GRAVITY_INSTRUMENT");
    estimate->add_option("--spec", est_args.spec, "baseline|timevarying")
        ->envname("GRAVITY_SPEC");
    estimate->add_option("--base-year", est_args.base_year, "Omitted year (timevarying)")
        ->envname("GRAVITY_BASE_YEAR");
    estimate->add_option("--cluster", est_args.cluster, "pair|reporter|counterparty")
        ->envname("GRAVITY_CLUSTER");
    estimate->add_option("--exclude-reporter", est_args.exclude_reporters,
                         "Reporters dropped before estimation")
        ->envname("GRAVITY_EXCLUDE_REPORTER");
    estimate->add_option("--groups", est_args.groups, "country,group CSV")
        ->envname("GRAVITY_GROUPS");
    estimate->add_option("--distances", est_args.distances, "precomputed distance CSV")
        ->envname("GRAVITY_DISTANCES");
    estimate->add_option("--cities", est_args.cities, "country,lat,lon CSV")
        ->envname("GRAVITY_CITIES");
    estimate->add_option("--level", est_args.level, "CI level (default 0.95)");
    estimate->add_flag("--exclude-singapore", est_args.exclude_singapore,
                       "Move SGP out of ASEAN into its own bucket");
    estimate->add_flag("--include-row", est_args.include_row,
                       "Add ROW interactions to the timevarying spec");
    estimate->add_flag("--zero-fill", est_args.zero_fill,
                       "Fill the reporter x counterparty x year grid with zeros");
    estimate->add_option("--separation", est_args.separation, "drop|error");

    BinsArgs bins_args;
    auto* bins = app.add_subcommand("bins", "2000-km distance histograms per slice");
    add_io_flags(bins, bins_args);
    bins->add_option("--groups", bins_args.groups, "country,group CSV")
        ->envname("GRAVITY_GROUPS");
    bins->add_option("--distances", bins_args.distances, "precomputed distance CSV")
        ->envname("GRAVITY_DISTANCES");
    bins->add_option("--cities", bins_args.cities, "country,lat,lon CSV")
        ->envname("GRAVITY_CITIES");
    bins->add_option("--tag", bins_args.tags, "Counterparties tagged individually");
    bins->add_option("--exclude-reporter", bins_args.exclude_reporters,
                     "Reporters dropped before binning");

    CommonArgs share_args;
    auto* shares = app.add_subcommand("shares", "Group allocation shares per reporter");
    add_io_flags(shares, share_args);
    shares->add_option("--instrument", share_args.instrument, "debt|equity")
        ->envname("GRAVITY_INSTRUMENT");
    shares->add_option("--year", share_args.year, "Slice year");
    shares->add_option("--groups", share_args.groups, "country,group CSV")
        ->envname("GRAVITY_GROUPS");

    TopkArgs topk_args;
    auto* topk = app.add_subcommand("topk", "Top-k bilateral edges of a slice");
    add_io_flags(topk, topk_args);
    topk->add_option("--instrument", topk_args.instrument, "debt|equity")
        ->envname("GRAVITY_INSTRUMENT");
    topk->add_option("--year", topk_args.year, "Slice year");
    topk->add_option("--k", topk_args.k, "Edge count");

    RestateArgs restate_args;
    auto* restate = app.add_subcommand("restate-diff",
                                       "Nationality-minus-residency top movers");
    restate->add_option("--residency", restate_args.residency, "Residency-basis panel CSV")
        ->required();
    restate->add_option("--nationality", restate_args.nationality,
                        "Nationality-basis panel CSV")
        ->required();
    restate->add_option("--instrument", restate_args.instrument, "debt|equity")
        ->envname("GRAVITY_INSTRUMENT");
    restate->add_option("--year", restate_args.year, "Slice year");
    restate->add_option("--k", restate_args.k, "Movers per reporter");
    restate->add_option("--out", restate_args.out, "Output directory")
        ->envname("GRAVITY_OUT");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic gravity panel");
    synth->add_option("--reporters", synth_args.config.n_reporters, "Reporter count");
    synth->add_option("--counterparties", synth_args.config.n_counterparties,
                      "Counterparty count");
    synth->add_option("--asean", synth_args.config.n_asean, "Reporters tagged ASEAN");
    synth->add_option("--oecd", synth_args.config.n_oecd, "Reporters tagged OECD");
    synth->add_option("--year-first", synth_args.config.year_first, "First year");
    synth->add_option("--year-last", synth_args.config.year_last, "Last year");
    synth->add_option("--beta-asean", synth_args.beta_asean, "True ASEAN elasticity");
    synth->add_option("--beta-oecd", synth_args.beta_oecd, "True OECD elasticity");
    synth->add_option("--beta-row", synth_args.beta_row, "True ROW elasticity");
    synth->add_option("--intercept", synth_args.config.intercept, "Base log mean");
    synth->add_option("--zero-inflation", synth_args.config.zero_inflation,
                      "Structural-zero probability");
    synth->add_option("--seed", synth_args.config.seed, "RNG seed");
    synth->add_option("--out", synth_args.out, "Output directory")->envname("GRAVITY_OUT");

    try {
        app.parse(argc, argv);
        if (*ingest) return cmd_ingest(ingest_args);
        if (*distance) return cmd_distance(dist_args);
        if (*estimate) return cmd_estimate(est_args);
        if (*bins) return cmd_bins(bins_args);
        if (*shares) return cmd_shares(share_args);
        if (*topk) return cmd_topk(topk_args);
        if (*restate) return cmd_restate_diff(restate_args);
        if (*synth) return cmd_synth(synth_args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const NotConvergedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const GravityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
