#include <doctest.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "gravity/estimator.hpp"
#include "oracles.hpp"

using namespace gravity;
using fixtures::cc;

namespace {

// design restricted to the given keys, with FE levels re-encoded
struct SubProblem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<FixedEffectDimension> layout;
};

SubProblem subset(const DesignSpec& design, const std::vector<ObsKey>& keys) {
    SubProblem s;
    const auto n = static_cast<Eigen::Index>(keys.size());
    const auto p = static_cast<Eigen::Index>(design.regressors.size());
    s.x.resize(n, p);
    s.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto it = std::find(design.rows.begin(), design.rows.end(),
                            keys[static_cast<std::size_t>(i)]);
        REQUIRE(it != design.rows.end());
        const auto r = static_cast<std::size_t>(it - design.rows.begin());
        s.y(i) = design.outcome[r];
        for (Eigen::Index j = 0; j < p; ++j)
            s.x(i, j) = design.regressors[static_cast<std::size_t>(j)].values[r];
    }
    for (const auto& dim : design.fixed_effects)
        s.layout.push_back(encode_fe_dimension(dim.kind, keys));
    return s;
}

DesignSpec two_cell_design() {
    DesignSpec d;
    const char* partners[] = {"CAA", "CAB", "CAC", "CAD"};
    double xs[] = {0, 0, 1, 1};
    double ys[] = {1, 3, 5, 7};  // cell means 2 and 6
    RegressorColumn col{"x", {}};
    for (int i = 0; i < 4; ++i) {
        d.rows.push_back({cc("RAA"), cc(partners[i]), 2010, Instrument::Debt});
        d.outcome.push_back(ys[i]);
        col.values.push_back(xs[i]);
    }
    d.regressors.push_back(col);
    // a single shared level acts as the intercept
    d.fixed_effects.push_back({FeDim::ReporterYear, {0, 0, 0, 0}, 1});
    return d;
}

}  // namespace

TEST_CASE("fit_ppml: saturated two-cell model gives beta = ln 3") {
    auto fit = fit_ppml(two_cell_design());
    REQUIRE(fit.converged);
    CHECK(fit.beta(0) == doctest::Approx(std::log(3.0)).epsilon(1e-10));
}

TEST_CASE("fit_ppml: matches explicit-dummy Newton-Raphson oracle") {
    auto w = fixtures::small_world();
    auto design = detect_collinear(build_baseline_design(w.panel, w.distances, w.groups));
    auto fit = fit_ppml(design);
    REQUIRE(fit.converged);

    auto sub = subset(design, fit.rows);
    auto reference = oracle::dense_poisson_newton(sub.x, sub.y, sub.layout);
    REQUIRE(reference.converged);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        CHECK(std::abs(fit.beta(j) - reference.coef(j)) < 1e-6);
}

TEST_CASE("fit_ppml: all-zero FE level dropped, reduced fit matches oracle") {
    auto w = fixtures::small_world(7, 0.0);
    auto obs = w.panel.observations();
    for (auto& o : obs)
        if (o.key.counterparty == cc("ZAF") && o.key.year == 2007) o.value = 0.0;
    Panel panel(obs, {}, w.panel.basis());

    auto design = detect_collinear(build_baseline_design(panel, w.distances, w.groups));
    auto fit = fit_ppml(design);
    REQUIRE(fit.converged);

    std::size_t separated = 0;
    for (const auto& d : fit.dropped)
        if (d.reason.find("separated") != std::string::npos) {
            ++separated;
            CHECK(d.key.counterparty == cc("ZAF"));
            CHECK(d.key.year == 2007);
        }
    CHECK(separated == 3);

    auto sub = subset(design, fit.rows);
    auto reference = oracle::dense_poisson_newton(sub.x, sub.y, sub.layout);
    REQUIRE(reference.converged);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        CHECK(std::abs(fit.beta(j) - reference.coef(j)) < 1e-6);
}

TEST_CASE("fit_ppml: separation policy Error raises") {
    auto w = fixtures::small_world(7, 0.0);
    auto obs = w.panel.observations();
    for (auto& o : obs)
        if (o.key.counterparty == cc("ZAF") && o.key.year == 2007) o.value = 0.0;
    Panel panel(obs, {}, w.panel.basis());
    auto design = detect_collinear(build_baseline_design(panel, w.distances, w.groups));
    FitConfig cfg;
    cfg.separation_policy = SeparationPolicy::Error;
    CHECK_THROWS_AS(fit_ppml(design, cfg), SeparationDetectedError);
}

TEST_CASE("fit_ppml: no positive outcome is an error") {
    auto d = two_cell_design();
    for (auto& v : d.outcome) v = 0.0;
    CHECK_THROWS_AS(fit_ppml(d), NoPositiveOutcomeError);
}

TEST_CASE("absorb: single dimension demeans exactly in one pass") {
    std::mt19937 rng(21);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd cols(10, 2);
    Eigen::VectorXd w(10);
    for (int i = 0; i < 10; ++i) {
        cols(i, 0) = normal(rng);
        cols(i, 1) = normal(rng);
        w(i) = 0.5 + std::abs(normal(rng));
    }
    FixedEffectDimension dim{FeDim::ReporterYear, {0, 0, 1, 1, 1, 2, 2, 2, 2, 2}, 3};
    int sweeps = absorb_fixed_effects(cols, w, {dim}, 1e-12, 100);
    CHECK(sweeps == 1);
    for (int g = 0; g < 3; ++g) {
        double num0 = 0, num1 = 0, den = 0;
        for (int i = 0; i < 10; ++i) {
            if (dim.level[static_cast<std::size_t>(i)] != g) continue;
            num0 += w(i) * cols(i, 0);
            num1 += w(i) * cols(i, 1);
            den += w(i);
        }
        CHECK(std::abs(num0 / den) < 1e-12);
        CHECK(std::abs(num1 / den) < 1e-12);
    }
}

TEST_CASE("absorb: nested dimensions converge within two sweeps") {
    std::mt19937 rng(22);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd cols(12, 1);
    for (int i = 0; i < 12; ++i) cols(i, 0) = normal(rng);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(12);
    std::vector<std::int32_t> fine, coarse;
    for (int i = 0; i < 12; ++i) {
        fine.push_back(i / 3);        // 4 levels
        coarse.push_back(i / 6);      // 2 levels, unions of fine levels
    }
    FixedEffectDimension d1{FeDim::ReporterYear, fine, 4};
    FixedEffectDimension d2{FeDim::CounterpartyYear, coarse, 2};
    int sweeps = absorb_fixed_effects(cols, w, {d1, d2}, 1e-12, 100);
    CHECK(sweeps <= 2);
}

TEST_CASE("absorb: three crossed dimensions match the dense projection oracle") {
    std::mt19937 rng(23);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> l1(0, 7), l2(0, 5), l3(0, 4);
    const int n = 200;
    Eigen::MatrixXd cols(n, 3);
    Eigen::VectorXd w(n);
    std::vector<std::int32_t> a, b, c;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) cols(i, j) = normal(rng);
        w(i) = 0.25 + std::abs(normal(rng));
        a.push_back(l1(rng));
        b.push_back(l2(rng));
        c.push_back(l3(rng));
    }
    std::vector<FixedEffectDimension> layout = {{FeDim::ReporterYear, a, 8},
                                                {FeDim::CounterpartyYear, b, 6},
                                                {FeDim::Pair, c, 5}};
    Eigen::MatrixXd demeaned = cols;
    absorb_fixed_effects(demeaned, w, layout, 1e-13, 100000);
    Eigen::MatrixXd reference = oracle::dense_projection_residual(cols, w, layout);
    CHECK((demeaned - reference).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("detect_separation: all-positive outcomes yield an empty list") {
    auto w = fixtures::small_world(7, 0.0);
    auto design = build_baseline_design(w.panel, w.distances, w.groups);
    CHECK(detect_separation(design).empty());
}

TEST_CASE("detect_separation: indicator regressor on a zero outcome is flagged") {
    DesignSpec d;
    const char* partners[] = {"CAA", "CAB", "CAC", "CAD"};
    double ys[] = {2, 0, 3, 1};
    RegressorColumn col{"z", {0, 1, 0, 0}};
    for (int i = 0; i < 4; ++i) {
        d.rows.push_back({cc("RAA"), cc(partners[i]), 2010, Instrument::Debt});
        d.outcome.push_back(ys[i]);
    }
    d.regressors.push_back(col);
    auto flagged = detect_separation(d);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == 1);
}

TEST_CASE("detect_separation: planted certificate direction is recovered exactly") {
    std::mt19937 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 100;
    DesignSpec d;
    RegressorColumn x1{"x1", {}}, x2{"planted", {}};
    std::vector<std::size_t> planted;
    std::vector<std::int32_t> level;
    for (int i = 0; i < n; ++i) {
        d.rows.push_back({cc("RAA"),
                          CountryCode(std::string("C") + char('A' + i / 26) + char('A' + i % 26)),
                          2010, Instrument::Debt});
        level.push_back(0);
        double y = std::floor(10.0 * unit(rng));
        bool in_planted = i % 9 == 0;  // 12 observations
        if (in_planted) {
            y = 0.0;
            planted.push_back(static_cast<std::size_t>(i));
        }
        d.outcome.push_back(y);
        x1.values.push_back(normal(rng));
        x2.values.push_back(in_planted ? 1.0 + unit(rng) : 0.0);
    }
    d.regressors.push_back(x1);
    d.regressors.push_back(x2);
    d.fixed_effects.push_back({FeDim::ReporterYear, level, 1});

    // the planted column is a valid certificate by construction: nonnegative
    // everywhere, strictly positive only on zero outcomes
    for (int i = 0; i < n; ++i) {
        CHECK(x2.values[static_cast<std::size_t>(i)] >= 0.0);
        if (x2.values[static_cast<std::size_t>(i)] > 0.0)
            CHECK(d.outcome[static_cast<std::size_t>(i)] == 0.0);
    }
    auto flagged = detect_separation(d);
    CHECK(flagged == planted);
}

TEST_CASE("invariant: reporter-year outcome scaling leaves coefficients unchanged") {
    // the rescaling is absorbed by the reporter-year effect exactly when the
    // conditional mean fits the cell (zero residuals); with sampling noise the
    // other FE dimension's score equations reweight and the property is only
    // approximate, so the exact check uses noiseless exponential outcomes
    auto w = fixtures::noiseless_world();
    auto base_design = detect_collinear(build_baseline_design(w.panel, w.distances, w.groups));
    auto base = fit_ppml(base_design);
    REQUIRE(base.converged);

    auto obs = w.panel.observations();
    for (auto& o : obs)
        if (o.key.reporter == cc("SGP") && o.key.year == 2007) o.value *= 7.5;
    Panel scaled(obs, {}, w.panel.basis());
    auto fit = fit_ppml(detect_collinear(build_baseline_design(scaled, w.distances, w.groups)));
    REQUIRE(fit.converged);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        CHECK(std::abs(fit.beta(j) - base.beta(j)) < 1e-8);
}

TEST_CASE("invariant: global distance scaling leaves coefficients unchanged") {
    auto w = fixtures::small_world();
    auto base = fit_ppml(detect_collinear(build_baseline_design(w.panel, w.distances, w.groups)));
    REQUIRE(base.converged);

    DistanceTable doubled;
    for (const auto& [pair, km] : w.distances.entries())
        doubled.set(pair.first, pair.second, 2.0 * km);
    auto fit = fit_ppml(detect_collinear(build_baseline_design(w.panel, doubled, w.groups)));
    REQUIRE(fit.converged);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        CHECK(std::abs(fit.beta(j) - base.beta(j)) < 1e-8);
}

TEST_CASE("invariant: zero outcomes influence the estimates") {
    auto w = fixtures::small_world();
    auto with_zeros = fit_ppml(detect_collinear(
        build_baseline_design(w.panel, w.distances, w.groups)));
    REQUIRE(with_zeros.converged);

    std::vector<Observation> positive;
    for (const auto& o : w.panel.observations())
        if (o.value > 0.0) positive.push_back(o);
    REQUIRE(positive.size() < w.panel.size());
    Panel trimmed(positive, {}, w.panel.basis());
    auto without = fit_ppml(detect_collinear(
        build_baseline_design(trimmed, w.distances, w.groups)));
    REQUIRE(without.converged);

    double max_diff = 0.0;
    for (Eigen::Index j = 0; j < with_zeros.beta.size(); ++j)
        max_diff = std::max(max_diff, std::abs(with_zeros.beta(j) - without.beta(j)));
    CHECK(max_diff > 1e-4);
}

TEST_CASE("invariant: residuals add up to zero within every FE level") {
    auto w = fixtures::small_world();
    auto design = detect_collinear(build_baseline_design(w.panel, w.distances, w.groups));
    auto fit = fit_ppml(design);
    REQUIRE(fit.converged);

    const double budget = 1e-6 * fit.outcome.sum();
    for (const auto& kind : {FeDim::ReporterYear, FeDim::CounterpartyYear}) {
        auto dim = encode_fe_dimension(kind, fit.rows);
        std::vector<double> level_sum(static_cast<std::size_t>(dim.n_levels), 0.0);
        for (Eigen::Index i = 0; i < fit.outcome.size(); ++i)
            level_sum[static_cast<std::size_t>(dim.level[static_cast<std::size_t>(i)])] +=
                fit.outcome(i) - fit.fitted(i);
        for (double s : level_sum) CHECK(std::abs(s) < budget);
    }
}

TEST_CASE("invariant: refitting identical inputs is bit-identical") {
    auto w = fixtures::small_world();
    auto design = detect_collinear(build_baseline_design(w.panel, w.distances, w.groups));
    auto a = fit_ppml(design);
    auto b = fit_ppml(design);
    REQUIRE(a.beta.size() == b.beta.size());
    CHECK(std::memcmp(a.beta.data(), b.beta.data(),
                      sizeof(double) * static_cast<std::size_t>(a.beta.size())) == 0);
    CHECK(a.deviance == b.deviance);
}

TEST_CASE("fit_ppml: singleton FE levels are dropped with a report") {
    // a lone extra year for one pair is a singleton in both year dimensions
    auto w = fixtures::small_world();
    auto obs = w.panel.observations();
    obs.push_back({{cc("SGP"), cc("USA"), 2009, Instrument::Debt}, 42.0});
    Panel panel(obs, {}, w.panel.basis());
    auto design = detect_collinear(build_baseline_design(panel, w.distances, w.groups));
    auto fit = fit_ppml(design);
    bool reported = false;
    for (const auto& d : fit.dropped)
        if (d.key.year == 2009 && d.reason == "singleton fixed-effect level") reported = true;
    CHECK(reported);
    CHECK(fit.rows.size() == design.n_rows() - 1);
}
