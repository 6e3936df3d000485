#include "gravity/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace gravity {

namespace {

Eigen::MatrixXd regressor_matrix(const DesignSpec& design) {
    const auto n = static_cast<Eigen::Index>(design.n_rows());
    const auto p = static_cast<Eigen::Index>(design.regressors.size());
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            x(i, j) = design.regressors[static_cast<std::size_t>(j)]
                          .values[static_cast<std::size_t>(i)];
    return x;
}

// One weighted demeaning pass over a single dimension. Returns the largest
// absolute weighted group mean seen before subtraction.
double demean_pass(Eigen::MatrixXd& cols, const Eigen::VectorXd& w,
                   const FixedEffectDimension& dim, const Eigen::VectorXd& wsum) {
    const Eigen::Index n = cols.rows();
    const Eigen::Index p = cols.cols();
    Eigen::MatrixXd gsum = Eigen::MatrixXd::Zero(dim.n_levels, p);
    for (Eigen::Index i = 0; i < n; ++i)
        gsum.row(dim.level[static_cast<std::size_t>(i)]) += w(i) * cols.row(i);
    double worst = 0.0;
    for (Eigen::Index g = 0; g < dim.n_levels; ++g) {
        gsum.row(g) /= wsum(g);
        worst = std::max(worst, gsum.row(g).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index i = 0; i < n; ++i)
        cols.row(i) -= gsum.row(dim.level[static_cast<std::size_t>(i)]);
    return worst;
}

Eigen::VectorXd group_weight_sums(const Eigen::VectorXd& w, const FixedEffectDimension& dim) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim.n_levels);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        s(dim.level[static_cast<std::size_t>(i)]) += w(i);
    return s;
}

// Weighted least squares of `target` on `x` with FE absorption. Returns
// fitted values including the absorbed FE component.
struct WlsFit {
    Eigen::VectorXd gamma;
    Eigen::VectorXd fitted;
};

WlsFit wls_absorbed(const Eigen::VectorXd& target, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& w,
                    const std::vector<FixedEffectDimension>& layout, double tol,
                    int max_iter) {
    const Eigen::Index n = target.size();
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd m(n, p + 1);
    m.col(0) = target;
    if (p > 0) m.rightCols(p) = x;
    absorb_fixed_effects(m, w, layout, tol, max_iter);

    WlsFit fit;
    if (p > 0) {
        Eigen::MatrixXd xd = m.rightCols(p);
        Eigen::MatrixXd a = xd.transpose() * w.asDiagonal() * xd;
        Eigen::VectorXd b = xd.transpose() * (w.array() * m.col(0).array()).matrix();
        fit.gamma = a.ldlt().solve(b);
        fit.fitted = (target - m.col(0)) + xd * fit.gamma;
    } else {
        fit.gamma = Eigen::VectorXd();
        fit.fitted = target - m.col(0);  // FE projection alone
    }
    return fit;
}

}  // namespace

int absorb_fixed_effects(Eigen::MatrixXd& columns, const Eigen::VectorXd& weights,
                         const std::vector<FixedEffectDimension>& layout, double tol,
                         int max_iter) {
    if (layout.empty() || columns.cols() == 0 || columns.rows() == 0) return 0;
    std::vector<Eigen::VectorXd> wsums;
    wsums.reserve(layout.size());
    for (const auto& dim : layout) wsums.push_back(group_weight_sums(weights, dim));

    for (int iter = 1; iter <= max_iter; ++iter) {
        double worst = 0.0;
        for (std::size_t d = 0; d < layout.size(); ++d)
            worst = std::max(worst, demean_pass(columns, weights, layout[d], wsums[d]));
        // single-dimension demeaning is exact in one pass
        if (layout.size() == 1) return iter;
        if (worst < tol) return iter;
    }
    throw NotConvergedError("fixed-effect absorption did not converge in " +
                            std::to_string(max_iter) + " sweeps");
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) > 0.0) dev += y(i) * std::log(y(i) / mu(i)) - (y(i) - mu(i));
        else dev += mu(i);
    }
    return 2.0 * dev;
}

std::vector<std::size_t> detect_separation(const DesignSpec& design, const FitConfig& config) {
    const std::size_t n = design.n_rows();
    std::vector<bool> flagged(n, false);

    // FE levels whose outcomes are all zero have no interior optimum; flag
    // every row of such a level.
    for (const auto& dim : design.fixed_effects) {
        std::vector<double> level_sum(static_cast<std::size_t>(dim.n_levels), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            level_sum[static_cast<std::size_t>(dim.level[i])] += design.outcome[i];
        for (std::size_t i = 0; i < n; ++i)
            if (level_sum[static_cast<std::size_t>(dim.level[i])] == 0.0) flagged[i] = true;
    }

    // Iterative least-squares rectifier on the remaining sample for
    // regressor-driven separation.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i)
        if (!flagged[i]) active.push_back(i);
    bool any_zero = false;
    for (std::size_t i : active)
        if (design.outcome[i] == 0.0) any_zero = true;

    if (any_zero && !design.regressors.empty() && !active.empty()) {
        const auto na = static_cast<Eigen::Index>(active.size());
        const auto p = static_cast<Eigen::Index>(design.regressors.size());
        Eigen::MatrixXd x(na, p);
        Eigen::VectorXd u(na), w(na);
        std::vector<ObsKey> keys;
        keys.reserve(active.size());
        constexpr double kPositiveWeight = 1e8;
        for (Eigen::Index i = 0; i < na; ++i) {
            const std::size_t r = active[static_cast<std::size_t>(i)];
            keys.push_back(design.rows[r]);
            for (Eigen::Index j = 0; j < p; ++j)
                x(i, j) = design.regressors[static_cast<std::size_t>(j)].values[r];
            const bool zero = design.outcome[r] == 0.0;
            u(i) = zero ? 1.0 : 0.0;
            w(i) = zero ? 1.0 : kPositiveWeight;
        }
        std::vector<FixedEffectDimension> layout;
        for (const auto& dim : design.fixed_effects)
            layout.push_back(encode_fe_dimension(dim.kind, keys));

        Eigen::VectorXd xb = Eigen::VectorXd::Zero(na);
        for (int iter = 0; iter < 200; ++iter) {
            auto fit = wls_absorbed(u, x, w, layout, config.tol_demean,
                                    config.max_iter_demean);
            xb = fit.fitted;
            double change = 0.0;
            for (Eigen::Index i = 0; i < na; ++i) {
                if (design.outcome[active[static_cast<std::size_t>(i)]] != 0.0) continue;
                const double nu = std::max(xb(i), 0.0);
                change = std::max(change, std::abs(nu - u(i)));
                u(i) = nu;
            }
            if (change < 1e-9) break;
        }
        const double cutoff = 1e-5 * std::max(1.0, xb.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < na; ++i) {
            const std::size_t r = active[static_cast<std::size_t>(i)];
            if (design.outcome[r] == 0.0 && xb(i) > cutoff) flagged[r] = true;
        }
    }

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (flagged[i]) out.push_back(i);
    return out;
}

FitResult fit_ppml(const DesignSpec& design, const FitConfig& config) {
    FitResult result;
    for (const auto& c : design.regressors) result.coef_names.push_back(c.name);

    // --- determine the retained sample -----------------------------------
    std::vector<bool> keep(design.n_rows(), true);

    auto separated = detect_separation(design, config);
    if (!separated.empty()) {
        if (config.separation_policy == SeparationPolicy::Error)
            throw SeparationDetectedError(std::to_string(separated.size()) +
                                          " perfectly predicted zero observations");
        for (std::size_t i : separated) {
            keep[i] = false;
            result.dropped.push_back({design.rows[i], "separated (perfectly predicted zero)"});
        }
    }

    // singleton FE levels identify nothing; dropping can cascade
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& dim : design.fixed_effects) {
            std::vector<int> count(static_cast<std::size_t>(dim.n_levels), 0);
            for (std::size_t i = 0; i < keep.size(); ++i)
                if (keep[i]) ++count[static_cast<std::size_t>(dim.level[i])];
            for (std::size_t i = 0; i < keep.size(); ++i) {
                if (keep[i] && count[static_cast<std::size_t>(dim.level[i])] == 1) {
                    keep[i] = false;
                    result.dropped.push_back({design.rows[i], "singleton fixed-effect level"});
                    changed = true;
                }
            }
        }
    }

    std::vector<std::size_t> sample;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) sample.push_back(i);
    if (sample.empty()) throw NoPositiveOutcomeError("no observations left to fit");

    const auto n = static_cast<Eigen::Index>(sample.size());
    const auto p = static_cast<Eigen::Index>(design.regressors.size());
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, p);
    result.rows.reserve(sample.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t r = sample[static_cast<std::size_t>(i)];
        result.rows.push_back(design.rows[r]);
        y(i) = design.outcome[r];
        for (Eigen::Index j = 0; j < p; ++j)
            x(i, j) = design.regressors[static_cast<std::size_t>(j)].values[r];
    }
    if ((y.array() > 0.0).count() == 0)
        throw NoPositiveOutcomeError("all outcomes are zero");

    std::vector<FixedEffectDimension> layout;
    for (const auto& dim : design.fixed_effects)
        layout.push_back(encode_fe_dimension(dim.kind, result.rows));

    // --- IRLS with FE absorption ------------------------------------------
    Eigen::VectorXd eta = y.array().max(0.1).log();
    Eigen::VectorXd mu = eta.array().exp();
    double dev = poisson_deviance(y, mu);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd xd = x;
    bool converged = false;
    int iter = 0;

    for (iter = 1; iter <= config.max_iter_irls; ++iter) {
        const Eigen::VectorXd w = mu;
        const Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();

        Eigen::MatrixXd m(n, p + 1);
        m.col(0) = z;
        if (p > 0) m.rightCols(p) = x;
        absorb_fixed_effects(m, w, layout, config.tol_demean, config.max_iter_demean);

        Eigen::VectorXd beta_new = beta;
        Eigen::VectorXd eta_new;
        if (p > 0) {
            xd = m.rightCols(p);
            Eigen::MatrixXd a = xd.transpose() * w.asDiagonal() * xd;
            Eigen::VectorXd b = xd.transpose() * (w.array() * m.col(0).array()).matrix();
            beta_new = a.ldlt().solve(b);
            eta_new = (z - m.col(0)) + xd * beta_new;
        } else {
            eta_new = z - m.col(0);
        }

        // step halving against deviance increases and overflow; the starting
        // eta is off the model manifold (near-saturated deviance), so the
        // first step is accepted unless it overflows
        Eigen::VectorXd mu_new = eta_new.array().exp();
        double dev_new = poisson_deviance(y, mu_new);
        for (int h = 0;
             h < 40 && (!std::isfinite(dev_new) ||
                        (iter > 1 && dev_new > dev * (1.0 + 1e-12)));
             ++h) {
            eta_new = 0.5 * (eta_new + eta);
            mu_new = eta_new.array().exp();
            dev_new = poisson_deviance(y, mu_new);
        }

        const double dev_change = std::abs(dev - dev_new) / (std::abs(dev_new) + 1e-12);
        const double coef_step =
            p > 0 ? (beta_new - beta).cwiseAbs().maxCoeff() : 0.0;

        eta = eta_new;
        mu = mu_new;
        dev = dev_new;
        beta = beta_new;

        if (dev_change < config.tol_deviance && coef_step < config.tol_coef) {
            converged = true;
            break;
        }
    }

    // re-demean at the converged weights so inference sees solution-state x
    if (p > 0) {
        xd = x;
        absorb_fixed_effects(xd, mu, layout, config.tol_demean, config.max_iter_demean);
    }

    result.beta = beta;
    result.deviance = dev;
    result.iterations = std::min(iter, config.max_iter_irls);
    result.converged = converged;
    result.outcome = y;
    result.fitted = mu;
    result.x_demeaned = xd;
    return result;
}

double FitResult::coefficient(const std::string& name) const {
    for (std::size_t i = 0; i < coef_names.size(); ++i)
        if (coef_names[i] == name) return beta(static_cast<Eigen::Index>(i));
    throw GravityError("no coefficient named '" + name + "'");
}

nlohmann::json FitResult::to_json() const {
    nlohmann::json j;
    j["coefficients"] = nlohmann::json::object();
    for (std::size_t i = 0; i < coef_names.size(); ++i)
        j["coefficients"][coef_names[i]] = beta(static_cast<Eigen::Index>(i));
    j["deviance"] = deviance;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["n_obs"] = rows.size();
    j["dropped"] = nlohmann::json::array();
    for (const auto& d : dropped)
        j["dropped"].push_back({{"reporter", d.key.reporter.str()},
                                {"counterparty", d.key.counterparty.str()},
                                {"year", d.key.year},
                                {"instrument", to_string(d.key.instrument)},
                                {"reason", d.reason}});
    return j;
}

}  // namespace gravity
