#include "gravity/inference.hpp"

#include <cmath>

namespace gravity {

std::string to_string(ClusterDim d) {
    switch (d) {
        case ClusterDim::Pair: return "pair";
        case ClusterDim::Reporter: return "reporter";
        case ClusterDim::Counterparty: return "counterparty";
    }
    return "?";
}

ClusterDim cluster_dim_from_string(const std::string& s) {
    if (s == "pair") return ClusterDim::Pair;
    if (s == "reporter") return ClusterDim::Reporter;
    if (s == "counterparty") return ClusterDim::Counterparty;
    throw InputError("unknown cluster dimension: '" + s + "'");
}

double ClusteredVcov::se(std::size_t i) const {
    const auto idx = static_cast<Eigen::Index>(i);
    return std::sqrt(std::max(0.0, vcov(idx, idx)));
}

ClusteredVcov cluster_vcov(const FitResult& fit, ClusterDim cluster) {
    if (!fit.converged)
        throw GravityError("cluster_vcov requires a converged fit");
    const Eigen::Index n = fit.outcome.size();
    const auto p = fit.x_demeaned.cols();

    auto cluster_key = [cluster](const ObsKey& k) -> std::pair<std::string, std::string> {
        switch (cluster) {
            case ClusterDim::Pair: return {k.reporter.str(), k.counterparty.str()};
            case ClusterDim::Reporter: return {k.reporter.str(), ""};
            case ClusterDim::Counterparty: return {k.counterparty.str(), ""};
        }
        return {};
    };

    // sorted cluster keys give a fixed reduction order
    std::map<std::pair<std::string, std::string>, Eigen::VectorXd> scores;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto key = cluster_key(fit.rows[static_cast<std::size_t>(i)]);
        auto [it, inserted] = scores.try_emplace(key, Eigen::VectorXd::Zero(p));
        const double resid = fit.outcome(i) - fit.fitted(i);
        it->second += resid * fit.x_demeaned.row(i).transpose();
    }
    const int g = static_cast<int>(scores.size());
    if (g < 2) throw TooFewClustersError("need at least 2 clusters, got " + std::to_string(g));

    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i)
        bread += fit.fitted(i) * fit.x_demeaned.row(i).transpose() * fit.x_demeaned.row(i);

    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (const auto& [key, s] : scores) meat += s * s.transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(bread);
    if (!lu.isInvertible())
        throw SingularBreadError("score Hessian is singular; check collinearity handling");
    Eigen::MatrixXd bread_inv = lu.inverse();

    ClusteredVcov out;
    out.cluster_dimension = cluster;
    out.n_clusters = g;
    out.dof_correction = static_cast<double>(g) / static_cast<double>(g - 1);
    out.vcov = out.dof_correction * bread_inv * meat * bread_inv;
    // symmetrize away accumulation noise
    out.vcov = 0.5 * (out.vcov + out.vcov.transpose()).eval();
    return out;
}

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0))
        throw GravityError("normal_quantile requires 0 < p < 1");

    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (prob < plow) {
        const double q = std::sqrt(-2.0 * std::log(prob));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (prob <= 1.0 - plow) {
        const double q = prob - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley step against the exact CDF
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

std::pair<double, double> confidence_interval(double beta, double se, double level) {
    if (se < 0.0) throw GravityError("negative standard error");
    // pinned large-sample critical value for the standard 95% level
    const double z = level == 0.95 ? 1.959964 : normal_quantile(0.5 + level / 2.0);
    return {beta - z * se, beta + z * se};
}

}  // namespace gravity
