#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "lvbuddy/model.hpp"

namespace lvbuddy {

// Relative mean absolute error: (1/(H*S)) * sum_t |a(t) - s(t)|, S = sum_t s(t).
// Note the double normalization by both length and total demand; the GA
// fitness divides by S only.
inline double rmae(std::span<const double> actual, std::span<const double> modeled) {
    if (actual.size() != modeled.size())
        throw AlignmentError("rmae: series lengths differ (" + std::to_string(actual.size()) +
                             " vs " + std::to_string(modeled.size()) + ")");
    if (actual.empty()) throw InvalidInputError("rmae: empty series");
    double total = 0.0;
    for (double v : actual) total += v;
    if (total <= 0.0) throw DegenerateError("rmae: actual series sums to zero");
    double mismatch = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t)
        mismatch += std::abs(modeled[t] - actual[t]);
    return mismatch / (static_cast<double>(actual.size()) * total);
}

inline double rmae(const HalfHourlySeries& actual, const HalfHourlySeries& modeled) {
    return rmae(std::span<const double>(actual.values), std::span<const double>(modeled.values));
}

// Relative peak demand error: (max s - max a) / max s. Positive when the
// model underestimates the peak.
inline double rpde(std::span<const double> actual, std::span<const double> modeled) {
    if (actual.size() != modeled.size())
        throw AlignmentError("rpde: series lengths differ");
    if (actual.empty()) throw InvalidInputError("rpde: empty series");
    double peak_actual = actual[0];
    double peak_modeled = modeled[0];
    for (double v : actual) peak_actual = std::max(peak_actual, v);
    for (double v : modeled) peak_modeled = std::max(peak_modeled, v);
    if (peak_actual <= 0.0) throw DegenerateError("rpde: actual peak is not positive");
    return (peak_actual - peak_modeled) / peak_actual;
}

inline double rpde(const HalfHourlySeries& actual, const HalfHourlySeries& modeled) {
    return rpde(std::span<const double>(actual.values), std::span<const double>(modeled.values));
}

// RMAE of each (true, assigned) profile pair, normalized by the customer's
// own true total.
inline std::vector<double> per_customer_rmae(std::span<const HalfHourlySeries> true_series,
                                             std::span<const HalfHourlySeries> assigned_series) {
    if (true_series.size() != assigned_series.size())
        throw AlignmentError("per_customer_rmae: list lengths differ");
    std::vector<double> out;
    out.reserve(true_series.size());
    for (std::size_t j = 0; j < true_series.size(); ++j)
        out.push_back(rmae(true_series[j], assigned_series[j]));
    return out;
}

// Least-squares fit of y = a * x^(-b) in log-log space, with a 99%
// confidence band for the mean curve from the usual OLS standard errors.
struct PowerLawFit {
    double a = 0.0;
    double b = 0.0;
    int n = 0;
    double intercept_se = 0.0;   // se of log a
    double slope_se = 0.0;       // se of b
    double residual_sd = 0.0;    // s in log space
    double mean_log_x = 0.0;
    double sxx = 0.0;            // sum of squared centered log x
    double t_crit = 0.0;         // Student-t quantile, 99% two-sided, n-2 dof

    double operator()(double x) const { return a * std::pow(x, -b); }

    // 99% confidence interval of the mean curve at x.
    std::pair<double, double> band_at(double x) const {
        if (x <= 0.0) throw FitError("power-law band: x must be positive");
        const double lx = std::log(x);
        const double center = std::log(a) - b * lx;
        const double se = residual_sd *
                          std::sqrt(1.0 / n + (lx - mean_log_x) * (lx - mean_log_x) / sxx);
        const double half = t_crit * se;
        return {std::exp(center - half), std::exp(center + half)};
    }
};

inline PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points,
                                 double confidence = 0.99) {
    const std::size_t n = points.size();
    if (n < 3) throw FitError("power-law fit needs at least 3 points, got " + std::to_string(n));
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (points[i].first <= 0.0 || points[i].second <= 0.0)
            throw FitError("power-law fit needs positive coordinates");
        lx[i] = std::log(points[i].first);
        ly[i] = std::log(points[i].second);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw FitError("power-law fit: all x values coincide");

    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        sse += r * r;
    }
    const double dof = static_cast<double>(n - 2);
    const double s2 = sse / dof;

    PowerLawFit fit;
    fit.a = std::exp(intercept);
    fit.b = -slope;
    fit.n = static_cast<int>(n);
    fit.residual_sd = std::sqrt(s2);
    fit.slope_se = std::sqrt(s2 / sxx);
    fit.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    fit.mean_log_x = mx;
    fit.sxx = sxx;
    boost::math::students_t_distribution<double> dist(dof);
    fit.t_crit = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    return fit;
}

// One feeder's evaluation under one model, with provenance.
struct FeederErrorReport {
    std::string feeder_id;
    int n_customers = 0;
    double rmae = 0.0;
    double rpde = 0.0;
    std::vector<double> per_customer_rmae;   // pseudo-feeders only
    Method method = Method::simple;
    double weight = 1.0;
    TrainingWindow window{};
    std::uint64_t seed = 0;
};

} // namespace lvbuddy
