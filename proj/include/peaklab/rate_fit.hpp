#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace peaklab {

/// Least-squares fit of log d against log eps.
struct RateFit {
    std::vector<std::pair<double, double>> pairs;  ///< (eps, d)
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double floor = 0.0;
    std::optional<double> theta_report;
};

/// Throws ValidationError unless at least 3 pairs have d > 10 * floor; only
/// those pairs enter the fit, all are kept in `pairs`.
RateFit fit_rate(std::vector<std::pair<double, double>> pairs, double floor = 0.0);

/// One eps-sweep: raw distances plus the fit when one is defined.
struct RateTable {
    std::string name;
    std::string norm_kind;
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> mesh_h;
    std::optional<RateFit> fit;
    double floor = 0.0;
    double discretization_estimate = 0.0;
    std::vector<std::string> flags;

    bool flagged(const std::string& flag) const;
    /// Runs fit_rate; an undefined slope becomes the flag "slope_undefined".
    void finalize();
};

}  // namespace peaklab
