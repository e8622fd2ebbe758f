#include "peaklab/rate_fit.hpp"

#include <cmath>

#include "peaklab/common.hpp"

namespace peaklab {

RateFit fit_rate(std::vector<std::pair<double, double>> pairs, double floor) {
    RateFit fit;
    fit.pairs = std::move(pairs);
    fit.floor = floor;
    std::vector<double> lx, ly;
    for (const auto& [eps, d] : fit.pairs) {
        if (eps > 0.0 && d > 10.0 * floor && d > 0.0) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(d));
        }
    }
    require(lx.size() >= 3, "rate fit needs at least 3 pairs above 10x the discretization floor");

    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    require(sxx > 0.0, "rate fit needs distinct eps values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

bool RateTable::flagged(const std::string& flag) const {
    for (const auto& f : flags) {
        if (f == flag) return true;
    }
    return false;
}

void RateTable::finalize() {
    try {
        fit = fit_rate(pairs, floor);
    } catch (const ValidationError&) {
        fit.reset();
        if (!flagged("slope_undefined")) flags.push_back("slope_undefined");
    }
}

}  // namespace peaklab
