#pragma once
// Small statistics helpers: jackknife over independent replicas, linear
// least squares in one predictor, exact binomial coefficients.

#include <cstdint>
#include <span>
#include <vector>

namespace wlc {

struct MeanErr {
    double mean = 0.0;
    double stderr_ = 0.0; // jackknife standard error of the mean
};

// delete-1 jackknife of a plain mean; reduces in index order so the result
// does not depend on how the values were produced in parallel
MeanErr jackknife_mean(std::span<const double> values);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ssr = 0.0; // sum of squared residuals
};

// ordinary least squares y = intercept + slope * x
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// exact C(n, k) as double; n <= 60 stays integer-exact in IEEE 754
double binomial(int n, int k);

} // namespace wlc
