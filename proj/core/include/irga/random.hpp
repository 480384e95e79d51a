#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace irga {

using Rng = std::mt19937_64;

// Child seed for a named component. All randomness in a run descends from
// one root seed through labels such as "mcmc/2/1" or "forecast/origin/17".
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label, long a) {
  return derive_seed(derive_seed(root, label), std::to_string(a));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label, long a, long b) {
  return derive_seed(derive_seed(root, label, a), std::to_string(b));
}

Eigen::VectorXd draw_std_normal(Rng& rng, Eigen::Index n);

// Inverse gamma IG(shape, scale) with density proportional to
// x^{-shape-1} exp(-scale / x).
double draw_inverse_gamma(Rng& rng, double shape, double scale);

} // namespace irga
