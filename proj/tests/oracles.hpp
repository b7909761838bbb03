#pragma once

// Independent oracles shared by the unit and acceptance tests.

#include <cmath>

#include "hdim/geometry.hpp"

namespace hdim::oracle {

// Universal cover of A_rho by the unit disk: xi -> strip -> annulus,
// z = exp(-i (W/pi) log((1+xi)/(1-xi))).
inline Complex cover(double W, Complex xi) {
    const Complex I(0.0, 1.0);
    return std::exp(-I * (W / kPi) * std::log((1.0 + xi) / (1.0 - xi)));
}

// Density obtained by pulling 2|dxi|/(1-|xi|^2) forward through the cover,
// with |dz/dxi| from a central difference.
inline double pulled_back_density(double rho, Complex xi) {
    const double W = std::log(1.0 / (rho * rho));
    const double h = 1e-6;
    const Complex dz = (cover(W, xi + h) - cover(W, xi - h)) / (2.0 * h);
    return 2.0 / ((1.0 - std::norm(xi)) * std::abs(dz));
}

inline double disk_distance(Complex a, Complex b) {
    return 2.0 * std::atanh(std::abs((a - b) / (1.0 - std::conj(a) * b)));
}

}  // namespace hdim::oracle
