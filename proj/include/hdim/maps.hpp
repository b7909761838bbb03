#pragma once

// Conformal covering maps f : D_f -> U with f^{-1}K inside K.

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

#include "hdim/geometry.hpp"

namespace hdim {

// The pair of annuli every map lives on: K = closure(A_rho_K) inside U = A_rho_U.
struct Domain {
    HyperbolicAnnulus U;
    HyperbolicAnnulus K;

    Domain(HyperbolicAnnulus outer, HyperbolicAnnulus inner);
    // U = A_{k^2/2}, K = closure(A_{k/2}).
    static Domain from_k(double k);

    friend bool operator==(const Domain&, const Domain&) = default;
};

// f(z) = z^{N+2} + c.
struct PowerPlusC {
    int N = 0;
    Complex c{0.0, 0.0};
    friend bool operator==(const PowerPlusC&, const PowerPlusC&) = default;
};

// f(z) = z^d.
struct CirclePower {
    int d = 2;
    friend bool operator==(const CirclePower&, const CirclePower&) = default;
};

// One inverse branch of a piecewise-linear interval map on t in [0,1]:
// t_y in [target_lo, target_hi] has the preimage ratio * t_y + translation.
struct IfsBranch {
    double ratio = 0.5;
    double translation = 0.0;
    double target_lo = 0.0;
    double target_hi = 1.0;
    friend bool operator==(const IfsBranch&, const IfsBranch&) = default;
};

// Synthetic fixture. The interval is embedded radially: t in [0,1] runs
// across the log-modulus band of K and the argument is left unchanged. The
// conformal derivative is declared to be 1/ratio on each branch.
struct LinearIfs {
    std::vector<IfsBranch> branches;
    friend bool operator==(const LinearIfs&, const LinearIfs&) = default;
};

using MapKind = std::variant<PowerPlusC, CirclePower, LinearIfs>;

class MapDescriptor {
public:
    MapDescriptor(MapKind kind, Domain domain);

    static MapDescriptor power_plus_c(int N, Complex c, Domain domain);
    static MapDescriptor circle_power(int d, Domain domain);
    static MapDescriptor linear_ifs(std::vector<IfsBranch> branches, Domain domain);
    // n branches of equal ratio spread evenly over [0,1].
    static MapDescriptor uniform_cantor(int branches, double ratio, Domain domain);

    const MapKind& kind() const noexcept { return kind_; }
    const Domain& domain() const noexcept { return domain_; }

    // N+2, d, or the branch count.
    int degree() const noexcept;
    bool synthetic() const noexcept { return std::holds_alternative<LinearIfs>(kind_); }

    friend bool operator==(const MapDescriptor&, const MapDescriptor&) = default;

private:
    MapKind kind_;
    Domain domain_;
};

// Radial embedding used by LinearIfs.
double ifs_coordinate(const HyperbolicAnnulus& K, double log_modulus);
double ifs_log_modulus(const HyperbolicAnnulus& K, double t);

Complex evaluate(const MapDescriptor& map, Complex z);

// Df(z) = |f'(z)| density_U(f(z)) / density_U(z).
double conformal_derivative(const MapDescriptor& map, Complex z);

struct PreimageSet {
    Complex target;
    std::vector<Complex> points;
    std::vector<double> derivatives;
};

// Preimages of y in closure(K). The modulus filter accepts points whose
// log-modulus is within `slack` outside the band of K.
PreimageSet preimages(const MapDescriptor& map, Complex y, double slack = 0.0);

// Same as preimages() but returns an empty set instead of throwing
// EmptyPreimage when no branch reaches y.
PreimageSet preimages_or_empty(const MapDescriptor& map, Complex y, double slack = 0.0);

// min{ log((5 + alpha/Df) / (5 - alpha/Df)), delta_big }.
double branch_radius(double derivative, const DomainConstants& constants);
double branch_radius(const MapDescriptor& map, Complex x, const DomainConstants& constants);

// Grid of (log|y|, arg y) samples over K used for suprema.
struct SampleGrid {
    std::size_t n_radial = 256;
    std::size_t n_angular = 256;
};

struct DerivativeRange {
    double sup = 0.0;       // ||Df|| over the sampled f^{-1}K
    double inf = 0.0;       // 1 / ||1/Df||
    int min_local_degree = 0;
    int max_local_degree = 0;
};

DerivativeRange derivative_range(const MapDescriptor& map, SampleGrid grid = {});

// Gamma(f) = ||Df|| * ||1/Df||.
double condition_number(const MapDescriptor& map, SampleGrid grid = {});

// degree <= sup Df^2.
bool degree_area_check(int degree, double sup_derivative);
bool degree_area_check(const MapDescriptor& map, SampleGrid grid = {});

}  // namespace hdim
