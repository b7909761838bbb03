#pragma once

// Hyperbolic geometry of round annuli A_rho = { rho < |z| < 1/rho }.
//
// The metric is normalised so that the unit disk carries 2|dz|/(1-|z|^2)
// (curvature -1). Points are handled either as complex numbers or in the
// chart (u, theta) = (log|z|, arg z) in which every annulus is a vertical
// band |u| < -log(rho).

#include <complex>
#include <cstddef>
#include <vector>

namespace hdim {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct ChartPoint {
    double u = 0.0;      // log|z|
    double theta = 0.0;  // arg z in (-pi, pi]
};

ChartPoint to_chart(Complex z);
Complex from_chart(ChartPoint p);

class HyperbolicAnnulus {
public:
    // Throws DomainError unless 0 < rho < 1.
    explicit HyperbolicAnnulus(double rho);

    double rho() const noexcept { return rho_; }
    // Half-width a = -log(rho) of the band |log|z|| < a.
    double half_width() const noexcept { return half_width_; }
    // Width W = log(1/rho^2) of the covering strip.
    double strip_width() const noexcept { return 2.0 * half_width_; }

    bool contains(Complex z) const noexcept;
    bool contains_closed(Complex z, double tol = 0.0) const noexcept;

    friend bool operator==(const HyperbolicAnnulus&, const HyperbolicAnnulus&) = default;

private:
    double rho_;
    double half_width_;
};

// Density of the hyperbolic metric at z:
//   pi / (W |z| cos(pi log|z| / W)),  W = log(1/rho^2).
double hyperbolic_density(const HyperbolicAnnulus& domain, Complex z);

// |z| * density(z); depends on log|z| only.
double radial_density_factor(const HyperbolicAnnulus& domain, double log_modulus);

// Geodesic distance. Both points are lifted to the covering strip and the
// right half-plane distance is minimised over deck translations
// k in [-kDeckWindow, kDeckWindow].
inline constexpr int kDeckWindow = 3;
double hyperbolic_distance(const HyperbolicAnnulus& domain, Complex z1, Complex z2);

// Length 2 pi^2 / log(1/rho^2) of the closed geodesic |z| = 1.
double core_geodesic_length(const HyperbolicAnnulus& domain);

// Structural constants of a pair K subset U.
struct DomainConstants {
    double ell = 0.0;          // essential loop length through K
    double alpha = 0.0;        // tanh(ell / 4)
    double delta_big = 0.0;    // tanh(delta_big / 2) = alpha / 7
    double delta_prime = 0.0;  // tanh(delta_prime / 2) = alpha / 2
    double beta = 0.0;         // contraction of Int K -> U
    double diam_K = 0.0;       // hyperbolic diameter of K inside U

    // Builds the constants from ell alone (beta and diam_K left untouched).
    static DomainConstants from_ell(double ell);
};

// Constants for concentric annuli K = closure(A_rho_K) inside U = A_rho_U.
DomainConstants domain_constants(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K);

// epsilon_ell(r) = -6 log(1 - tanh(r/2) / alpha) for 0 <= r < ell/2.
double epsilon_ell(const DomainConstants& constants, double r);

// (c_1, ..., c_n) with log c_k = sum_{j<k} epsilon_ell(delta_big * beta^-j).
std::vector<double> distortion_sequence(const DomainConstants& constants, std::size_t n,
                                        double beta);

inline constexpr double kContractionSafetyMargin = 1e-6;

// inf over a radial sample of K of density_{Int K} / density_U, minus the
// safety margin. Throws GeometryError if the result is not > 1.
double inclusion_contraction(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K,
                             std::size_t samples = 256);

// max distance in U between points of closure(K).
double hyperbolic_diameter(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K);

}  // namespace hdim
