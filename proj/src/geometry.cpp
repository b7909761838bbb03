#include "hdim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

void require_inside(const HyperbolicAnnulus& domain, Complex z, const char* what) {
    if (!domain.contains(z)) {
        std::ostringstream msg;
        msg << what << ": point " << z << " is outside the open annulus of rho "
            << domain.rho();
        throw DomainError(msg.str());
    }
}

// Distance in the covering strip between chart points, with the angular
// separation already unwrapped.
double strip_distance(double width, double u1, double u2, double dtheta) {
    const double a = std::sinh(kPi * dtheta / (2.0 * width));
    const double b = std::sin(kPi * (u1 - u2) / (2.0 * width));
    const double denom = std::cos(kPi * u1 / width) * std::cos(kPi * u2 / width);
    return 2.0 * std::asinh(std::sqrt((a * a + b * b) / denom));
}

}  // namespace

ChartPoint to_chart(Complex z) { return {std::log(std::abs(z)), std::arg(z)}; }

Complex from_chart(ChartPoint p) { return std::polar(std::exp(p.u), p.theta); }

HyperbolicAnnulus::HyperbolicAnnulus(double rho) : rho_(rho), half_width_(0.0) {
    if (!(rho > 0.0 && rho < 1.0)) {
        std::ostringstream msg;
        msg << "annulus parameter rho must lie in (0,1), got " << rho;
        throw DomainError(msg.str());
    }
    half_width_ = -std::log(rho);
}

bool HyperbolicAnnulus::contains(Complex z) const noexcept {
    const double r = std::abs(z);
    if (!(r > 0.0)) return false;
    return std::abs(std::log(r)) < half_width_;
}

bool HyperbolicAnnulus::contains_closed(Complex z, double tol) const noexcept {
    const double r = std::abs(z);
    if (!(r > 0.0)) return false;
    return std::abs(std::log(r)) <= half_width_ + tol;
}

double radial_density_factor(const HyperbolicAnnulus& domain, double log_modulus) {
    const double width = domain.strip_width();
    const double c = std::cos(kPi * log_modulus / width);
    if (!(std::abs(log_modulus) < domain.half_width()) || !(c > 0.0)) {
        std::ostringstream msg;
        msg << "log-modulus " << log_modulus << " is outside the band of half-width "
            << domain.half_width();
        throw DomainError(msg.str());
    }
    return kPi / (width * c);
}

double hyperbolic_density(const HyperbolicAnnulus& domain, Complex z) {
    require_inside(domain, z, "hyperbolic_density");
    const double r = std::abs(z);
    return radial_density_factor(domain, std::log(r)) / r;
}

double hyperbolic_distance(const HyperbolicAnnulus& domain, Complex z1, Complex z2) {
    require_inside(domain, z1, "hyperbolic_distance");
    require_inside(domain, z2, "hyperbolic_distance");
    const ChartPoint p1 = to_chart(z1);
    const ChartPoint p2 = to_chart(z2);
    const double width = domain.strip_width();
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = -kDeckWindow; k <= kDeckWindow; ++k) {
        const double d = strip_distance(width, p1.u, p2.u, p1.theta - p2.theta + kTwoPi * k);
        if (d < best) {
            best = d;
            best_k = k;
        }
    }
    if (std::abs(best_k) == kDeckWindow) {
        throw ConvergenceError("hyperbolic_distance: minimum attained at the edge of the deck window");
    }
    return best;
}

double core_geodesic_length(const HyperbolicAnnulus& domain) {
    return 2.0 * kPi * kPi / domain.strip_width();
}

DomainConstants DomainConstants::from_ell(double ell) {
    if (!(ell > 0.0)) throw DomainError("loop length ell must be positive");
    DomainConstants c;
    c.ell = ell;
    c.alpha = std::tanh(ell / 4.0);
    c.delta_big = 2.0 * std::atanh(c.alpha / 7.0);
    c.delta_prime = 2.0 * std::atanh(c.alpha / 2.0);
    return c;
}

DomainConstants domain_constants(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K) {
    // K = closure(A_rho_K) contains the unit circle, so the shortest essential
    // loop through K is the core geodesic of U.
    DomainConstants c = DomainConstants::from_ell(core_geodesic_length(U));
    c.beta = inclusion_contraction(U, K);
    c.diam_K = hyperbolic_diameter(U, K);
    return c;
}

double epsilon_ell(const DomainConstants& constants, double r) {
    if (r < 0.0) throw DomainError("epsilon_ell: negative radius");
    if (r == 0.0) return 0.0;
    if (!(r < constants.ell / 2.0)) {
        std::ostringstream msg;
        msg << "epsilon_ell: radius " << r << " must be below ell/2 = " << constants.ell / 2.0;
        throw DomainError(msg.str());
    }
    const double q = std::tanh(r / 2.0) / constants.alpha;
    return -6.0 * std::log1p(-q);
}

std::vector<double> distortion_sequence(const DomainConstants& constants, std::size_t n,
                                        double beta) {
    if (n == 0) throw DomainError("distortion_sequence: n must be >= 1");
    if (!(beta > 1.0)) throw DomainError("distortion_sequence: beta must exceed 1");
    std::vector<double> c(n);
    double log_c = 0.0;
    double radius = constants.delta_big;
    for (std::size_t k = 0; k < n; ++k) {
        log_c += epsilon_ell(constants, radius);
        c[k] = std::exp(log_c);
        radius /= beta;
    }
    return c;
}

double inclusion_contraction(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K,
                             std::size_t samples) {
    if (!(U.rho() <= K.rho())) {
        throw GeometryError("inclusion_contraction: K is not contained in U");
    }
    if (samples == 0) throw DomainError("inclusion_contraction: empty sample");
    // Both densities are rotation invariant, so a radial sample of the
    // interior of K is a full sample of it.
    const double a = K.half_width();
    double ratio_inf = std::numeric_limits<double>::infinity();
    // Nodes -a..a with u = 0 included; the interior endpoints are open, so
    // they are pulled in by half a step.
    const std::size_t m = samples | 1;
    const double step = 2.0 * a / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = (static_cast<double>(i) - static_cast<double>(m / 2)) * step;
        const double ratio = radial_density_factor(K, u) / radial_density_factor(U, u);
        ratio_inf = std::min(ratio_inf, ratio);
    }
    const double beta = ratio_inf - kContractionSafetyMargin;
    if (!(beta > 1.0)) {
        std::ostringstream msg;
        msg << "inclusion_contraction: beta = " << beta << " <= 1, K is not compactly contained in U";
        throw GeometryError(msg.str());
    }
    return beta;
}

double hyperbolic_diameter(const HyperbolicAnnulus& U, const HyperbolicAnnulus& K) {
    if (!(U.rho() < K.rho())) {
        throw GeometryError("hyperbolic_diameter: K is not compactly contained in U");
    }
    const double a = K.half_width();
    const double width = U.strip_width();
    // Distances grow with the angular gap and with the distance to the
    // boundary, so the extremes sit on the boundary circles of K.
    double best = 0.0;
    for (double u1 : {-a, a}) {
        for (double u2 : {-a, a}) {
            best = std::max(best, strip_distance(width, u1, u2, kPi));
        }
    }
    return best;
}

}  // namespace hdim
