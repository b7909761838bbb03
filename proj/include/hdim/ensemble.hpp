#pragma once

// I.i.d. random sequences f_n(z) = z^{N_n + 2} + c_n with N_n ~ Poisson(lambda)
// and c_n uniform on the closed disk of centre a and radius r.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hdim/maps.hpp"
#include "hdim/solver.hpp"
#include "hdim/transfer.hpp"

namespace hdim {

struct EnsembleSpec {
    Complex a{0.0, 0.0};
    double r = 0.0;
    double lambda = 0.0;
    double k = 0.99;  // U = A_{k^2/2}, K = closure(A_{k/2})
    std::size_t seq_len = 400;
    std::uint64_t seed = 1;
    std::size_t replicas = 8;

    // Throws ConfigError on r < 0, lambda < 0, k outside (0,1) or
    // |a| + r >= k^2/4.
    void validate() const;
    Domain domain() const { return Domain::from_k(k); }
};

// Uniform double in [0,1) addressed by (seed, stream, index, lane); the
// splitmix64 finaliser mixes the counter, so draws do not depend on the
// order in which they are requested.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                       std::uint64_t lane);

// Inverse-CDF Poisson sample for small lambda.
int poisson_inverse(double lambda, double u);

struct MapDraw {
    int N = 0;
    Complex c{0.0, 0.0};
};

// Draws for replica `replica` of the spec.
std::vector<MapDraw> sample_draws(const EnsembleSpec& spec, std::size_t replica = 0);

// Sampled maps, each checked for expansion on K and the degree/area bound.
// Throws ValidationError on a violation.
std::vector<MapDescriptor> sample_sequence(const EnsembleSpec& spec, std::size_t replica = 0);

struct RandomOptions {
    GridShape grid{64, 128};
    std::size_t burn_in = 20;
    double s_min = 0.0;
    double s_max = 2.2;
    double tol = 1e-4;
    std::size_t max_iter = 60;
    // Stencils of a whole sequence are cached when they fit in this budget.
    std::size_t plan_cache_bytes = std::size_t{1} << 30;
};

// Cocycle mean over replicas with its standard error; lower/upper are the
// replica means of (1/n) log m_n and (1/n) log M_n of the same runs.
PressureEstimate random_pressure(const EnsembleSpec& spec, double s, RandomOptions options = {});

// Per replica, simultaneous bisection for the zeros of the cocycle mean and
// of both bracket curves. s_crit is the replica mean with its standard error
// in diagnostics; s_lower/s_upper are the extreme bracket roots.
DimensionResult random_dimension(const EnsembleSpec& spec, RandomOptions options = {});

// Replica-level zeros behind random_dimension.
struct ReplicaRoot {
    double s_crit = 0.0;
    double s_lower = 0.0;
    double s_upper = 0.0;
    double bracket_width = 0.0;
    std::size_t clamped_points = 0;
};
ReplicaRoot replica_dimension(const EnsembleSpec& spec, std::size_t replica,
                              const RandomOptions& options);

// Bounds from the sample statistics of replica 0.
DimensionBounds ensemble_bounds(const EnsembleSpec& spec, SampleGrid grid = {64, 64});

enum class SweepAxis { a_modulus, r, lambda };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepSample {
    double value = 0.0;
    double d = 0.0;
    double std_error = 0.0;
    double bracket_width = 0.0;
    double s_lower = 0.0;
    double s_upper = 0.0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::lambda;
    std::vector<SweepSample> samples;  // sorted by value
    double fit_residual = 0.0;          // max |d - p(value)| for the least-squares cubic
    double pooled_std_error = 0.0;      // sqrt(mean std_error^2)
};

// Every point reuses base.seed, so the sweep uses common random numbers.
SweepResult parameter_sweep(const EnsembleSpec& base, SweepAxis axis,
                            const std::vector<double>& values, RandomOptions options = {});

// Max residual of the least-squares polynomial of degree min(degree, n-1).
double polynomial_fit_residual(const std::vector<double>& x, const std::vector<double>& y,
                               int degree);

}  // namespace hdim
