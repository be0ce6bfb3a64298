#pragma once

#include <functional>
#include <map>
#include <memory>

#include "fitsim/dae.hpp"

namespace fitsim {

struct TimeGrid {
    double t0 = 0.0, t_end = 0.0, dt = 0.0;

    int steps() const;
    void validate() const;
};

struct TimeSeries {
    std::vector<double> t;
    std::vector<std::string> scalar_names;
    std::map<std::string, std::vector<double>> scalars;
    std::vector<Vec> states;  // filled when store_state_every > 0
    int state_stride = 0;

    void write_csv(const std::string& path) const;
};

using ScalarFn = std::function<double(int step, double t, const Vec& x)>;

struct EulerOptions {
    std::vector<std::pair<std::string, ScalarFn>> extractors;
    int store_state_every = 0;
    std::function<void(int step, double t, const Vec& x)> observer;
};

/// One implicit Euler step solver with a cached factorisation:
/// (M/dt + K) x_{n+1} = r(t_{n+1}) + M/dt x_n.
class EulerStepper {
public:
    EulerStepper(const DaeSystem& sys, double dt);
    ~EulerStepper();
    EulerStepper(EulerStepper&&) noexcept;

    const Vec& state() const { return x_; }
    double time() const { return t_; }
    void advance();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Vec x_;
    double t_;
};

TimeSeries implicit_euler(const DaeSystem& sys, const TimeGrid& tg, const EulerOptions& opts = {});

struct LeapfrogOptions {
    std::vector<std::pair<std::string, ScalarFn>> extractors;  // x = [h_half; e] at step times
    double energy_cap = 0.0;  // stop early when the held energy exceeds cap * E(0)
};

/// Staggered leapfrog for the lossless full-wave system. The recorded energy
/// scalar E_em is the scheme's held (mixed-time) quadratic, which is
/// conserved exactly below the CFL limit. Stability is the caller's concern:
/// dt above the CFL bound is accepted and diverges.
TimeSeries leapfrog(const DaeSystem& sys, const TimeGrid& tg, const Vec& e0, const Vec& h_half,
                    const LeapfrogOptions& opts = {});

/// Uniform-grid CFL estimate dt = 1 / (c * sqrt(sum 1/min_spacing^2)) with the
/// fastest cell wave speed; an estimate only for graded grids.
double cfl_timestep(const Grid& grid, const SubdomainMap& sub);

struct InitViolation {
    std::string name;
    double rel_residual;
};

struct InitReport {
    bool consistent = true;
    std::vector<InitViolation> violations;
};

/// Evaluates the formulation's stored consistency predicates at x0.
InitReport consistent_init(const DaeSystem& sys, const Vec& x0, double rel_tol = 1e-10);

}  // namespace fitsim
