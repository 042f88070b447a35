#pragma once

// LIF membrane and three-factor STDP kernels.
//
// These are reference kernels: they are exercised by tests and the
// `demo-kernels` subcommand but do not feed the benchmark tables.
//
// Per-bin update order is fixed:
//   1. step_eligibility   (uses traces at t and spikes at t)
//   2. step_traces        (traces advance to t+1)
//   3. apply_reward       (optional, typically once at the end of the window)

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikebench/matrix.hpp"

namespace spikebench::plasticity {

/// exp(-dt / tau); throws when either argument is not positive.
double decay_factor(double dt, double tau);

struct LifConfig {
    double tau_m = 0.020;
    double v_theta = 1.0;
    double v_reset = 0.0;
    double i0 = 0.0;
    std::uint32_t refrac_bins = 2;
    double dt = 0.001;

    double alpha() const { return decay_factor(dt, tau_m); }
};

struct LifState {
    double v = 0.0;
    std::uint32_t refrac_remaining = 0;
};

struct LifStep {
    LifState state;
    bool spiked = false;
};

LifStep lif_step(const LifState& state, double input_current, const LifConfig& cfg);

struct PlasticityConfig {
    double tau_pre = 0.020;
    double tau_post = 0.020;
    double tau_elig = 1.0;
    double a_plus = 0.01;
    double a_minus = 0.012;
    double eta = 0.05;
    double w_min = 0.0;
    double w_max = 1.0;
    double dt = 0.001;
};

struct PlasticityState {
    std::vector<double> pre_traces;
    std::vector<double> post_traces;
    Matrix eligibility;  // pre x post
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double a_plus = 0.0;
    double a_minus = 0.0;
    double eta = 0.0;
    double w_min = 0.0;
    double w_max = 1.0;

    std::size_t pre_count() const noexcept { return pre_traces.size(); }
    std::size_t post_count() const noexcept { return post_traces.size(); }
};

/// Zeroed traces with decays derived from the configured time constants.
PlasticityState make_plasticity_state(std::size_t n_pre, std::size_t n_post,
                                      const PlasticityConfig& cfg = {});

/// x_hat <- beta x_hat + x ; y_hat <- gamma y_hat + y.
void step_traces(PlasticityState& st, std::span<const std::uint8_t> pre_spikes,
                 std::span<const std::uint8_t> post_spikes);

/// e_ij <- delta e_ij + A+ x_hat_i y_j - A- x_i y_hat_j, using the traces as they stand.
void step_eligibility(PlasticityState& st, std::span<const std::uint8_t> pre_spikes,
                      std::span<const std::uint8_t> post_spikes);

/// w <- clip(w + eta R e, w_min, w_max).
Matrix apply_reward(const Matrix& weights, const PlasticityState& st, double reward);

}  // namespace spikebench::plasticity
