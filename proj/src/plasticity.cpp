#include "spikebench/plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spikebench::plasticity {

double decay_factor(double dt, double tau) {
    if (!(dt > 0.0) || !(tau > 0.0)) {
        throw std::invalid_argument("decay_factor: dt and tau must be positive");
    }
    return std::exp(-dt / tau);
}

LifStep lif_step(const LifState& state, double input_current, const LifConfig& cfg) {
    LifStep out{state, false};
    if (state.refrac_remaining > 0) {
        out.state.v = cfg.v_reset;
        --out.state.refrac_remaining;
        return out;
    }
    const double a = cfg.alpha();
    out.state.v = a * state.v + (1.0 - a) * input_current + cfg.i0;
    if (out.state.v >= cfg.v_theta) {
        out.spiked = true;
        out.state.v = cfg.v_reset;
        out.state.refrac_remaining = cfg.refrac_bins;
    }
    return out;
}

PlasticityState make_plasticity_state(std::size_t n_pre, std::size_t n_post,
                                      const PlasticityConfig& cfg) {
    if (cfg.w_min > cfg.w_max) throw std::invalid_argument("plasticity: w_min > w_max");
    PlasticityState st;
    st.pre_traces.assign(n_pre, 0.0);
    st.post_traces.assign(n_post, 0.0);
    st.eligibility = Matrix(n_pre, n_post);
    st.beta = decay_factor(cfg.dt, cfg.tau_pre);
    st.gamma = decay_factor(cfg.dt, cfg.tau_post);
    st.delta = decay_factor(cfg.dt, cfg.tau_elig);
    st.a_plus = cfg.a_plus;
    st.a_minus = cfg.a_minus;
    st.eta = cfg.eta;
    st.w_min = cfg.w_min;
    st.w_max = cfg.w_max;
    return st;
}

namespace {

void require_lengths(const PlasticityState& st, std::size_t pre, std::size_t post) {
    if (pre != st.pre_count() || post != st.post_count()) {
        throw std::invalid_argument("plasticity: spike vector length mismatch");
    }
}

}  // namespace

void step_traces(PlasticityState& st, std::span<const std::uint8_t> pre_spikes,
                 std::span<const std::uint8_t> post_spikes) {
    require_lengths(st, pre_spikes.size(), post_spikes.size());
    for (std::size_t i = 0; i < st.pre_traces.size(); ++i) {
        st.pre_traces[i] = st.beta * st.pre_traces[i] + pre_spikes[i];
    }
    for (std::size_t j = 0; j < st.post_traces.size(); ++j) {
        st.post_traces[j] = st.gamma * st.post_traces[j] + post_spikes[j];
    }
}

void step_eligibility(PlasticityState& st, std::span<const std::uint8_t> pre_spikes,
                      std::span<const std::uint8_t> post_spikes) {
    require_lengths(st, pre_spikes.size(), post_spikes.size());
    for (std::size_t i = 0; i < st.pre_count(); ++i) {
        auto row = st.eligibility.row(i);
        const double ltp = st.a_plus * st.pre_traces[i];
        const double x = pre_spikes[i];
        for (std::size_t j = 0; j < st.post_count(); ++j) {
            row[j] = st.delta * row[j] + ltp * post_spikes[j] - st.a_minus * x * st.post_traces[j];
        }
    }
}

Matrix apply_reward(const Matrix& weights, const PlasticityState& st, double reward) {
    require_same_shape(weights, st.eligibility, "apply_reward");
    Matrix out = weights;
    auto w = out.data();
    const auto e = st.eligibility.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = std::clamp(w[k] + st.eta * reward * e[k], st.w_min, st.w_max);
    }
    return out;
}

}  // namespace spikebench::plasticity
