#pragma once

// Numeric primitives shared by the controller, the replay simulator and the
// metrics: sigmoid, Butterworth low-pass (causal and forward-backward),
// exponential moving average and trapezoidal work integrals.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "hipexo/error.hpp"

namespace hipexo {

struct SigmoidParams {
    double w = 1.0;    // slope, per unit of input
    double phi = 0.0;  // horizontal offset
};

inline constexpr double kSigmoidExponentClamp = 500.0;

/// 1 / (1 + exp(-w x + phi)). The exponent is clamped so the result saturates
/// instead of overflowing.
inline double sigmoid(double x, const SigmoidParams& p) {
    const double e = std::clamp(-p.w * x + p.phi, -kSigmoidExponentClamp, kSigmoidExponentClamp);
    return 1.0 / (1.0 + std::exp(e));
}

struct BiquadSpec {
    double cutoff_hz = 10.0;
    double sample_rate_hz = 250.0;

    void validate() const {
        if (!(cutoff_hz > 0.0) || !(sample_rate_hz > 0.0))
            throw ConfigError("biquad: cutoff and sample rate must be positive");
        if (!(cutoff_hz < sample_rate_hz / 2.0))
            throw ConfigError("biquad: cutoff must be below the Nyquist frequency");
    }
};

struct BiquadCoefficients {
    double b0 = 0, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;  // a0 normalized to 1
};

/// Second-order Butterworth low-pass, bilinear transform with cutoff pre-warping.
inline BiquadCoefficients butterworth_lowpass(const BiquadSpec& spec) {
    spec.validate();
    const double k = std::tan(std::numbers::pi * spec.cutoff_hz / spec.sample_rate_hz);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    BiquadCoefficients c;
    c.b0 = k2 * norm;
    c.b1 = 2.0 * c.b0;
    c.b2 = c.b0;
    c.a1 = 2.0 * (k2 - 1.0) * norm;
    c.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
    return c;
}

/// Streaming second-order low-pass (transposed direct form II).
class LowpassFilter {
public:
    LowpassFilter() = default;
    explicit LowpassFilter(const BiquadSpec& spec) : coeffs_(butterworth_lowpass(spec)), initialized_(true) {}

    bool initialized() const { return initialized_; }
    const BiquadCoefficients& coefficients() const { return coeffs_; }

    /// Zero state.
    void reset() { z1_ = z2_ = 0.0; }

    /// State of a filter that has seen `value` forever, so the next output equals it.
    void reset_steady(double value) {
        require_initialized();
        z2_ = (coeffs_.b2 - coeffs_.a2) * value;
        z1_ = (coeffs_.b1 - coeffs_.a1) * value + z2_;
    }

    double step(double x) {
        require_initialized();
        const double y = coeffs_.b0 * x + z1_;
        z1_ = coeffs_.b1 * x - coeffs_.a1 * y + z2_;
        z2_ = coeffs_.b2 * x - coeffs_.a2 * y;
        return y;
    }

private:
    void require_initialized() const {
        if (!initialized_) throw std::logic_error("LowpassFilter used before initialization");
    }

    BiquadCoefficients coeffs_{};
    double z1_ = 0.0;
    double z2_ = 0.0;
    bool initialized_ = false;
};

inline double lowpass_causal_step(LowpassFilter& state, double sample) { return state.step(sample); }

/// Samples of odd-reflection padding added at each end by lowpass_zero_lag.
inline std::size_t zero_lag_padding(const BiquadSpec& spec) {
    spec.validate();
    return static_cast<std::size_t>(std::ceil(spec.sample_rate_hz / spec.cutoff_hz)) + 6;
}

/// Forward-backward application of the second-order low-pass (fourth order, zero phase).
/// Ends are extended by odd reflection over one warm-up length, and each pass
/// starts from the steady state of its first sample.
inline std::vector<double> lowpass_zero_lag(std::span<const double> signal, const BiquadSpec& spec) {
    const std::size_t pad = zero_lag_padding(spec);
    if (signal.size() <= pad)
        throw DataError("lowpass_zero_lag: series of " + std::to_string(signal.size()) +
                        " samples is shorter than the filter warm-up (" + std::to_string(pad + 1) + ")");

    const std::size_t n = signal.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

    LowpassFilter f(spec);
    f.reset_steady(ext.front());
    for (double& v : ext) v = f.step(v);
    f.reset_steady(ext.back());
    for (auto it = ext.rbegin(); it != ext.rend(); ++it) *it = f.step(*it);

    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

struct EmaState {
    double smoothing = 0.1;
    double value = 0.0;
};

inline double ema_step(EmaState& state, double sample) {
    state.value = state.smoothing * sample + (1.0 - state.smoothing) * state.value;
    return state.value;
}

/// Trapezoidal integral of a uniformly sampled series.
inline double trapezoid(std::span<const double> y, double dt) {
    if (y.empty()) throw DataError("trapezoid: empty series");
    if (!(dt > 0.0)) throw ContractError("trapezoid: dt must be positive");
    double acc = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) acc += 0.5 * (y[i - 1] + y[i]);
    return acc * dt;
}

/// Trapezoidal integral of max(P, 0).
inline double integrate_positive(std::span<const double> power, double dt) {
    std::vector<double> pos(power.size());
    std::transform(power.begin(), power.end(), pos.begin(), [](double p) { return std::max(p, 0.0); });
    return trapezoid(pos, dt);
}

inline double integrate_abs(std::span<const double> power, double dt) {
    std::vector<double> mag(power.size());
    std::transform(power.begin(), power.end(), mag.begin(), [](double p) { return std::abs(p); });
    return trapezoid(mag, dt);
}

}  // namespace hipexo
