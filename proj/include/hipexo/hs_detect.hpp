#pragma once

// Heel-strike detection from thigh-normal and pelvis accelerations.
//
// Each channel is peak-picked against an adaptive threshold
// (running median + k * MAD over a trailing window). A candidate is confirmed
// once `confirm_samples` later samples have arrived without exceeding it, so
// events are reported with a fixed delay. Thigh peaks are attributed to their
// own side; pelvis peaks to the leading (more flexed) leg at the peak sample.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "hipexo/error.hpp"
#include "hipexo/modulation.hpp"

namespace hipexo {

enum class Side : std::uint8_t { left = 0, right = 1 };

inline constexpr std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }
inline constexpr std::size_t index(Side s) { return static_cast<std::size_t>(s); }

enum class HsSource : std::uint8_t { thigh, pelvis, fused };

inline constexpr std::string_view to_string(HsSource s) {
    switch (s) {
        case HsSource::thigh: return "thigh";
        case HsSource::pelvis: return "pelvis";
        case HsSource::fused: return "fused";
    }
    return "unknown";
}

struct ImuFrame {
    double thigh_accel_normal_l = 0.0;
    double thigh_accel_normal_r = 0.0;
    double pelvis_accel = 0.0;
    double timestamp = 0.0;

    bool finite() const {
        return std::isfinite(thigh_accel_normal_l) && std::isfinite(thigh_accel_normal_r) &&
               std::isfinite(pelvis_accel) && std::isfinite(timestamp);
    }
};

struct HsEvent {
    Side side = Side::left;
    double timestamp = 0.0;
    BilateralSample thigh_snapshot;
    HsSource source = HsSource::thigh;
};

struct HsDetectorConfig {
    double sample_rate_hz = 250.0;
    double window_s = 2.0;
    double mad_k = 4.0;
    double refractory_s = 0.4;
    std::size_t confirm_samples = 3;
    double min_history_s = 0.5;

    std::size_t window_samples() const { return static_cast<std::size_t>(std::lround(window_s * sample_rate_hz)); }
    std::size_t min_history_samples() const {
        return static_cast<std::size_t>(std::lround(min_history_s * sample_rate_hz));
    }

    void validate() const {
        if (!(sample_rate_hz > 0.0)) throw ConfigError("hs detector: sample rate must be positive");
        if (!(window_s > 0.0) || !(min_history_s >= 0.0) || min_history_s > window_s)
            throw ConfigError("hs detector: need 0 <= min_history_s <= window_s, window_s > 0");
        if (!(mad_k > 0.0)) throw ConfigError("hs detector: MAD multiplier must be positive");
        if (!(refractory_s >= 0.0)) throw ConfigError("hs detector: refractory period must be >= 0");
        if (confirm_samples < 1) throw ConfigError("hs detector: confirm_samples must be >= 1");
    }
};

/// Per-side refractory bookkeeping.
class RefractoryGate {
public:
    explicit RefractoryGate(double period_s = 0.4) : period_(period_s) {}

    bool check(Side side, double timestamp) const {
        const auto& last = last_[index(side)];
        return !last || timestamp - *last >= period_;
    }
    void record(Side side, double timestamp) { last_[index(side)] = timestamp; }
    void reset() { last_ = {}; }
    double period() const { return period_; }

private:
    double period_;
    std::array<std::optional<double>, 2> last_{};
};

inline bool refractory_check(const RefractoryGate& gate, Side side, double timestamp) {
    return gate.check(side, timestamp);
}

namespace detail {

/// Trailing-window robust threshold: median + k * MAD. Uses the lower median so
/// that scaling the input by a power of two scales the threshold exactly.
class AdaptiveThreshold {
public:
    explicit AdaptiveThreshold(std::size_t window = 500) : window_(window) {}

    struct Level {
        double median = 0.0;
        double mad = 0.0;
        bool ready = false;
    };

    Level level(std::size_t min_samples) {
        Level out;
        if (history_.size() < std::max<std::size_t>(min_samples, 3)) return out;
        scratch_.assign(history_.begin(), history_.end());
        const auto mid = scratch_.begin() + static_cast<std::ptrdiff_t>((scratch_.size() - 1) / 2);
        std::nth_element(scratch_.begin(), mid, scratch_.end());
        out.median = *mid;
        for (double& v : scratch_) v = std::abs(v - out.median);
        std::nth_element(scratch_.begin(), mid, scratch_.end());
        out.mad = *mid;
        out.ready = true;
        return out;
    }

    void push(double v) {
        history_.push_back(v);
        if (history_.size() > window_) history_.pop_front();
    }

    void clear() { history_.clear(); }

private:
    std::size_t window_;
    std::deque<double> history_;
    std::vector<double> scratch_;
};

/// Local-maximum peak picker with a fixed confirmation delay.
class PeakPicker {
public:
    struct Sample {
        double value = 0.0;
        double threshold = 0.0;
        bool armed = false;  // threshold valid
        BilateralSample bilateral;
    };

    explicit PeakPicker(std::size_t confirm = 3) : confirm_(confirm) {}

    /// Returns the confirmed peak, if the sample `confirm` steps back is one.
    std::optional<Sample> push(const Sample& s) {
        buffer_.push_back(s);
        if (buffer_.size() > 2 * confirm_ + 1) buffer_.pop_front();
        if (buffer_.size() < confirm_ + 1) return std::nullopt;

        const std::size_t c = buffer_.size() - 1 - confirm_;
        const Sample& cand = buffer_[c];
        if (!cand.armed || !(cand.value > cand.threshold)) return std::nullopt;
        for (std::size_t i = 0; i < c; ++i)
            if (buffer_[i].value >= cand.value) return std::nullopt;
        for (std::size_t i = c + 1; i < buffer_.size(); ++i)
            if (buffer_[i].value > cand.value) return std::nullopt;
        return cand;
    }

    void clear() { buffer_.clear(); }

private:
    std::size_t confirm_;
    std::deque<Sample> buffer_;
};

}  // namespace detail

class HsDetector {
public:
    explicit HsDetector(HsDetectorConfig cfg = {})
        : cfg_(cfg),
          gate_(cfg.refractory_s),
          thresholds_{detail::AdaptiveThreshold(cfg.window_samples()),
                      detail::AdaptiveThreshold(cfg.window_samples()),
                      detail::AdaptiveThreshold(cfg.window_samples())},
          pickers_{detail::PeakPicker(cfg.confirm_samples), detail::PeakPicker(cfg.confirm_samples),
                   detail::PeakPicker(cfg.confirm_samples)} {
        cfg_.validate();
    }

    const HsDetectorConfig& config() const { return cfg_; }
    const RefractoryGate& refractory() const { return gate_; }

    void reset() {
        gate_.reset();
        for (auto& t : thresholds_) t.clear();
        for (auto& p : pickers_) p.clear();
        last_timestamp_.reset();
    }

    /// Feeds one frame; returns at most one event per side (left first).
    std::vector<HsEvent> step(const ImuFrame& frame, const BilateralSample& bilateral) {
        if (last_timestamp_ && !(frame.timestamp > *last_timestamp_))
            throw StreamError("hs detector: timestamps must be strictly increasing");
        last_timestamp_ = frame.timestamp;

        const std::array<double, 3> values{frame.thigh_accel_normal_l, frame.thigh_accel_normal_r,
                                           frame.pelvis_accel};
        std::array<std::optional<detail::PeakPicker::Sample>, 3> peaks;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const auto lvl = thresholds_[ch].level(cfg_.min_history_samples());
            detail::PeakPicker::Sample s;
            s.value = values[ch];
            s.armed = lvl.ready && lvl.mad > 0.0;
            s.threshold = lvl.median + cfg_.mad_k * lvl.mad;
            s.bilateral = bilateral;
            s.bilateral.timestamp = frame.timestamp;
            peaks[ch] = pickers_[ch].push(s);
            thresholds_[ch].push(values[ch]);
        }

        std::array<std::optional<HsEvent>, 2> per_side;
        for (Side side : {Side::left, Side::right}) {
            if (const auto& pk = peaks[index(side)])
                per_side[index(side)] = HsEvent{side, pk->bilateral.timestamp, pk->bilateral, HsSource::thigh};
        }
        if (const auto& pk = peaks[2]) {
            const Side lead = pk->bilateral.theta_thigh_l >= pk->bilateral.theta_thigh_r ? Side::left : Side::right;
            auto& slot = per_side[index(lead)];
            if (slot)
                slot->source = HsSource::fused;
            else
                slot = HsEvent{lead, pk->bilateral.timestamp, pk->bilateral, HsSource::pelvis};
        }

        std::vector<HsEvent> out;
        for (auto& ev : per_side) {
            if (!ev || !gate_.check(ev->side, ev->timestamp)) continue;
            gate_.record(ev->side, ev->timestamp);
            out.push_back(*ev);
        }
        return out;
    }

private:
    HsDetectorConfig cfg_;
    RefractoryGate gate_;
    std::array<detail::AdaptiveThreshold, 3> thresholds_;
    std::array<detail::PeakPicker, 3> pickers_;
    std::optional<double> last_timestamp_;
};

inline std::vector<HsEvent> detect_step(HsDetector& detector, const ImuFrame& frame, const BilateralSample& bilateral) {
    return detector.step(frame, bilateral);
}

}  // namespace hipexo
