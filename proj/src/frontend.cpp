#include "sonoloc/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

constexpr double kPi = std::numbers::pi;

double kaiser_i0(double x) {
    double term = 1.0, sum = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

}  // namespace

void BpfSpec::validate(double sample_rate) const {
    if (!(center - half_width > 0.0))
        throw InvalidSpec("band-pass lower edge must be positive");
    if (!(center + half_width < sample_rate / 2.0))
        throw InvalidSpec("band-pass upper edge must stay below Nyquist");
    if (taps < 3 || taps % 2 == 0)
        throw InvalidSpec("tap count must be odd and at least 3");
    if (!(half_width > 0.0)) throw InvalidSpec("half width must be positive");
    if (!(stop_attenuation > 0.0)) throw InvalidSpec("stop attenuation must be positive");
}

double bpf_group_delay(const BpfSpec& spec, double sample_rate) {
    return static_cast<double>(spec.taps - 1) / 2.0 / sample_rate;
}

std::vector<double> bpf_design(const BpfSpec& spec, double sample_rate) {
    spec.validate(sample_rate);
    const int n = static_cast<int>(spec.taps);
    const int half = (n - 1) / 2;

    // Kaiser beta from the required attenuation.
    const double a = spec.stop_attenuation + 10.0;  // design margin
    double beta = 0.0;
    if (a > 50.0)
        beta = 0.1102 * (a - 8.7);
    else if (a >= 21.0)
        beta = 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);

    // Ideal band-pass truncated and windowed. The brick-wall edges sit at
    // 1.5*half_width so the transition band falls between the flat passband
    // (|f - center| <= half_width) and the stopband (>= 2*half_width).
    const double edge = 1.5 * spec.half_width;
    const double f_lo = std::max(1.0, spec.center - edge);
    const double f_hi = std::min(sample_rate / 2.0 - 1.0, spec.center + edge);
    const double w1 = 2.0 * kPi * f_lo / sample_rate;
    const double w2 = 2.0 * kPi * f_hi / sample_rate;

    std::vector<double> h(static_cast<std::size_t>(n));
    const double i0b = kaiser_i0(beta);
    for (int k = 0; k < n; ++k) {
        const double m = static_cast<double>(k - half);
        double ideal;
        if (k == half)
            ideal = (w2 - w1) / kPi;
        else
            ideal = (std::sin(w2 * m) - std::sin(w1 * m)) / (kPi * m);
        const double r = m / static_cast<double>(half + 1);
        const double win = kaiser_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[static_cast<std::size_t>(k)] = ideal * win;
    }

    // Normalize to unit gain at the center frequency.
    const double wc = 2.0 * kPi * spec.center / sample_rate;
    double re = 0.0, im = 0.0;
    for (int k = 0; k < n; ++k) {
        re += h[static_cast<std::size_t>(k)] * std::cos(wc * k);
        im -= h[static_cast<std::size_t>(k)] * std::sin(wc * k);
    }
    const double mag = std::sqrt(re * re + im * im);
    for (double& c : h) c /= mag;
    return h;
}

SampleStream band_pass(const SampleStream& stream, const BpfSpec& spec) {
    const std::vector<double> h = bpf_design(spec, stream.sample_rate);
    const int n = static_cast<int>(stream.samples.size());
    const int taps = static_cast<int>(h.size());
    const int half = (taps - 1) / 2;

    SampleStream out;
    out.sample_rate = stream.sample_rate;
    out.start_time = stream.start_time;
    out.samples.assign(stream.samples.size(), 0.0);

    // y[i] = sum_k h[k] * x[i + half - k]: group delay folded out so output
    // sample i is aligned with input sample i.
    for (int i = 0; i < n; ++i) {
        const int base = i + half;
        const int k_lo = std::max(0, base - (n - 1));
        const int k_hi = std::min(taps - 1, base);
        double acc = 0.0;
        for (int k = k_lo; k <= k_hi; ++k)
            acc += h[static_cast<std::size_t>(k)] *
                   stream.samples[static_cast<std::size_t>(base - k)];
        out.samples[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

Agc::Agc(Config config, double sample_rate)
    : cfg_(config), sample_rate_(sample_rate) {
    if (!(cfg_.window > 0.0)) throw InvalidParams("AGC window must be positive");
    const std::size_t len =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg_.window * sample_rate_));
    window_sq_.assign(len, 0.0);
    max_step_ = std::pow(10.0, cfg_.max_slew_db_per_ms / 20.0 / (sample_rate_ / 1000.0));
}

void Agc::reset() {
    std::fill(window_sq_.begin(), window_sq_.end(), 0.0);
    pos_ = 0;
    filled_ = 0;
    sum_sq_ = 0.0;
    gain_ = 1.0;
}

double Agc::process(double sample) {
    sum_sq_ -= window_sq_[pos_];
    window_sq_[pos_] = sample * sample;
    sum_sq_ += window_sq_[pos_];
    pos_ = (pos_ + 1) % window_sq_.size();
    if (filled_ < window_sq_.size()) ++filled_;

    const double rms = std::sqrt(std::max(0.0, sum_sq_) / static_cast<double>(filled_));
    if (rms > cfg_.silence_rms && filled_ == window_sq_.size()) {
        const double desired = cfg_.target_rms / rms;
        gain_ = std::clamp(desired, gain_ / max_step_, gain_ * max_step_);
    }
    return sample * gain_;
}

SampleStream agc(const SampleStream& stream, double window) {
    Agc::Config cfg;
    cfg.window = window;
    Agc state(cfg, stream.sample_rate);
    SampleStream out;
    out.sample_rate = stream.sample_rate;
    out.start_time = stream.start_time;
    out.samples.resize(stream.samples.size());
    for (std::size_t i = 0; i < stream.samples.size(); ++i)
        out.samples[i] = state.process(stream.samples[i]);
    return out;
}

}  // namespace sonoloc
