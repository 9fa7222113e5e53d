#include "sonoloc/pipeline.hpp"

namespace sonoloc {

DemodResult demodulate(const SampleStream& rx, const ReceiverChain& chain) {
    DemodResult out;
    SampleStream filtered = band_pass(rx, chain.bpf);
    Agc gain(chain.agc, rx.sample_rate);
    out.normalized.sample_rate = filtered.sample_rate;
    out.normalized.start_time = filtered.start_time;
    out.normalized.samples.resize(filtered.samples.size());
    for (std::size_t i = 0; i < filtered.samples.size(); ++i)
        out.normalized.samples[i] = gain.process(filtered.samples[i]);
    out.track = track(out.normalized, chain.pll);
    return out;
}

}  // namespace sonoloc
