#ifndef SONOLOC_PIPELINE_HPP
#define SONOLOC_PIPELINE_HPP

#include "sonoloc/frontend.hpp"
#include "sonoloc/pll.hpp"
#include "sonoloc/stream.hpp"

namespace sonoloc {

/// Receiver-side processing settings for one carrier channel.
struct ReceiverChain {
    BpfSpec bpf;
    Agc::Config agc;
    PllConfig pll;
};

struct DemodResult {
    SampleStream normalized;  // band-passed + gain-controlled samples
    PhaseTrack track;
};

/// Band-pass -> AGC -> phase tracking.
DemodResult demodulate(const SampleStream& rx, const ReceiverChain& chain);

}  // namespace sonoloc

#endif
