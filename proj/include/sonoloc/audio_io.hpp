#ifndef SONOLOC_AUDIO_IO_HPP
#define SONOLOC_AUDIO_IO_HPP

#include <string>

#include "sonoloc/stream.hpp"

namespace sonoloc {

enum class WavEncoding { pcm16, float32 };

/// Write a mono WAV file (PCM16 or IEEE float32, little-endian). PCM16
/// clips to [-1, 1) and quantizes; float32 stores samples as-is. The
/// stream's start_time is not representable in WAV and is dropped.
void write_wav(const std::string& path, const SampleStream& stream,
               WavEncoding encoding = WavEncoding::float32);

/// Read a mono WAV file written by write_wav (or any plain PCM16/float32
/// mono RIFF file). Throws IoError on malformed input.
SampleStream read_wav(const std::string& path);

/// Raw little-endian float32 samples plus a JSON sidecar (path + ".json")
/// carrying sample_rate and start_time.
void write_raw_f32(const std::string& path, const SampleStream& stream);
SampleStream read_raw_f32(const std::string& path);

}  // namespace sonoloc

#endif
