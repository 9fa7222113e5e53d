#include "sonoloc/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

}  // namespace

void write_wav(const std::string& path, const SampleStream& stream, WavEncoding encoding) {
    const std::uint16_t format = encoding == WavEncoding::pcm16 ? 1 : 3;
    const std::uint16_t bytes_per_sample = encoding == WavEncoding::pcm16 ? 2 : 4;
    const auto rate = static_cast<std::uint32_t>(std::lround(stream.sample_rate));
    const auto data_len = static_cast<std::uint32_t>(stream.samples.size() * bytes_per_sample);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, format);
    put_u16(out, 1);  // mono
    put_u32(out, rate);
    put_u32(out, rate * bytes_per_sample);
    put_u16(out, bytes_per_sample);
    put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
    put_tag(out, "data");
    put_u32(out, data_len);

    if (encoding == WavEncoding::pcm16) {
        for (double s : stream.samples) {
            const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
            const auto q = static_cast<std::int16_t>(std::lround(clipped * 32768.0));
            put_u16(out, static_cast<std::uint16_t>(q));
        }
    } else {
        for (double s : stream.samples) {
            const float v = static_cast<float>(s);
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(out, bits);
        }
    }
    write_file(path, out);
}

SampleStream read_wav(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IoError(path + " is not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            if (body + 16 > bytes.size()) throw IoError("truncated fmt chunk");
            format = get_u16(bytes.data() + body);
            channels = get_u16(bytes.data() + body + 2);
            rate = get_u32(bytes.data() + body + 4);
            bits = get_u16(bytes.data() + body + 14);
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data_off = body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len % 2);
    }
    if (data_off == 0) throw IoError(path + " has no data chunk");
    if (channels != 1) throw IoError(path + " is not mono");
    if (data_off + data_len > bytes.size()) throw IoError(path + " data chunk truncated");

    SampleStream stream;
    stream.sample_rate = rate;
    if (format == 1 && bits == 16) {
        stream.samples.resize(data_len / 2);
        for (std::size_t i = 0; i < stream.samples.size(); ++i) {
            const auto q = static_cast<std::int16_t>(get_u16(bytes.data() + data_off + 2 * i));
            stream.samples[i] = static_cast<double>(q) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        stream.samples.resize(data_len / 4);
        for (std::size_t i = 0; i < stream.samples.size(); ++i) {
            const std::uint32_t raw = get_u32(bytes.data() + data_off + 4 * i);
            float v;
            std::memcpy(&v, &raw, 4);
            stream.samples[i] = v;
        }
    } else {
        throw IoError(path + " has an unsupported sample format");
    }
    return stream;
}

void write_raw_f32(const std::string& path, const SampleStream& stream) {
    std::vector<std::uint8_t> out;
    out.reserve(stream.samples.size() * 4);
    for (double s : stream.samples) {
        const float v = static_cast<float>(s);
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
    write_file(path, out);

    nlohmann::json sidecar{{"sample_rate", stream.sample_rate},
                           {"start_time", stream.start_time}};
    std::ofstream meta(path + ".json", std::ios::trunc);
    if (!meta) throw IoError("cannot write sidecar for " + path);
    meta << sidecar.dump(2) << "\n";
}

SampleStream read_raw_f32(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() % 4 != 0) throw IoError(path + " is not a float32 stream");

    std::ifstream meta(path + ".json");
    if (!meta) throw IoError("missing sidecar " + path + ".json");
    nlohmann::json sidecar;
    try {
        meta >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar for " + path + ": " + e.what());
    }

    SampleStream stream;
    stream.sample_rate = sidecar.at("sample_rate").get<double>();
    stream.start_time = sidecar.at("start_time").get<double>();
    stream.samples.resize(bytes.size() / 4);
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        const std::uint32_t raw = get_u32(bytes.data() + 4 * i);
        float v;
        std::memcpy(&v, &raw, 4);
        stream.samples[i] = v;
    }
    return stream;
}

}  // namespace sonoloc
