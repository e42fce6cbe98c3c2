#include "geocloud/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "geocloud/error.hpp"
#include "geocloud/fft.hpp"

namespace geocloud {

namespace {

template <typename T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

AudioSignal load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    char tag[4];
    in.read(tag, 4);
    if (std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("not a RIFF file");
    read_le<std::uint32_t>(in);
    in.read(tag, 4);
    if (std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("not a WAVE file");

    std::uint16_t audio_format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    std::vector<char> payload;
    bool have_fmt = false, have_data = false;

    while (in.read(tag, 4)) {
        auto chunk_size = read_le<std::uint32_t>(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            audio_format = read_le<std::uint16_t>(in);
            channels = read_le<std::uint16_t>(in);
            sample_rate = read_le<std::uint32_t>(in);
            read_le<std::uint32_t>(in);  // byte rate
            read_le<std::uint16_t>(in);  // block align
            bits = read_le<std::uint16_t>(in);
            if (chunk_size > 16)
                in.seekg(chunk_size - 16 + (chunk_size & 1), std::ios::cur);
            else if (chunk_size & 1)
                in.seekg(1, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            payload.resize(chunk_size);
            in.read(payload.data(), chunk_size);
            if (chunk_size & 1) in.seekg(1, std::ios::cur);
            have_data = true;
        } else {
            in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    if (!have_fmt || !have_data) throw FormatError("WAV file lacks fmt/data chunks");
    if (channels == 0 || channels > 2)
        throw FormatError("unsupported channel count " + std::to_string(channels));

    const bool pcm16 = audio_format == 1 && bits == 16;
    const bool float32 = audio_format == 3 && bits == 32;
    if (!pcm16 && !float32)
        throw FormatError("unsupported encoding (format " + std::to_string(audio_format) +
                          ", " + std::to_string(bits) + " bits); expected PCM16 or float32");

    AudioSignal signal;
    signal.sample_rate = static_cast<double>(sample_rate);
    const std::size_t bytes_per = bits / 8;
    const std::size_t frames = payload.size() / (bytes_per * channels);
    signal.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const char* p = payload.data() + (i * channels + c) * bytes_per;
            if (pcm16) {
                std::int16_t v;
                std::memcpy(&v, p, 2);
                acc += static_cast<double>(v) / 32768.0;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                acc += static_cast<double>(v);
            }
        }
        signal.samples[i] = acc / static_cast<double>(channels);
    }
    return signal;
}

void write_wav(const AudioSignal& signal, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const auto n = static_cast<std::uint32_t>(signal.samples.size());
    const std::uint32_t data_bytes = n * 2;

    out.write("RIFF", 4);
    write_le<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_le<std::uint32_t>(out, 16);
    write_le<std::uint16_t>(out, 1);  // PCM
    write_le<std::uint16_t>(out, 1);  // mono
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
    write_le<std::uint16_t>(out, 2);
    write_le<std::uint16_t>(out, 16);
    out.write("data", 4);
    write_le<std::uint32_t>(out, data_bytes);
    for (double s : signal.samples) {
        double scaled = std::round(s * 32768.0);
        scaled = std::clamp(scaled, -32768.0, 32767.0);
        write_le<std::int16_t>(out, static_cast<std::int16_t>(scaled));
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

std::vector<double> hann_window(std::size_t n_fft) {
    if (n_fft < 2) throw SizeError("Hann window needs N >= 2");
    std::vector<double> w(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                     static_cast<double>(n_fft - 1)));
    return w;
}

Spectrogram stft(const AudioSignal& signal, std::size_t n_fft, std::size_t hop) {
    if (hop == 0) throw SizeError("hop must be >= 1");
    if (signal.samples.size() < n_fft)
        throw TooShort("signal has " + std::to_string(signal.samples.size()) +
                       " samples, need at least " + std::to_string(n_fft));

    Spectrogram spec;
    spec.n_fft = n_fft;
    spec.hop = hop;
    spec.frames = (signal.samples.size() - n_fft) / hop + 1;
    spec.data.resize(spec.frames * spec.bins());

    const auto window = hann_window(n_fft);
    std::vector<std::complex<double>> segment(n_fft);
    for (std::size_t f = 0; f < spec.frames; ++f) {
        const std::size_t offset = f * hop;
        for (std::size_t i = 0; i < n_fft; ++i)
            segment[i] = {signal.samples[offset + i] * window[i], 0.0};
        auto transformed = fft_forward(segment);
        for (std::size_t k = 0; k < spec.bins(); ++k) spec.data[f * spec.bins() + k] = transformed[k];
    }
    return spec;
}

std::vector<double> log_magnitude(const Spectrogram& spec) {
    std::vector<double> out(spec.data.size());
    for (std::size_t i = 0; i < spec.data.size(); ++i)
        out[i] = std::log(1.0e-8 + std::abs(spec.data[i]));
    return out;
}

PointCloud spectrogram_to_cloud(const Spectrogram& spec, double sample_rate) {
    const auto mag = log_magnitude(spec);
    PointCloud cloud(3, "audio");
    for (std::size_t f = 0; f < spec.frames; ++f)
        for (std::size_t k = 0; k < spec.bins(); ++k) {
            double freq = static_cast<double>(k) * sample_rate / static_cast<double>(spec.n_fft);
            double t = static_cast<double>(f) * static_cast<double>(spec.hop) / sample_rate;
            double p[3] = {freq, t, mag[f * spec.bins() + k]};
            cloud.push_back(p);
        }
    return cloud;
}

PointCloud concat_clouds(const std::vector<PointCloud>& clouds) {
    if (clouds.empty()) throw EmptyRequest("nothing to concatenate");
    PointCloud out(clouds.front().dim(), clouds.front().label());
    for (const auto& c : clouds) {
        if (c.dim() != out.dim()) throw DimensionError("segment dimensions differ");
        for (std::size_t i = 0; i < c.size(); ++i) out.push_back(c.point(i));
    }
    return out;
}

void aggregate_and_save(const std::vector<PointCloud>& clouds, const std::string& path,
                        PlyFormat format) {
    write_ply(concat_clouds(clouds), path, format);
}

PointCloud audio_to_cloud(const AudioSignal& signal, std::size_t n_fft, std::size_t hop) {
    return spectrogram_to_cloud(stft(signal, n_fft, hop), signal.sample_rate);
}

}  // namespace geocloud
