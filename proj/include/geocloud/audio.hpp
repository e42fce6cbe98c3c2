#pragma once

#include <complex>
#include <string>
#include <vector>

#include "geocloud/ply_io.hpp"
#include "geocloud/point_cloud.hpp"

namespace geocloud {

/// Mono audio normalized to [-1, 1].
struct AudioSignal {
    std::vector<double> samples;
    double sample_rate = 0.0;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

/// One-sided STFT grid: frames x (n_fft/2 + 1) complex bins, row-major.
struct Spectrogram {
    std::size_t n_fft = 0;
    std::size_t hop = 0;
    std::size_t frames = 0;
    std::vector<std::complex<double>> data;

    std::size_t bins() const { return n_fft / 2 + 1; }
    const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
        return data[frame * bins() + bin];
    }
};

/// Reads a PCM WAV file: 16-bit integer or 32-bit float, mono or stereo
/// (stereo is averaged down). 16-bit values are scaled by 1/32768.
AudioSignal load_wav(const std::string& path);

/// Writes mono 16-bit PCM.
void write_wav(const AudioSignal& signal, const std::string& path);

/// Hann window w(n) = 0.5 * (1 - cos(2*pi*n / (N-1))), length N >= 2.
std::vector<double> hann_window(std::size_t n_fft);

/// Hann-windowed, hopped one-sided STFT. Frame count is
/// floor((len - n_fft)/hop) + 1; the signal must be at least n_fft long.
Spectrogram stft(const AudioSignal& signal, std::size_t n_fft, std::size_t hop);

/// M(n,k) = log(1e-8 + |X(n,k)|), row-major frames x bins.
std::vector<double> log_magnitude(const Spectrogram& spec);

/// One 3D point (f', t, M) per (frame, bin): f' = k*fs/n_fft, t = n*hop/fs.
PointCloud spectrogram_to_cloud(const Spectrogram& spec, double sample_rate);

/// Concatenates segment clouds in order.
PointCloud concat_clouds(const std::vector<PointCloud>& clouds);

void aggregate_and_save(const std::vector<PointCloud>& clouds, const std::string& path,
                        PlyFormat format = PlyFormat::Ascii);

/// Full front end: STFT + log magnitude + point construction.
PointCloud audio_to_cloud(const AudioSignal& signal, std::size_t n_fft = 1024,
                          std::size_t hop = 256);

}  // namespace geocloud
