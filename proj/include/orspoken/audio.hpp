#pragma once

#include <string>
#include <vector>

#include "orspoken/types.hpp"

namespace orspoken::audio {

// Mono PCM signal. Samples stay within [-1, 1]; every operation below
// preserves that bound.
struct Waveform {
    std::vector<double> samples;
    int rate = 16000;  // Hz

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return rate > 0 ? double(samples.size()) / rate : 0.0; }
};

// Convex mixing weight between normalized speech and noise.
struct NoiseLevel {
    double beta = 0.0;

    explicit NoiseLevel(double b) : beta(b) {
        if (!(b >= 0.0 && b <= 1.0))
            throw ValidationError("noise level beta must be in [0,1], got " + std::to_string(b));
    }
};

inline constexpr int kTargetRate = 16000;

// Reads a RIFF/WAVE file. PCM 16-bit only; multichannel input is averaged
// to mono; int16 samples map to [-1,1) by division by 32768.
Waveform decode_wav(const std::string& path);

// Writes mono PCM 16-bit at w.rate. Samples quantized by round(s * 32768)
// with clamping into int16, so decode(encode(w)) matches w within 1/32767
// per sample.
void encode_wav(const Waveform& w, const std::string& path);

// Resamples to 16 kHz via linear interpolation; input already at 16 kHz is
// returned unchanged. Downsampling is preceded by a 63-tap Hann-windowed
// sinc low-pass with cutoff 0.45 * 16 kHz. Output length is
// round(len * 16000 / rate). Input rates below 8 kHz are rejected.
Waveform resample_to_16k(const Waveform& w);

// Scales so the peak magnitude is exactly 1; all-zero input is returned
// unchanged. Empty input is an error.
Waveform peak_normalize(const Waveform& w);

// E_noisy = (1-beta) * E_original + beta * Noise, sample-wise, after peak
// normalizing both inputs. Noise shorter than speech is extended
// cyclically; output length equals the speech length. Rates must match.
Waveform mix_noise(const Waveform& speech, const Waveform& noise, NoiseLevel beta);

}  // namespace orspoken::audio
