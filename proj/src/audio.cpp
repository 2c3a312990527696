#include "orspoken/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace orspoken::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint32_t read_u32le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
}

void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
}

}  // namespace

Waveform decode_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        throw ValidationError(path + ": not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    bool have_fmt = false;

    std::size_t off = 12;
    while (off + 8 <= size) {
        const std::uint32_t chunk_size = read_u32le(p + off + 4);
        const unsigned char* body = p + off + 8;
        if (off + 8 + chunk_size > size)
            throw ValidationError(path + ": truncated chunk");
        if (std::memcmp(p + off, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw ValidationError(path + ": truncated fmt chunk");
            format = read_u16le(body);
            channels = read_u16le(body + 2);
            rate = read_u32le(body + 4);
            bits = read_u16le(body + 14);
            have_fmt = true;
        } else if (std::memcmp(p + off, "data", 4) == 0) {
            data = body;
            data_size = chunk_size;
        }
        off += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw ValidationError(path + ": missing fmt chunk");
    if (format != kFormatPcm)
        throw ValidationError(path + ": unsupported encoding (fmt tag " + std::to_string(format) +
                              "), PCM required");
    if (bits != 16)
        throw ValidationError(path + ": unsupported sample width " + std::to_string(bits) +
                              " bits, 16 required");
    if (channels == 0 || rate == 0) throw ValidationError(path + ": malformed fmt chunk");
    if (data == nullptr) throw ValidationError(path + ": missing data chunk");

    const std::size_t frame_bytes = std::size_t(channels) * 2;
    const std::size_t frames = data_size / frame_bytes;

    Waveform w;
    w.rate = int(rate);
    w.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* s = data + f * frame_bytes + c * 2;
            const std::int16_t v = std::int16_t(s[0] | (s[1] << 8));
            acc += double(v) / 32768.0;
        }
        w.samples[f] = acc / double(channels);
    }
    return w;
}

void encode_wav(const Waveform& w, const std::string& path) {
    const std::uint32_t data_size = std::uint32_t(w.samples.size() * 2);
    std::string out;
    out.reserve(44 + data_size);
    out.append("RIFF");
    put_u32le(out, 36 + data_size);
    out.append("WAVE");
    out.append("fmt ");
    put_u32le(out, 16);
    put_u16le(out, kFormatPcm);
    put_u16le(out, 1);  // mono
    put_u32le(out, std::uint32_t(w.rate));
    put_u32le(out, std::uint32_t(w.rate) * 2);  // byte rate
    put_u16le(out, 2);                          // block align
    put_u16le(out, 16);
    out.append("data");
    put_u32le(out, data_size);
    // Quantize on the same 1/32768 grid the decoder divides by; +1.0 clamps
    // to 32767. Keeps decode(encode(w)) within 1/32767 of w per sample.
    for (double s : w.samples) {
        long q = std::lround(s * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        put_u16le(out, std::uint16_t(std::int16_t(q)));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write wav file: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("I/O failure writing wav file: " + path);
}

Waveform resample_to_16k(const Waveform& w) {
    if (w.rate < 8000)
        throw ValidationError("resample_to_16k: rate " + std::to_string(w.rate) +
                              " below supported minimum 8000");
    if (w.rate == kTargetRate) return w;

    const std::vector<double>* src = &w.samples;
    std::vector<double> filtered;
    if (w.rate > kTargetRate && !w.samples.empty()) {
        // 63-tap Hann-windowed sinc, cutoff 0.45 * 16 kHz, unity DC gain.
        constexpr int taps = 63;
        constexpr int half = taps / 2;
        const double fc = 0.45 * double(kTargetRate) / double(w.rate);  // cycles per input sample
        std::array<double, taps> h{};
        double sum = 0.0;
        for (int n = 0; n < taps; ++n) {
            const double t = double(n - half);
            const double x = 2.0 * fc * t;
            const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) /
                                                     (std::numbers::pi * x);
            const double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / (taps - 1)));
            h[std::size_t(n)] = 2.0 * fc * sinc * hann;
            sum += h[std::size_t(n)];
        }
        for (double& v : h) v /= sum;

        filtered.resize(w.samples.size());
        const auto len = std::ptrdiff_t(w.samples.size());
        for (std::ptrdiff_t i = 0; i < len; ++i) {
            double acc = 0.0;
            for (int n = 0; n < taps; ++n) {
                const std::ptrdiff_t j = i + n - half;
                if (j >= 0 && j < len) acc += h[std::size_t(n)] * w.samples[std::size_t(j)];
            }
            filtered[std::size_t(i)] = acc;
        }
        src = &filtered;
    }

    Waveform out;
    out.rate = kTargetRate;
    const std::size_t out_len =
        std::size_t(std::llround(double(w.samples.size()) * kTargetRate / double(w.rate)));
    out.samples.resize(out_len);
    const double step = double(w.rate) / double(kTargetRate);
    const std::size_t src_len = src->size();
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = double(i) * step;
        const auto lo = std::size_t(pos);
        const double frac = pos - double(lo);
        const double a = lo < src_len ? (*src)[lo] : 0.0;
        const double b = lo + 1 < src_len ? (*src)[lo + 1] : 0.0;
        out.samples[i] = std::clamp(a + frac * (b - a), -1.0, 1.0);
    }
    return out;
}

Waveform peak_normalize(const Waveform& w) {
    if (w.samples.empty()) throw ValidationError("peak_normalize: empty waveform");
    double peak = 0.0;
    for (double s : w.samples) peak = std::max(peak, std::abs(s));
    if (peak == 0.0) return w;
    Waveform out;
    out.rate = w.rate;
    out.samples.resize(w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) out.samples[i] = w.samples[i] / peak;
    return out;
}

Waveform mix_noise(const Waveform& speech, const Waveform& noise, NoiseLevel beta) {
    if (speech.samples.empty()) throw ValidationError("mix_noise: empty speech waveform");
    if (noise.samples.empty()) throw ValidationError("mix_noise: empty noise waveform");
    if (speech.rate != noise.rate)
        throw ValidationError("mix_noise: rate mismatch (" + std::to_string(speech.rate) +
                              " vs " + std::to_string(noise.rate) + ")");
    const Waveform s = peak_normalize(speech);
    const Waveform n = peak_normalize(noise);
    const double b = beta.beta;
    Waveform out;
    out.rate = s.rate;
    out.samples.resize(s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const double noise_sample = n.samples[i % n.samples.size()];  // cyclic extension
        out.samples[i] = (1.0 - b) * s.samples[i] + b * noise_sample;
    }
    return out;
}

}  // namespace orspoken::audio
