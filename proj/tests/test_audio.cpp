#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "orspoken/audio.hpp"
#include "orspoken/nn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace orspoken;
using audio::NoiseLevel;
using audio::Waveform;

namespace {

// Raw WAV writer independent of encode_wav, for decoder tests.
void write_wav_bytes(const std::string& path, const std::vector<std::int16_t>& samples,
                     std::uint16_t channels, std::uint32_t rate, std::uint16_t format_tag) {
    std::string b;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
    };
    auto u16 = [&](std::uint16_t v) {
        b.push_back(char(v & 0xff));
        b.push_back(char(v >> 8));
    };
    const std::uint32_t data_size = std::uint32_t(samples.size() * 2);
    b += "RIFF";
    u32(36 + data_size);
    b += "WAVEfmt ";
    u32(16);
    u16(format_tag);
    u16(channels);
    u32(rate);
    u32(rate * channels * 2);
    u16(std::uint16_t(channels * 2));
    u16(16);
    b += "data";
    u32(data_size);
    for (std::int16_t s : samples) u16(std::uint16_t(s));
    std::ofstream out(path, std::ios::binary);
    out.write(b.data(), std::streamsize(b.size()));
}

Waveform make_wave(std::vector<double> samples, int rate = 16000) {
    Waveform w;
    w.samples = std::move(samples);
    w.rate = rate;
    return w;
}

}  // namespace

TEST_CASE("decode_wav maps int16 to [-1,1] and averages channels") {
    fixtures::TempDir tmp;

    write_wav_bytes(tmp.file("mono.wav"), {16384, -16384}, 1, 16000, 1);
    const Waveform mono = audio::decode_wav(tmp.file("mono.wav"));
    CHECK(mono.rate == 16000);
    REQUIRE(mono.samples.size() == 2);
    CHECK(mono.samples[0] == doctest::Approx(0.5));
    CHECK(mono.samples[1] == doctest::Approx(-0.5));

    // stereo frame L=0.2, R=0.4 -> 0.3
    const auto l = std::int16_t(std::lround(0.2 * 32768));
    const auto r = std::int16_t(std::lround(0.4 * 32768));
    write_wav_bytes(tmp.file("stereo.wav"), {l, r}, 2, 44100, 1);
    const Waveform stereo = audio::decode_wav(tmp.file("stereo.wav"));
    CHECK(stereo.rate == 44100);
    REQUIRE(stereo.samples.size() == 1);
    CHECK(stereo.samples[0] == doctest::Approx(0.3).epsilon(1e-4));

    write_wav_bytes(tmp.file("ulaw.wav"), {0, 0}, 1, 8000, 7);  // compressed codec tag
    CHECK_THROWS_AS(audio::decode_wav(tmp.file("ulaw.wav")), ValidationError);

    fixtures::write_text_file(tmp.file("junk.wav"), "not a riff file");
    CHECK_THROWS_AS(audio::decode_wav(tmp.file("junk.wav")), ValidationError);
}

TEST_CASE("encode_wav quantization anchors and round-trip error bound") {
    fixtures::TempDir tmp;

    audio::encode_wav(make_wave({0.0, 1.0, -1.0}), tmp.file("q.wav"));
    std::ifstream in(tmp.file("q.wav"), std::ios::binary);
    in.seekg(44);
    auto read_i16 = [&]() {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        return std::int16_t(b[0] | (b[1] << 8));
    };
    CHECK(read_i16() == 0);
    CHECK(read_i16() == 32767);  // +1.0 clamps at the int16 ceiling
    CHECK(read_i16() == -32768);

    nn::Rng rng(99);
    std::vector<double> samples;
    for (int i = 0; i < 1000; ++i) samples.push_back(rng.uniform(-1.0, 1.0));
    const Waveform w = make_wave(samples);
    audio::encode_wav(w, tmp.file("rt.wav"));
    const Waveform back = audio::decode_wav(tmp.file("rt.wav"));
    REQUIRE(back.samples.size() == w.samples.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        max_err = std::max(max_err, std::abs(back.samples[i] - w.samples[i]));
    CHECK(max_err <= 1.0 / 32767.0);
}

TEST_CASE("resample_to_16k identity, length and sine fidelity") {
    nn::Rng rng(3);
    std::vector<double> s;
    for (int i = 0; i < 1600; ++i) s.push_back(rng.uniform(-0.9, 0.9));
    const Waveform already = make_wave(s, 16000);
    const Waveform same = audio::resample_to_16k(already);
    CHECK(same.rate == 16000);
    CHECK(same.samples == already.samples);  // bit-identical

    const Waveform at32k = make_wave(std::vector<double>(32000, 0.25), 32000);
    CHECK(audio::resample_to_16k(at32k).samples.size() == 16000);

    // 440 Hz sine sampled at 44.1 kHz vs the analytic 16 kHz sine
    std::vector<double> sine;
    for (int i = 0; i < 44100; ++i)
        sine.push_back(0.9 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 44100.0));
    const Waveform res = audio::resample_to_16k(make_wave(std::move(sine), 44100));
    CHECK(res.samples.size() == 16000);
    double max_err = 0.0;
    for (std::size_t i = 100; i + 100 < res.samples.size(); ++i) {
        const double expect = 0.9 * std::sin(2.0 * std::numbers::pi * 440.0 * double(i) / 16000.0);
        max_err = std::max(max_err, std::abs(res.samples[i] - expect));
    }
    CHECK(max_err <= 0.02);

    CHECK_THROWS_AS(audio::resample_to_16k(make_wave({0.0}, 4000)), ValidationError);
}

TEST_CASE("resample_to_16k preserves duration within one output sample") {
    for (int rate : {8000, 22050, 32000, 44100, 48000}) {
        const std::size_t len = std::size_t(rate);  // 1 s
        const Waveform w = make_wave(std::vector<double>(len, 0.1), rate);
        const Waveform out = audio::resample_to_16k(w);
        const double in_duration = double(len) / double(rate);
        const double out_duration = double(out.samples.size()) / 16000.0;
        CHECK(std::abs(out_duration - in_duration) <= 1.0 / 16000.0);
    }
}

TEST_CASE("peak_normalize") {
    const Waveform w = audio::peak_normalize(make_wave({0.5, -0.25}));
    CHECK(w.samples[0] == doctest::Approx(1.0));
    CHECK(w.samples[1] == doctest::Approx(-0.5));

    const Waveform zeros = audio::peak_normalize(make_wave({0.0, 0.0, 0.0}));
    CHECK(zeros.samples == std::vector<double>{0.0, 0.0, 0.0});

    const Waveform once = audio::peak_normalize(make_wave({1.0, -0.25}));
    const Waveform twice = audio::peak_normalize(once);
    CHECK(once.samples == twice.samples);  // idempotent

    nn::Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s;
        for (int i = 0; i < 64; ++i) s.push_back(rng.uniform(-0.7, 0.7));
        if (s[0] == 0.0) s[0] = 0.5;
        const Waveform n = audio::peak_normalize(make_wave(s));
        double peak = 0.0;
        for (double v : n.samples) peak = std::max(peak, std::abs(v));
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-15));
    }

    CHECK_THROWS_AS(audio::peak_normalize(make_wave({})), ValidationError);
}

TEST_CASE("mix_noise follows Eq. 1 after internal normalization") {
    const Waveform speech = make_wave({0.5, -0.5});
    const Waveform noise = make_wave({1.0, 1.0});

    // beta = 0: identical to the normalized speech
    const Waveform clean = audio::mix_noise(speech, noise, NoiseLevel(0.0));
    CHECK(clean.samples[0] == doctest::Approx(1.0));
    CHECK(clean.samples[1] == doctest::Approx(-1.0));

    // speech normalizes to [1,-1]; 0.7*[1,-1] + 0.3*[1,1] = [1.0, -0.4]
    const Waveform mixed = audio::mix_noise(speech, noise, NoiseLevel(0.3));
    CHECK(mixed.samples[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mixed.samples[1] == doctest::Approx(-0.4).epsilon(1e-12));

    // beta = 1: normalized noise truncated to the speech length
    const Waveform all_noise =
        audio::mix_noise(speech, make_wave({0.5, 0.25, 0.125}), NoiseLevel(1.0));
    REQUIRE(all_noise.samples.size() == 2);
    CHECK(all_noise.samples[0] == doctest::Approx(1.0));
    CHECK(all_noise.samples[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(audio::mix_noise(make_wave({0.1}, 16000), make_wave({0.1}, 22050),
                                     NoiseLevel(0.1)),
                    ValidationError);
}

TEST_CASE("mix_noise matches the sample-wise oracle on seeded triples") {
    nn::Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s, n;
        const std::size_t ls = 50 + rng.index(200);
        const std::size_t ln = 20 + rng.index(300);  // may be shorter: cyclic
        for (std::size_t i = 0; i < ls; ++i) s.push_back(rng.uniform(-0.8, 0.8));
        for (std::size_t i = 0; i < ln; ++i) n.push_back(rng.uniform(-0.8, 0.8));
        const double beta = rng.uniform();
        const Waveform out = audio::mix_noise(make_wave(s), make_wave(n), NoiseLevel(beta));
        const auto expect = oracle::mix_recount(s, n, beta);
        REQUIRE(out.samples.size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i)
            CHECK(out.samples[i] == doctest::Approx(expect[i]).epsilon(1e-6));
    }
}

TEST_CASE("mix_noise is linear in beta and bounded") {
    nn::Rng rng(55);
    std::vector<double> s, n;
    for (int i = 0; i < 160; ++i) s.push_back(rng.uniform(-1.0, 1.0));
    for (int i = 0; i < 160; ++i) n.push_back(rng.uniform(-1.0, 1.0));
    const Waveform speech = make_wave(s), noise = make_wave(n);

    const Waveform at0 = audio::mix_noise(speech, noise, NoiseLevel(0.0));
    const Waveform at1 = audio::mix_noise(speech, noise, NoiseLevel(1.0));
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const Waveform mixed = audio::mix_noise(speech, noise, NoiseLevel(beta));
        for (std::size_t i = 0; i < mixed.samples.size(); ++i) {
            const double linear =
                at0.samples[i] + beta * (at1.samples[i] - at0.samples[i]);
            CHECK(mixed.samples[i] == doctest::Approx(linear).epsilon(1e-9));
            CHECK(mixed.samples[i] >= -1.0);
            CHECK(mixed.samples[i] <= 1.0);
        }
    }
}

TEST_CASE("noise level validation") {
    CHECK_THROWS_AS(NoiseLevel(-0.1), ValidationError);
    CHECK_THROWS_AS(NoiseLevel(1.5), ValidationError);
    CHECK(NoiseLevel(0.3).beta == 0.3);
}
