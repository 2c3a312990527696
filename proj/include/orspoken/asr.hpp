#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "orspoken/audio.hpp"

namespace orspoken::asr {

struct Alternative {
    std::string text;
    std::optional<double> confidence;
};

// Ranked transcription alternatives for one utterance, rank-1 first,
// at most 5 entries, texts nonempty.
struct NBestList {
    std::string utterance_id;
    std::vector<Alternative> alternatives;
};

// Audio-in, alternatives-out contract for an external recognizer. Adapters
// may be called concurrently for different utterances.
class AsrAdapter {
public:
    virtual ~AsrAdapter() = default;
    virtual std::vector<Alternative> transcribe(const audio::Waveform& audio,
                                                const std::string& language) = 0;
};

// Returns the adapter's alternatives verbatim, truncated to 5. An empty
// adapter response signals unrecognizable audio and raises.
NBestList transcribe_nbest(const audio::Waveform& audio, AsrAdapter& client,
                           const std::string& utterance_id = "",
                           const std::string& language = "en-US");

// Substitution pairs "wrong<TAB>right", one per line. Lookup goes from the
// correct word to its confusable spellings.
class ConfusionLexicon {
public:
    ConfusionLexicon() = default;

    static ConfusionLexicon load(const std::string& path);

    void add(const std::string& wrong, const std::string& right);
    const std::vector<std::string>* confusions_of(const std::string& right) const;
    std::size_t size() const { return pair_count_; }

private:
    std::unordered_map<std::string, std::vector<std::string>> right_to_wrong_;
    std::size_t pair_count_ = 0;
};

// Deterministic offline stand-in for the recognizer. The rank-k alternative
// corrupts each token of the ground truth independently with probability
// min(1, max(beta, floor_k) * (0.3 + 0.2 * (k - 1))), where floor_k is 0
// for rank 1 and 0.1 below, so beta = 0 still yields perturbed lower ranks
// while rank 1 stays verbatim. Corruption substitutes from the lexicon and
// falls back to a character transposition. Identical (text, beta, seed)
// give identical output, and the set of corrupted tokens grows
// monotonically with beta.
NBestList mock_transcribe(const std::string& ground_truth, audio::NoiseLevel beta,
                          std::uint64_t seed, const ConfusionLexicon& lexicon,
                          const std::string& utterance_id = "");

// Adapter bound to mock_transcribe: carries the expression text alongside
// the audio so offline runs stay deterministic.
class MockAsrAdapter : public AsrAdapter {
public:
    MockAsrAdapter(ConfusionLexicon lexicon, double beta, std::uint64_t seed)
        : lexicon_(std::move(lexicon)), beta_(beta), seed_(seed) {}

    void set_ground_truth(const std::string& text) { ground_truth_ = text; }

    std::vector<Alternative> transcribe(const audio::Waveform& audio,
                                        const std::string& language) override;

private:
    ConfusionLexicon lexicon_;
    double beta_;
    std::uint64_t seed_;
    std::string ground_truth_;
};

// Binding for a real service speaking the wire contract: POST /transcribe
// with 16 kHz 16-bit PCM mono little-endian in the body and the language
// tag in the X-Language header; the response is JSON
// {"alternatives": [{"text": ..., "confidence"?: ...}, ...]} in rank order.
class HttpAsrAdapter : public AsrAdapter {
public:
    HttpAsrAdapter(std::string host, int port) : host_(std::move(host)), port_(port) {}

    std::vector<Alternative> transcribe(const audio::Waveform& audio,
                                        const std::string& language) override;

private:
    std::string host_;
    int port_;
};

}  // namespace orspoken::asr
