#include "orspoken/asr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "orspoken/nn.hpp"
#include "orspoken/textmetrics.hpp"

#include <json.hpp>

// httplib drags in resolv.h whose _res macro breaks Eigen, so it stays last
#include <httplib.h>

namespace orspoken::asr {

namespace {

constexpr std::size_t kMaxAlternatives = 5;

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string transpose_chars(const std::string& token, double pick) {
    if (token.size() < 2) return token + token;  // nothing to swap, double it
    std::string out = token;
    const auto pos = std::size_t(pick * double(token.size() - 1)) % (token.size() - 1);
    std::swap(out[pos], out[pos + 1]);
    return out;
}

}  // namespace

NBestList transcribe_nbest(const audio::Waveform& audio, AsrAdapter& client,
                           const std::string& utterance_id, const std::string& language) {
    std::vector<Alternative> alts = client.transcribe(audio, language);
    if (alts.empty())
        throw std::runtime_error("transcribe_nbest: unrecognizable audio, adapter returned no alternatives");
    if (alts.size() > kMaxAlternatives) alts.resize(kMaxAlternatives);
    for (const auto& a : alts)
        if (a.text.empty())
            throw ValidationError("transcribe_nbest: adapter returned an empty alternative text");
    return NBestList{utterance_id, std::move(alts)};
}

ConfusionLexicon ConfusionLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open confusion lexicon: " + path);
    ConfusionLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": expected 'wrong<TAB>right'");
        lex.add(line.substr(0, tab), line.substr(tab + 1));
    }
    return lex;
}

void ConfusionLexicon::add(const std::string& wrong, const std::string& right) {
    right_to_wrong_[right].push_back(wrong);
    ++pair_count_;
}

const std::vector<std::string>* ConfusionLexicon::confusions_of(const std::string& right) const {
    auto it = right_to_wrong_.find(right);
    return it == right_to_wrong_.end() ? nullptr : &it->second;
}

NBestList mock_transcribe(const std::string& ground_truth, audio::NoiseLevel beta,
                          std::uint64_t seed, const ConfusionLexicon& lexicon,
                          const std::string& utterance_id) {
    if (ground_truth.empty())
        throw ValidationError("mock_transcribe: ground truth must be nonempty");
    const std::vector<std::string> tokens = text::tokenize(ground_truth);

    NBestList out;
    out.utterance_id = utterance_id;
    if (tokens.empty()) {
        out.alternatives.push_back({ground_truth, std::nullopt});
        return out;
    }

    for (int rank = 1; rank <= int(kMaxAlternatives); ++rank) {
        // Draws depend on (text, seed, rank) only, so raising beta corrupts
        // a superset of the tokens corrupted at the lower level.
        nn::Rng rng(nn::mix_seed(nn::mix_seed(seed, nn::hash64(ground_truth)),
                                 std::uint64_t(rank)));
        const double floor = rank == 1 ? 0.0 : 0.1;
        const double p =
            std::min(1.0, std::max(beta.beta, floor) * (0.3 + 0.2 * double(rank - 1)));

        std::vector<std::string> corrupted = tokens;
        bool any = false;
        for (auto& tok : corrupted) {
            const double decide = rng.uniform();
            const double pick = rng.uniform();
            if (decide >= p) continue;
            any = true;
            if (const auto* wrongs = lexicon.confusions_of(tok))
                tok = (*wrongs)[std::size_t(pick * double(wrongs->size())) % wrongs->size()];
            else
                tok = transpose_chars(tok, pick);
        }
        out.alternatives.push_back({any ? join_tokens(corrupted) : ground_truth, std::nullopt});
    }
    return out;
}

std::vector<Alternative> MockAsrAdapter::transcribe(const audio::Waveform& audio,
                                                    const std::string& language) {
    (void)audio;
    (void)language;
    if (ground_truth_.empty())
        throw std::runtime_error("mock adapter: no ground truth attached to this utterance");
    return mock_transcribe(ground_truth_, audio::NoiseLevel(beta_), seed_, lexicon_).alternatives;
}

std::vector<Alternative> HttpAsrAdapter::transcribe(const audio::Waveform& audio,
                                                    const std::string& language) {
    std::string body;
    body.reserve(audio.samples.size() * 2);
    for (double s : audio.samples) {
        long q = std::lround(s * 32767.0);
        q = std::clamp(q, -32768L, 32767L);
        body.push_back(char(q & 0xff));
        body.push_back(char((q >> 8) & 0xff));
    }
    httplib::Client client(host_, port_);
    httplib::Headers headers{{"X-Language", language},
                             {"X-Sample-Rate", std::to_string(audio.rate)}};
    auto res = client.Post("/transcribe", headers, body, "application/octet-stream");
    if (!res)
        throw std::runtime_error("asr transport failure reaching " + host_ + ":" +
                                 std::to_string(port_) + " (retryable)");
    if (res->status != 200)
        throw std::runtime_error("asr service returned status " + std::to_string(res->status));
    std::vector<Alternative> alts;
    try {
        const auto j = nlohmann::json::parse(res->body);
        for (const auto& ja : j.at("alternatives")) {
            Alternative a;
            a.text = ja.at("text").get<std::string>();
            if (ja.contains("confidence")) a.confidence = ja.at("confidence").get<double>();
            alts.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("asr service returned malformed JSON: ") + e.what());
    }
    return alts;
}

}  // namespace orspoken::asr
