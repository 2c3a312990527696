#include "orspoken/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>

namespace orspoken::text {

namespace {

bool is_space_codepoint(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_punct(char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

// Appends the UTF-8 bytes of one codepoint starting at s[i]; returns the
// decoded codepoint. Invalid sequences degrade to single bytes.
char32_t next_codepoint(const std::string& s, std::size_t& i) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    if (len > 1) {
        if (i + len > s.size()) { ++i; return b0; }
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0) != 0x80) { ++i; return b0; }
            cp = (cp << 6) | (bk & 0x3F);
        }
    }
    i += len;
    return cp;
}

void flush_token(std::string& tok, TokenSeq& out) {
    std::size_t begin = 0, end = tok.size();
    while (begin < end && is_ascii_punct(tok[begin])) ++begin;
    while (end > begin && is_ascii_punct(tok[end - 1])) --end;
    if (end > begin) out.push_back(tok.substr(begin, end - begin));
    tok.clear();
}

using Counts = std::unordered_map<std::string, int>;

Counts count_tokens(const TokenSeq& seq) {
    Counts counts;
    for (const auto& t : seq) ++counts[t];
    return counts;
}

void require_nonempty(const TokenSeq& candidate, const TokenSeq& reference, const char* op) {
    if (candidate.empty() || reference.empty())
        throw ValidationError(std::string(op) + ": empty input");
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// --- METEOR alignment ----------------------------------------------------
//
// The number of matches of a maximum exact-match matching is fixed per
// token type: sum over types of min(candidate count, reference count).
// Among those matchings we minimize the chunk count by branch and bound
// over candidate positions; a greedy left-to-right pass seeds the bound.
// Exact for reference lengths up to 64 (beyond that, and past the node
// cap, the greedy answer is kept).

struct AlignState {
    const TokenSeq* cand;
    std::vector<std::vector<int>> ref_positions;  // per candidate index, same-token ref slots
    std::vector<int> remaining_cand;  // per candidate index: same-token occurrences at >= i
    int best = std::numeric_limits<int>::max();
    std::uint64_t nodes = 0;
    static constexpr std::uint64_t kNodeCap = 4'000'000;
};

int greedy_chunks(const TokenSeq& cand, const TokenSeq& ref) {
    Counts used_per_type;
    const Counts ref_counts = count_tokens(ref);
    std::vector<bool> used(ref.size(), false);
    int chunks = 0;
    int prev_ref = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        const auto& tok = cand[i];
        auto it = ref_counts.find(tok);
        if (it == ref_counts.end() || used_per_type[tok] >= it->second) {
            prev_ref = -2;
            continue;
        }
        int pick = -1;
        if (prev_ref >= 0 && prev_ref + 1 < int(ref.size()) && !used[prev_ref + 1] &&
            ref[prev_ref + 1] == tok)
            pick = prev_ref + 1;
        else
            for (std::size_t j = 0; j < ref.size(); ++j)
                if (!used[j] && ref[j] == tok) { pick = int(j); break; }
        used[pick] = true;
        ++used_per_type[tok];
        if (!(prev_ref >= 0 && pick == prev_ref + 1)) ++chunks;
        prev_ref = pick;
    }
    return chunks;
}

void search_chunks(AlignState& st, std::size_t i, std::uint64_t used_mask, int prev_ref,
                   int chunks) {
    if (chunks >= st.best) return;
    if (++st.nodes > AlignState::kNodeCap) return;
    const auto& cand = *st.cand;
    if (i == cand.size()) {
        st.best = chunks;
        return;
    }
    const auto& slots = st.ref_positions[i];
    if (slots.empty()) {
        search_chunks(st, i + 1, used_mask, -2, chunks);
        return;
    }
    int used_of_type = 0;
    for (int j : slots)
        if (used_mask >> j & 1u) ++used_of_type;
    const int avail = int(slots.size()) - used_of_type;
    const int rem = st.remaining_cand[i];
    // Try the chunk-continuing slot first so the bound tightens early.
    std::vector<int> order;
    order.reserve(slots.size());
    if (prev_ref >= 0)
        for (int j : slots)
            if (j == prev_ref + 1 && !(used_mask >> j & 1u)) order.push_back(j);
    for (int j : slots)
        if (!(used_mask >> j & 1u) && !(prev_ref >= 0 && j == prev_ref + 1)) order.push_back(j);
    if (avail > 0) {
        for (int j : order) {
            const int add = (prev_ref >= 0 && j == prev_ref + 1) ? 0 : 1;
            search_chunks(st, i + 1, used_mask | (1ull << j), j, chunks + add);
        }
    }
    // Skipping this occurrence keeps the matching maximal only while more
    // occurrences than available reference slots remain.
    if (rem > avail || avail == 0) search_chunks(st, i + 1, used_mask, -2, chunks);
}

struct MeteorAlignment {
    int matches = 0;
    int chunks = 0;
};

MeteorAlignment align_meteor(const TokenSeq& cand, const TokenSeq& ref) {
    const Counts cand_counts = count_tokens(cand);
    const Counts ref_counts = count_tokens(ref);
    MeteorAlignment out;
    for (const auto& [tok, c] : cand_counts) {
        auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) out.matches += std::min(c, it->second);
    }
    if (out.matches == 0) return out;

    const int greedy = greedy_chunks(cand, ref);
    if (ref.size() > 64) {
        out.chunks = greedy;
        return out;
    }
    AlignState st;
    st.cand = &cand;
    st.best = greedy;
    st.ref_positions.resize(cand.size());
    st.remaining_cand.resize(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
        for (std::size_t j = 0; j < ref.size(); ++j)
            if (ref[j] == cand[i]) st.ref_positions[i].push_back(int(j));
        int rem = 0;
        for (std::size_t k = i; k < cand.size(); ++k)
            if (cand[k] == cand[i]) ++rem;
        st.remaining_cand[i] = rem;
    }
    search_chunks(st, 0, 0, -2, 0);
    out.chunks = st.best;
    return out;
}

// --- CIDEr ---------------------------------------------------------------

using NGram = std::vector<std::string>;

std::map<NGram, int> ngram_counts(const TokenSeq& seq, int n) {
    std::map<NGram, int> counts;
    if (int(seq.size()) >= n)
        for (std::size_t i = 0; i + n <= seq.size(); ++i)
            ++counts[NGram(seq.begin() + i, seq.begin() + i + n)];
    return counts;
}

// tf * log(doc_count / df) per n-gram; unseen n-grams clamp df to 1.
std::map<NGram, double> tfidf_vector(const TokenSeq& seq, int n, const IdfTable& idf) {
    std::map<NGram, double> vec;
    for (const auto& [gram, tf] : ngram_counts(seq, n)) {
        auto it = idf.df.find(gram);
        const double df = it == idf.df.end() ? 1.0 : double(it->second);
        vec[gram] = double(tf) * std::log(double(idf.doc_count) / df);
    }
    return vec;
}

double cosine(const std::map<NGram, double>& a, const std::map<NGram, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [g, v] : a) {
        na += v * v;
        auto it = b.find(g);
        if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [g, v] : b) nb += v * v;
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TokenSeq tokenize(const std::string& textin) {
    TokenSeq out;
    std::string tok;
    std::size_t i = 0;
    while (i < textin.size()) {
        const std::size_t start = i;
        const char32_t cp = next_codepoint(textin, i);
        if (is_space_codepoint(cp)) {
            flush_token(tok, out);
        } else if (cp < 0x80) {
            char c = char(cp);
            if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
            tok.push_back(c);
        } else {
            tok.append(textin, start, i - start);
        }
    }
    flush_token(tok, out);
    return out;
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::bleu1: return "bleu1";
        case Metric::rouge_l: return "rouge_l";
        case Metric::meteor: return "meteor";
        case Metric::cider: return "cider";
    }
    return "?";
}

MetricScore bleu1(const TokenSeq& candidate, const TokenSeq& reference) {
    require_nonempty(candidate, reference, "bleu1");
    const Counts ref_counts = count_tokens(reference);
    double clipped = 0.0;
    for (const auto& [tok, c] : count_tokens(candidate)) {
        auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) clipped += std::min(c, it->second);
    }
    const double c = double(candidate.size());
    const double r = double(reference.size());
    const double precision = clipped / c;
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return {Metric::bleu1, precision * bp};
}

MetricScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
    require_nonempty(candidate, reference, "rouge_l");
    const double lcs = double(lcs_length(candidate, reference));
    if (lcs == 0.0) return {Metric::rouge_l, 0.0};
    constexpr double beta = 1.2;
    const double recall = lcs / double(reference.size());
    const double precision = lcs / double(candidate.size());
    const double f = (1.0 + beta * beta) * recall * precision / (recall + beta * beta * precision);
    return {Metric::rouge_l, f};
}

MetricScore meteor(const TokenSeq& candidate, const TokenSeq& reference) {
    require_nonempty(candidate, reference, "meteor");
    const MeteorAlignment a = align_meteor(candidate, reference);
    if (a.matches == 0) return {Metric::meteor, 0.0};
    const double m = double(a.matches);
    const double precision = m / double(candidate.size());
    const double recall = m / double(reference.size());
    const double f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    const double frag = double(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return {Metric::meteor, f_mean * (1.0 - penalty)};
}

IdfTable build_idf(const std::vector<TokenSeq>& corpus) {
    if (corpus.empty()) throw ValidationError("build_idf: empty corpus");
    IdfTable idf;
    idf.doc_count = corpus.size();
    for (const auto& doc : corpus) {
        std::map<NGram, int> seen;
        for (int n = 1; n <= IdfTable::n_max; ++n)
            for (const auto& [gram, tf] : ngram_counts(doc, n)) seen[gram] += tf;
        for (const auto& [gram, tf] : seen) ++idf.df[gram];
    }
    return idf;
}

MetricScore cider(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                  const IdfTable& idf) {
    if (candidate.empty()) throw ValidationError("cider: empty candidate");
    if (references.empty()) throw ValidationError("cider: no references");
    for (const auto& r : references)
        if (r.empty()) throw ValidationError("cider: empty reference");
    double sum_over_n = 0.0;
    for (int n = 1; n <= IdfTable::n_max; ++n) {
        const auto cand_vec = tfidf_vector(candidate, n, idf);
        double sum_refs = 0.0;
        for (const auto& ref : references) sum_refs += cosine(cand_vec, tfidf_vector(ref, n, idf));
        sum_over_n += sum_refs / double(references.size());
    }
    return {Metric::cider, 10.0 * sum_over_n / double(IdfTable::n_max)};
}

double normalize_unit(const MetricScore& score) { return score.value / score.range_max(); }

double skewness(const std::vector<double>& values) {
    if (values.size() < 3) throw ValidationError("skewness: need at least 3 values");
    const double n = double(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 == 0.0) throw ValidationError("skewness: zero variance");
    return m3 / std::pow(m2, 1.5);
}

std::vector<std::size_t> histogram_unit(const std::vector<double>& values, int bins) {
    if (bins < 1) throw ValidationError("histogram_unit: bins must be >= 1");
    std::vector<std::size_t> hist(bins, 0);
    for (double v : values) {
        int b = int(v * bins);
        b = std::clamp(b, 0, bins - 1);
        ++hist[std::size_t(b)];
    }
    return hist;
}

}  // namespace orspoken::text
