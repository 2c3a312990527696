#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "orspoken/nn.hpp"
#include "orspoken/textmetrics.hpp"
#include "oracles.hpp"

using namespace orspoken;
using text::TokenSeq;

namespace {

TokenSeq seq(std::initializer_list<const char*> toks) {
    TokenSeq s;
    for (const char* t : toks) s.emplace_back(t);
    return s;
}

// Golden candidate/reference pairs covering equality, reorder, repetition,
// partial overlap, length mismatch and disjoint vocabularies.
const std::vector<std::pair<TokenSeq, TokenSeq>>& golden_pairs() {
    static const std::vector<std::pair<TokenSeq, TokenSeq>> pairs = {
        {seq({"the", "cat"}), seq({"the", "cat", "sat"})},
        {seq({"a", "b", "c"}), seq({"a", "c"})},
        {seq({"the", "big", "window", "in", "the", "middle"}),
         seq({"the", "big", "window", "in", "the", "middle"})},
        {seq({"b", "a"}), seq({"a", "b"})},
        {seq({"laptop", "the", "bed", "man", "is", "using"}),
         seq({"laptop", "the", "bald", "man", "is", "using"})},
        {seq({"red", "car", "moves", "ahead", "on"}),
         seq({"red", "car", "moves", "ahead", "on", "left"})},
        {seq({"x", "y", "z"}), seq({"p", "q"})},
        {seq({"a", "a", "a"}), seq({"a", "a"})},
        {seq({"a", "b", "a", "b"}), seq({"b", "a", "b", "a"})},
        {seq({"one"}), seq({"one", "two", "three", "four", "five"})},
        {seq({"five", "four", "three", "two", "one"}),
         seq({"one", "two", "three", "four", "five"})},
        {seq({"the", "silver", "vehicle", "next", "to", "a", "green", "truck"}),
         seq({"a", "silver", "vehicle", "next", "to", "a", "green", "truck"})},
        {seq({"keyboard", "on", "the", "laptop"}), seq({"keyboard", "on", "the", "laptop"})},
        {seq({"man", "in", "green"}), seq({"a", "man", "in", "green", "t", "shirt"})},
        {seq({"stop", "here", "now", "please"}), seq({"stop", "here"})},
        {seq({"w", "w", "w", "q"}), seq({"w", "q", "w"})},
        {seq({"blue", "signboard", "on", "top"}),
         seq({"blue", "signboard", "on", "the", "top", "left", "most", "side"})},
        {seq({"dog", "under", "the", "tree", "dog"}), seq({"the", "dog", "under", "a", "tree"})},
        {seq({"gray", "car", "just", "moves", "past"}),
         seq({"gray", "car", "just", "moves", "past", "the", "traffic", "signal"})},
        {seq({"left", "lane"}), seq({"gray", "car", "on", "the", "left", "lane"})},
    };
    return pairs;
}

std::vector<TokenSeq> golden_references() {
    std::vector<TokenSeq> refs;
    for (const auto& [c, r] : golden_pairs()) refs.push_back(r);
    return refs;
}

TokenSeq random_sentence(nn::Rng& rng, const std::vector<std::string>& vocab) {
    TokenSeq s;
    const std::size_t len = 3 + rng.index(8);
    for (std::size_t i = 0; i < len; ++i) s.push_back(vocab[rng.index(vocab.size())]);
    return s;
}

}  // namespace

TEST_CASE("tokenize strips punctuation, lowercases, splits whitespace") {
    CHECK(text::tokenize("The  Big Window!") == seq({"the", "big", "window"}));
    CHECK(text::tokenize("") == TokenSeq{});
    CHECK(text::tokenize("stop here") == seq({"stop", "here"}));
    CHECK(text::tokenize("  \t\n ") == TokenSeq{});
    CHECK(text::tokenize("don't stop, (really)") == seq({"don't", "stop", "really"}));
    CHECK(text::tokenize("a b c") == seq({"a", "b", "c"}));  // unicode spaces
    CHECK(text::tokenize("...") == TokenSeq{});
}

TEST_CASE("tokenize is idempotent") {
    nn::Rng rng(7);
    const std::vector<std::string> vocab{"The", "big,", "Window!", "(left)", "car's", "STOP"};
    for (int trial = 0; trial < 50; ++trial) {
        std::string s;
        const std::size_t len = 1 + rng.index(8);
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += ' ';
            s += vocab[rng.index(vocab.size())];
        }
        const TokenSeq once = text::tokenize(s);
        std::string joined;
        for (std::size_t i = 0; i < once.size(); ++i) {
            if (i) joined += ' ';
            joined += once[i];
        }
        CHECK(text::tokenize(joined) == once);
    }
}

TEST_CASE("bleu1 anchors") {
    CHECK(text::bleu1(seq({"a", "b", "c"}), seq({"a", "b", "c"})).value == doctest::Approx(1.0));
    // clipped precision 1, brevity penalty exp(1 - 3/2)
    CHECK(text::bleu1(seq({"the", "cat"}), seq({"the", "cat", "sat"})).value ==
          doctest::Approx(0.6065306597126334).epsilon(1e-12));
    CHECK(text::bleu1(seq({"x"}), seq({"y", "z"})).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(text::bleu1({}, seq({"a"})), ValidationError);
    CHECK_THROWS_AS(text::bleu1(seq({"a"}), {}), ValidationError);
}

TEST_CASE("rouge_l anchors") {
    CHECK(text::rouge_l(seq({"a", "b"}), seq({"a", "b"})).value == doctest::Approx(1.0));
    CHECK(text::rouge_l(seq({"a", "b", "c"}), seq({"a", "c"})).value ==
          doctest::Approx(0.8299319727891157).epsilon(1e-12));
    CHECK(text::rouge_l(seq({"x"}), seq({"y"})).value == doctest::Approx(0.0));
}

TEST_CASE("meteor anchors") {
    // identical length-3: m=3, chunks=1, score = 1 - 0.5/27
    CHECK(text::meteor(seq({"a", "b", "c"}), seq({"a", "b", "c"})).value ==
          doctest::Approx(0.981481481481).epsilon(1e-9));
    CHECK(text::meteor(seq({"b", "a"}), seq({"a", "b"})).value == doctest::Approx(0.5));
    CHECK(text::meteor(seq({"x"}), seq({"y"})).value == doctest::Approx(0.0));
}

TEST_CASE("metrics match independent oracles on the golden set") {
    const auto refs = golden_references();
    const text::IdfTable idf = text::build_idf(refs);
    std::vector<oracle::Tokens> oracle_corpus;
    for (const auto& r : refs) oracle_corpus.push_back(r);

    for (const auto& [cand, ref] : golden_pairs()) {
        CHECK(text::bleu1(cand, ref).value == doctest::Approx(oracle::bleu1(cand, ref)).epsilon(1e-9));
        CHECK(text::rouge_l(cand, ref).value ==
              doctest::Approx(oracle::rouge_l(cand, ref)).epsilon(1e-9));
        CHECK(text::meteor(cand, ref).value ==
              doctest::Approx(oracle::meteor(cand, ref)).epsilon(1e-9));
        CHECK(text::cider(cand, {ref}, idf).value ==
              doctest::Approx(oracle::cider(cand, {ref}, oracle_corpus)).epsilon(1e-9));
    }
}

TEST_CASE("meteor equals the exhaustive oracle on repeated-token fuzz") {
    nn::Rng rng(11);
    const std::vector<std::string> vocab{"a", "b", "c"};
    for (int trial = 0; trial < 120; ++trial) {
        TokenSeq cand, ref;
        const std::size_t lc = 1 + rng.index(6), lr = 1 + rng.index(6);
        for (std::size_t i = 0; i < lc; ++i) cand.push_back(vocab[rng.index(vocab.size())]);
        for (std::size_t i = 0; i < lr; ++i) ref.push_back(vocab[rng.index(vocab.size())]);
        CHECK(text::meteor(cand, ref).value ==
              doctest::Approx(oracle::meteor(cand, ref)).epsilon(1e-9));
    }
}

TEST_CASE("build_idf document frequencies") {
    const TokenSeq s = seq({"the", "dog", "under", "the", "tree"});
    const text::IdfTable two = text::build_idf({s, s});
    for (const auto& [gram, df] : two.df) CHECK(df == 2);
    CHECK(two.doc_count == 2);

    const text::IdfTable one = text::build_idf({s});
    for (const auto& [gram, df] : one.df) CHECK(df == 1);

    CHECK_THROWS_AS(text::build_idf({}), ValidationError);
}

TEST_CASE("build_idf matches brute-force recount on random corpora") {
    nn::Rng rng(23);
    const std::vector<std::string> vocab{"red", "car", "left", "lane", "dog", "sign", "the", "on"};
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < 100; ++i) corpus.push_back(random_sentence(rng, vocab));
    const text::IdfTable idf = text::build_idf(corpus);

    std::vector<oracle::Tokens> oc;
    for (const auto& d : corpus) oc.push_back(d);
    const auto recount = oracle::recount_df(oc);

    std::size_t checked = 0;
    for (const auto& [gram, df] : idf.df) {
        std::string key = gram[0];
        for (std::size_t i = 1; i < gram.size(); ++i) key += '\x1f' + gram[i];
        REQUIRE(recount.count(key) == 1);
        CHECK(std::size_t(recount.at(key)) == df);
        ++checked;
    }
    CHECK(checked == recount.size());
}

TEST_CASE("cider identity and disjoint cases") {
    nn::Rng rng(5);
    const std::vector<std::string> vocab{"red", "car", "left", "lane", "dog",
                                         "sign", "the",  "on",  "big", "tree"};
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < 10; ++i) {
        TokenSeq s;
        const std::size_t len = 4 + rng.index(5);
        for (std::size_t k = 0; k < len; ++k) s.push_back(vocab[rng.index(vocab.size())]);
        corpus.push_back(std::move(s));
    }
    const text::IdfTable idf = text::build_idf(corpus);
    for (const auto& s : corpus)
        CHECK(text::cider(s, {s}, idf).value == doctest::Approx(10.0).epsilon(1e-9));

    const text::IdfTable small = text::build_idf({seq({"a", "b"}), seq({"c", "d"})});
    CHECK(text::cider(seq({"a", "b"}), {seq({"c", "d"})}, small).value == doctest::Approx(0.0));
}

TEST_CASE("cider matches brute-force tf-idf cosine on seeded pairs") {
    nn::Rng rng(31);
    const std::vector<std::string> vocab{"red", "car", "left", "lane", "dog", "sign", "the", "on"};
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < 40; ++i) corpus.push_back(random_sentence(rng, vocab));
    const text::IdfTable idf = text::build_idf(corpus);
    std::vector<oracle::Tokens> oc;
    for (const auto& d : corpus) oc.push_back(d);

    for (int pair = 0; pair < 25; ++pair) {
        const TokenSeq cand = random_sentence(rng, vocab);
        const TokenSeq ref = random_sentence(rng, vocab);
        CHECK(text::cider(cand, {ref}, idf).value ==
              doctest::Approx(oracle::cider(cand, {ref}, oc)).epsilon(1e-9));
    }
}

TEST_CASE("cider is invariant under reference reordering") {
    const TokenSeq a = seq({"red", "car", "on", "the", "left"});
    const TokenSeq b = seq({"the", "dog", "under", "the", "tree"});
    const TokenSeq c = seq({"big", "sign", "on", "the", "lane"});
    const text::IdfTable idf = text::build_idf({a, b, c});
    const double fwd = text::cider(a, {b, c}, idf).value;
    const double rev = text::cider(a, {c, b}, idf).value;
    CHECK(fwd == doctest::Approx(rev).epsilon(1e-12));
}

TEST_CASE("all metrics stay within their ranges under fuzz") {
    nn::Rng rng(43);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < 30; ++i) corpus.push_back(random_sentence(rng, vocab));
    const text::IdfTable idf = text::build_idf(corpus);

    for (int trial = 0; trial < 300; ++trial) {
        const TokenSeq cand = random_sentence(rng, vocab);
        const TokenSeq ref = random_sentence(rng, vocab);
        const double b = text::bleu1(cand, ref).value;
        const double r = text::rouge_l(cand, ref).value;
        const double m = text::meteor(cand, ref).value;
        const double cd = text::cider(cand, {ref}, idf).value;
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
        CHECK(cd >= 0.0);
        CHECK(cd <= 10.0);
    }
}

TEST_CASE("identical pairs score range_max, disjoint pairs score zero") {
    const TokenSeq s = seq({"the", "red", "car", "ahead", "waits"});
    const text::IdfTable idf = text::build_idf({s, seq({"dog", "under", "tree", "sits", "there"})});
    CHECK(text::bleu1(s, s).value == doctest::Approx(1.0));
    CHECK(text::rouge_l(s, s).value == doctest::Approx(1.0));
    CHECK(text::cider(s, {s}, idf).value == doctest::Approx(10.0).epsilon(1e-9));

    const TokenSeq t = seq({"dog", "under", "tree"});
    const TokenSeq u = seq({"red", "car", "ahead"});
    CHECK(text::bleu1(t, u).value == 0.0);
    CHECK(text::rouge_l(t, u).value == 0.0);
    CHECK(text::meteor(t, u).value == 0.0);
    CHECK(text::cider(t, {u}, idf).value == 0.0);
}

TEST_CASE("normalize_unit maps to [0,1]") {
    CHECK(text::normalize_unit({text::Metric::cider, 7.416}) == doctest::Approx(0.7416));
    CHECK(text::normalize_unit({text::Metric::bleu1, 0.890}) == doctest::Approx(0.890));
    CHECK(text::normalize_unit({text::Metric::cider, 0.0}) == 0.0);
}

TEST_CASE("skewness") {
    CHECK(text::skewness({1.0, 2.0, 3.0}) == doctest::Approx(0.0));
    CHECK(text::skewness({0.0, 0.0, 1.0}) > 0.0);
    CHECK_THROWS_AS(text::skewness({1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(text::skewness({2.0, 2.0, 2.0}), ValidationError);

    nn::Rng rng(77);
    std::vector<double> uniform;
    for (int i = 0; i < 1000; ++i) uniform.push_back(rng.uniform());
    CHECK(std::abs(text::skewness(uniform)) < 0.15);
}

TEST_CASE("histogram_unit bins scores") {
    const auto h = text::histogram_unit({0.05, 0.15, 0.95, 1.0, 0.0}, 10);
    CHECK(h[0] == 2);
    CHECK(h[1] == 1);
    CHECK(h[9] == 2);
}
