// Shared synthetic fixtures for the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "orspoken/asr.hpp"
#include "orspoken/dataset.hpp"
#include "orspoken/embedding.hpp"
#include "orspoken/lid.hpp"
#include "orspoken/lop.hpp"
#include "orspoken/nn.hpp"
#include "orspoken/textmetrics.hpp"
#include "orspoken/types.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = fs::temp_directory_path() / "orspoken-test-XXXXXX";
        std::string tmpl = base.string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline void write_feature_file(const std::string& path, const std::vector<float>& values) {
    std::ofstream out(path, std::ios::binary);
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        const unsigned char b[4] = {static_cast<unsigned char>(bits),
                                    static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16),
                                    static_cast<unsigned char>(bits >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Deterministic word-salad sentences over a fixed vocabulary.
inline std::vector<std::string> random_sentence(orspoken::nn::Rng& rng,
                                                const std::vector<std::string>& vocab,
                                                std::size_t min_len, std::size_t max_len) {
    const std::size_t len = min_len + rng.index(max_len - min_len + 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) out.push_back(vocab[rng.index(vocab.size())]);
    return out;
}

inline std::string join(const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s += ' ';
        s += tokens[i];
    }
    return s;
}

// --- Correlated VGSR fixture ----------------------------------------------
//
// The image feature one-hot-encodes the referred class; the expression
// mentions the class word; the confusion lexicon corrupts class words into
// decoys whose embeddings carry a dedicated "corrupted" coordinate. A
// reranker trained on this data can recover the alternative whose class
// word survived transcription.
struct CorrelatedFixture {
    std::vector<std::string> class_words{"window", "car", "man", "dog", "chair", "sign"};
    std::vector<std::string> fillers{"the", "a", "on", "left", "right", "big",
                                     "small", "near", "middle", "behind"};
    orspoken::EmbeddingTable embeddings;
    orspoken::asr::ConfusionLexicon lexicon;

    struct Item {
        std::string text;
        Eigen::VectorXd image_feature;  // one-hot class
        std::size_t class_id;
    };
    std::vector<Item> items;

    static constexpr std::size_t kDim = 16;

    explicit CorrelatedFixture(std::uint64_t seed, std::size_t n_items) {
        orspoken::nn::Rng rng(seed);
        for (std::size_t c = 0; c < class_words.size(); ++c) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(kDim);
            v[Eigen::Index(c)] = 1.0;
            embeddings.insert(class_words[c], v);

            // confusable decoy: distinct spelling, "corrupted" marker axis
            const std::string wrong = class_words[c] + "x";
            Eigen::VectorXd w = Eigen::VectorXd::Zero(kDim);
            w[kDim - 2] = -1.0;
            embeddings.insert(wrong, w);
            lexicon.add(wrong, class_words[c]);
        }
        for (std::size_t f = 0; f < fillers.size(); ++f) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(kDim);
            v[Eigen::Index(6 + (f % 8))] = 0.3;
            v[kDim - 1] = 0.1;
            embeddings.insert(fillers[f], v);
        }
        for (std::size_t i = 0; i < n_items; ++i) {
            const std::size_t c = rng.index(class_words.size());
            Item item;
            item.class_id = c;
            item.text = "the " + class_words[c] + " " +
                        fillers[3 + rng.index(fillers.size() - 3)] + " the " +
                        fillers[3 + rng.index(fillers.size() - 3)];
            item.image_feature = Eigen::VectorXd::Zero(kDim);
            item.image_feature[Eigen::Index(c)] = 1.0;
            items.push_back(std::move(item));
        }
    }

    orspoken::text::IdfTable idf() const {
        std::vector<orspoken::text::TokenSeq> corpus;
        for (const auto& it : items) corpus.push_back(orspoken::text::tokenize(it.text));
        return orspoken::text::build_idf(corpus);
    }
};

// --- Left/right LID fixture ------------------------------------------------
//
// Each object has one candidate on the left half and one on the right; the
// expression names the side. Box features are uninformative noise so the
// scorer must read the spatial feature against the text.
struct LeftRightFixture {
    orspoken::EmbeddingTable embeddings;
    std::vector<orspoken::lid::InstanceTrainingItem> items;

    explicit LeftRightFixture(std::uint64_t seed, std::size_t n_items) {
        constexpr std::size_t dim = 8;
        orspoken::nn::Rng rng(seed);
        auto unit = [&](Eigen::Index axis) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            v[axis] = 1.0;
            return v;
        };
        embeddings.insert("left", unit(0));
        embeddings.insert("right", unit(1));
        embeddings.insert("the", unit(2));
        embeddings.insert("box", unit(3));
        embeddings.insert("on", unit(4));

        const double W = 640, H = 480;
        for (std::size_t i = 0; i < n_items; ++i) {
            const bool left = rng.uniform() < 0.5;
            orspoken::lid::InstanceTrainingItem item;
            item.expression = left ? "the box on the left" : "the box on the right";

            auto make_candidate = [&](bool on_left) {
                orspoken::lid::CandidateFeatures cf;
                cf.box_feature = Eigen::VectorXd::Zero(4);
                for (Eigen::Index k = 0; k < 4; ++k)
                    cf.box_feature[k] = rng.uniform(-0.2, 0.2);  // noise only
                const double x0 = on_left ? rng.uniform(10.0, 80.0) : rng.uniform(340.0, 420.0);
                const double y0 = rng.uniform(50.0, 300.0);
                orspoken::BoundingBox box{x0, y0, x0 + rng.uniform(80.0, 180.0),
                                          y0 + rng.uniform(60.0, 140.0)};
                cf.spatial = orspoken::lid::spatial_features(box, W, H);
                cf.context_feature = Eigen::VectorXd::Zero(2);
                return cf;
            };
            item.candidates.push_back(make_candidate(true));
            item.candidates.push_back(make_candidate(false));
            item.positive_index = left ? 0 : 1;
            items.push_back(std::move(item));
        }
    }
};

// --- Separable expression-class fixture ------------------------------------
struct SeparableClassifierFixture {
    orspoken::lop::ClassVocabulary vocab{std::vector<std::string>{"animal", "vehicle"}};
    orspoken::EmbeddingTable embeddings;
    std::vector<std::pair<std::string, std::string>> train, validation;

    explicit SeparableClassifierFixture(std::uint64_t seed, std::size_t n_per_class) {
        constexpr std::size_t dim = 6;
        orspoken::nn::Rng rng(seed);
        auto unit = [&](Eigen::Index axis, double scale) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            v[axis] = scale;
            return v;
        };
        embeddings.insert("dog", unit(0, 1.0));
        embeddings.insert("cat", unit(0, 0.9));
        embeddings.insert("horse", unit(0, 1.1));
        embeddings.insert("truck", unit(1, 1.0));
        embeddings.insert("bus", unit(1, 0.9));
        embeddings.insert("car", unit(1, 1.1));
        embeddings.insert("the", unit(2, 0.5));
        embeddings.insert("big", unit(3, 0.5));
        embeddings.insert("small", unit(4, 0.5));

        const std::vector<std::string> animals{"dog", "cat", "horse"};
        const std::vector<std::string> vehicles{"truck", "bus", "car"};
        const std::vector<std::string> sizes{"big", "small"};
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::string a =
                "the " + sizes[rng.index(2)] + " " + animals[rng.index(animals.size())];
            const std::string v =
                "the " + sizes[rng.index(2)] + " " + vehicles[rng.index(vehicles.size())];
            if (i % 4 == 3) {
                validation.emplace_back(a, "animal");
                validation.emplace_back(v, "vehicle");
            } else {
                train.emplace_back(a, "animal");
                train.emplace_back(v, "vehicle");
            }
        }
    }
};

// --- LOP dominance instance ------------------------------------------------
//
// One ground-truth object plus a candidate pool where every candidate
// overlapping the truth at IoU >= threshold carries the annotated class;
// other-class candidates live in a disjoint region.
struct DominanceInstance {
    orspoken::ProposalSet proposals;
    orspoken::BoundingBox gt;
    std::string annotated_class;
};

inline DominanceInstance make_dominance_instance(orspoken::nn::Rng& rng) {
    static const std::vector<std::string> classes{"car", "dog", "sign", "tree"};
    DominanceInstance inst;
    inst.annotated_class = classes[rng.index(classes.size())];
    inst.proposals.image_id = "img";
    inst.gt = {100.0, 100.0, 200.0, 200.0};

    const std::size_t n = 5 + rng.index(16);
    for (std::size_t i = 0; i < n; ++i) {
        orspoken::DetectionCandidate cand;
        cand.det_score = rng.uniform(0.05, 0.99);
        const double roll = rng.uniform();
        if (roll < 0.45) {
            // annotated class near the truth (may or may not clear the bar)
            cand.class_label = inst.annotated_class;
            const double dx = rng.uniform(-60.0, 60.0), dy = rng.uniform(-60.0, 60.0);
            cand.box = {std::max(0.0, inst.gt.x_min + dx), std::max(0.0, inst.gt.y_min + dy),
                        inst.gt.x_max + dx, inst.gt.y_max + dy};
        } else if (roll < 0.7) {
            // annotated class far away
            cand.class_label = inst.annotated_class;
            const double x = rng.uniform(400.0, 700.0), y = rng.uniform(300.0, 600.0);
            cand.box = {x, y, x + rng.uniform(30.0, 120.0), y + rng.uniform(30.0, 120.0)};
        } else {
            // other classes, disjoint from the truth by construction
            std::string other = classes[rng.index(classes.size())];
            while (other == inst.annotated_class) other = classes[rng.index(classes.size())];
            cand.class_label = other;
            const double x = rng.uniform(400.0, 700.0), y = rng.uniform(300.0, 600.0);
            cand.box = {x, y, x + rng.uniform(30.0, 120.0), y + rng.uniform(30.0, 120.0)};
        }
        inst.proposals.candidates.push_back(std::move(cand));
    }
    std::stable_sort(inst.proposals.candidates.begin(), inst.proposals.candidates.end(),
                     [](const auto& a, const auto& b) { return a.det_score > b.det_score; });
    return inst;
}

}  // namespace fixtures
