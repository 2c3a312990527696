#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orspoken/embedding.hpp"
#include "orspoken/types.hpp"

namespace orspoken::lop {

// Ordered object-class names; file format is one class per line.
class ClassVocabulary {
public:
    ClassVocabulary() = default;
    explicit ClassVocabulary(std::vector<std::string> classes);

    static ClassVocabulary load(const std::string& path);

    std::size_t size() const { return classes_.size(); }
    const std::string& name(std::size_t id) const { return classes_.at(id); }
    const std::vector<std::string>& names() const { return classes_; }
    std::optional<std::size_t> id_of(const std::string& name) const;

private:
    std::vector<std::string> classes_;
    std::map<std::string, std::size_t> index_;
};

// Multinomial logistic model over mean-embedding text features.
struct ExprClassifierParams {
    Eigen::MatrixXd W;  // C x d_t
    Eigen::VectorXd b;  // C
};

struct ClassifierConfig {
    double lr = 0.1;
    int epochs = 100;
    int batch = 32;
    std::uint64_t seed = 0;
};

struct ClassifierTrainResult {
    ExprClassifierParams params;
    std::vector<double> epoch_losses;
    std::optional<double> held_out_accuracy;
};

struct ClassPrediction {
    std::string class_name;
    double relevance = 0.0;          // probability of the argmax class
    Eigen::VectorXd distribution;    // full softmax over the vocabulary
};

// Cross-entropy minimized by seeded mini-batch gradient descent. Reports
// held-out accuracy when a validation split is supplied. Pairs referencing
// classes outside the vocabulary are rejected.
ClassifierTrainResult train_expr_classifier(
    const std::vector<std::pair<std::string, std::string>>& pairs, const ClassVocabulary& vocab,
    const EmbeddingTable& embeddings, const ClassifierConfig& config,
    const std::vector<std::pair<std::string, std::string>>* validation = nullptr);

// softmax(W . encode_text + b); argmax ties break toward the lowest class
// id. A fully out-of-vocabulary expression yields the bias prior.
ClassPrediction predict_class(const std::string& expression, const ExprClassifierParams& params,
                              const ClassVocabulary& vocab, const EmbeddingTable& embeddings);

// Keeps candidates of the predicted class ranked by det_score * relevance,
// truncated to k. When fewer than k remain, back-fills from the
// class-agnostic det_score ranking. Stable on ties.
ProposalSet filter_rank_proposals(const ProposalSet& proposals, const std::string& predicted,
                                  double relevance, std::size_t budget);

// Fraction of ground-truth objects with at least one of their image's
// top-k candidates at IoU >= threshold. Objects whose image has no
// candidates count as misses.
double recall_at(const std::map<std::string, ProposalSet>& proposals_per_image,
                 const std::vector<std::pair<std::string, BoundingBox>>& ground_truth,
                 double iou_threshold, std::size_t budget);

void save_classifier_params(const ExprClassifierParams& params, const std::string& path);
ExprClassifierParams load_classifier_params(const std::string& path);

}  // namespace orspoken::lop
