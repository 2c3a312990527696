#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orspoken/embedding.hpp"
#include "orspoken/types.hpp"

namespace orspoken::lid {

// Box geometry normalized by the image size:
// [x_min/W, y_min/H, x_max/W, y_max/H, x_c/W, y_c/H, w/W, h/H].
using SpatialFeature = std::array<double, 8>;

SpatialFeature spatial_features(const BoundingBox& box, double image_w, double image_h);

struct CandidateFeatures {
    Eigen::VectorXd box_feature;
    SpatialFeature spatial{};
    Eigen::VectorXd context_feature;  // whole image

    Eigen::VectorXd visual() const;  // concat(box, spatial, context)
};

// score_i = v_out . relu(W_v visual_i + W_t text + b)
struct InstanceScorerParams {
    Eigen::MatrixXd W_v;    // d_h x (d_box + 8 + d_ctx)
    Eigen::MatrixXd W_t;    // d_h x d_t
    Eigen::VectorXd v_out;  // d_h
    Eigen::VectorXd b;      // d_h

    Eigen::Index d_visual() const { return W_v.cols(); }
    Eigen::Index d_txt() const { return W_t.cols(); }
    Eigen::Index d_h() const { return W_v.rows(); }
};

std::vector<double> score_candidates(const std::string& expression,
                                     const std::vector<CandidateFeatures>& candidates,
                                     const InstanceScorerParams& params,
                                     const EmbeddingTable& embeddings);

// One training object: the expression, its candidates and the index of the
// positive (max-IoU candidate above 0.5).
struct InstanceTrainingItem {
    std::string expression;
    std::vector<CandidateFeatures> candidates;
    std::size_t positive_index = 0;
};

struct InstanceTrainConfig {
    double lr = 0.05;
    int epochs = 100;
    int batch = 16;
    std::uint64_t seed = 0;
    int d_h = 64;
};

struct InstanceTrainResult {
    InstanceScorerParams params;
    std::vector<double> epoch_losses;
    std::size_t skipped_objects = 0;  // objects without an IoU > 0.5 candidate
};

struct InstanceGradients {
    Eigen::MatrixXd W_v, W_t;
    Eigen::VectorXd v_out, b;
};

// Softmax-over-candidates cross-entropy with the positive as the label,
// averaged over items, plus analytic gradients.
double instance_loss_and_gradients(const InstanceScorerParams& params,
                                   const std::vector<InstanceTrainingItem>& items,
                                   const EmbeddingTable& embeddings, InstanceGradients& grads);

// Trains on in-memory items. Deterministic given the seed.
InstanceTrainResult train_instance_scorer(const std::vector<InstanceTrainingItem>& items,
                                          const EmbeddingTable& embeddings,
                                          const InstanceTrainConfig& config);

// Builds training items from a manifest plus ingested detections, loading
// box and context features from their files; objects lacking a candidate
// with IoU > 0.5 are skipped and counted via the result.
std::vector<InstanceTrainingItem> build_instance_training_items(
    const Manifest& manifest, const std::map<std::string, ProposalSet>& detections,
    std::size_t box_feature_dim, std::size_t context_feature_dim, std::size_t* skipped = nullptr);

InstanceTrainResult train_instance_scorer(const Manifest& manifest,
                                          const std::map<std::string, ProposalSet>& detections,
                                          const EmbeddingTable& embeddings,
                                          std::size_t box_feature_dim,
                                          std::size_t context_feature_dim,
                                          const InstanceTrainConfig& config);

struct Selection {
    std::size_t index = 0;  // into the proposal set
    std::vector<double> scores;
};

// Argmax-score candidate; ties break toward the higher det_score, then the
// input order.
Selection select_referred(const std::string& expression, const ProposalSet& proposals,
                          const std::vector<CandidateFeatures>& features,
                          const InstanceScorerParams& params, const EmbeddingTable& embeddings);

void save_instance_params(const InstanceScorerParams& params, const std::string& path);
InstanceScorerParams load_instance_params(const std::string& path);

}  // namespace orspoken::lid
