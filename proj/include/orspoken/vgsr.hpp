#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orspoken/asr.hpp"
#include "orspoken/embedding.hpp"
#include "orspoken/textmetrics.hpp"
#include "orspoken/types.hpp"

namespace orspoken::vgsr {

// Fusion scorer: image and text projections joined by element-wise
// multiplication, one fully connected layer, then a single sigmoid output.
//   h = relu(W_img x + b_img) .* relu(W_txt t + b_txt)
//   f = relu(W_fc h + b_fc)
//   score = sigmoid(w_out . f + b_out)
struct FusionScorerParams {
    Eigen::MatrixXd W_img;  // d_h x d_img
    Eigen::MatrixXd W_txt;  // d_h x d_t
    Eigen::MatrixXd W_fc;   // d_f x d_h
    Eigen::VectorXd w_out;  // d_f
    Eigen::VectorXd b_img;  // d_h
    Eigen::VectorXd b_txt;  // d_h
    Eigen::VectorXd b_fc;   // d_f
    double b_out = 0.0;

    Eigen::Index d_img() const { return W_img.cols(); }
    Eigen::Index d_txt() const { return W_txt.cols(); }
    Eigen::Index d_h() const { return W_img.rows(); }
    Eigen::Index d_f() const { return W_fc.rows(); }
};

struct RerankTrainingExample {
    Eigen::VectorXd image_feature;
    std::string alternative_text;
    double target = 0.0;  // [0,1], CIDEr mapped by normalize_unit
};

struct TrainConfig {
    double lr = 0.01;
    int epochs = 100;
    int batch = 32;
    std::uint64_t seed = 0;
    int d_h = 256;
    int d_f = 128;
};

struct TrainResult {
    FusionScorerParams params;
    std::vector<double> epoch_losses;
};

double score_pair(const Eigen::VectorXd& image_feature, const Eigen::VectorXd& text_embedding,
                  const FusionScorerParams& params);

// MSE over the batch plus analytic gradients for every parameter, laid out
// like FusionScorerParams. Used by the trainer and the gradient checks.
struct FusionGradients {
    Eigen::MatrixXd W_img, W_txt, W_fc;
    Eigen::VectorXd w_out, b_img, b_txt, b_fc;
    double b_out = 0.0;
};

double fusion_loss_and_gradients(const FusionScorerParams& params,
                                 const std::vector<Eigen::VectorXd>& images,
                                 const std::vector<Eigen::VectorXd>& texts,
                                 const std::vector<double>& targets, FusionGradients& grads);

// One example per (expression, alternative): target is the [0,1]-mapped
// CIDEr of the alternative against the ground-truth expression; the image
// feature comes from the expression's ImageRecord. nbest is keyed by
// utterance id "<image_id>#<object_idx>#<expr_idx>".
std::vector<RerankTrainingExample> build_cider_targets(
    const Manifest& manifest, const std::map<std::string, asr::NBestList>& nbest_per_expression,
    const text::IdfTable& idf, std::size_t image_feature_dim);

// Seeded uniform(-0.05, 0.05) init, mini-batch gradient descent on MSE.
// Deterministic given the seed; a non-finite loss reports the epoch.
TrainResult train_reranker(const std::vector<RerankTrainingExample>& examples,
                           const EmbeddingTable& embeddings, const TrainConfig& config);

// Stable sort of the alternatives by fusion score descending; ties keep the
// recognizer's order. Scores are attached as confidences.
asr::NBestList rerank(const asr::NBestList& nbest, const Eigen::VectorXd& image_feature,
                      const FusionScorerParams& params, const EmbeddingTable& embeddings);

void save_fusion_params(const FusionScorerParams& params, const std::string& path);
FusionScorerParams load_fusion_params(const std::string& path);

}  // namespace orspoken::vgsr
