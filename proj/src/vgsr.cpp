#include "orspoken/vgsr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "orspoken/dataset.hpp"
#include "orspoken/nn.hpp"

namespace orspoken::vgsr {

namespace {

void check_dims(const FusionScorerParams& p, Eigen::Index d_img, Eigen::Index d_txt,
                const char* op) {
    if (p.W_img.cols() != d_img || p.W_txt.cols() != d_txt || p.W_txt.rows() != p.W_img.rows() ||
        p.W_fc.cols() != p.W_img.rows() || p.w_out.size() != p.W_fc.rows() ||
        p.b_img.size() != p.W_img.rows() || p.b_txt.size() != p.W_img.rows() ||
        p.b_fc.size() != p.W_fc.rows())
        throw ValidationError(std::string(op) + ": dimension mismatch between inputs and params");
}

struct Forward {
    Eigen::VectorXd a_img, a_txt, h, a_fc, f;
    double z = 0.0;
    double score = 0.0;
};

Forward forward(const FusionScorerParams& p, const Eigen::VectorXd& img,
                const Eigen::VectorXd& txt) {
    Forward fw;
    fw.a_img = p.W_img * img + p.b_img;
    fw.a_txt = p.W_txt * txt + p.b_txt;
    fw.h = nn::relu(fw.a_img).cwiseProduct(nn::relu(fw.a_txt));
    fw.a_fc = p.W_fc * fw.h + p.b_fc;
    fw.f = nn::relu(fw.a_fc);
    fw.z = p.w_out.dot(fw.f) + p.b_out;
    fw.score = nn::sigmoid(fw.z);
    return fw;
}

FusionScorerParams init_params(nn::Rng& rng, Eigen::Index d_img, Eigen::Index d_txt,
                               Eigen::Index d_h, Eigen::Index d_f) {
    constexpr double scale = 0.05;
    FusionScorerParams p;
    p.W_img = nn::uniform_matrix(rng, d_h, d_img, scale);
    p.b_img = nn::uniform_matrix(rng, d_h, 1, scale);
    p.W_txt = nn::uniform_matrix(rng, d_h, d_txt, scale);
    p.b_txt = nn::uniform_matrix(rng, d_h, 1, scale);
    p.W_fc = nn::uniform_matrix(rng, d_f, d_h, scale);
    p.b_fc = nn::uniform_matrix(rng, d_f, 1, scale);
    p.w_out = nn::uniform_matrix(rng, d_f, 1, scale);
    p.b_out = rng.uniform(-scale, scale);
    return p;
}

}  // namespace

double score_pair(const Eigen::VectorXd& image_feature, const Eigen::VectorXd& text_embedding,
                  const FusionScorerParams& params) {
    check_dims(params, image_feature.size(), text_embedding.size(), "score_pair");
    return forward(params, image_feature, text_embedding).score;
}

double fusion_loss_and_gradients(const FusionScorerParams& params,
                                 const std::vector<Eigen::VectorXd>& images,
                                 const std::vector<Eigen::VectorXd>& texts,
                                 const std::vector<double>& targets, FusionGradients& grads) {
    if (images.empty() || images.size() != texts.size() || images.size() != targets.size())
        throw ValidationError("fusion_loss_and_gradients: batch arrays must be nonempty and equal-sized");
    check_dims(params, images[0].size(), texts[0].size(), "fusion_loss_and_gradients");

    grads.W_img = Eigen::MatrixXd::Zero(params.W_img.rows(), params.W_img.cols());
    grads.W_txt = Eigen::MatrixXd::Zero(params.W_txt.rows(), params.W_txt.cols());
    grads.W_fc = Eigen::MatrixXd::Zero(params.W_fc.rows(), params.W_fc.cols());
    grads.w_out = Eigen::VectorXd::Zero(params.w_out.size());
    grads.b_img = Eigen::VectorXd::Zero(params.b_img.size());
    grads.b_txt = Eigen::VectorXd::Zero(params.b_txt.size());
    grads.b_fc = Eigen::VectorXd::Zero(params.b_fc.size());
    grads.b_out = 0.0;

    const double inv_n = 1.0 / double(images.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Forward fw = forward(params, images[i], texts[i]);
        const double err = fw.score - targets[i];
        loss += err * err * inv_n;

        const double dz = 2.0 * err * fw.score * (1.0 - fw.score) * inv_n;
        const Eigen::VectorXd df = dz * params.w_out;
        const Eigen::VectorXd da_fc =
            df.cwiseProduct(fw.a_fc.unaryExpr([](double v) { return nn::relu_grad(v); }));
        const Eigen::VectorXd dh = params.W_fc.transpose() * da_fc;
        const Eigen::VectorXd relu_img = nn::relu(fw.a_img);
        const Eigen::VectorXd relu_txt = nn::relu(fw.a_txt);
        const Eigen::VectorXd da_img =
            dh.cwiseProduct(relu_txt)
                .cwiseProduct(fw.a_img.unaryExpr([](double v) { return nn::relu_grad(v); }));
        const Eigen::VectorXd da_txt =
            dh.cwiseProduct(relu_img)
                .cwiseProduct(fw.a_txt.unaryExpr([](double v) { return nn::relu_grad(v); }));

        grads.w_out += dz * fw.f;
        grads.b_out += dz;
        grads.W_fc += da_fc * fw.h.transpose();
        grads.b_fc += da_fc;
        grads.W_img += da_img * images[i].transpose();
        grads.b_img += da_img;
        grads.W_txt += da_txt * texts[i].transpose();
        grads.b_txt += da_txt;
    }
    return loss;
}

std::vector<RerankTrainingExample> build_cider_targets(
    const Manifest& manifest, const std::map<std::string, asr::NBestList>& nbest_per_expression,
    const text::IdfTable& idf, std::size_t image_feature_dim) {
    std::vector<RerankTrainingExample> examples;
    for (const auto& rec : manifest) {
        const FeatureVector fv = dataset::load_feature_vector(rec.feature_path, image_feature_dim);
        Eigen::VectorXd img(Eigen::Index(fv.dim()));
        for (std::size_t i = 0; i < fv.dim(); ++i) img[Eigen::Index(i)] = fv.values[i];

        for (std::size_t oi = 0; oi < rec.objects.size(); ++oi) {
            const auto& obj = rec.objects[oi];
            for (std::size_t ei = 0; ei < obj.expressions.size(); ++ei) {
                const std::string utt = utterance_id(rec.image_id, oi, ei);
                auto it = nbest_per_expression.find(utt);
                if (it == nbest_per_expression.end())
                    throw std::runtime_error("build_cider_targets: missing NBestList for '" + utt +
                                             "'");
                const text::TokenSeq truth = text::tokenize(obj.expressions[ei].text);
                for (const auto& alt : it->second.alternatives) {
                    const text::TokenSeq cand = text::tokenize(alt.text);
                    RerankTrainingExample ex;
                    ex.image_feature = img;
                    ex.alternative_text = alt.text;
                    ex.target = cand.empty()
                                    ? 0.0
                                    : text::normalize_unit(text::cider(cand, {truth}, idf));
                    examples.push_back(std::move(ex));
                }
            }
        }
    }
    return examples;
}

TrainResult train_reranker(const std::vector<RerankTrainingExample>& examples,
                           const EmbeddingTable& embeddings, const TrainConfig& config) {
    if (examples.empty()) throw ValidationError("train_reranker: no training examples");
    if (config.epochs < 1 || config.batch < 1 || config.d_h < 1 || config.d_f < 1)
        throw ValidationError("train_reranker: epochs, batch and dims must be >= 1");

    const Eigen::Index d_img = examples[0].image_feature.size();
    const Eigen::Index d_txt = Eigen::Index(embeddings.dim());
    std::vector<Eigen::VectorXd> images, texts;
    std::vector<double> targets;
    images.reserve(examples.size());
    texts.reserve(examples.size());
    targets.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.image_feature.size() != d_img)
            throw ValidationError("train_reranker: inconsistent image feature dims");
        if (!(ex.target >= 0.0 && ex.target <= 1.0))
            throw ValidationError("train_reranker: target outside [0,1]");
        images.push_back(ex.image_feature);
        texts.push_back(encode_text(ex.alternative_text, embeddings));
        targets.push_back(ex.target);
    }

    nn::Rng rng(config.seed);
    TrainResult result;
    result.params = init_params(rng, d_img, d_txt, config.d_h, config.d_f);
    auto& p = result.params;

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    FusionGradients g;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(config.batch));
            std::vector<Eigen::VectorXd> bi, bt;
            std::vector<double> by;
            for (std::size_t k = start; k < end; ++k) {
                bi.push_back(images[order[k]]);
                bt.push_back(texts[order[k]]);
                by.push_back(targets[order[k]]);
            }
            fusion_loss_and_gradients(p, bi, bt, by, g);
            p.W_img -= config.lr * g.W_img;
            p.b_img -= config.lr * g.b_img;
            p.W_txt -= config.lr * g.W_txt;
            p.b_txt -= config.lr * g.b_txt;
            p.W_fc -= config.lr * g.W_fc;
            p.b_fc -= config.lr * g.b_fc;
            p.w_out -= config.lr * g.w_out;
            p.b_out -= config.lr * g.b_out;
        }
        const double epoch_loss = fusion_loss_and_gradients(p, images, texts, targets, g);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_reranker: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));
        result.epoch_losses.push_back(epoch_loss);
    }
    return result;
}

asr::NBestList rerank(const asr::NBestList& nbest, const Eigen::VectorXd& image_feature,
                      const FusionScorerParams& params, const EmbeddingTable& embeddings) {
    std::vector<double> scores;
    scores.reserve(nbest.alternatives.size());
    for (const auto& alt : nbest.alternatives)
        scores.push_back(score_pair(image_feature, encode_text(alt.text, embeddings), params));

    std::vector<std::size_t> order(nbest.alternatives.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    asr::NBestList out;
    out.utterance_id = nbest.utterance_id;
    for (std::size_t idx : order)
        out.alternatives.push_back({nbest.alternatives[idx].text, scores[idx]});
    return out;
}

void save_fusion_params(const FusionScorerParams& params, const std::string& path) {
    nn::ParamBlob blob;
    blob.kind = 1;
    blob.add("W_img", params.W_img);
    blob.add("W_txt", params.W_txt);
    blob.add("W_fc", params.W_fc);
    blob.add("w_out", params.w_out);
    blob.add("b_img", params.b_img);
    blob.add("b_txt", params.b_txt);
    blob.add("b_fc", params.b_fc);
    blob.add("b_out", Eigen::MatrixXd::Constant(1, 1, params.b_out));
    nn::save_params(blob, path);
}

FusionScorerParams load_fusion_params(const std::string& path) {
    const nn::ParamBlob blob = nn::load_params(path);
    if (blob.kind != 1)
        throw std::runtime_error(path + ": params blob kind " + std::to_string(blob.kind) +
                                 " is not a fusion scorer");
    FusionScorerParams p;
    p.W_img = blob.get("W_img");
    p.W_txt = blob.get("W_txt");
    p.W_fc = blob.get("W_fc");
    p.w_out = blob.get("w_out");
    p.b_img = blob.get("b_img");
    p.b_txt = blob.get("b_txt");
    p.b_fc = blob.get("b_fc");
    p.b_out = blob.get("b_out")(0, 0);
    return p;
}

}  // namespace orspoken::vgsr
