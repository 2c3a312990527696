#include "orspoken/lid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "orspoken/dataset.hpp"
#include "orspoken/nn.hpp"

namespace orspoken::lid {

SpatialFeature spatial_features(const BoundingBox& box, double image_w, double image_h) {
    validate_box(box, "spatial_features");
    if (!(image_w > 0.0 && image_h > 0.0))
        throw ValidationError("spatial_features: image size must be positive");
    if (box.x_max > image_w || box.y_max > image_h)
        throw ValidationError("spatial_features: box outside image bounds");
    return SpatialFeature{box.x_min / image_w,
                          box.y_min / image_h,
                          box.x_max / image_w,
                          box.y_max / image_h,
                          (box.x_min + box.x_max) / 2.0 / image_w,
                          (box.y_min + box.y_max) / 2.0 / image_h,
                          box.width() / image_w,
                          box.height() / image_h};
}

Eigen::VectorXd CandidateFeatures::visual() const {
    Eigen::VectorXd v(box_feature.size() + 8 + context_feature.size());
    v.head(box_feature.size()) = box_feature;
    for (int i = 0; i < 8; ++i) v[box_feature.size() + i] = spatial[std::size_t(i)];
    v.tail(context_feature.size()) = context_feature;
    return v;
}

namespace {

void check_dims(const InstanceScorerParams& p, Eigen::Index d_visual, Eigen::Index d_txt,
                const char* op) {
    if (p.W_v.cols() != d_visual || p.W_t.cols() != d_txt || p.W_t.rows() != p.W_v.rows() ||
        p.v_out.size() != p.W_v.rows() || p.b.size() != p.W_v.rows())
        throw ValidationError(std::string(op) + ": dimension mismatch between inputs and params");
}

std::vector<double> score_visuals(const std::vector<Eigen::VectorXd>& visuals,
                                  const Eigen::VectorXd& text,
                                  const InstanceScorerParams& params) {
    const Eigen::VectorXd text_part = params.W_t * text + params.b;
    std::vector<double> scores;
    scores.reserve(visuals.size());
    for (const auto& v : visuals)
        scores.push_back(params.v_out.dot(nn::relu(params.W_v * v + text_part)));
    return scores;
}

InstanceScorerParams init_params(nn::Rng& rng, Eigen::Index d_visual, Eigen::Index d_txt,
                                 Eigen::Index d_h) {
    constexpr double scale = 0.05;
    InstanceScorerParams p;
    p.W_v = nn::uniform_matrix(rng, d_h, d_visual, scale);
    p.W_t = nn::uniform_matrix(rng, d_h, d_txt, scale);
    p.v_out = nn::uniform_matrix(rng, d_h, 1, scale);
    p.b = nn::uniform_matrix(rng, d_h, 1, scale);
    return p;
}

Eigen::VectorXd to_eigen(const FeatureVector& fv) {
    Eigen::VectorXd v(Eigen::Index(fv.dim()));
    for (std::size_t i = 0; i < fv.dim(); ++i) v[Eigen::Index(i)] = fv.values[i];
    return v;
}

}  // namespace

std::vector<double> score_candidates(const std::string& expression,
                                     const std::vector<CandidateFeatures>& candidates,
                                     const InstanceScorerParams& params,
                                     const EmbeddingTable& embeddings) {
    if (candidates.empty()) throw ValidationError("score_candidates: no candidates");
    std::vector<Eigen::VectorXd> visuals;
    visuals.reserve(candidates.size());
    for (const auto& c : candidates) visuals.push_back(c.visual());
    check_dims(params, visuals[0].size(), Eigen::Index(embeddings.dim()), "score_candidates");
    for (const auto& v : visuals)
        if (v.size() != visuals[0].size())
            throw ValidationError("score_candidates: inconsistent candidate feature dims");
    return score_visuals(visuals, encode_text(expression, embeddings), params);
}

double instance_loss_and_gradients(const InstanceScorerParams& params,
                                   const std::vector<InstanceTrainingItem>& items,
                                   const EmbeddingTable& embeddings, InstanceGradients& grads) {
    if (items.empty()) throw ValidationError("instance_loss_and_gradients: no items");
    grads.W_v = Eigen::MatrixXd::Zero(params.W_v.rows(), params.W_v.cols());
    grads.W_t = Eigen::MatrixXd::Zero(params.W_t.rows(), params.W_t.cols());
    grads.v_out = Eigen::VectorXd::Zero(params.v_out.size());
    grads.b = Eigen::VectorXd::Zero(params.b.size());

    const double inv_n = 1.0 / double(items.size());
    double loss = 0.0;
    for (const auto& item : items) {
        if (item.candidates.empty() || item.positive_index >= item.candidates.size())
            throw ValidationError("instance_loss_and_gradients: item without a valid positive");
        const Eigen::VectorXd text = encode_text(item.expression, embeddings);
        const Eigen::VectorXd text_part = params.W_t * text + params.b;

        std::vector<Eigen::VectorXd> visuals, pre, hidden;
        Eigen::VectorXd logits(Eigen::Index(item.candidates.size()));
        for (std::size_t c = 0; c < item.candidates.size(); ++c) {
            visuals.push_back(item.candidates[c].visual());
            pre.push_back(params.W_v * visuals.back() + text_part);
            hidden.push_back(nn::relu(pre.back()));
            logits[Eigen::Index(c)] = params.v_out.dot(hidden.back());
        }
        const Eigen::VectorXd probs = nn::softmax(logits);
        loss -= std::log(std::max(probs[Eigen::Index(item.positive_index)], 1e-300)) * inv_n;

        for (std::size_t c = 0; c < item.candidates.size(); ++c) {
            double dlogit = probs[Eigen::Index(c)] * inv_n;
            if (c == item.positive_index) dlogit -= inv_n;
            grads.v_out += dlogit * hidden[c];
            const Eigen::VectorXd dpre =
                (dlogit * params.v_out)
                    .cwiseProduct(pre[c].unaryExpr([](double v) { return nn::relu_grad(v); }));
            grads.W_v += dpre * visuals[c].transpose();
            grads.W_t += dpre * text.transpose();
            grads.b += dpre;
        }
    }
    return loss;
}

InstanceTrainResult train_instance_scorer(const std::vector<InstanceTrainingItem>& items,
                                          const EmbeddingTable& embeddings,
                                          const InstanceTrainConfig& config) {
    if (items.empty()) throw ValidationError("train_instance_scorer: no trainable objects");
    if (config.epochs < 1 || config.batch < 1 || config.d_h < 1)
        throw ValidationError("train_instance_scorer: epochs, batch and d_h must be >= 1");
    const Eigen::Index d_visual = items[0].candidates.at(0).visual().size();

    nn::Rng rng(config.seed);
    InstanceTrainResult result;
    result.params = init_params(rng, d_visual, Eigen::Index(embeddings.dim()), config.d_h);
    auto& p = result.params;

    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);

    InstanceGradients g;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(config.batch));
            std::vector<InstanceTrainingItem> batch;
            for (std::size_t k = start; k < end; ++k) batch.push_back(items[order[k]]);
            instance_loss_and_gradients(p, batch, embeddings, g);
            p.W_v -= config.lr * g.W_v;
            p.W_t -= config.lr * g.W_t;
            p.v_out -= config.lr * g.v_out;
            p.b -= config.lr * g.b;
        }
        const double epoch_loss = instance_loss_and_gradients(p, items, embeddings, g);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_instance_scorer: loss diverged at epoch " +
                                     std::to_string(epoch));
        result.epoch_losses.push_back(epoch_loss);
    }
    return result;
}

std::vector<InstanceTrainingItem> build_instance_training_items(
    const Manifest& manifest, const std::map<std::string, ProposalSet>& detections,
    std::size_t box_feature_dim, std::size_t context_feature_dim, std::size_t* skipped) {
    std::vector<InstanceTrainingItem> items;
    std::size_t skip_count = 0;
    for (const auto& rec : manifest) {
        auto det_it = detections.find(rec.image_id);
        const Eigen::VectorXd context =
            to_eigen(dataset::load_feature_vector(rec.feature_path, context_feature_dim));
        for (std::size_t oi = 0; oi < rec.objects.size(); ++oi) {
            const auto& obj = rec.objects[oi];
            if (det_it == detections.end() || det_it->second.candidates.size() < 2) {
                ++skip_count;
                continue;
            }
            const auto& cands = det_it->second.candidates;
            // positive = max-IoU candidate, required to exceed 0.5
            std::size_t best = 0;
            double best_iou = -1.0;
            for (std::size_t c = 0; c < cands.size(); ++c) {
                const double v = iou(cands[c].box, obj.box);
                if (v > best_iou) {
                    best_iou = v;
                    best = c;
                }
            }
            if (!(best_iou > 0.5)) {
                ++skip_count;
                continue;
            }
            std::vector<CandidateFeatures> feats;
            bool usable = true;
            for (const auto& cand : cands) {
                if (!cand.feature_path) {
                    usable = false;
                    break;
                }
                CandidateFeatures cf;
                cf.box_feature =
                    to_eigen(dataset::load_feature_vector(*cand.feature_path, box_feature_dim));
                cf.spatial = spatial_features(cand.box, rec.width, rec.height);
                cf.context_feature = context;
                feats.push_back(std::move(cf));
            }
            if (!usable) {
                ++skip_count;
                continue;
            }
            for (const auto& expr : obj.expressions)
                items.push_back(InstanceTrainingItem{expr.text, feats, best});
        }
    }
    if (skipped) *skipped = skip_count;
    return items;
}

InstanceTrainResult train_instance_scorer(const Manifest& manifest,
                                          const std::map<std::string, ProposalSet>& detections,
                                          const EmbeddingTable& embeddings,
                                          std::size_t box_feature_dim,
                                          std::size_t context_feature_dim,
                                          const InstanceTrainConfig& config) {
    std::size_t skipped = 0;
    const auto items = build_instance_training_items(manifest, detections, box_feature_dim,
                                                     context_feature_dim, &skipped);
    InstanceTrainResult result = train_instance_scorer(items, embeddings, config);
    result.skipped_objects = skipped;
    return result;
}

Selection select_referred(const std::string& expression, const ProposalSet& proposals,
                          const std::vector<CandidateFeatures>& features,
                          const InstanceScorerParams& params, const EmbeddingTable& embeddings) {
    if (proposals.candidates.empty())
        throw ValidationError("select_referred: empty proposal set");
    if (features.size() != proposals.candidates.size())
        throw ValidationError("select_referred: features do not match proposals");
    Selection sel;
    sel.scores = score_candidates(expression, features, params, embeddings);
    std::size_t best = 0;
    for (std::size_t i = 1; i < sel.scores.size(); ++i) {
        if (sel.scores[i] > sel.scores[best]) {
            best = i;
        } else if (sel.scores[i] == sel.scores[best] &&
                   proposals.candidates[i].det_score > proposals.candidates[best].det_score) {
            best = i;  // tie: higher det_score wins, else keep input order
        }
    }
    sel.index = best;
    return sel;
}

void save_instance_params(const InstanceScorerParams& params, const std::string& path) {
    nn::ParamBlob blob;
    blob.kind = 3;
    blob.add("W_v", params.W_v);
    blob.add("W_t", params.W_t);
    blob.add("v_out", params.v_out);
    blob.add("b", params.b);
    nn::save_params(blob, path);
}

InstanceScorerParams load_instance_params(const std::string& path) {
    const nn::ParamBlob blob = nn::load_params(path);
    if (blob.kind != 3)
        throw std::runtime_error(path + ": params blob kind " + std::to_string(blob.kind) +
                                 " is not an instance scorer");
    InstanceScorerParams p;
    p.W_v = blob.get("W_v");
    p.W_t = blob.get("W_t");
    p.v_out = blob.get("v_out");
    p.b = blob.get("b");
    return p;
}

}  // namespace orspoken::lid
