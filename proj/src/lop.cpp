#include "orspoken/lop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "orspoken/nn.hpp"

namespace orspoken::lop {

ClassVocabulary::ClassVocabulary(std::vector<std::string> classes)
    : classes_(std::move(classes)) {
    if (classes_.empty()) throw ValidationError("class vocabulary must be nonempty");
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (classes_[i].empty()) throw ValidationError("class vocabulary: empty class name");
        auto [it, inserted] = index_.emplace(classes_[i], i);
        if (!inserted)
            throw ValidationError("class vocabulary: duplicate class '" + classes_[i] + "'");
    }
}

ClassVocabulary ClassVocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open class vocabulary: " + path);
    std::vector<std::string> classes;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) classes.push_back(line);
    }
    return ClassVocabulary(std::move(classes));
}

std::optional<std::size_t> ClassVocabulary::id_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

// Mean cross-entropy and gradients of the softmax regression on a batch of
// (embedding, class id) rows.
double softmax_loss_and_gradients(const ExprClassifierParams& p,
                                  const std::vector<Eigen::VectorXd>& xs,
                                  const std::vector<std::size_t>& ys, Eigen::MatrixXd& gW,
                                  Eigen::VectorXd& gb) {
    gW.setZero(p.W.rows(), p.W.cols());
    gb.setZero(p.b.size());
    const double inv_n = 1.0 / double(xs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Eigen::VectorXd probs = nn::softmax(p.W * xs[i] + p.b);
        loss -= std::log(std::max(probs[Eigen::Index(ys[i])], 1e-300)) * inv_n;
        Eigen::VectorXd delta = probs;
        delta[Eigen::Index(ys[i])] -= 1.0;
        gW += inv_n * delta * xs[i].transpose();
        gb += inv_n * delta;
    }
    return loss;
}

double accuracy(const ExprClassifierParams& p, const std::vector<Eigen::VectorXd>& xs,
                const std::vector<std::size_t>& ys) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Eigen::Index argmax = 0;
        (p.W * xs[i] + p.b).maxCoeff(&argmax);
        if (std::size_t(argmax) == ys[i]) ++hits;
    }
    return xs.empty() ? 0.0 : double(hits) / double(xs.size());
}

void encode_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                  const ClassVocabulary& vocab, const EmbeddingTable& embeddings,
                  std::vector<Eigen::VectorXd>& xs, std::vector<std::size_t>& ys) {
    for (const auto& [expression, class_name] : pairs) {
        const auto id = vocab.id_of(class_name);
        if (!id)
            throw ValidationError("train_expr_classifier: class '" + class_name +
                                  "' is not in the vocabulary");
        xs.push_back(encode_text(expression, embeddings));
        ys.push_back(*id);
    }
}

}  // namespace

ClassifierTrainResult train_expr_classifier(
    const std::vector<std::pair<std::string, std::string>>& pairs, const ClassVocabulary& vocab,
    const EmbeddingTable& embeddings, const ClassifierConfig& config,
    const std::vector<std::pair<std::string, std::string>>* validation) {
    if (pairs.empty()) throw ValidationError("train_expr_classifier: no training pairs");
    if (config.epochs < 1 || config.batch < 1)
        throw ValidationError("train_expr_classifier: epochs and batch must be >= 1");

    std::vector<Eigen::VectorXd> xs;
    std::vector<std::size_t> ys;
    encode_pairs(pairs, vocab, embeddings, xs, ys);

    nn::Rng rng(config.seed);
    ClassifierTrainResult result;
    result.params.W = nn::uniform_matrix(rng, Eigen::Index(vocab.size()),
                                         Eigen::Index(embeddings.dim()), 0.05);
    result.params.b = nn::uniform_matrix(rng, Eigen::Index(vocab.size()), 1, 0.05);

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);

    Eigen::MatrixXd gW;
    Eigen::VectorXd gb;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(config.batch));
            std::vector<Eigen::VectorXd> bx;
            std::vector<std::size_t> by;
            for (std::size_t k = start; k < end; ++k) {
                bx.push_back(xs[order[k]]);
                by.push_back(ys[order[k]]);
            }
            softmax_loss_and_gradients(result.params, bx, by, gW, gb);
            result.params.W -= config.lr * gW;
            result.params.b -= config.lr * gb;
        }
        const double epoch_loss = softmax_loss_and_gradients(result.params, xs, ys, gW, gb);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_expr_classifier: loss diverged at epoch " +
                                     std::to_string(epoch));
        result.epoch_losses.push_back(epoch_loss);
    }

    if (validation && !validation->empty()) {
        std::vector<Eigen::VectorXd> vx;
        std::vector<std::size_t> vy;
        encode_pairs(*validation, vocab, embeddings, vx, vy);
        result.held_out_accuracy = accuracy(result.params, vx, vy);
    }
    return result;
}

ClassPrediction predict_class(const std::string& expression, const ExprClassifierParams& params,
                              const ClassVocabulary& vocab, const EmbeddingTable& embeddings) {
    if (std::size_t(params.W.rows()) != vocab.size())
        throw ValidationError("predict_class: params rows do not match vocabulary size");
    const Eigen::VectorXd x = encode_text(expression, embeddings);
    const Eigen::VectorXd probs = nn::softmax(params.W * x + params.b);
    // argmax with ties toward the lowest class id
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    ClassPrediction pred;
    pred.class_name = vocab.name(std::size_t(best));
    pred.relevance = probs[best];
    pred.distribution = probs;
    return pred;
}

ProposalSet filter_rank_proposals(const ProposalSet& proposals, const std::string& predicted,
                                  double relevance, std::size_t budget) {
    if (budget < 1) throw ValidationError("filter_rank_proposals: budget must be >= 1");
    ProposalSet out;
    out.image_id = proposals.image_id;

    // Candidates of the predicted class, by det_score * relevance. The
    // relevance is a common factor inside one call, so this preserves the
    // det_score order and stays stable on ties.
    std::vector<std::size_t> relevant, rest;
    for (std::size_t i = 0; i < proposals.candidates.size(); ++i)
        (proposals.candidates[i].class_label == predicted ? relevant : rest).push_back(i);

    auto by_combined = [&](std::size_t a, std::size_t b) {
        return proposals.candidates[a].det_score * relevance >
               proposals.candidates[b].det_score * relevance;
    };
    std::stable_sort(relevant.begin(), relevant.end(), by_combined);

    for (std::size_t i : relevant) {
        if (out.candidates.size() >= budget) break;
        out.candidates.push_back(proposals.candidates[i]);
    }
    if (out.candidates.size() < budget) {
        // Back-fill from the class-agnostic det_score ranking.
        auto by_det = [&](std::size_t a, std::size_t b) {
            return proposals.candidates[a].det_score > proposals.candidates[b].det_score;
        };
        std::stable_sort(rest.begin(), rest.end(), by_det);
        for (std::size_t i : rest) {
            if (out.candidates.size() >= budget) break;
            out.candidates.push_back(proposals.candidates[i]);
        }
    }
    return out;
}

double recall_at(const std::map<std::string, ProposalSet>& proposals_per_image,
                 const std::vector<std::pair<std::string, BoundingBox>>& ground_truth,
                 double iou_threshold, std::size_t budget) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw ValidationError("recall_at: iou_threshold must be in (0,1]");
    if (budget < 1) throw ValidationError("recall_at: budget must be >= 1");
    if (ground_truth.empty()) throw ValidationError("recall_at: no ground truth objects");
    std::size_t covered = 0;
    for (const auto& [image_id, gt_box] : ground_truth) {
        auto it = proposals_per_image.find(image_id);
        if (it == proposals_per_image.end()) continue;  // counts as a miss
        const auto& cands = it->second.candidates;
        const std::size_t top = std::min(budget, cands.size());
        for (std::size_t i = 0; i < top; ++i) {
            if (iou(cands[i].box, gt_box) >= iou_threshold) {
                ++covered;
                break;
            }
        }
    }
    return double(covered) / double(ground_truth.size());
}

void save_classifier_params(const ExprClassifierParams& params, const std::string& path) {
    nn::ParamBlob blob;
    blob.kind = 2;
    blob.add("W", params.W);
    blob.add("b", params.b);
    nn::save_params(blob, path);
}

ExprClassifierParams load_classifier_params(const std::string& path) {
    const nn::ParamBlob blob = nn::load_params(path);
    if (blob.kind != 2)
        throw std::runtime_error(path + ": params blob kind " + std::to_string(blob.kind) +
                                 " is not an expression classifier");
    ExprClassifierParams p;
    p.W = blob.get("W");
    p.b = blob.get("b");
    return p;
}

}  // namespace orspoken::lop
