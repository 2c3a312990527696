#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>

#include "orspoken/types.hpp"

namespace orspoken {

// Pretrained word embeddings, one "word<TAB>v1 v2 ... v_d" line per word.
// All rows must share the same dimensionality; later duplicates overwrite
// earlier ones.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    static EmbeddingTable load(const std::string& path);
    void save(const std::string& path) const;

    void insert(const std::string& word, const Eigen::VectorXd& vec);
    const Eigen::VectorXd* find(const std::string& word) const;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return table_.size(); }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, Eigen::VectorXd> table_;
};

// Mean of the embeddings of in-vocabulary tokens; the zero vector when the
// whole expression is out of vocabulary.
Eigen::VectorXd encode_text(const std::string& text, const EmbeddingTable& table);

}  // namespace orspoken
