#include "orspoken/embedding.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "orspoken/textmetrics.hpp"

namespace orspoken {

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding table: " + path);
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + " line " + std::to_string(line_no);
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ValidationError(where + ": malformed embedding table, expected 'word<TAB>values'");
        const std::string word = line.substr(0, tab);
        std::istringstream values(line.substr(tab + 1));
        std::vector<double> v;
        double x;
        while (values >> x) v.push_back(x);
        if (v.empty() || !values.eof())
            throw ValidationError(where + ": malformed embedding values");
        if (table.dim_ == 0) table.dim_ = v.size();
        if (v.size() != table.dim_)
            throw ValidationError(where + ": embedding dim " + std::to_string(v.size()) +
                                  " differs from table dim " + std::to_string(table.dim_));
        Eigen::VectorXd vec(Eigen::Index(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) vec[Eigen::Index(i)] = v[i];
        table.table_[word] = std::move(vec);
    }
    return table;
}

void EmbeddingTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write embedding table: " + path);
    // map iteration over an unordered table would not be deterministic
    std::vector<const std::string*> words;
    words.reserve(table_.size());
    for (const auto& [w, v] : table_) words.push_back(&w);
    std::sort(words.begin(), words.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    for (const auto* w : words) {
        out << *w;
        const auto& v = table_.at(*w);
        for (Eigen::Index i = 0; i < v.size(); ++i) out << (i == 0 ? '\t' : ' ') << v[i];
        out << '\n';
    }
}

void EmbeddingTable::insert(const std::string& word, const Eigen::VectorXd& vec) {
    if (dim_ == 0) dim_ = std::size_t(vec.size());
    if (std::size_t(vec.size()) != dim_)
        throw ValidationError("embedding for '" + word + "' has dim " +
                              std::to_string(vec.size()) + ", table dim is " +
                              std::to_string(dim_));
    table_[word] = vec;
}

const Eigen::VectorXd* EmbeddingTable::find(const std::string& word) const {
    auto it = table_.find(word);
    return it == table_.end() ? nullptr : &it->second;
}

Eigen::VectorXd encode_text(const std::string& text, const EmbeddingTable& table) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(Eigen::Index(table.dim()));
    std::size_t hits = 0;
    for (const auto& tok : text::tokenize(text)) {
        if (const auto* v = table.find(tok)) {
            sum += *v;
            ++hits;
        }
    }
    if (hits > 0) sum /= double(hits);
    return sum;
}

}  // namespace orspoken
