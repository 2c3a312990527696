#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace orspoken::nn {

// Deterministic RNG used by all training code and the ASR mock. mt19937_64
// is fully specified by the standard, and uniforms are derived by hand so
// streams are identical across platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0, 1).
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 eng_;
};

// FNV-1a, for folding strings into RNG seeds.
std::uint64_t hash64(const std::string& s);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd relu(const Eigen::VectorXd& x);

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Matrix with entries drawn row-major from uniform(-scale, scale).
Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale);

// Versioned binary blob holding named row-major float32 tensors. Shared by
// the reranker, the expression classifier and the instance scorer.
struct ParamBlob {
    std::uint32_t kind = 0;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

    void add(const std::string& name, const Eigen::MatrixXd& m) { tensors.emplace_back(name, m); }
    const Eigen::MatrixXd& get(const std::string& name) const;
};

void save_params(const ParamBlob& blob, const std::string& path);
ParamBlob load_params(const std::string& path);

}  // namespace orspoken::nn
