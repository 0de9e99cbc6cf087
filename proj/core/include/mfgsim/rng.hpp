#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "mfgsim/common.hpp"

namespace mfgsim {

// Counter-based random streams. Every draw is a pure function of
// (stream key, counter), so consumption order and thread scheduling
// cannot change what any index returns.

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Noise kinds get disjoint substreams per (seed, agent).
enum class StreamKind : std::uint64_t {
    type_assignment = 1,
    initial_state = 2,
    process_noise = 3,
    channel_noise = 4,
    generic = 5,
};

/// Derives the key of the (seed, agent, kind) substream.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t agent_id, StreamKind kind) {
    std::uint64_t k = detail::mix64(seed + 0x9E3779B97F4A7C15ull);
    k = detail::mix64(k ^ ((agent_id + 1) * 0xD1B54A32D192ED03ull));
    k = detail::mix64(k ^ ((static_cast<std::uint64_t>(kind)) * 0x8CB92BA72F3D8DD7ull));
    return k;
}

/// Raw 64-bit draw at a counter position (splitmix64 output sequence).
inline std::uint64_t uniform_bits(std::uint64_t key, std::uint64_t counter) {
    return detail::mix64(key + (counter + 1) * 0x9E3779B97F4A7C15ull);
}

/// Uniform double in the open interval (0,1).
inline double uniform01(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(uniform_bits(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal at counter position i, via Box-Muller on the uniform
/// pair (2i, 2i+1). Addressable: normal(key, i) never depends on other draws.
inline double standard_normal(std::uint64_t key, std::uint64_t counter) {
    const double u1 = uniform01(key, 2 * counter);
    const double u2 = uniform01(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Square factor F with F F' = cov, valid for symmetric PSD input
/// (Cholesky when PD, eigenvalue square root with clamping otherwise).
inline Matrix psd_factor(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success && cov.norm() > 0.0) {
        return llt.matrixL();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

/// Stream of N(0, cov) vectors, addressable by time index.
class GaussianStream {
public:
    GaussianStream() = default;
    GaussianStream(std::uint64_t key, const Matrix& cov)
        : key_(key), factor_(psd_factor(cov)), dim_(cov.rows()) {}

    /// k-th vector of the stream; component j consumes normal index k*dim + j.
    Vector vector_at(std::uint64_t k) const {
        Vector z(dim_);
        for (Eigen::Index j = 0; j < dim_; ++j) {
            z[j] = standard_normal(key_, k * static_cast<std::uint64_t>(dim_) + j);
        }
        return factor_ * z;
    }

    void vector_at(std::uint64_t k, Vector& out, Vector& scratch) const {
        for (Eigen::Index j = 0; j < dim_; ++j) {
            scratch[j] = standard_normal(key_, k * static_cast<std::uint64_t>(dim_) + j);
        }
        out.noalias() = factor_ * scratch;
    }

    Eigen::Index dim() const { return dim_; }

private:
    std::uint64_t key_ = 0;
    Matrix factor_;
    Eigen::Index dim_ = 0;
};

}  // namespace mfgsim
