#ifndef PRIVCHECK_EMBEDDING_HPP
#define PRIVCHECK_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace privcheck {

using Embedding = std::vector<double>;

/// Cosine similarity, clamped to [-1, 1].
inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(Errc::DimensionMismatch, std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

/// Cosine that maps zero vectors to 0 instead of raising.
inline double cosine_or_zero(std::span<const double> u, std::span<const double> v) {
    try {
        return cosine(u, v);
    } catch (const Error& e) {
        if (e.code() == Errc::ZeroVector) return 0.0;
        throw;
    }
}

/// Turns texts into equal-dimension vectors. Implementations must be safe to
/// call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;

    Embedding embed_one(const std::string& text) { return embed({text}).at(0); }
};

/// Deterministic stand-in for a sentence encoder: each token is hashed into
/// one of `dimension` buckets, counts are L2-normalized. Empty text yields
/// the zero vector.
class HashedBagEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 64;
    static constexpr std::uint64_t kDefaultSeed = 0x5EED;

    explicit HashedBagEmbedder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = kDefaultSeed)
        : dimension_(dimension), seed_(seed) {
        if (dimension_ == 0) throw Error(Errc::InvalidArgument, "embedding dimension must be positive");
    }

    std::size_t bucket(const std::string& token) const {
        return static_cast<std::size_t>(text::fnv1a64(token, 0xcbf29ce484222325ULL ^ seed_) % dimension_);
    }

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            Embedding v(dimension_, 0.0);
            for (const auto& tok : text::tokenize(t)) v[bucket(tok)] += 1.0;
            double norm = 0.0;
            for (double x : v) norm += x * x;
            if (norm > 0.0) {
                norm = std::sqrt(norm);
                for (double& x : v) x /= norm;
            }
            out.push_back(std::move(v));
        }
        return out;
    }

    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Memoizes another provider by exact text.
class CachingEmbedder final : public EmbeddingProvider {
public:
    explicit CachingEmbedder(EmbeddingProvider& inner) : inner_(inner) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<std::string> missing;
        {
            std::lock_guard lock(mutex_);
            for (const auto& t : texts) {
                if (!cache_.contains(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
                    missing.push_back(t);
                }
            }
        }
        if (!missing.empty()) {
            auto vectors = inner_.embed(missing);
            if (vectors.size() != missing.size()) {
                throw Error(Errc::DimensionMismatch, "embedding provider returned wrong vector count");
            }
            std::lock_guard lock(mutex_);
            for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], std::move(vectors[i]));
        }
        std::lock_guard lock(mutex_);
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(cache_.at(t));
        return out;
    }

private:
    EmbeddingProvider& inner_;
    std::mutex mutex_;
    std::map<std::string, Embedding> cache_;
};

}  // namespace privcheck

#endif
