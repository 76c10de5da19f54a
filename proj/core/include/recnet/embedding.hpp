#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "recnet/http.hpp"
#include "recnet/types.hpp"

namespace recnet {

/// Text encoder. embed() must be a pure function of its input and return
/// either a unit vector or the exact zero vector.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
};

/// Signed feature hashing over normalized, non-stopword tokens.
class FeatureHashEmbedder final : public EmbeddingBackend {
 public:
  // dim must be >= 8.
  explicit FeatureHashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }

  // Un-normalized token accumulator; embed() is this scaled to unit length.
  std::vector<double> accumulate(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

EmbeddingVector embed_feature_hash(std::string_view text, std::size_t dim, std::uint64_t seed);

// Scales v to unit length; the zero vector stays zero.
EmbeddingVector unit_normalize(std::vector<double> v);

// dot(a,b)/(|a||b|), 0 when either is zero. Throws DimensionMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// OpenAI-style embeddings endpoint with a per-run memo cache keyed by the
/// exact input text. Safe to call from several threads.
class RemoteEmbedder final : public EmbeddingBackend {
 public:
  RemoteEmbedder(EndpointConfig endpoint, std::size_t dim,
                 std::unique_ptr<HttpTransport> transport, RetryPolicy retry = {});

  // Throws MalformedResponse on a bad payload or wrong dimension, and
  // NetworkError once retries are exhausted.
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }

  std::size_t http_calls() const;
  std::size_t cache_size() const;

 private:
  EndpointConfig endpoint_;
  std::string credential_;
  std::size_t dim_;
  std::unique_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
  mutable std::size_t http_calls_ = 0;
};

/// Memoizing wrapper keyed by exact text; safe for concurrent use.
class CachedEmbedder final : public EmbeddingBackend {
 public:
  explicit CachedEmbedder(const EmbeddingBackend& inner) : inner_(inner) {}

  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dim() const override { return inner_.dim(); }

 private:
  const EmbeddingBackend& inner_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

}  // namespace recnet
