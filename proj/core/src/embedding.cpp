#include "recnet/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "recnet/error.hpp"
#include "recnet/serialization.hpp"
#include "recnet/text.hpp"

namespace recnet {

namespace {

// FNV-1a followed by a splitmix64 finalizer so nearby seeds decorrelate.
std::uint64_t hash_token(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

}  // namespace

EmbeddingVector unit_normalize(std::vector<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  if (sum > 0.0) {
    const double n = std::sqrt(sum);
    for (double& x : v) x /= n;
  }
  return EmbeddingVector{std::move(v)};
}

FeatureHashEmbedder::FeatureHashEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 8) throw Error(ErrorCode::InvalidValue, "feature hash dim must be >= 8");
}

std::vector<double> FeatureHashEmbedder::accumulate(std::string_view text) const {
  std::vector<double> acc(dim_, 0.0);
  for (const auto& token : text::tokenize(text)) {
    if (text::is_stopword(token)) continue;
    const std::uint64_t h = hash_token(token, seed_);
    const std::size_t bucket = static_cast<std::size_t>(h % dim_);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  return acc;
}

EmbeddingVector FeatureHashEmbedder::embed(std::string_view text) const {
  return unit_normalize(accumulate(text));
}

EmbeddingVector embed_feature_hash(std::string_view text, std::size_t dim, std::uint64_t seed) {
  return FeatureHashEmbedder(dim, seed).embed(text);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

RemoteEmbedder::RemoteEmbedder(EndpointConfig endpoint, std::size_t dim,
                               std::unique_ptr<HttpTransport> transport, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      credential_(endpoint_.resolve_credential()),
      dim_(dim),
      transport_(std::move(transport)),
      retry_(std::move(retry)) {
  if (endpoint_.path.empty()) endpoint_.path = "/v1/embeddings";
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string key(text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    ++http_calls_;
  }

  HttpHeaders headers;
  if (!credential_.empty()) headers.emplace_back("Authorization", "Bearer " + credential_);
  const json request{{"input", json::array({key})}, {"model", endpoint_.model}};
  const HttpResponse res =
      post_with_retry(*transport_, endpoint_.path, request.dump(), headers, retry_);

  std::vector<double> values;
  try {
    const json body = json::parse(res.body);
    values = body.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("embedding payload: ") + e.what());
  }
  if (values.size() != dim_) {
    throw Error(ErrorCode::MalformedResponse, "expected dim " + std::to_string(dim_) + ", got " +
                                                  std::to_string(values.size()));
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::MalformedResponse, "non-finite embedding component");
  }
  EmbeddingVector vec = unit_normalize(std::move(values));

  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(vec)).first->second;
}

std::size_t RemoteEmbedder::http_calls() const {
  std::lock_guard lock(mutex_);
  return http_calls_;
}

std::size_t RemoteEmbedder::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

EmbeddingVector CachedEmbedder::embed(std::string_view text) const {
  const std::string key(text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  EmbeddingVector v = inner_.embed(key);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(v)).first->second;
}

}  // namespace recnet
