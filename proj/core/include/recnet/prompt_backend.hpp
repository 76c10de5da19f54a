#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/gradient.hpp"
#include "recnet/http.hpp"
#include "recnet/types.hpp"

namespace recnet {

enum class PromptKind { Extract, Summarize, Merge, Predict, Gradient, Optimizer, Rerank, Rank };

inline constexpr std::size_t kPromptKindCount = 8;
inline constexpr std::array<PromptKind, kPromptKindCount> kAllPromptKinds{
    PromptKind::Extract,  PromptKind::Summarize, PromptKind::Merge,  PromptKind::Predict,
    PromptKind::Gradient, PromptKind::Optimizer, PromptKind::Rerank, PromptKind::Rank};

std::string_view to_string(PromptKind kind);

using CallCounts = std::array<std::uint64_t, kPromptKindCount>;

inline std::uint64_t& at(CallCounts& c, PromptKind k) { return c[static_cast<std::size_t>(k)]; }
inline std::uint64_t at(const CallCounts& c, PromptKind k) { return c[static_cast<std::size_t>(k)]; }

class CallCounter {
 public:
  void bump(PromptKind kind) { counts_[static_cast<std::size_t>(kind)].fetch_add(1); }
  std::uint64_t get(PromptKind kind) const { return counts_[static_cast<std::size_t>(kind)].load(); }
  CallCounts snapshot() const;

 private:
  std::array<std::atomic<std::uint64_t>, kPromptKindCount> counts_{};
};

struct CandidateView {
  ClientId id;
  std::string profile;
};

struct PredictOutcome {
  ClientId chosen;
  std::string rationale;
  // False when the reply named neither candidate; chosen is then unusable
  // and the caller scores the step as a wrong prediction.
  bool parsed = true;
};

/// Everything the gradient prompt may look at for one interaction.
struct InteractionContext {
  ClientId user;
  ClientId positive;
  ClientId negative;
  ClientId chosen;
  int reward = 0;
  std::string user_profile;  // stored, before optimization
  std::string user_merged;
  std::string positive_profile;
  std::string positive_merged;
  std::string negative_profile;
  std::string negative_merged;
};

struct GradientRequest {
  ModuleRef module;
  std::string content;
  AttributeSet attributes;  // router attribute set for router modules
  InteractionContext context;
};

struct RouterView {
  const RouterAgent& router;
  const AggregatedGradient& aggregated;
  std::span<const RouterAgent> routers;  // every live router, including this one
};

/// The single boundary for every LLM prompt the system issues. Public calls
/// bump exactly one counter and forward to the do_* hooks.
class PromptBackend {
 public:
  virtual ~PromptBackend() = default;

  AttributeSet extract(std::string_view profile);
  std::string summarize(std::string_view router_profile, const AttributeSet& new_attrs);
  // buffered is newest first.
  std::string merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                    std::string_view profile);
  PredictOutcome predict(std::string_view user_profile, const CandidateView& first,
                         const CandidateView& second);
  TextualGradient gradient(const GradientRequest& request);
  std::string optimize_profile(std::string_view profile, std::string_view gradient_text);
  FilterMemory optimize_filter(const FilterMemory& filter, std::string_view gradient_text);
  RouterDecision decide_router(const RouterView& view);
  std::vector<ClientId> rerank(std::string_view source_profile, std::span<const CandidateView> pool,
                               std::size_t keep);
  std::vector<ClientId> rank(std::string_view user_profile, std::span<const CandidateView> candidates);

  const CallCounter& counter() const { return counter_; }
  std::vector<std::string> drain_warnings();

 protected:
  virtual AttributeSet do_extract(std::string_view profile) = 0;
  virtual std::string do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) = 0;
  virtual std::string do_merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                               std::string_view profile) = 0;
  virtual PredictOutcome do_predict(std::string_view user_profile, const CandidateView& first,
                                    const CandidateView& second) = 0;
  virtual TextualGradient do_gradient(const GradientRequest& request) = 0;
  virtual std::string do_optimize_profile(std::string_view profile, std::string_view gradient_text) = 0;
  virtual FilterMemory do_optimize_filter(const FilterMemory& filter, std::string_view gradient_text) = 0;
  virtual RouterDecision do_decide_router(const RouterView& view) = 0;
  virtual std::vector<ClientId> do_rerank(std::string_view source_profile,
                                          std::span<const CandidateView> pool, std::size_t keep) = 0;
  virtual std::vector<ClientId> do_rank(std::string_view user_profile,
                                        std::span<const CandidateView> candidates) = 0;

  void warn(std::string message);

 private:
  CallCounter counter_;
  std::mutex warnings_mutex_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Mock semantics. Exposed as free functions so tests can use them as oracles
// and so validation can re-extract without touching a backend counter.

struct MockOptions {
  std::size_t max_attributes = 32;
  std::uint32_t split_threshold = 24;
  double merge_threshold = 0.92;
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 256;
};

// Distinct normalized non-stopword tokens, first occurrence order, capped.
std::vector<std::string> mock_extract_tokens(std::string_view profile, std::size_t max_attributes);
AttributeSet mock_extract(std::string_view profile, std::size_t max_attributes = 32);

double jaccard(const AttributeSet& a, const AttributeSet& b);

// "community interests: a, b, c" over a sorted attribute list.
std::string render_router_profile(const AttributeSet& attrs, std::size_t max_attributes);

// Directive application shared by the mock optimizer and the engine.
std::string apply_profile_directives(std::string_view profile, std::span<const Directive> directives);

// Split if oversized; else merge with the smallest sufficiently similar
// router whose union still fits; else rewrite on negative feedback.
RouterDecision mock_router_policy(const RouterView& view, std::uint32_t split_threshold,
                                  double merge_threshold);

class MockPromptBackend final : public PromptBackend {
 public:
  explicit MockPromptBackend(MockOptions options = {});

  const MockOptions& options() const { return options_; }

 protected:
  AttributeSet do_extract(std::string_view profile) override;
  std::string do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) override;
  std::string do_merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                       std::string_view profile) override;
  PredictOutcome do_predict(std::string_view user_profile, const CandidateView& first,
                            const CandidateView& second) override;
  TextualGradient do_gradient(const GradientRequest& request) override;
  std::string do_optimize_profile(std::string_view profile, std::string_view gradient_text) override;
  FilterMemory do_optimize_filter(const FilterMemory& filter, std::string_view gradient_text) override;
  RouterDecision do_decide_router(const RouterView& view) override;
  std::vector<ClientId> do_rerank(std::string_view source_profile, std::span<const CandidateView> pool,
                                  std::size_t keep) override;
  std::vector<ClientId> do_rank(std::string_view user_profile,
                                std::span<const CandidateView> candidates) override;

 private:
  MockOptions options_;
};

// Candidates ordered by descending Jaccard overlap with the user's extracted
// attributes, ties broken by id.
std::vector<ClientId> mock_rank(std::string_view user_profile, std::span<const CandidateView> candidates,
                                std::size_t max_attributes);

// ---------------------------------------------------------------------------
// HTTP chat-completions backend.

struct ChatBackendConfig {
  EndpointConfig endpoint;  // path defaults to /v1/chat/completions
  double temperature = 0.0;
  // Optional directory whose <kind>.txt files override the built-in templates.
  std::optional<std::filesystem::path> template_dir;
  MockOptions fallback;  // used for the mock-ordering rank fallback
};

/// Templates use {{name}} placeholders; unknown placeholders are left as is.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);
std::string_view builtin_template(PromptKind kind);

class HttpPromptBackend final : public PromptBackend {
 public:
  // Resolves the credential immediately: a missing variable throws
  // Error(ConfigError) here, never at the first call.
  HttpPromptBackend(ChatBackendConfig config, std::unique_ptr<HttpTransport> transport,
                    RetryPolicy retry = {});

  // One chat-completions round trip; returns the assistant message text.
  std::string http_complete(PromptKind kind, const std::string& rendered_prompt);

  std::size_t http_calls() const { return http_calls_.load(); }

 protected:
  AttributeSet do_extract(std::string_view profile) override;
  std::string do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) override;
  std::string do_merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                       std::string_view profile) override;
  PredictOutcome do_predict(std::string_view user_profile, const CandidateView& first,
                            const CandidateView& second) override;
  TextualGradient do_gradient(const GradientRequest& request) override;
  std::string do_optimize_profile(std::string_view profile, std::string_view gradient_text) override;
  FilterMemory do_optimize_filter(const FilterMemory& filter, std::string_view gradient_text) override;
  RouterDecision do_decide_router(const RouterView& view) override;
  std::vector<ClientId> do_rerank(std::string_view source_profile, std::span<const CandidateView> pool,
                                  std::size_t keep) override;
  std::vector<ClientId> do_rank(std::string_view user_profile,
                                std::span<const CandidateView> candidates) override;

 private:
  std::string template_for(PromptKind kind) const;
  std::string complete(PromptKind kind, const std::map<std::string, std::string>& vars);

  ChatBackendConfig config_;
  std::string credential_;
  std::unique_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  std::map<PromptKind, std::string> templates_;
  std::atomic<std::size_t> http_calls_{0};
};

// Reply parsers, exposed for tests.
std::optional<ClientId> parse_predict_reply(std::string_view reply, const CandidateView& first,
                                            const CandidateView& second);
std::optional<RouterDecision> parse_decision_reply(std::string_view reply);
// Ordered ids mentioned in reply (by label A.. or by raw id); nullopt unless
// it is a permutation of candidates.
std::optional<std::vector<ClientId>> parse_ranking_reply(std::string_view reply,
                                                         std::span<const CandidateView> candidates);

// ---------------------------------------------------------------------------

/// Forwards to an inner backend but throws BackendUnavailable on the n-th
/// (1-based) call of one prompt kind. Used to check step atomicity.
class FaultInjectingBackend final : public PromptBackend {
 public:
  FaultInjectingBackend(PromptBackend& inner, PromptKind kind, std::uint64_t nth);

  bool fired() const { return fired_; }

 protected:
  AttributeSet do_extract(std::string_view profile) override;
  std::string do_summarize(std::string_view router_profile, const AttributeSet& new_attrs) override;
  std::string do_merge(std::span<const PropagatedMessage> buffered, const FilterMemory& filter,
                       std::string_view profile) override;
  PredictOutcome do_predict(std::string_view user_profile, const CandidateView& first,
                            const CandidateView& second) override;
  TextualGradient do_gradient(const GradientRequest& request) override;
  std::string do_optimize_profile(std::string_view profile, std::string_view gradient_text) override;
  FilterMemory do_optimize_filter(const FilterMemory& filter, std::string_view gradient_text) override;
  RouterDecision do_decide_router(const RouterView& view) override;
  std::vector<ClientId> do_rerank(std::string_view source_profile, std::span<const CandidateView> pool,
                                  std::size_t keep) override;
  std::vector<ClientId> do_rank(std::string_view user_profile,
                                std::span<const CandidateView> candidates) override;

 private:
  void maybe_fail(PromptKind kind);

  PromptBackend& inner_;
  PromptKind kind_;
  std::uint64_t nth_;
  std::uint64_t seen_ = 0;
  bool fired_ = false;
};

}  // namespace recnet
