#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recnet/embedding.hpp"
#include "recnet/optimization.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/routing.hpp"
#include "recnet/serialization.hpp"
#include "recnet/types.hpp"

namespace recnet {

enum class Stage { Initialization, ClientCentric, RouterCentric, Evaluation };
inline constexpr std::size_t kStageCount = 4;
std::string_view to_string(Stage s);

/// Backend calls attributed to the stage that issued them.
struct CallAccounting {
  std::array<CallCounts, kStageCount> by_stage{};
  std::uint64_t interactions = 0;
  // Calls an update-profiles-only agent would also make: predict plus the
  // gradient and optimizer calls that target client profiles.
  std::uint64_t baseline_calls = 0;
  // Per batch: routers touched (integrated, rewritten, split or merged).
  std::vector<std::uint64_t> routers_updated;
  // Point-to-point messages built in the client-centric stage (no_router).
  std::uint64_t neighbor_fanout = 0;

  CallCounts& at(Stage s) { return by_stage[static_cast<std::size_t>(s)]; }
  const CallCounts& at(Stage s) const { return by_stage[static_cast<std::size_t>(s)]; }
  std::uint64_t total(Stage s) const;
  // client-centric calls / baseline calls; 0 when no baseline call was made.
  double lambda_observed() const;

  friend bool operator==(const CallAccounting&, const CallAccounting&) = default;
};

struct BatchReport {
  std::uint64_t batch = 0;
  std::size_t records = 0;
  std::size_t diffs = 0;
  std::vector<RouterId> updated;
  std::size_t deliveries = 0;
  std::size_t k_before = 0;
  std::size_t k_after = 0;
  CallCounts calls{};
};

struct EngineState {
  ClientMap clients;
  std::vector<RouterAgent> routers;
  std::vector<AttributeDiff> pending_diffs;
  std::map<RouterId, std::vector<PendingRouterGradient>> pending_router_gradients;
  std::vector<InteractionRecord> pending_records;
  std::uint64_t batch_index = 0;
  std::uint64_t records_processed = 0;
  RouterId next_router_id = 1;
  std::vector<std::size_t> k_trajectory;

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

struct RunReport {
  std::string variant;
  std::uint64_t interactions = 0;
  std::uint64_t batches = 0;
  CallAccounting accounting;
  std::vector<std::size_t> k_trajectory;
  std::vector<LineageEntry> lineage;
  std::vector<Delivery> deliveries;
  std::vector<std::string> warnings;

  // {"interactions","batches","calls","k_trajectory","lambda_observed",...}
  json to_json() const;
};

/// What each variant switches on. Derived once from NetworkConfig.variant.
struct VariantGate {
  bool routers = true;         // router-based propagation
  bool point_to_point = false; // dense top-k retrieval of neighbours
  bool rerank = false;
  bool summarize_before_send = false;
  bool per_step_neighbors = false;  // no_router: neighbours messaged during the step
  bool buffer = true;
  bool filter = true;
  bool feedback = true;         // gradients + optimizer
  bool optimize_filter = true;
  bool optimize_router = true;
  bool async_batches = true;

  static VariantGate of(Variant v);
};

/// Drives the two-stage workflow over an interaction stream. Not thread
/// safe; one engine owns its state exclusively.
class Engine {
 public:
  Engine(NetworkConfig config, PromptBackend& backend, const EmbeddingBackend& embedder);

  // Installs the clients and, for router variants, clusters the initial
  // routers. Clients start with attributes = extract(profile).
  void initialize(std::vector<ClientAgent> clients);

  // Restores a snapshot produced by snapshot().
  void restore(const json& snapshot);
  json snapshot() const;

  // Stage 1 for one record. On any exception every client and all pending
  // state are restored to their values before the call.
  FeedbackRecord step(const InteractionRecord& record);

  // Stage 2 when the pending record count reaches update_size (1 for
  // no_async), or unconditionally when force is set and anything is pending.
  std::optional<BatchReport> maybe_run_router_stage(bool force = false);

  // step + maybe_run_router_stage per record, then a forced trailing stage.
  RunReport run(std::span<const InteractionRecord> records);

  // Connects a cold client (interaction_count <= 1) to every router scoring
  // above tau with the indicator bypassed, merges immediately and returns
  // the augmented profile. Throws PreconditionViolation for warm clients.
  std::string augment_cold_start(const ClientId& client);

  // Merged profile for ranking; counted in the evaluation stage.
  std::string merged_profile(const ClientId& client);

  // Listwise ranking call, counted in the evaluation stage.
  std::vector<ClientId> rank_items(std::string_view user_profile, std::span<const CandidateView> candidates);

  RunReport report() const;

  const EngineState& state() const { return state_; }
  EngineState& mutable_state() { return state_; }
  const NetworkConfig& config() const { return config_; }
  const VariantGate& gate() const { return gate_; }
  const CallAccounting& accounting() const { return accounting_; }
  const std::vector<LineageEntry>& lineage() const { return lineage_; }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  const std::vector<BatchReport>& batches() const { return batches_; }
  PromptBackend& backend() { return backend_; }
  const EmbeddingBackend& embedder() const { return embedder_; }

  ClientAgent& client(const ClientId& id);

 private:
  class StageScope;

  std::string merge_for_step(ClientAgent& c);
  std::vector<ClientId> neighbours(const ClientMap& clients, const ClientAgent& source);
  // Returns the number of messages delivered.
  std::size_t propagate_point_to_point(ClientMap& clients, const std::vector<ClientId>& sources,
                                       bool per_neighbor_summary);
  void deliver(ClientMap& clients, const ClientId& target, PropagatedMessage msg);
  void run_router_stage(EngineState& next, BatchReport& report);
  void touch(const ClientId& id);
  void collect_warnings();

  NetworkConfig config_;
  VariantGate gate_;
  PromptBackend& backend_;
  CachedEmbedder embedder_;
  EngineState state_;
  CallAccounting accounting_;
  std::vector<LineageEntry> lineage_;
  std::vector<Delivery> deliveries_;
  std::vector<BatchReport> batches_;
  std::vector<std::string> warnings_;
  // Original values of clients mutated by the step in progress.
  std::map<ClientId, ClientAgent>* journal_ = nullptr;
};

void to_json(json& j, const AttributeDiff& d);
void from_json(const json& j, AttributeDiff& d);
void to_json(json& j, const LineageEntry& e);
void from_json(const json& j, LineageEntry& e);
void to_json(json& j, const Delivery& d);
void from_json(const json& j, Delivery& d);
void to_json(json& j, const CallAccounting& a);
void from_json(const json& j, CallAccounting& a);
void to_json(json& j, const EngineState& s);
void from_json(const json& j, EngineState& s);

json calls_to_json(const CallCounts& c);

}  // namespace recnet
