#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recnet/engine.hpp"
#include "recnet/prompt_backend.hpp"
#include "recnet/serialization.hpp"
#include "recnet/types.hpp"

namespace recnet {

struct Event {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
  std::string title;
  std::string review;
  std::optional<std::string> negative;  // supplied training negative, if any

  friend bool operator==(const Event&, const Event&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Event> events;  // sorted by (timestamp, user, item)
  bool pre_sampled = false;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double sparsity = 0.0;  // 1 - interactions / (users * items)
};

DatasetStats stats(const Dataset& d);
// "98.69%"
std::string format_sparsity(double sparsity);

enum class DatasetFormat { Jsonl, Amazon };
DatasetFormat parse_dataset_format(std::string_view s);
std::string_view to_string(DatasetFormat f);

/// Internal JSONL: {"user","item","timestamp","title"?,"review"?,"negative"?}.
/// Amazon JSONL: {"reviewerID","asin","unixReviewTime","summary"?,"reviewText"?}.
/// Blank lines are skipped. Throws ParseError / MissingField naming the line.
Dataset parse_dataset(std::istream& in, DatasetFormat format, std::string name);
Dataset ingest(const std::filesystem::path& path, DatasetFormat format);

// Deduplicate on (user, item, timestamp) and sort by (timestamp, user, item).
void canonicalize(Dataset& d);

void write_dataset(std::ostream& out, const Dataset& d);

// Iteratively drops users and items with fewer than min_events events.
Dataset five_core(const Dataset& d, std::size_t min_events = 5);
// Keeps n users drawn uniformly with the seed (all users when n >= count).
Dataset sample_users(const Dataset& d, std::size_t n, std::uint64_t seed);
// Keeps each user's last max_events events.
Dataset truncate_history(const Dataset& d, std::size_t max_events);

// ---------------------------------------------------------------------------

struct CandidateList {
  std::string user;
  std::string target;
  std::vector<std::string> items;  // target plus negatives, shuffled

  friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

struct EvalSplit {
  std::vector<InteractionRecord> training;        // timestamp order
  std::map<std::string, std::string> targets;      // user -> held-out item
  std::vector<std::vector<CandidateList>> lists;   // [repetition][user order]

  friend bool operator==(const EvalSplit&, const EvalSplit&) = default;
};

/// Leave-one-out split. Training negatives come from a generator seeded with
/// `seed`; repetition r draws its candidate negatives with seed ^ r. Every
/// negative is outside the user's full history. Throws UserTooShort.
EvalSplit make_split(const Dataset& d, std::uint64_t seed, std::uint32_t repetitions = 3,
                     std::uint32_t negatives = 9);

// Training records for every event (no hold-out), negatives seeded.
std::vector<InteractionRecord> stream_records(const Dataset& d, std::uint64_t seed);

// Users with empty profiles; items carry the title of their first event.
std::vector<ClientAgent> build_clients(const Dataset& d, std::uint32_t buffer_capacity);

// 1/log2(1 + rank) when rank <= k, else 0. Throws TruthMissing.
double ndcg_at_k(std::span<const ClientId> ranked, const ClientId& truth, std::size_t k);

/// Orders candidates for one user with the engine's backend: the user's
/// merged profile against each item's stored profile, or the override.
std::vector<ClientId> rank_candidates(Engine& engine, const ClientId& user, std::span<const ClientId> candidates,
                                      const std::map<ClientId, std::string>& overrides = {},
                                      const std::string* user_profile = nullptr);

// ---------------------------------------------------------------------------

using BackendFactory = std::function<std::unique_ptr<PromptBackend>(const NetworkConfig&)>;
using EmbedderFactory = std::function<std::unique_ptr<EmbeddingBackend>(const NetworkConfig&)>;

BackendFactory mock_backend_factory();
EmbedderFactory hash_embedder_factory();

struct EvalOptions {
  NetworkConfig network;
  std::uint32_t repetitions = 3;
  std::uint32_t negatives = 9;
  // Rank cold candidate items with their augmented profiles.
  bool cold_start_augmentation = false;
  std::size_t parallelism = 1;
  BackendFactory backend = mock_backend_factory();
  EmbedderFactory embedder = hash_embedder_factory();
};

struct Metrics {
  double n1 = 0.0;
  double n5 = 0.0;
  double n10 = 0.0;
  std::size_t users = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct RepetitionResult {
  std::string variant;
  std::uint32_t repetition = 0;
  Metrics metrics;
  // Users whose target item was cold at ranking time, ranked both ways.
  Metrics cold_plain;
  Metrics cold_augmented;
  RunReport report;
};

// Trains a fresh engine on split.training and ranks every user's list for
// repetition r.
RepetitionResult run_repetition(const Dataset& d, const EvalSplit& split, std::uint32_t r, const EvalOptions& o);

struct VariantRow {
  std::string variant;
  Metrics mean;
  std::vector<RepetitionResult> repetitions;
  std::optional<std::string> error;
};

struct SweepReport {
  std::string dataset;
  std::vector<VariantRow> rows;

  std::string to_csv() const;  // dataset,variant,repetition,n1,n5,n10
  json to_json() const;
  std::string to_table() const;
  bool any_success() const;
};

Metrics mean_of(std::span<const Metrics> runs);

/// One engine run per (variant, repetition). A failing variant is recorded
/// with its error and does not stop the others.
SweepReport sweep(const Dataset& d, std::span<const Variant> variants, const EvalOptions& options);

// ---------------------------------------------------------------------------

struct SynthConfig {
  std::uint32_t groups = 4;
  std::uint32_t users_per_group = 25;
  std::uint32_t items_per_group = 40;
  std::uint32_t vocab_per_group = 12;
  double crossover_rate = 0.1;
  std::uint32_t events_per_user = 5;
  // Extra items per group that only ever appear as a held-out target.
  std::uint32_t cold_items_per_group = 0;
  std::uint32_t tokens_per_title = 2;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<std::vector<std::string>> vocab;         // per group
  std::map<std::string, std::uint32_t> user_group;
  std::map<std::string, std::uint32_t> item_group;
};

// Throws InvalidValue when groups < 2 or the sizes cannot be met.
SyntheticData gen_synthetic(const SynthConfig& config);

void to_json(json& j, const SynthConfig& c);
void from_json(const json& j, SynthConfig& c);

}  // namespace recnet
