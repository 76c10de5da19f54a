#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recnet/evaluation.hpp"
#include "recnet/http.hpp"
#include "recnet/serialization.hpp"
#include "recnet/types.hpp"

namespace recnet {

enum class EmbedderKind { Hash, Remote };
std::string_view to_string(EmbedderKind k);
EmbedderKind parse_embedder_kind(std::string_view s);

struct EmbeddingSettings {
  EmbedderKind kind = EmbedderKind::Hash;
  EndpointConfig endpoint;  // remote only; path defaults to /v1/embeddings

  friend bool operator==(const EmbeddingSettings&, const EmbeddingSettings&) = default;
};

/// Everything a command needs. Network fields sit at the top level of the
/// file next to the run settings.
struct RunConfig {
  std::string name = "run";
  NetworkConfig network;

  // Exactly one data source: a dataset file or an inline generator config.
  std::optional<std::filesystem::path> dataset;
  DatasetFormat format = DatasetFormat::Jsonl;
  std::optional<SynthConfig> synthetic;

  bool five_core = false;
  std::size_t sample_users = 0;  // 0 keeps every user
  std::size_t max_history = 0;   // 0 keeps every event

  std::filesystem::path output_dir = "out";
  std::vector<Variant> variants;  // eval; empty means {network.variant}
  std::uint32_t repetitions = 3;
  std::uint32_t negatives = 9;
  std::size_t parallelism = 1;
  bool cold_start_augmentation = false;
  std::uint64_t snapshot_every = 0;  // batches; 0 writes only the final snapshot

  EndpointConfig endpoint;  // chat backend
  double temperature = 0.0;
  std::optional<std::filesystem::path> template_dir;
  EmbeddingSettings embedding;

  std::vector<Variant> eval_variants() const;
  // Throws ConfigError.
  void validate() const;
};

/// Unknown keys are rejected. Relative paths resolve against base_dir.
RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Every key with its resolved value; parses back to an equal config.
json resolved_config(const RunConfig& c);

}  // namespace recnet
