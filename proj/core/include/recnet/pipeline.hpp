#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recnet/config.hpp"
#include "recnet/embedding.hpp"
#include "recnet/engine.hpp"
#include "recnet/evaluation.hpp"
#include "recnet/prompt_backend.hpp"

namespace recnet {

// Reads or generates the data, then applies five-core, user sampling and
// history truncation as configured.
Dataset load_dataset(const RunConfig& c);

// Throws ConfigError for an HTTP backend whose credential is missing.
std::unique_ptr<PromptBackend> make_backend(const RunConfig& c);
std::unique_ptr<EmbeddingBackend> make_embedder(const RunConfig& c);
EvalOptions eval_options(const RunConfig& c);

using BatchHook = std::function<void(const Engine&, const BatchReport&)>;

/// Feeds records[state.records_processed..] through the engine, so a
/// restored engine continues where its snapshot stopped. The hook runs after
/// every router-centric stage, including the trailing one.
RunReport continue_run(Engine& engine, std::span<const InteractionRecord> records, const BatchHook& hook = {});

/// Report plus final router and client profiles, under the mock backend and
/// hash embedder whatever the config says.
json golden_document(const RunConfig& c);
std::string render_golden(const json& doc);  // dump(2) plus newline

enum class GoldenStatus { Pass, Mismatch, Unverified, Error };
std::string_view to_string(GoldenStatus s);

struct GoldenResult {
  std::string name;
  GoldenStatus status = GoldenStatus::Error;
  std::string detail;  // JSON patch for mismatches, message for errors
};

/// Manifest: {"fixtures":[{"name","config","golden"}]}, paths relative to
/// the manifest. A fixture whose golden file is absent is Unverified. With
/// update set, absent or mismatching goldens are written instead.
std::vector<GoldenResult> verify_goldens(const std::filesystem::path& manifest, bool update = false);

}  // namespace recnet
