#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "recnet/config.hpp"
#include "recnet/error.hpp"
#include "recnet/evaluation.hpp"
#include "recnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace recnet;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInput = 2, kBackend = 3, kConfig = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownVariant:
      return kConfig;
    case ErrorCode::NetworkError:
    case ErrorCode::RateLimited:
    case ErrorCode::MalformedResponse:
    case ErrorCode::BackendUnavailable:
    case ErrorCode::UnparseableChoice:
    case ErrorCode::UnparseableDecision:
    case ErrorCode::MalformedGradient:
      return kBackend;
    default:
      return kInput;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidValue, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingReport, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// "key=value" overrides; the value is parsed as JSON when it is valid JSON.
struct ConfigSource {
  std::string path;
  std::vector<std::string> overrides;

  RunConfig load() const {
    json j;
    try {
      j = json::parse(read_text(path));
    } catch (const json::parse_error& ex) {
      throw Error(ErrorCode::ConfigError, path + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ErrorCode::ConfigError, ex.what());
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigError, "override '" + o + "' is not key=value");
      const std::string value = o.substr(eq + 1);
      j[o.substr(0, eq)] = json::accept(value) ? json::parse(value) : json(value);
    }
    return parse_run_config(j, fs::path(path).parent_path());
  }
};

void print_stats(const Dataset& d) {
  const auto s = stats(d);
  std::cout << "users: " << s.users << "\n"
            << "items: " << s.items << "\n"
            << "interactions: " << s.interactions << "\n"
            << "sparsity: " << format_sparsity(s.sparsity) << "\n";
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string format = "jsonl";
  std::string output;
  bool five_core = false;
  std::size_t sample = 0;
  std::size_t max_history = 0;
  std::uint64_t seed = 0;
};

int cmd_ingest(const IngestArgs& a) {
  Dataset d = ingest(a.input, parse_dataset_format(a.format));
  if (a.five_core) d = five_core(d);
  if (a.sample > 0) d = sample_users(d, a.sample, a.seed);
  if (a.max_history > 0) d = truncate_history(d, a.max_history);
  if (!a.output.empty()) {
    std::ostringstream out;
    write_dataset(out, d);
    write_text(a.output, out.str());
  }
  print_stats(d);
  return kOk;
}

struct RunArgs {
  ConfigSource config;
  std::string resume;
};

int cmd_run(const RunArgs& a) {
  const RunConfig c = a.config.load();
  const fs::path dir = c.output_dir;
  fs::create_directories(dir / "snapshots");
  write_text(dir / "config.resolved.json", resolved_config(c).dump(2) + "\n");

  auto backend = make_backend(c);
  auto embedder = make_embedder(c);
  const Dataset d = load_dataset(c);
  const auto records = stream_records(d, c.network.seed);
  Engine engine(c.network, *backend, *embedder);
  if (a.resume.empty()) {
    engine.initialize(build_clients(d, c.network.buffer_capacity));
  } else {
    engine.restore(json::parse(read_text(a.resume)));
  }

  std::ofstream deliveries(dir / "deliveries.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  std::size_t logged = 0;
  auto flush_deliveries = [&](const Engine& e) {
    const auto& all = e.deliveries();
    deliveries << render_delivery_log(std::span(all).subspan(logged));
    deliveries.flush();
    logged = all.size();
  };
  auto snapshot = [&](const Engine& e) {
    const std::string text = e.snapshot().dump() + "\n";
    write_text(dir / "snapshots" / ("batch-" + std::to_string(e.state().batch_index) + ".json"), text);
    write_text(dir / "snapshot.json", text);
  };

  try {
    continue_run(engine, records, [&](const Engine& e, const BatchReport&) {
      flush_deliveries(e);
      if (c.snapshot_every > 0 && e.state().batch_index % c.snapshot_every == 0) snapshot(e);
    });
  } catch (const Error&) {
    flush_deliveries(engine);
    std::cerr << "run stopped; last snapshot kept in " << (dir / "snapshot.json").string() << "\n";
    throw;
  }
  snapshot(engine);
  const RunReport report = engine.report();
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(dir / "lineage.jsonl", render_lineage_log(engine.lineage()));
  std::cout << "interactions: " << report.interactions << "\n"
            << "batches: " << report.batches << "\n"
            << "routers: " << engine.state().routers.size() << "\n"
            << "report: " << (dir / "report.json").string() << "\n";
  return kOk;
}

struct EvalArgs {
  ConfigSource config;
  std::string variants;
};

int cmd_eval(const EvalArgs& a) {
  RunConfig c = a.config.load();
  if (!a.variants.empty()) {
    c.variants.clear();
    std::stringstream s(a.variants);
    for (std::string v; std::getline(s, v, ',');) {
      if (!v.empty()) c.variants.push_back(parse_variant(v));
    }
  }
  const Dataset d = load_dataset(c);
  const auto variants = c.eval_variants();
  const SweepReport report = sweep(d, variants, eval_options(c));
  fs::create_directories(c.output_dir);
  write_text(c.output_dir / "config.resolved.json", resolved_config(c).dump(2) + "\n");
  write_text(c.output_dir / "metrics.csv", report.to_csv());
  write_text(c.output_dir / "metrics.json", report.to_json().dump(2) + "\n");
  std::cout << report.to_table();
  std::size_t failed = 0;
  for (const auto& row : report.rows) failed += row.error.has_value();
  if (failed > 0) std::cout << failed << " of " << report.rows.size() << " variants failed\n";
  return report.any_success() ? kOk : kBackend;
}

int cmd_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const json r = json::parse(read_text(dir / "report.json"));
  std::cout << "variant: " << r.at("variant").get<std::string>() << "\n"
            << "interactions: " << r.at("interactions") << "\n"
            << "batches: " << r.at("batches") << "\n"
            << "lambda_observed: " << r.at("lambda_observed").dump() << "\n"
            << "calls:\n";
  for (const auto& [stage, kinds] : r.at("calls").items()) {
    std::cout << "  " << stage << ":";
    for (const auto& [kind, n] : kinds.items()) std::cout << " " << kind << "=" << n;
    std::cout << "\n";
  }
  std::string csv = "batch,k\n";
  std::cout << "k_trajectory:";
  std::size_t t = 0;
  for (const auto& k : r.at("k_trajectory")) {
    csv += std::to_string(t++) + "," + k.dump() + "\n";
    std::cout << " " << k.dump();
  }
  std::cout << "\n";
  write_text(dir / "k_trajectory.csv", csv);
  return kOk;
}

struct SynthArgs {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
};

int cmd_gen_synth(const SynthArgs& a) {
  SynthConfig sc;
  if (!a.config.empty()) {
    try {
      sc = json::parse(read_text(a.config)).get<SynthConfig>();
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::ConfigError, a.config + ": " + ex.what());
    }
  }
  if (a.seed) sc.seed = *a.seed;
  const SyntheticData data = gen_synthetic(sc);
  std::ostringstream out;
  write_dataset(out, data.dataset);
  write_text(a.output, out.str());
  print_stats(data.dataset);
  return kOk;
}

int cmd_verify_goldens(const std::string& manifest, bool update) {
  const auto results = verify_goldens(manifest, update);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << to_string(r.status) << " " << r.name;
    if (!r.detail.empty()) std::cout << ": " << r.detail;
    std::cout << "\n";
    ok = ok && (r.status == GoldenStatus::Pass || r.status == GoldenStatus::Unverified);
  }
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recnet: router-mediated recommendation agent network"};
  app.require_subcommand(1);
  int result = kOk;

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Normalize a dataset and print its statistics");
  ingest_cmd->add_option("input", ingest_args.input, "JSONL file")->required();
  ingest_cmd->add_option("--format", ingest_args.format, "jsonl or amazon");
  ingest_cmd->add_option("--out", ingest_args.output, "Write the normalized dataset here");
  ingest_cmd->add_flag("--five-core", ingest_args.five_core, "Iteratively keep users and items with >= 5 events");
  ingest_cmd->add_option("--sample-users", ingest_args.sample, "Keep N users drawn with --seed");
  ingest_cmd->add_option("--max-history", ingest_args.max_history, "Keep each user's last N events");
  ingest_cmd->add_option("--seed", ingest_args.seed);
  ingest_cmd->callback([&] { result = cmd_ingest(ingest_args); });

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Stream every interaction through the engine");
  run_cmd->add_option("--config", run_args.config.path)->required();
  run_cmd->add_option("--set", run_args.config.overrides, "Override a config key (key=value)");
  run_cmd->add_option("--resume", run_args.resume, "Continue from a snapshot file");
  run_cmd->callback([&] { result = cmd_run(run_args); });

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Leave-one-out sweep over variants");
  eval_cmd->add_option("--config", eval_args.config.path)->required();
  eval_cmd->add_option("--set", eval_args.config.overrides, "Override a config key (key=value)");
  eval_cmd->add_option("--variants", eval_args.variants, "Comma-separated variant names");
  eval_cmd->callback([&] { result = cmd_eval(eval_args); });

  std::string run_dir;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run directory");
  report_cmd->add_option("--run-dir", run_dir)->required();
  report_cmd->callback([&] { result = cmd_report(run_dir); });

  SynthArgs synth_args;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("gen-synth", "Write a planted-community dataset");
  synth_cmd->add_option("--config", synth_args.config, "Synthetic settings (JSON)");
  auto* seed_opt = synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_args.output)->required();
  synth_cmd->callback([&] {
    if (seed_opt->count() > 0) synth_args.seed = synth_seed;
    result = cmd_gen_synth(synth_args);
  });

  std::string manifest;
  bool update = false;
  auto* golden_cmd = app.add_subcommand("verify-goldens", "Re-run fixtures and compare with their goldens");
  golden_cmd->add_option("--manifest", manifest)->required();
  golden_cmd->add_flag("--update", update, "Write missing or changed goldens");
  golden_cmd->callback([&] { result = cmd_verify_goldens(manifest, update); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return result;
}
