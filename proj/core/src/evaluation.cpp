#include "recnet/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "recnet/error.hpp"
#include "recnet/random.hpp"
#include "recnet/text.hpp"

namespace recnet {

DatasetStats stats(const Dataset& d) {
  std::set<std::string> users, items;
  for (const auto& e : d.events) {
    users.insert(e.user);
    items.insert(e.item);
  }
  DatasetStats s{users.size(), items.size(), d.events.size(), 0.0};
  if (!users.empty() && !items.empty()) {
    s.sparsity = 1.0 - static_cast<double>(s.interactions) /
                           (static_cast<double>(s.users) * static_cast<double>(s.items));
  }
  return s;
}

std::string format_sparsity(double sparsity) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", sparsity * 100.0);
  return buf;
}

DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::Jsonl;
  if (s == "amazon") return DatasetFormat::Amazon;
  throw Error(ErrorCode::ConfigError, "unknown dataset format '" + std::string(s) + "'");
}

std::string_view to_string(DatasetFormat f) { return f == DatasetFormat::Jsonl ? "jsonl" : "amazon"; }

namespace {

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::string required_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(ErrorCode::MissingField, where(line) + "missing '" + key + "'");
  if (!it->is_string()) throw Error(ErrorCode::ParseError, where(line) + "'" + key + "' is not a string");
  std::string v = it->get<std::string>();
  if (v.empty()) throw Error(ErrorCode::ParseError, where(line) + "'" + key + "' is empty");
  return v;
}

std::int64_t required_time(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(ErrorCode::MissingField, where(line) + "missing '" + key + "'");
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_string()) {
    const std::string& s = it->get_ref<const std::string&>();
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
  }
  throw Error(ErrorCode::ParseError, where(line) + "'" + key + "' is not an integer timestamp");
}

std::string optional_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorCode::ParseError, where(line) + "'" + key + "' is not a string");
  return it->get<std::string>();
}

Event parse_event(const json& j, DatasetFormat format, std::size_t line) {
  Event e;
  if (format == DatasetFormat::Jsonl) {
    e.user = required_string(j, "user", line);
    e.item = required_string(j, "item", line);
    e.timestamp = required_time(j, "timestamp", line);
    e.title = optional_string(j, "title", line);
    e.review = optional_string(j, "review", line);
    std::string neg = optional_string(j, "negative", line);
    if (!neg.empty()) {
      if (neg == e.item) throw Error(ErrorCode::ParseError, where(line) + "negative equals item");
      e.negative = std::move(neg);
    }
  } else {
    e.user = required_string(j, "reviewerID", line);
    e.item = required_string(j, "asin", line);
    e.timestamp = required_time(j, "unixReviewTime", line);
    e.title = optional_string(j, "summary", line);
    e.review = optional_string(j, "reviewText", line);
  }
  return e;
}

}  // namespace

Dataset parse_dataset(std::istream& in, DatasetFormat format, std::string name) {
  Dataset d;
  d.name = std::move(name);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw Error(ErrorCode::ParseError, where(line) + "invalid JSON (" + ex.what() + ")");
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, where(line) + "expected an object");
    if (format == DatasetFormat::Jsonl && j.size() == 1 && j.contains("pre_sampled")) {
      if (!j.at("pre_sampled").is_boolean()) throw Error(ErrorCode::ParseError, where(line) + "'pre_sampled' is not a boolean");
      d.pre_sampled = j.at("pre_sampled").get<bool>();
      continue;
    }
    d.events.push_back(parse_event(j, format, line));
  }
  canonicalize(d);
  return d;
}

Dataset ingest(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  return parse_dataset(in, format, path.stem().string());
}

void canonicalize(Dataset& d) {
  auto key = [](const Event& e) { return std::tie(e.timestamp, e.user, e.item); };
  std::stable_sort(d.events.begin(), d.events.end(), [&](const Event& a, const Event& b) { return key(a) < key(b); });
  auto last = std::unique(d.events.begin(), d.events.end(),
                          [&](const Event& a, const Event& b) { return key(a) == key(b); });
  d.events.erase(last, d.events.end());
}

void write_dataset(std::ostream& out, const Dataset& d) {
  if (d.pre_sampled) out << json{{"pre_sampled", true}}.dump() << '\n';
  for (const auto& e : d.events) {
    json j{{"user", e.user}, {"item", e.item}, {"timestamp", e.timestamp}};
    if (!e.title.empty()) j["title"] = e.title;
    if (!e.review.empty()) j["review"] = e.review;
    if (e.negative) j["negative"] = *e.negative;
    out << j.dump() << '\n';
  }
}

Dataset five_core(const Dataset& d, std::size_t min_events) {
  Dataset out = d;
  for (;;) {
    std::map<std::string, std::size_t> per_user, per_item;
    for (const auto& e : out.events) {
      ++per_user[e.user];
      ++per_item[e.item];
    }
    const std::size_t before = out.events.size();
    std::erase_if(out.events, [&](const Event& e) {
      return per_user[e.user] < min_events || per_item[e.item] < min_events;
    });
    if (out.events.size() == before) return out;
  }
}

Dataset sample_users(const Dataset& d, std::size_t n, std::uint64_t seed) {
  std::set<std::string> all;
  for (const auto& e : d.events) all.insert(e.user);
  if (n >= all.size()) return d;
  std::vector<std::string> users(all.begin(), all.end());
  Rng rng(seed);
  shuffle_in_place(users, rng);
  const std::set<std::string> keep(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n));
  Dataset out = d;
  std::erase_if(out.events, [&](const Event& e) { return !keep.count(e.user); });
  return out;
}

Dataset truncate_history(const Dataset& d, std::size_t max_events) {
  std::map<std::string, std::size_t> total;
  for (const auto& e : d.events) ++total[e.user];
  std::map<std::string, std::size_t> seen;
  Dataset out = d;
  std::erase_if(out.events, [&](const Event& e) {
    const std::size_t index = seen[e.user]++;
    return total[e.user] > max_events && index < total[e.user] - max_events;
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Histories {
  std::vector<std::string> items;                          // sorted universe
  std::map<std::string, std::set<std::string>> per_user;   // full history
};

Histories histories(const Dataset& d) {
  Histories h;
  std::set<std::string> items;
  for (const auto& e : d.events) {
    items.insert(e.item);
    h.per_user[e.user].insert(e.item);
  }
  h.items.assign(items.begin(), items.end());
  return h;
}

std::vector<std::string> eligible_negatives(const Histories& h, const std::string& user) {
  const auto& seen = h.per_user.at(user);
  std::vector<std::string> out;
  for (const auto& i : h.items)
    if (!seen.count(i)) out.push_back(i);
  return out;
}

std::string draw_negative(const Histories& h, const std::string& user, Rng& rng) {
  const auto pool = eligible_negatives(h, user);
  if (pool.empty()) throw Error(ErrorCode::InvalidValue, "user " + user + " has interacted with every item");
  return pool[uniform_index(rng, pool.size())];
}

InteractionRecord record_of(const Event& e, std::string negative) {
  return {ClientId::user(e.user), ClientId::item(e.item), ClientId::item(std::move(negative)), e.timestamp};
}

// Training negatives use a stream distinct from every repetition's stream.
std::uint64_t training_seed(std::uint64_t seed) { return ~seed; }

}  // namespace

EvalSplit make_split(const Dataset& d, std::uint64_t seed, std::uint32_t repetitions, std::uint32_t negatives) {
  const Histories h = histories(d);
  std::map<std::string, std::size_t> count, last_index;
  for (std::size_t i = 0; i < d.events.size(); ++i) {
    ++count[d.events[i].user];
    last_index[d.events[i].user] = i;
  }
  for (const auto& [user, n] : count) {
    if (n < 2) throw Error(ErrorCode::UserTooShort, "user " + user + " has " + std::to_string(n) + " event(s)");
  }

  EvalSplit split;
  Rng train(training_seed(seed));
  for (std::size_t i = 0; i < d.events.size(); ++i) {
    const Event& e = d.events[i];
    if (last_index[e.user] == i) {
      split.targets[e.user] = e.item;
      continue;
    }
    split.training.push_back(record_of(e, e.negative ? *e.negative : draw_negative(h, e.user, train)));
  }

  for (std::uint32_t r = 0; r < repetitions; ++r) {
    Rng rng(seed ^ r);
    std::vector<CandidateList> lists;
    for (const auto& [user, target] : split.targets) {
      auto pool = eligible_negatives(h, user);
      if (pool.size() < negatives) {
        throw Error(ErrorCode::InvalidValue, "user " + user + " has only " + std::to_string(pool.size()) +
                                                 " candidate negatives");
      }
      CandidateList list{user, target, {target}};
      for (std::uint32_t k = 0; k < negatives; ++k) {
        const std::size_t j = k + uniform_index(rng, pool.size() - k);
        std::swap(pool[k], pool[j]);
        list.items.push_back(pool[k]);
      }
      shuffle_in_place(list.items, rng);
      lists.push_back(std::move(list));
    }
    split.lists.push_back(std::move(lists));
  }
  return split;
}

std::vector<InteractionRecord> stream_records(const Dataset& d, std::uint64_t seed) {
  const Histories h = histories(d);
  Rng rng(training_seed(seed));
  std::vector<InteractionRecord> out;
  out.reserve(d.events.size());
  for (const auto& e : d.events) out.push_back(record_of(e, e.negative ? *e.negative : draw_negative(h, e.user, rng)));
  return out;
}

std::vector<ClientAgent> build_clients(const Dataset& d, std::uint32_t buffer_capacity) {
  std::map<ClientId, ClientAgent> clients;
  std::set<ClientId> titled;
  auto add = [&](ClientId id, const std::string* title) {
    auto [it, inserted] = clients.try_emplace(id);
    if (inserted) {
      it->second.id = id;
      it->second.buffer = MessageBuffer(buffer_capacity);
    }
    // An item's profile is the title of its first positive event.
    if (title && titled.insert(id).second) it->second.profile = *title;
  };
  for (const auto& e : d.events) {
    add(ClientId::user(e.user), nullptr);
    add(ClientId::item(e.item), &e.title);
    if (e.negative) add(ClientId::item(*e.negative), nullptr);
  }
  std::vector<ClientAgent> out;
  out.reserve(clients.size());
  for (auto& [_, c] : clients) out.push_back(std::move(c));
  return out;
}

double ndcg_at_k(std::span<const ClientId> ranked, const ClientId& truth, std::size_t k) {
  auto it = std::find(ranked.begin(), ranked.end(), truth);
  if (it == ranked.end()) throw Error(ErrorCode::TruthMissing, truth.key() + " is not among the candidates");
  const auto rank = static_cast<std::size_t>(it - ranked.begin()) + 1;
  if (rank > k) return 0.0;
  return 1.0 / std::log2(1.0 + static_cast<double>(rank));
}

std::vector<ClientId> rank_candidates(Engine& engine, const ClientId& user, std::span<const ClientId> candidates,
                                      const std::map<ClientId, std::string>& overrides,
                                      const std::string* user_profile) {
  const std::string profile = user_profile ? *user_profile : engine.merged_profile(user);
  std::vector<CandidateView> views;
  views.reserve(candidates.size());
  for (const auto& id : candidates) {
    auto o = overrides.find(id);
    views.push_back({id, o != overrides.end() ? o->second : engine.client(id).profile});
  }
  return engine.rank_items(profile, views);
}

// ---------------------------------------------------------------------------

BackendFactory mock_backend_factory() {
  return [](const NetworkConfig& c) -> std::unique_ptr<PromptBackend> {
    MockOptions o;
    o.max_attributes = c.max_attributes;
    o.split_threshold = c.split_threshold;
    o.merge_threshold = c.merge_threshold;
    o.seed = c.seed;
    o.embedding_dim = c.embedding_dim;
    return std::make_unique<MockPromptBackend>(o);
  };
}

EmbedderFactory hash_embedder_factory() {
  return [](const NetworkConfig& c) -> std::unique_ptr<EmbeddingBackend> {
    return std::make_unique<FeatureHashEmbedder>(c.embedding_dim, c.seed);
  };
}

namespace {

struct MetricSum {
  double n1 = 0, n5 = 0, n10 = 0;
  std::size_t users = 0;

  void add(std::span<const ClientId> ranked, const ClientId& truth) {
    n1 += ndcg_at_k(ranked, truth, 1);
    n5 += ndcg_at_k(ranked, truth, 5);
    n10 += ndcg_at_k(ranked, truth, 10);
    ++users;
  }
  Metrics mean() const {
    if (users == 0) return {};
    const auto n = static_cast<double>(users);
    return {n1 / n, n5 / n, n10 / n, users};
  }
};

bool is_cold_item(Engine& engine, const ClientId& id) { return engine.client(id).interaction_count <= 1; }

}  // namespace

RepetitionResult run_repetition(const Dataset& d, const EvalSplit& split, std::uint32_t r, const EvalOptions& o) {
  if (r >= split.lists.size()) throw Error(ErrorCode::InvalidValue, "repetition " + std::to_string(r) + " not in split");
  auto backend = o.backend(o.network);
  auto embedder = o.embedder(o.network);
  Engine engine(o.network, *backend, *embedder);
  engine.initialize(build_clients(d, o.network.buffer_capacity));
  engine.run(split.training);

  MetricSum main, cold_plain, cold_aug;
  std::map<ClientId, std::string> augmented;  // cached per cold item
  for (const auto& list : split.lists[r]) {
    const ClientId user = ClientId::user(list.user);
    const ClientId truth = ClientId::item(list.target);
    std::vector<ClientId> candidates;
    for (const auto& i : list.items) candidates.push_back(ClientId::item(i));
    const std::string profile = engine.merged_profile(user);

    const bool cold_target = is_cold_item(engine, truth);
    std::vector<ClientId> plain;
    std::vector<ClientId> aug;
    if (cold_target || o.cold_start_augmentation) {
      std::map<ClientId, std::string> overrides;
      for (const auto& c : candidates) {
        if (!is_cold_item(engine, c)) continue;
        auto it = augmented.find(c);
        if (it == augmented.end()) it = augmented.emplace(c, engine.augment_cold_start(c)).first;
        overrides.emplace(c, it->second);
      }
      aug = rank_candidates(engine, user, candidates, overrides, &profile);
    }
    if (cold_target || !o.cold_start_augmentation) plain = rank_candidates(engine, user, candidates, {}, &profile);

    main.add(o.cold_start_augmentation ? aug : plain, truth);
    if (cold_target) {
      cold_plain.add(plain, truth);
      cold_aug.add(aug, truth);
    }
  }

  RepetitionResult out;
  out.variant = std::string(to_string(o.network.variant));
  out.repetition = r;
  out.metrics = main.mean();
  out.cold_plain = cold_plain.mean();
  out.cold_augmented = cold_aug.mean();
  out.report = engine.report();
  return out;
}

Metrics mean_of(std::span<const Metrics> runs) {
  Metrics m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.n1 += r.n1;
    m.n5 += r.n5;
    m.n10 += r.n10;
    m.users += r.users;
  }
  const auto n = static_cast<double>(runs.size());
  m.n1 /= n;
  m.n5 /= n;
  m.n10 /= n;
  m.users /= runs.size();
  return m;
}

namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

json metrics_json(const Metrics& m) { return {{"n1", m.n1}, {"n5", m.n5}, {"n10", m.n10}, {"users", m.users}}; }

}  // namespace

std::string SweepReport::to_csv() const {
  std::string out = "dataset,variant,repetition,n1,n5,n10\n";
  auto line = [&](const std::string& variant, const std::string& rep, const Metrics& m) {
    out += dataset + ',' + variant + ',' + rep + ',' + num(m.n1) + ',' + num(m.n5) + ',' + num(m.n10) + '\n';
  };
  for (const auto& row : rows) {
    if (row.error) continue;
    for (const auto& r : row.repetitions) line(row.variant, std::to_string(r.repetition), r.metrics);
    line(row.variant, "mean", row.mean);
  }
  return out;
}

json SweepReport::to_json() const {
  json variants = json::array();
  for (const auto& row : rows) {
    json v{{"variant", row.variant}};
    if (row.error) {
      v["error"] = *row.error;
    } else {
      v["mean"] = metrics_json(row.mean);
      json reps = json::array();
      for (const auto& r : row.repetitions) {
        reps.push_back({{"repetition", r.repetition},
                        {"metrics", metrics_json(r.metrics)},
                        {"cold_plain", metrics_json(r.cold_plain)},
                        {"cold_augmented", metrics_json(r.cold_augmented)},
                        {"report", r.report.to_json()}});
      }
      v["repetitions"] = std::move(reps);
    }
    variants.push_back(std::move(v));
  }
  return {{"dataset", dataset}, {"variants", std::move(variants)}};
}

std::string SweepReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << "variant" << std::right << std::setw(9) << "N@1" << std::setw(9) << "N@5"
      << std::setw(9) << "N@10" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& row : rows) {
    out << std::left << std::setw(16) << row.variant << std::right;
    if (row.error) {
      out << "  error: " << *row.error << '\n';
      continue;
    }
    out << std::setw(9) << row.mean.n1 << std::setw(9) << row.mean.n5 << std::setw(9) << row.mean.n10 << '\n';
  }
  return out.str();
}

bool SweepReport::any_success() const {
  return std::any_of(rows.begin(), rows.end(), [](const VariantRow& r) { return !r.error; });
}

SweepReport sweep(const Dataset& d, std::span<const Variant> variants, const EvalOptions& options) {
  if (options.repetitions == 0) throw Error(ErrorCode::ConfigError, "repetitions must be positive");
  const EvalSplit split = make_split(d, options.network.seed, options.repetitions, options.negatives);

  struct Task {
    std::size_t variant;
    std::uint32_t repetition;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::uint32_t r = 0; r < options.repetitions; ++r) tasks.push_back({v, r});

  std::vector<std::optional<RepetitionResult>> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      EvalOptions o = options;
      o.network.variant = variants[tasks[t].variant];
      try {
        results[t] = run_repetition(d, split, tasks[t].repetition, o);
      } catch (const std::exception& ex) {
        errors[t] = ex.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(tasks.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  SweepReport report;
  report.dataset = d.name;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantRow row;
    row.variant = std::string(to_string(variants[v]));
    std::vector<Metrics> ms;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].variant != v) continue;
      if (!results[t]) {
        if (!row.error) row.error = errors[t];
        continue;
      }
      ms.push_back(results[t]->metrics);
      row.repetitions.push_back(std::move(*results[t]));
    }
    if (row.error) row.repetitions.clear();
    else row.mean = mean_of(ms);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w += consonants[uniform_index(rng, consonants.size())];
    w += vowels[uniform_index(rng, vowels.size())];
  }
  return w;
}

std::string padded(char prefix, std::size_t n, int width) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

std::string pick_tokens(const std::vector<std::string>& vocab, std::size_t n, Rng& rng) {
  std::vector<std::string> v = vocab;
  n = std::min(n, v.size());
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    std::swap(v[k], v[k + uniform_index(rng, v.size() - k)]);
    if (k) out += ' ';
    out += v[k];
  }
  return out;
}

}  // namespace

SyntheticData gen_synthetic(const SynthConfig& c) {
  if (c.groups < 2) throw Error(ErrorCode::InvalidValue, "at least two groups are required");
  if (c.users_per_group == 0 || c.events_per_user < 2 || c.tokens_per_title == 0)
    throw Error(ErrorCode::InvalidValue, "users_per_group, events_per_user and tokens_per_title must be set");
  if (c.items_per_group < c.events_per_user)
    throw Error(ErrorCode::InvalidValue, "items_per_group must be at least events_per_user");
  if (c.cold_items_per_group > c.users_per_group)
    throw Error(ErrorCode::InvalidValue, "cold_items_per_group exceeds users_per_group");
  if (c.vocab_per_group < c.tokens_per_title)
    throw Error(ErrorCode::InvalidValue, "vocab_per_group must be at least tokens_per_title");
  if (c.crossover_rate < 0.0 || c.crossover_rate > 1.0)
    throw Error(ErrorCode::InvalidValue, "crossover_rate must lie in [0, 1]");

  Rng rng(c.seed);
  SyntheticData out;
  std::set<std::string> used;
  out.vocab.resize(c.groups);
  for (auto& words : out.vocab) {
    while (words.size() < c.vocab_per_group) {
      std::string w = pseudo_word(rng);
      if (text::is_stopword(w) || !used.insert(w).second) continue;
      words.push_back(std::move(w));
    }
  }

  const std::size_t warm_per_group = c.items_per_group;
  const std::size_t item_count = c.groups * (warm_per_group + c.cold_items_per_group);
  const std::size_t user_count = static_cast<std::size_t>(c.groups) * c.users_per_group;
  std::vector<std::size_t> item_numbers(item_count), user_numbers(user_count);
  for (std::size_t i = 0; i < item_count; ++i) item_numbers[i] = i + 1;
  for (std::size_t i = 0; i < user_count; ++i) user_numbers[i] = i + 1;
  shuffle_in_place(item_numbers, rng);
  shuffle_in_place(user_numbers, rng);

  struct Item {
    std::string id;
    std::string title;
  };
  std::vector<std::vector<Item>> warm(c.groups), cold(c.groups);
  std::size_t next_item = 0;
  for (std::uint32_t g = 0; g < c.groups; ++g) {
    for (std::size_t i = 0; i < warm_per_group + c.cold_items_per_group; ++i) {
      Item it{padded('i', item_numbers[next_item++], 4), pick_tokens(out.vocab[g], c.tokens_per_title, rng)};
      out.item_group[it.id] = g;
      (i < warm_per_group ? warm[g] : cold[g]).push_back(std::move(it));
    }
  }

  // Users interleave across groups so timestamps do not follow groups.
  const std::int64_t base = 1'000'000;
  for (std::size_t u = 0; u < user_count; ++u) {
    const auto g = static_cast<std::uint32_t>(u % c.groups);
    const std::size_t rank_in_group = u / c.groups;
    const std::string user = padded('u', user_numbers[u], 3);
    out.user_group[user] = g;
    std::set<std::string> seen;
    for (std::uint32_t e = 0; e < c.events_per_user; ++e) {
      const bool target = e + 1 == c.events_per_user;
      const Item* item = nullptr;
      if (target && rank_in_group < c.cold_items_per_group) {
        item = &cold[g][rank_in_group];
      } else {
        std::uint32_t from = g;
        if (!target && uniform_unit(rng) < c.crossover_rate) {
          from = static_cast<std::uint32_t>((g + 1 + uniform_index(rng, c.groups - 1)) % c.groups);
        }
        do {
          item = &warm[from][uniform_index(rng, warm[from].size())];
        } while (seen.count(item->id));
      }
      seen.insert(item->id);
      Event ev;
      ev.user = user;
      ev.item = item->id;
      ev.timestamp = base + static_cast<std::int64_t>(e * user_count + u);
      ev.title = item->title;
      ev.review = pick_tokens(out.vocab[out.item_group[item->id]], 3, rng);
      out.dataset.events.push_back(std::move(ev));
    }
  }
  out.dataset.name = "synthetic";
  out.dataset.pre_sampled = true;
  canonicalize(out.dataset);
  return out;
}

void to_json(json& j, const SynthConfig& c) {
  j = json{{"groups", c.groups},
           {"users_per_group", c.users_per_group},
           {"items_per_group", c.items_per_group},
           {"vocab_per_group", c.vocab_per_group},
           {"crossover_rate", c.crossover_rate},
           {"events_per_user", c.events_per_user},
           {"cold_items_per_group", c.cold_items_per_group},
           {"tokens_per_title", c.tokens_per_title},
           {"seed", c.seed}};
}

void from_json(const json& j, SynthConfig& c) {
  static const std::set<std::string> known{"groups",          "users_per_group", "items_per_group",
                                           "vocab_per_group", "crossover_rate",  "events_per_user",
                                           "cold_items_per_group", "tokens_per_title", "seed"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw Error(ErrorCode::ConfigError, "unknown synthetic key '" + k + "'");
  }
  SynthConfig d;
  c.groups = j.value("groups", d.groups);
  c.users_per_group = j.value("users_per_group", d.users_per_group);
  c.items_per_group = j.value("items_per_group", d.items_per_group);
  c.vocab_per_group = j.value("vocab_per_group", d.vocab_per_group);
  c.crossover_rate = j.value("crossover_rate", d.crossover_rate);
  c.events_per_user = j.value("events_per_user", d.events_per_user);
  c.cold_items_per_group = j.value("cold_items_per_group", d.cold_items_per_group);
  c.tokens_per_title = j.value("tokens_per_title", d.tokens_per_title);
  c.seed = j.value("seed", d.seed);
}

}  // namespace recnet
