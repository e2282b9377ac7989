// SPDX-License-Identifier: Apache-2.0
//
// rlvr: train, eval, agreement, collect-distill, classify, gen-toy.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlvr/rlvr.hpp"

namespace fs = std::filesystem;
using namespace rlvr;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct JudgeOptions {
  std::string backend = "mock";
  std::string matcher = "substring";
  double confidence = 0.9;
  double jaccard_threshold = 0.5;
  double flip_rate = 0.0;
  double invalid_rate = 0.0;
  std::uint64_t noise_seed = 0;
  llm::ClientConfig client;
  std::string cache;

  void add_to(CLI::App& cmd, const std::string& prefix, const std::string& group) {
    const auto opt = [&](const std::string& name) { return "--" + prefix + name; };
    cmd.add_option(opt("backend"), backend, "mock or remote")
        ->check(CLI::IsMember({"mock", "remote"}))->capture_default_str()->group(group);
    cmd.add_option(opt("matcher"), matcher, "mock rule: substring, exact or jaccard")
        ->check(CLI::IsMember({"substring", "exact", "jaccard"}))->capture_default_str()->group(group);
    cmd.add_option(opt("confidence"), confidence, "mock confidence")->capture_default_str()->group(group);
    cmd.add_option(opt("jaccard-threshold"), jaccard_threshold)->capture_default_str()->group(group);
    cmd.add_option(opt("flip-rate"), flip_rate, "mock verdict flip probability")->capture_default_str()->group(group);
    cmd.add_option(opt("invalid-rate"), invalid_rate, "mock Invalid probability")->capture_default_str()->group(group);
    cmd.add_option(opt("noise-seed"), noise_seed)->capture_default_str()->group(group);
    cmd.add_option(opt("base-url"), client.base_url, "OpenAI-compatible endpoint")->capture_default_str()->group(group);
    cmd.add_option(opt("model"), client.model_name)->capture_default_str()->group(group);
    cmd.add_option(opt("api-key-env"), client.api_key_env, "env var holding the API key")
        ->capture_default_str()->group(group);
    cmd.add_option(opt("temperature"), client.temperature)->capture_default_str()->group(group);
    cmd.add_option(opt("max-inflight"), client.max_inflight)->capture_default_str()->group(group);
    cmd.add_option(opt("retries"), client.retries)->capture_default_str()->group(group);
    cmd.add_option(opt("timeout"), client.timeout_seconds, "seconds")->capture_default_str()->group(group);
    cmd.add_option(opt("cache"), cache, "JSONL judgment cache")->group(group);
  }

  llm::JudgeBackend build() const {
    if (backend == "remote") {
      auto c = client;
      if (!cache.empty()) c.cache_path = cache;
      return llm::make_remote_judge(c);
    }
    llm::MockJudge m;
    m.matcher = matcher == "exact"     ? llm::MockJudge::Matcher::Exact
                : matcher == "jaccard" ? llm::MockJudge::Matcher::Jaccard
                                       : llm::MockJudge::Matcher::Substring;
    m.confidence = confidence;
    m.jaccard_threshold = jaccard_threshold;
    m.flip_rate = flip_rate;
    m.invalid_rate = invalid_rate;
    m.seed = noise_seed;
    m.validate();
    return m;
  }
};

struct DataOptions {
  std::string dataset;
  std::string test_dataset;
  std::string rm_dataset;
  double test_fraction = 0.1;
  double rm_fraction = 0.0;
  std::uint64_t split_seed = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--dataset", dataset, "JSONL of {id, question, reference, subject_id?}")->group("Data");
    cmd.add_option("--test-dataset", test_dataset, "explicit test set; disables the random split")->group("Data");
    cmd.add_option("--rm-dataset", rm_dataset, "explicit reward-model pool")->group("Data");
    cmd.add_option("--test-fraction", test_fraction)->capture_default_str()->group("Data");
    cmd.add_option("--rm-fraction", rm_fraction)->capture_default_str()->group("Data");
    cmd.add_option("--split-seed", split_seed)->capture_default_str()->group("Data");
  }

  DatasetSplit load() const {
    if (dataset.empty()) throw ConfigError("--dataset is required");
    auto data = load_jsonl(dataset);
    DatasetSplit split;
    if (!test_dataset.empty()) {
      split.train = std::move(data);
      split.test = load_jsonl(test_dataset);
    } else {
      split = split_dataset(data, test_fraction, rm_fraction, split_seed);
    }
    if (!rm_dataset.empty()) split.rm_pool = load_jsonl(rm_dataset);
    return split;
  }
};

struct PolicyOptions {
  std::size_t features = 64;
  std::size_t max_length = 8;
  std::vector<std::string> vocab;
  std::string separator = " ";
  std::string init_checkpoint;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--features", features, "prompt feature buckets")->capture_default_str()->group("Policy");
    cmd.add_option("--max-length", max_length, "max response tokens")->capture_default_str()->group("Policy");
    cmd.add_option("--vocab", vocab, "answer tokens; default: derived from references")
        ->delimiter(',')->group("Policy");
    cmd.add_option("--separator", separator, "token separator; empty means characters")
        ->capture_default_str()->group("Policy");
    cmd.add_option("--init-checkpoint", init_checkpoint)->group("Policy");
  }

  Vocabulary vocabulary(const DatasetSplit& split) const {
    if (!vocab.empty()) return Vocabulary::from_tokens(vocab, separator);
    std::set<std::string> seen;
    for (const auto* part : {&split.train, &split.test, &split.rm_pool}) {
      for (const auto& p : *part) {
        if (separator.empty()) {
          for (char c : p.reference) seen.insert(std::string(1, c));
        } else {
          std::istringstream in(p.reference);
          for (std::string w; in >> w;) seen.insert(w);
        }
      }
    }
    if (seen.empty()) throw ConfigError("cannot derive a vocabulary from empty references");
    return Vocabulary::from_tokens({seen.begin(), seen.end()}, separator);
  }

  Policy initial(const DatasetSplit& split) const {
    if (!init_checkpoint.empty()) return load_checkpoint(init_checkpoint);
    if (features == 0 || max_length == 0) throw ConfigError("--features and --max-length must be positive");
    return make_policy(vocabulary(split), features, max_length);
  }
};

struct TrainOptions {
  rl::TrainConfig config;
  std::string algorithm = "reinforce";
  std::string reward = "rule-binary";
  std::string normalization = "batch";
  int checkpoint_every = 0;
  std::string out = "runs/latest";
  bool dry_run = false;

  void add_to(CLI::App& cmd) {
    config.max_steps = 100;
    cmd.add_option("--algorithm", algorithm)
        ->check(CLI::IsMember({"reinforce", "rloo", "reinforce++"}))->capture_default_str();
    cmd.add_option("--reward", reward)
        ->check(CLI::IsMember({"rule-binary", "rule-soft", "model-binary", "model-soft"}))->capture_default_str();
    cmd.add_option("--beta", config.beta, "KL coefficient")->capture_default_str();
    cmd.add_option("--samples-per-prompt", config.n_samples_per_prompt)->capture_default_str();
    cmd.add_option("--batch-size", config.rollout_batch_size, "prompts per rollout batch")->capture_default_str();
    cmd.add_option("--lr", config.learning_rate)->capture_default_str();
    cmd.add_option("--steps", config.max_steps)->capture_default_str();
    cmd.add_option("--seed", config.seed)->capture_default_str();
    cmd.add_option("--normalization", normalization)
        ->check(CLI::IsMember({"batch", "per-prompt-group"}))->capture_default_str();
    cmd.add_option("--eval-every", config.eval_every, "0 disables")->capture_default_str();
    cmd.add_option("--checkpoint-every", checkpoint_every, "0 disables")->capture_default_str();
    cmd.add_flag("--collect-distill", config.collect_distill, "write judged rollouts to distill.jsonl");
    cmd.add_option("--out", out, "output directory")->capture_default_str();
    cmd.add_flag("--dry-run", dry_run, "print the resolved config and exit");
  }

  rl::TrainConfig resolved() const {
    auto c = config;
    c.algorithm = algorithm == "rloo"          ? rl::Algorithm::Rloo
                  : algorithm == "reinforce++" ? rl::Algorithm::ReinforcePP
                                               : rl::Algorithm::Reinforce;
    c.reward_source = reward == "rule-soft"      ? rl::RewardSource::RuleSoft
                      : reward == "model-binary" ? rl::RewardSource::ModelBinary
                      : reward == "model-soft"   ? rl::RewardSource::ModelSoft
                                                 : rl::RewardSource::RuleBinary;
    c.normalization_scope =
        normalization == "per-prompt-group" ? rl::NormalizationScope::PerPromptGroup : rl::NormalizationScope::Batch;
    c.validate();
    return c;
  }
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

/// Effective values of the invoked subcommand as a config file that
/// reproduces the run when passed back through --config.
std::string resolved_config(const CLI::App& cmd) {
  const auto prefix = cmd.get_name() + ".";
  std::istringstream all(cmd.get_parent()->config_to_str(true, false));
  std::string out = "[" + cmd.get_name() + "]\n";
  for (std::string line; std::getline(all, line);) {
    if (line.rfind(prefix, 0) != 0) continue;
    const auto kv = line.substr(prefix.size());
    if (kv.rfind("dry-run=", 0) == 0 || kv == "vocab=\"\"") continue;
    out += kv + "\n";
  }
  return out;
}

void write_resolved_config(const CLI::App& cmd, const fs::path& dir) {
  write_text(dir / "resolved_config.toml", resolved_config(cmd));
}

std::string format_accuracy(const eval::CategoryCount& c) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * c.accuracy();
  return s.str();
}

void print_accuracy_table(const eval::AccuracyReport& r) {
  std::cout << std::left << std::setw(12) << "category" << std::right << std::setw(9) << "correct"
            << std::setw(8) << "total" << std::setw(10) << "acc(%)" << "\n";
  for (auto cat : kAllCategories) {
    std::cout << std::left << std::setw(12) << to_string(cat) << std::right;
    const auto it = r.categories.find(cat);
    if (it == r.categories.end()) {
      std::cout << std::setw(9) << "-" << std::setw(8) << "-" << std::setw(10) << "-" << "\n";
    } else {
      std::cout << std::setw(9) << it->second.correct << std::setw(8) << it->second.total << std::setw(10)
                << format_accuracy(it->second) << "\n";
    }
  }
  std::cout << std::left << std::setw(12) << "Avg" << std::right << std::setw(9) << r.overall_counts.correct
            << std::setw(8) << r.overall_counts.total << std::setw(10) << format_accuracy(r.overall_counts)
            << "\n";
}

std::string step_name(int step) {
  std::ostringstream s;
  s << "step-" << std::setw(6) << std::setfill('0') << step << ".json";
  return s.str();
}

int run_train(const CLI::App& app, const TrainOptions& t, const DataOptions& d, const PolicyOptions& p,
              const JudgeOptions& j) {
  const auto config = t.resolved();
  if (t.dry_run) {
    if (rl::is_model_based(config.reward_source)) j.build();
    std::cout << resolved_config(app);
    return 0;
  }
  const auto split = d.load();
  const auto initial = p.initial(split);
  std::optional<llm::JudgeBackend> backend;
  if (rl::is_model_based(config.reward_source)) backend = j.build();

  const fs::path out = t.out;
  fs::create_directories(out);
  write_resolved_config(app, out);
  std::ofstream metrics(out / "metrics.jsonl", std::ios::binary | std::ios::trunc);

  rl::TrainHooks hooks;
  hooks.on_step = [&](const rl::StepMetrics& m, const Policy& policy) {
    metrics << rl::to_json(m).dump() << '\n';
    if (m.eval_accuracy)
      std::cout << "step " << m.step << " reward " << m.mean_raw_reward << " kl " << m.kl_estimate
                << " eval_accuracy " << *m.eval_accuracy << std::endl;
    if (t.checkpoint_every > 0 && m.step % t.checkpoint_every == 0)
      save_checkpoint(policy, (out / "checkpoints" / step_name(m.step)).string());
  };
  const auto result = rl::train(config, initial, split, backend, hooks);
  metrics.close();
  save_checkpoint(result.policy, (out / "policy.json").string());
  if (config.collect_distill) {
    rl::write_distill(result.distill, (out / "distill.jsonl").string());
    std::cout << "distill records " << result.distill.size() << ", invalid verdicts " << result.invalid_verdicts
              << "\n";
  }
  std::cout << "wrote " << (out / "policy.json").string() << " after " << result.metrics.size() << " steps\n";
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string dataset;
  int m = 1;
  double vote_temperature = eval::kDefaultVoteTemperature;
  std::string out = "runs/eval";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
    cmd.add_option("--dataset", dataset, "test set JSONL")->required();
    cmd.add_option("--m", m, "judge votes per response")->capture_default_str();
    cmd.add_option("--vote-temperature", vote_temperature, "judge temperature when m > 1")->capture_default_str();
    cmd.add_option("--out", out, "output directory")->capture_default_str();
  }
};

int run_eval(const CLI::App& app, const EvalOptions& e, const JudgeOptions& j) {
  const auto policy = load_checkpoint(e.checkpoint);
  const auto test = load_jsonl(e.dataset);
  const auto report = eval::evaluate_policy(policy, test, j.build(), e.m, e.vote_temperature);
  print_accuracy_table(report);
  const fs::path out = e.out;
  fs::create_directories(out);
  write_resolved_config(app, out);
  auto json = eval::to_json(report);
  json["m"] = e.m;
  write_text(out / "eval_report.json", json.dump(2) + "\n");
  return 0;
}

struct AgreementOptions {
  std::string items;
  int m = 1;
  double vote_temperature = eval::kDefaultVoteTemperature;
  std::string out = "runs/agreement";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--items", items, "JSONL of {question, response, reference}")->required();
    cmd.add_option("--m", m, "votes for grader B")->capture_default_str();
    cmd.add_option("--vote-temperature", vote_temperature)->capture_default_str();
    cmd.add_option("--out", out, "output directory")->capture_default_str();
  }
};

std::vector<llm::JudgeItem> load_items(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("items not found: " + path);
  std::vector<llm::JudgeItem> items;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      items.push_back({j.at("question").get<std::string>(),
                       extract_final_step(j.at("response").get<std::string>()),
                       j.at("reference").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return items;
}

int run_agreement(const CLI::App& app, const AgreementOptions& a, const JudgeOptions& ja,
                  const JudgeOptions& jb) {
  const auto items = load_items(a.items);
  const auto report = eval::agreement_experiment(ja.build(), jb.build(), items, a.m, a.vote_temperature);
  const auto& c = report.contingency;
  std::cout << "kappa " << report.kappa << "\n"
            << "observed_agreement " << report.observed_agreement << "\n"
            << "chance_agreement " << report.chance_agreement << "\n"
            << "contingency (rows A, cols B)\n"
            << "         B=true  B=false\n"
            << "A=true  " << std::setw(7) << c[0][0] << std::setw(9) << c[0][1] << "\n"
            << "A=false " << std::setw(7) << c[1][0] << std::setw(9) << c[1][1] << "\n";
  const fs::path out = a.out;
  fs::create_directories(out);
  write_resolved_config(app, out);
  write_text(out / "agreement.json", eval::to_json(report).dump(2) + "\n");
  return 0;
}

int run_collect(const CLI::App& app, const TrainOptions& t, const DataOptions& d, const PolicyOptions& p,
                const JudgeOptions& j) {
  auto config = t.resolved();
  const auto split = d.load();
  if (!audit_disjoint(split)) {
    std::cerr << "error: split fails the disjointness audit; refusing to collect distill data\n";
    return kExitRuntime;
  }
  const auto result = rl::collect_distill(config, p.initial(split), split, j.build());
  const fs::path out = t.out;
  fs::create_directories(out);
  write_resolved_config(app, out);
  rl::write_distill(result.distill, (out / "distill.jsonl").string(), split.train);
  std::cout << "rm_pool prompts " << split.rm_pool.size() << ", records " << result.distill.size()
            << ", invalid verdicts " << result.invalid_verdicts << "\n";
  return 0;
}

int run_classify(const CLI::App& app, const std::string& dataset, const std::string& out_path,
                 const JudgeOptions& j) {
  const auto data = load_jsonl(dataset);
  const auto backend = j.build();
  std::string content;
  std::map<SubjectCategory, int> counts;
  for (const auto& p : data) {
    const int id = llm::classify_subject(backend, p.question, p.reference);
    auto row = to_json(p);
    row["subject_id"] = id;
    row["category"] = std::string(to_string(subject_category(id)));
    ++counts[subject_category(id)];
    content += row.dump() + "\n";
  }
  write_text(out_path, content);
  const auto dir = fs::path(out_path).parent_path();
  write_resolved_config(app, dir.empty() ? fs::path(".") : dir);
  for (const auto& [cat, n] : counts) std::cout << to_string(cat) << " " << n << "\n";
  return 0;
}

int run_gen_toy(const std::string& out_dir) {
  const auto split = toy::arithmetic_split();
  std::ostringstream train, test;
  write_jsonl(train, split.train);
  write_jsonl(test, split.test);
  write_text(fs::path(out_dir) / "train.jsonl", train.str());
  write_text(fs::path(out_dir) / "test.jsonl", test.str());
  std::cout << "wrote " << split.train.size() << " train and " << split.test.size() << " test prompts to "
            << out_dir << "\n";
  return 0;
}

/// CLI11 reads config files only at the root, so `--config X` is moved in
/// front of the subcommand wherever it was given.
std::vector<std::string> hoist_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> hoisted, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      hoisted = {args[i], args[i + 1]};
      ++i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      hoisted = {args[i]};
    } else {
      rest.push_back(args[i]);
    }
  }
  hoisted.insert(hoisted.end(), rest.begin(), rest.end());
  std::reverse(hoisted.begin(), hoisted.end());  // CLI11 consumes a reversed vector
  return hoisted;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL with verifiable rewards: tabular-policy trainer and judge tooling"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; keys live under [train], [eval], ... sections");
  app.allow_config_extras(false);

  JudgeOptions judge, judge_a, judge_b;
  DataOptions data;
  PolicyOptions policy;
  TrainOptions train_opts;
  EvalOptions eval_opts;
  AgreementOptions agree_opts;

  auto* train = app.add_subcommand("train", "policy-gradient training");
  train_opts.add_to(*train);
  data.add_to(*train);
  policy.add_to(*train);
  judge.add_to(*train, "judge-", "Judge");

  auto* evaluate = app.add_subcommand("eval", "judge-based accuracy of a checkpoint");
  eval_opts.add_to(*evaluate);
  judge.add_to(*evaluate, "judge-", "Judge");

  auto* agreement = app.add_subcommand("agreement", "Cohen's kappa between two graders");
  agree_opts.add_to(*agreement);
  judge_a.add_to(*agreement, "a-", "Grader A");
  judge_b.add_to(*agreement, "b-", "Grader B");

  TrainOptions collect_opts;
  DataOptions collect_data;
  PolicyOptions collect_policy;
  auto* collect = app.add_subcommand("collect-distill", "teacher-judged exploration over the reward-model pool");
  collect_opts.reward = "model-binary";
  collect_opts.add_to(*collect);
  collect_data.rm_fraction = 0.2;
  collect_data.add_to(*collect);
  collect_policy.add_to(*collect);
  judge.add_to(*collect, "judge-", "Judge");

  std::string classify_dataset, classify_out = "classified.jsonl";
  auto* classify = app.add_subcommand("classify", "annotate a dataset with subject ids");
  classify->add_option("--dataset", classify_dataset)->required();
  classify->add_option("--out", classify_out, "output JSONL")->capture_default_str();
  judge.add_to(*classify, "judge-", "Judge");

  std::string toy_out = "data/toy";
  auto* gen_toy = app.add_subcommand("gen-toy", "write the single-digit addition task");
  gen_toy->add_option("--out", toy_out, "output directory")->capture_default_str();

  try {
    app.parse(hoist_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) return run_train(*train, train_opts, data, policy, judge);
    if (evaluate->parsed()) return run_eval(*evaluate, eval_opts, judge);
    if (agreement->parsed()) return run_agreement(*agreement, agree_opts, judge_a, judge_b);
    if (collect->parsed()) return run_collect(*collect, collect_opts, collect_data, collect_policy, judge);
    if (classify->parsed()) return run_classify(*classify, classify_dataset, classify_out, judge);
    if (gen_toy->parsed()) return run_gen_toy(toy_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
