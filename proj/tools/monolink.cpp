// monolink: train monotonic GNN link predictors and extract sound Datalog
// rules from them. Exit codes: 0 ok, 1 usage, 2 data error, 3 infeasible.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "monolink/capacity.hpp"
#include "monolink/errors.hpp"
#include "monolink/extraction.hpp"
#include "monolink/kgdata.hpp"
#include "monolink/model_io.hpp"
#include "monolink/random.hpp"
#include "monolink/soundness.hpp"
#include "monolink/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace monolink {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::string model;
  std::string rules;
  std::string data;
  std::string data_dir;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string agg_direction = "out";
  std::string space = "flat2";
  std::size_t p = 1;
  std::size_t o = 1;
  std::uint64_t cap = kDefaultSpaceCap;
  bool inequalities = false;
  bool no_prune = false;
  bool no_dummy_guard = false;
  bool json_output = false;
  bool dummy = false;

  // train
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  std::vector<std::size_t> hidden{16, 16};
  std::string scoring = "rescal";
  std::string budget = "1";
  std::size_t relation_dim = 0;
  std::size_t negatives = 10;
  double holdout = 0.1;
  bool no_clamp = false;
  std::size_t log_every = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Writes to --out when given, else to stdout.
void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file(o.out, text);
  }
}

AggregationBudget parse_budget(const std::string& text) {
  if (text == "inf") return AggregationBudget::infinite();
  try {
    std::size_t used = 0;
    const unsigned long long k = std::stoull(text, &used);
    if (used == text.size()) return AggregationBudget::finite(k);
  } catch (const std::exception&) {
  }
  throw DataError("aggregation budget must be a non-negative integer or 'inf', got '" + text + "'");
}

MessageDirection parse_direction(const std::string& text) {
  if (text == "out") return MessageDirection::kAgainstEdges;
  if (text == "in") return MessageDirection::kAlongEdges;
  throw DataError("--agg-direction must be 'in' or 'out'");
}

class Manifest {
 public:
  Manifest(std::string command, const Options& o) : command_(std::move(command)), start_(Clock::now()) {
    config_ = {{"model", o.model},       {"rules", o.rules},
               {"data", o.data},         {"data_dir", o.data_dir},
               {"out", o.out},           {"seed", o.seed},
               {"workers", o.workers},   {"agg_direction", o.agg_direction},
               {"space", o.space},       {"p", o.p},
               {"o", o.o},               {"cap", o.cap},
               {"inequalities", o.inequalities}, {"prune", !o.no_prune},
               {"dummy_guard", !o.no_dummy_guard}};
    if (command_ == "train") {
      config_["epochs"] = o.epochs;
      config_["learning_rate"] = o.learning_rate;
      config_["weight_decay"] = o.weight_decay;
      config_["hidden"] = o.hidden;
      config_["scoring"] = o.scoring;
      config_["budget"] = o.budget;
      config_["relation_dim"] = o.relation_dim;
      config_["negatives"] = o.negatives;
      config_["holdout"] = o.holdout;
      config_["clamp"] = !o.no_clamp;
    }
  }

  void input(const fs::path& path) {
    if (fs::exists(path) && fs::is_regular_file(path)) inputs_[path.string()] = content_hash(read_file(path));
  }
  void input_dir(const fs::path& dir) {
    for (const char* name : {"train.txt", "valid.txt", "test.txt", "valid_negatives.txt", "test_negatives.txt"}) {
      input(dir / name);
    }
  }
  void model(const Model& m) { model_hash_ = model_hash(m); }
  void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  void write(const Options& o) const {
    json j;
    j["command"] = command_;
    j["config"] = config_;
    j["seed"] = o.seed;
    j["model_hash"] = model_hash_;
    j["inputs"] = inputs_;
    json t = timings_;
    t["total_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    j["timings"] = t;
    const std::string text = j.dump(2) + "\n";
    if (!o.manifest.empty()) {
      write_file(o.manifest, text);
    } else if (!o.out.empty()) {
      write_file(o.out + ".manifest.json", text);
    } else {
      std::cerr << text;
    }
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::string command_;
  Clock::time_point start_;
  json config_;
  std::string model_hash_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, double> timings_;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

bool has_dummy(const Signature& sig) {
  const auto p = sig.find(kDummyPredicate);
  return p && p->arity == Arity::kUnary;
}

// Negatives for held-out positives when the split does not provide them.
void fill_negatives(Split& s, std::size_t binary_count, std::size_t per_positive, std::uint64_t seed) {
  Dataset known = s.train_input;
  for (const auto* facts : {&s.train_targets, &s.valid_positives, &s.test_positives}) {
    for (const auto& f : *facts) known.insert(f);
  }
  NegativeSamplerConfig cfg;
  cfg.negatives_per_positive = per_positive;
  cfg.filter_against = &known;
  if (s.valid_negatives.empty()) {
    s.valid_negatives = sample_negatives(s.valid_positives, binary_count, cfg, derive_seed(seed, "valid-negatives"));
  }
  if (s.test_negatives.empty()) {
    s.test_negatives = sample_negatives(s.test_positives, binary_count, cfg, derive_seed(seed, "test-negatives"));
  }
}

int cmd_train(const Options& o) {
  Manifest manifest("train", o);
  manifest.input_dir(o.data_dir);
  Signature sig;
  Split split = load_split(o.data_dir, sig);
  add_dummy_unary(split.train_input, sig);
  fill_negatives(split, sig.binary_count(), o.negatives, o.seed);

  InitSpec init;
  init.hidden_dims = o.hidden;
  init.scoring = parse_scoring_kind(o.scoring);
  init.relation_dim = o.relation_dim;
  init.budget = parse_budget(o.budget);
  init.direction = parse_direction(o.agg_direction);
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.weight_decay = o.weight_decay;
  cfg.negatives_per_positive = o.negatives;
  cfg.clamp_nonnegative = !o.no_clamp;
  cfg.holdout_fraction = o.holdout;
  cfg.seed = derive_seed(o.seed, "train");
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const Model initial = random_model(sig, init, cfg.clamp_nonnegative, derive_seed(o.seed, "init"));
  TrainResult result = train(initial, split, cfg, [&](const EpochLog& log) {
    if (o.log_every > 0 && (log.epoch % o.log_every == 0 || log.epoch == cfg.epochs)) {
      std::fprintf(stderr, "epoch %zu loss %.6f\n", log.epoch, log.loss);
    }
  });
  manifest.timing("train_seconds", seconds_since(start));
  Model& m = result.model;
  m.scoring.threshold = select_threshold(m, split.train_input, split.valid_positives, split.valid_negatives);
  Metrics metrics = evaluate(m, split.train_input, split.test_positives, split.test_negatives);
  metrics.final_epoch_loss = result.losses.empty() ? 0.0 : result.losses.back();

  save_model(m, o.out);
  write_file(o.out + ".metrics.json", metrics.to_json() + "\n");
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

int cmd_eval(const Options& o) {
  Manifest manifest("eval", o);
  manifest.input(o.model);
  manifest.input_dir(o.data_dir);
  const Model m = load_model(o.model);
  Signature sig = m.signature;
  Split split = load_split(o.data_dir, sig, true);
  if (has_dummy(sig)) add_dummy_unary(split.train_input, sig);
  fill_negatives(split, sig.binary_count(), o.negatives, o.seed);
  const Metrics metrics = evaluate(m, split.train_input, split.test_positives, split.test_negatives);
  emit(o, metrics.to_json() + "\n");
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

Rule prepare_rule(const Rule& r, const Signature& sig, const Options& o) {
  return !o.no_dummy_guard && has_dummy(sig) ? guard_with_dummy(r, sig) : r;
}

int cmd_check_rule(const Options& o) {
  Manifest manifest("check-rule", o);
  manifest.input(o.model);
  manifest.input(o.rules);
  const Model m = load_model(o.model);
  const Program rules = parse_program(read_file(o.rules), m.signature);

  std::vector<std::string> lines(rules.size());
  const auto check = [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const Rule checked = prepare_rule(rules[i], m.signature, o);
    const SoundnessVerdict v = check_soundness(m, checked);
    json line;
    line["rule"] = to_string(rules[i], m.signature);
    if (!(checked == rules[i])) line["checked_as"] = to_string(checked, m.signature);
    line["verdict"] = v.sound ? "sound" : "unsound";
    line["instances"] = v.instances_checked;
    if (v.witness) {
      line["witness"] = v.witness->substitution;
      line["witness_head"] = to_string(v.witness->head, v.witness->data, m.signature);
    }
    line["seconds"] = seconds_since(start);
    lines[i] = line.dump();
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(o.workers, rules.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < rules.size(); ++i) check(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < rules.size(); i += workers) check(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  emit(o, text);
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

int cmd_extract(const Options& o) {
  Manifest manifest("extract", o);
  manifest.input(o.model);
  const Model m = load_model(o.model);
  const MiningOptions mining{!o.no_prune, std::max<std::size_t>(1, o.workers)};
  MiningResult result;
  if (o.space == "flat1" || o.space == "flat2") {
    std::vector<Rule> space = enumerate_flat_rules(m.signature, o.space == "flat1" ? 1 : 2, o.cap);
    for (auto& r : space) r = prepare_rule(r, m.signature, o);
    result = mine_sound_rules(m, space, mining);
    result.space = o.space;
  } else if (o.space == "treelike") {
    const TreeBudget budget{o.p, o.o, o.inequalities, m.gnn.direction};
    const TreeSpace space(m.signature, budget, o.cap);
    result = mine_treelike(m, space, mining);
  } else {
    throw DataError("--space must be flat1, flat2 or treelike");
  }
  emit(o, format_mined_program(result, m.signature, model_hash(m)));
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

int cmd_equiv_program(const Options& o) {
  Manifest manifest("equiv-program", o);
  manifest.input(o.model);
  const Model m = load_model(o.model);
  const EquivalenceResult eq = equivalent_program(m, {o.cap, std::max<std::size_t>(1, o.workers)});
  std::string text = format_mined_program(eq.mining, m.signature, model_hash(m));
  if (eq.capacity) text = "# capacity " + to_string(*eq.capacity) + "\n" + text;
  emit(o, text);
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

int cmd_capacity(const Options& o) {
  Manifest manifest("capacity", o);
  manifest.input(o.model);
  const Model m = load_model(o.model);
  const CapacityResult caps = compute_capacities(m.gnn, m.scoring);
  emit(o, o.json_output ? caps.to_json() + "\n" : caps.report());
  manifest.model(m);
  manifest.write(o);
  return kExitOk;
}

int cmd_inject(const Options& o) {
  Manifest manifest("inject", o);
  manifest.input(o.data);
  manifest.input(o.rules);
  Signature sig;
  const Dataset data = load_triples(o.data, sig);
  const Program rules = parse_program_extending(read_file(o.rules), sig);
  emit(o, format_triples(inject_rules(data, rules), sig));
  manifest.write(o);
  return kExitOk;
}

int cmd_encode_dump(const Options& o) {
  Manifest manifest("encode-dump", o);
  manifest.input(o.data);
  Signature sig;
  Dataset data = load_triples(o.data, sig);
  if (o.dummy) add_dummy_unary(data, sig);
  const ColoredGraph g = encode(data, sig);
  std::ostringstream out;
  out << "vertices " << g.vertex_count() << " colors " << g.color_count() << " label_dim " << g.labels.cols()
      << "\n";
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    out << "v " << v << " " << g.names[v] << " [";
    for (Eigen::Index j = 0; j < g.labels.cols(); ++j) {
      out << (j ? " " : "") << g.labels(static_cast<Eigen::Index>(v), j);
    }
    out << "]\n";
  }
  for (std::size_t c = 0; c < g.color_count(); ++c) {
    out << "color " << c << " " << sig.binary_predicates()[c] << " edges " << g.edges[c].size() << "\n";
    for (const auto& [s, t] : g.edges[c]) out << "  " << s << " -> " << t << "\n";
  }
  emit(o, out.str());
  manifest.write(o);
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Monotonic GNN link prediction and sound rule extraction"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output file (stdout when omitted)");
    sub->add_option("--manifest", o.manifest, "Run manifest path (default <out>.manifest.json, else stderr)");
    sub->add_option("--seed", o.seed, "Root seed");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a split directory");
  common(train_cmd);
  train_cmd->get_option("--out")->required();
  train_cmd->add_option("--data-dir", o.data_dir, "Directory with train.txt, valid.txt, test.txt")->required();
  train_cmd->add_option("--epochs", o.epochs, "Training epochs");
  train_cmd->add_option("--lr", o.learning_rate, "Adam learning rate");
  train_cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
  train_cmd->add_option("--hidden", o.hidden, "Layer dimensions, e.g. --hidden 16 16")->expected(1, -1);
  train_cmd->add_option("--scoring", o.scoring, "rescal, distmult, tucker or nam");
  train_cmd->add_option("--budget", o.budget, "Aggregation budget k: an integer or inf");
  train_cmd->add_option("--relation-dim", o.relation_dim, "TuckER relation dimension");
  train_cmd->add_option("--negatives", o.negatives, "Negatives per positive");
  train_cmd->add_option("--holdout", o.holdout, "Fraction of training facts held out per epoch");
  train_cmd->add_option("--agg-direction", o.agg_direction, "out: aggregate successors, in: predecessors")
      ->check(CLI::IsMember({"in", "out"}));
  train_cmd->add_flag("--no-clamp", o.no_clamp, "Train without non-negativity clamping");
  train_cmd->add_option("--log-every", o.log_every, "Print the loss every N epochs");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a split's test set");
  common(eval_cmd);
  eval_cmd->add_option("--model", o.model, "Model file")->required();
  eval_cmd->add_option("--data-dir", o.data_dir, "Split directory")->required();
  eval_cmd->add_option("--negatives", o.negatives, "Negatives per positive when sampling");

  CLI::App* check_cmd = app.add_subcommand("check-rule", "Decide soundness of each rule in a file");
  common(check_cmd);
  check_cmd->add_option("--model", o.model, "Model file")->required();
  check_cmd->add_option("--rules", o.rules, "Rule file, one rule per line")->required();
  check_cmd->add_option("--workers", o.workers, "Worker threads");
  check_cmd->add_flag("--no-dummy-guard", o.no_dummy_guard, "Do not add Dummy atoms for Dummy-signature models");

  CLI::App* extract_cmd = app.add_subcommand("extract", "Mine the sound rules of a rule space");
  common(extract_cmd);
  extract_cmd->add_option("--model", o.model, "Model file")->required();
  extract_cmd->add_option("--space", o.space, "flat1, flat2 or treelike")
      ->check(CLI::IsMember({"flat1", "flat2", "treelike"}));
  extract_cmd->add_option("--p", o.p, "Tree depth");
  extract_cmd->add_option("--o", o.o, "Tree fan-out factor");
  extract_cmd->add_flag("--inequalities", o.inequalities, "Allow sibling inequalities in tree-like rules");
  extract_cmd->add_option("--cap", o.cap, "Maximum rule-space size");
  extract_cmd->add_option("--workers", o.workers, "Worker threads");
  extract_cmd->add_flag("--no-prune", o.no_prune, "Check every rule, keeping subsumed ones");
  extract_cmd->add_flag("--no-dummy-guard", o.no_dummy_guard, "Do not add Dummy atoms for Dummy-signature models");

  CLI::App* equiv_cmd = app.add_subcommand("equiv-program", "Program equivalent to the model");
  common(equiv_cmd);
  equiv_cmd->add_option("--model", o.model, "Model file")->required();
  equiv_cmd->add_option("--cap", o.cap, "Maximum rule-space size");
  equiv_cmd->add_option("--workers", o.workers, "Worker threads");

  CLI::App* capacity_cmd = app.add_subcommand("capacity", "Per-layer aggregation capacities");
  common(capacity_cmd);
  capacity_cmd->add_option("--model", o.model, "Model file")->required();
  capacity_cmd->add_flag("--json", o.json_output, "JSON instead of the text report");

  CLI::App* inject_cmd = app.add_subcommand("inject", "Saturate a triple file with a program");
  common(inject_cmd);
  inject_cmd->add_option("--data", o.data, "Triple file")->required();
  inject_cmd->add_option("--rules", o.rules, "Rule file")->required();

  CLI::App* dump_cmd = app.add_subcommand("encode-dump", "Print the canonical graph encoding");
  common(dump_cmd);
  dump_cmd->add_option("--data", o.data, "Triple file")->required();
  dump_cmd->add_flag("--dummy", o.dummy, "Add the Dummy unary predicate first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::map<CLI::App*, int (*)(const Options&)> commands{
      {train_cmd, cmd_train},         {eval_cmd, cmd_eval},       {check_cmd, cmd_check_rule},
      {extract_cmd, cmd_extract},     {equiv_cmd, cmd_equiv_program}, {capacity_cmd, cmd_capacity},
      {inject_cmd, cmd_inject},       {dump_cmd, cmd_encode_dump}};
  for (const auto& [sub, fn] : commands) {
    if (sub->parsed()) return fn(o);
  }
  return kExitUsage;
}

}  // namespace
}  // namespace monolink

int main(int argc, char** argv) {
  try {
    return monolink::run(argc, argv);
  } catch (const monolink::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return monolink::kExitInfeasible;
  } catch (const monolink::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return monolink::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return monolink::kExitData;
  }
}
