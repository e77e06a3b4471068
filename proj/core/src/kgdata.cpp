#include "monolink/kgdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "monolink/errors.hpp"
#include "monolink/random.hpp"

namespace monolink {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Fact> binary_facts_of(const Dataset& d) {
  std::vector<Fact> out;
  for (const auto& f : d.facts()) {
    if (f.predicate.arity == Arity::kBinary) out.push_back(f);
  }
  return out;
}

}  // namespace

Dataset parse_triples(std::string_view text, Signature& sig, bool fixed_signature, Dataset into) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::string_view fields[3];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      if (n == 3) throw ParseError("expected 3 tab-separated fields, found more", line_no);
      fields[n++] = line.substr(start, tab == std::string_view::npos ? tab : tab - start);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (n != 3) {
      throw ParseError("expected 3 tab-separated fields, found " + std::to_string(n), line_no);
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError("empty field", line_no);
    }

    auto pred = sig.find(fields[1]);
    if (!pred) {
      if (fixed_signature) {
        throw DataError("line " + std::to_string(line_no) + ": relation '" +
                        std::string(fields[1]) + "' is not in the signature");
      }
      pred = sig.add_binary(std::string(fields[1]));
    }
    if (pred->arity != Arity::kBinary) {
      throw DataError("line " + std::to_string(line_no) + ": '" + std::string(fields[1]) +
                      "' is a unary predicate");
    }
    const ConstId a = into.intern(fields[0]);
    const ConstId b = into.intern(fields[2]);
    into.insert(Fact::binary(pred->index, a, b));
  }
  return into;
}

Dataset load_triples(const std::filesystem::path& path, Signature& sig, bool fixed_signature,
                     Dataset into) {
  try {
    return parse_triples(read_file(path), sig, fixed_signature, std::move(into));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_triples(const Dataset& data, const Signature& sig) {
  std::vector<std::string> rows;
  for (const auto& f : data.facts()) {
    if (f.predicate.arity != Arity::kBinary) continue;
    rows.push_back(data.constant_name(f.first) + "\t" + sig.name(f.predicate) + "\t" +
                   data.constant_name(f.second));
  }
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& r : rows) out += r + "\n";
  return out;
}

void add_dummy_unary(Dataset& data, Signature& sig) {
  auto pred = sig.find(kDummyPredicate);
  if (!pred) pred = sig.add_unary(std::string(kDummyPredicate));
  if (pred->arity != Arity::kUnary) throw DataError("'Dummy' is already a binary predicate");
  for (ConstId c : data.constants()) data.insert(Fact::unary(pred->index, c));
}

Rule guard_with_dummy(const Rule& r, const Signature& sig) {
  const auto pred = sig.find(kDummyPredicate);
  if (!pred || pred->arity != Arity::kUnary) throw DataError("signature has no unary 'Dummy' predicate");
  Rule out = r;
  for (const auto& v : r.variables()) {
    const Atom guard{*pred, v, {}};
    const auto atoms = out.body_atoms();
    if (std::find(atoms.begin(), atoms.end(), guard) == atoms.end()) out.body.emplace_back(guard);
  }
  return out;
}

Dataset inject_rules(const Dataset& data, std::span<const Rule> program) {
  Dataset out = data;
  while (true) {
    const Dataset derived = apply_program(program, out);
    const std::size_t before = out.size();
    for (const auto& f : derived.facts()) out.insert(f);
    if (out.size() == before) return out;
  }
}

std::vector<Fact> sample_negatives(std::span<const Fact> positives, std::size_t binary_count,
                                   const NegativeSamplerConfig& cfg, std::uint64_t seed) {
  if (cfg.negatives_per_positive == 0) throw DataError("negatives_per_positive must be >= 1");
  std::vector<Fact> out;
  if (binary_count < 2) return out;
  const std::set<Fact> positive_set(positives.begin(), positives.end());
  Rng rng = make_rng(seed, "negatives");
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(binary_count - 2));
  for (const auto& p : positives) {
    for (std::size_t i = 0; i < cfg.negatives_per_positive; ++i) {
      // Uniform over the binary predicates other than p's.
      std::uint32_t r = pick(rng);
      if (r >= p.predicate.index) ++r;
      const Fact neg = Fact::binary(r, p.first, p.second);
      if (positive_set.count(neg)) continue;
      if (cfg.filter_against && cfg.filter_against->contains(neg)) continue;
      out.push_back(neg);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EpochSplit epoch_split(const Dataset& train, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw DataError("holdout fraction must lie in (0,1)");
  }
  std::vector<Fact> binary = binary_facts_of(train);
  const auto count = static_cast<std::size_t>(
      std::llround(holdout_fraction * static_cast<double>(binary.size())));
  Rng rng = make_rng(seed, "epoch-split");
  // Partial Fisher-Yates: the first `count` slots become the targets.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, binary.size() - 1);
    std::swap(binary[i], binary[pick(rng)]);
  }
  EpochSplit out{train, {}};
  out.targets.assign(binary.begin(), binary.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.targets.begin(), out.targets.end());
  for (const auto& f : out.targets) out.input.erase(f);
  return out;
}

void make_disjoint(std::vector<Fact>& negatives, std::span<const Fact> positives) {
  const std::set<Fact> pos(positives.begin(), positives.end());
  std::erase_if(negatives, [&](const Fact& f) { return pos.count(f) > 0; });
}

Split load_split(const std::filesystem::path& dir, Signature& sig, bool fixed_signature) {
  // One shared dataset interns every constant so all sets agree on ids.
  Split split;
  split.train_input = load_triples(dir / "train.txt", sig, fixed_signature);
  const auto load_set = [&](const char* name, bool required) {
    const auto path = dir / name;
    std::vector<Fact> facts;
    if (!required && !std::filesystem::exists(path)) return facts;
    Dataset table = split.train_input.empty_copy();
    table = load_triples(path, sig, fixed_signature, std::move(table));
    facts.assign(table.facts().begin(), table.facts().end());
    // Extend the shared table with any constants first seen in this file.
    for (ConstId c = static_cast<ConstId>(split.train_input.constant_table_size());
         c < table.constant_table_size(); ++c) {
      split.train_input.intern(table.constant_name(c));
    }
    return facts;
  };
  split.valid_positives = load_set("valid.txt", true);
  split.test_positives = load_set("test.txt", true);
  split.valid_negatives = load_set("valid_negatives.txt", false);
  split.test_negatives = load_set("test_negatives.txt", false);
  make_disjoint(split.valid_negatives, split.valid_positives);
  make_disjoint(split.test_negatives, split.test_positives);
  split.train_targets = binary_facts_of(split.train_input);
  return split;
}

}  // namespace monolink
