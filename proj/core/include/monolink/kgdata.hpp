#pragma once

// Knowledge-graph ingestion and the data side of the training protocol:
// triple files, the dummy unary predicate, rule injection to saturation,
// predicate-corruption negatives and per-epoch target holdout.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "monolink/datalog.hpp"

namespace monolink {

inline constexpr std::string_view kDummyPredicate = "Dummy";

// Parses head<TAB>relation<TAB>tail rows, one binary fact per row. When
// `fixed_signature` is false, unseen relations are appended to `sig`;
// otherwise they are a DataError. Malformed rows raise ParseError with the
// line number. Constants are interned in order of first appearance.
Dataset parse_triples(std::string_view text, Signature& sig, bool fixed_signature = false,
                      Dataset into = {});
Dataset load_triples(const std::filesystem::path& path, Signature& sig,
                     bool fixed_signature = false, Dataset into = {});

// Binary facts of `data` as TSV rows, sorted by (head, relation, tail) name.
std::string format_triples(const Dataset& data, const Signature& sig);

// Ensures the signature has a "Dummy" unary predicate (appended when
// missing) and that Dummy(a) holds for every a in con(D). Idempotent.
void add_dummy_unary(Dataset& data, Signature& sig);

// `r` with Dummy(v) appended to the body for every variable v of r that
// lacks it. On datasets where Dummy holds for every constant both rules
// have the same consequences, so checking the guarded rule checks `r`
// under the dummy-augmented encoding. Throws DataError when `sig` has no
// unary Dummy predicate.
Rule guard_with_dummy(const Rule& r, const Signature& sig);

// Least fixpoint of D := D u T_P(D).
Dataset inject_rules(const Dataset& data, std::span<const Rule> program);

struct NegativeSamplerConfig {
  std::size_t negatives_per_positive = 10;
  // Facts that must never be emitted (false negatives). Shares the constant
  // table of the positives.
  const Dataset* filter_against = nullptr;
};

// Predicate corruption: for each positive R(a,b), draws R' != R uniformly
// negatives_per_positive times (with replacement), keeps R'(a,b) unless it
// is filtered or itself a positive. The result is sorted and unique.
std::vector<Fact> sample_negatives(std::span<const Fact> positives, std::size_t binary_count,
                                   const NegativeSamplerConfig& cfg, std::uint64_t seed);

struct EpochSplit {
  Dataset input;
  std::vector<Fact> targets;  // sorted
};

// Sets aside round(fraction * #binary facts) binary facts as targets; unary
// facts always stay in the input.
EpochSplit epoch_split(const Dataset& train, double holdout_fraction, std::uint64_t seed);

// All sets share the constant table of `train_input`.
struct Split {
  Dataset train_input;
  std::vector<Fact> train_targets;
  std::vector<Fact> valid_positives;
  std::vector<Fact> valid_negatives;
  std::vector<Fact> test_positives;
  std::vector<Fact> test_negatives;
};

// Reads train.txt, valid.txt, test.txt and the optional valid_negatives.txt
// and test_negatives.txt from `dir`. The signature is extended with every
// relation seen (in file order) unless `fixed_signature`.
Split load_split(const std::filesystem::path& dir, Signature& sig, bool fixed_signature = false);

// Drops negatives that coincide with a positive of the same set.
void make_disjoint(std::vector<Fact>& negatives, std::span<const Fact> positives);

}  // namespace monolink
