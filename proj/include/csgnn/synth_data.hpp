#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "csgnn/ud_data.hpp"

namespace csgnn {

enum class RuleFamily : std::uint8_t { deprel_set = 0, pos_set = 1, depth_limit = 2 };
std::string_view rule_family_name(RuleFamily f);
std::optional<RuleFamily> rule_family_from_name(std::string_view name);

/// A planted switch-acceptability rule. A dependency edge is an allowed
/// switch point iff its dependent satisfies the family predicate.
struct SyntheticRule {
  RuleFamily family = RuleFamily::deprel_set;
  std::set<int> deprels;  // DEPREL_SET: allowed dependent relations
  std::set<int> upos;     // POS_SET: allowed dependent POS tags
  int depth_limit = 1;    // DEPTH_LIMIT: max dependent depth (root = 0)
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument if the payload is empty, improper (the full
/// set) or out of range.
void validate_rule(const SyntheticRule& rule);

/// A reasonable default DEPREL_SET rule for experiments: a 12-relation
/// allowed set covering common argument and modifier relations.
SyntheticRule default_deprel_rule(std::uint64_t seed);

struct GenConfig {
  std::size_t n_pairs = 1000;
  int len_min = 5;
  int len_max = 15;
  double g2_perturb_prob = 0.1;
  std::uint64_t seed = 0;
};

void validate_gen_config(const GenConfig& gcfg);

/// Samples labelled minimal pairs whose naturalness is decided exactly by
/// the rule. Each pair is one random tree; the two candidates differ in the
/// language tag of a single node, the natural one placing its L2 subtree
/// under an allowed edge and the manipulated one under a disallowed edge.
/// Deterministic given (rule, gcfg).
Dataset generate_dataset(const SyntheticRule& rule, const GenConfig& gcfg,
                         Split split = Split::train);

class AmbiguousPairError : public std::runtime_error {
 public:
  explicit AmbiguousPairError(const std::string& id)
      : std::runtime_error("oracle: pair \"" + id + "\" is ambiguous (both or neither candidate natural)") {}
};

/// Brute-force ground truth: a candidate is natural iff every switch edge of
/// its g1 satisfies the rule. Throws AmbiguousPairError when both or neither
/// candidate qualifies.
Side oracle_label(const MinimalPair& pair, const SyntheticRule& rule);

/// True iff every g1 switch edge of the candidate satisfies the rule.
bool candidate_is_natural(const CandidateSentence& c, const SyntheticRule& rule);

}  // namespace csgnn
