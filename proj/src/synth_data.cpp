#include "csgnn/synth_data.hpp"

#include <algorithm>

#include "csgnn/rng.hpp"

namespace csgnn {

std::string_view rule_family_name(RuleFamily f) {
  switch (f) {
    case RuleFamily::deprel_set: return "deprel-set";
    case RuleFamily::pos_set: return "pos-set";
    case RuleFamily::depth_limit: return "depth-limit";
  }
  return "?";
}

std::optional<RuleFamily> rule_family_from_name(std::string_view name) {
  for (RuleFamily f : {RuleFamily::deprel_set, RuleFamily::pos_set, RuleFamily::depth_limit})
    if (rule_family_name(f) == name) return f;
  return std::nullopt;
}

void validate_rule(const SyntheticRule& rule) {
  switch (rule.family) {
    case RuleFamily::deprel_set: {
      if (rule.deprels.empty() || rule.deprels.size() >= kDepRelTags.size())
        throw std::invalid_argument("DEPREL_SET payload must be a nonempty proper subset");
      for (int r : rule.deprels)
        if (r < 0 || r >= static_cast<int>(kDepRelTags.size()))
          throw std::invalid_argument("DEPREL_SET payload index out of range");
      break;
    }
    case RuleFamily::pos_set: {
      if (rule.upos.empty() || rule.upos.size() >= kUposTags.size())
        throw std::invalid_argument("POS_SET payload must be a nonempty proper subset");
      for (int u : rule.upos)
        if (u < 0 || u >= static_cast<int>(kUposTags.size()))
          throw std::invalid_argument("POS_SET payload index out of range");
      break;
    }
    case RuleFamily::depth_limit:
      if (rule.depth_limit < 1) throw std::invalid_argument("DEPTH_LIMIT k must be >= 1");
      break;
  }
}

SyntheticRule default_deprel_rule(std::uint64_t seed) {
  SyntheticRule rule;
  rule.family = RuleFamily::deprel_set;
  rule.seed = seed;
  for (const char* name : {"nsubj", "obj", "iobj", "obl", "nmod", "amod", "advmod", "det", "case",
                           "mark", "cc", "conj"}) {
    rule.deprels.insert(deprel_index(name));
  }
  return rule;
}

void validate_gen_config(const GenConfig& gcfg) {
  if (gcfg.n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  if (gcfg.len_min < 2 || gcfg.len_max > 64 || gcfg.len_min > gcfg.len_max)
    throw std::invalid_argument("length range must satisfy 2 <= min <= max <= 64");
  if (gcfg.g2_perturb_prob < 0.0 || gcfg.g2_perturb_prob > 1.0)
    throw std::invalid_argument("g2 perturbation probability must be in [0,1]");
}

namespace {

std::vector<int> node_depths(const SentenceGraph& g) {
  std::vector<int> depth(g.nodes.size() + 1, -1);
  depth[0] = -1;  // virtual root parent; real root gets depth 0
  for (std::size_t i = 1; i <= g.nodes.size(); ++i) {
    // Walk up; graphs here are valid trees.
    int steps = 0;
    int cur = static_cast<int>(i);
    while (g.nodes[static_cast<std::size_t>(cur - 1)].head != 0) {
      cur = g.nodes[static_cast<std::size_t>(cur - 1)].head;
      ++steps;
    }
    depth[i] = steps;
  }
  return depth;
}

/// Does the rule allow a language switch across the edge ending at `dep`?
bool edge_allowed(const SentenceGraph& g, const std::vector<int>& depth, int dep,
                  const SyntheticRule& rule) {
  const ParseNode& node = g.nodes[static_cast<std::size_t>(dep - 1)];
  switch (rule.family) {
    case RuleFamily::deprel_set: return rule.deprels.contains(node.deprel);
    case RuleFamily::pos_set: return rule.upos.contains(node.upos);
    case RuleFamily::depth_limit: return depth[static_cast<std::size_t>(dep)] <= rule.depth_limit;
  }
  return false;
}

struct TreeDraft {
  SentenceGraph g1;
  std::vector<std::vector<int>> children;  // by 1-based node index
};

TreeDraft sample_tree(int n, Rng& rng) {
  TreeDraft t;
  t.children.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) {
    ParseNode node;
    node.index = i;
    node.upos = static_cast<int>(rng.next_below(kUposTags.size()));
    node.lang = Lang::L1;
    if (i == 1) {
      node.head = 0;
      node.deprel = deprel_index("root");
    } else {
      node.head = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i - 1))) + 1;
      node.deprel = static_cast<int>(rng.next_below(kDepRelTags.size()));
      t.children[static_cast<std::size_t>(node.head)].push_back(i);
    }
    t.g1.nodes.push_back(node);
  }
  return t;
}

void collect_subtree(const TreeDraft& t, int root, std::vector<char>& in_subtree) {
  in_subtree[static_cast<std::size_t>(root)] = 1;
  for (int c : t.children[static_cast<std::size_t>(root)]) collect_subtree(t, c, in_subtree);
}

}  // namespace

bool candidate_is_natural(const CandidateSentence& c, const SyntheticRule& rule) {
  const SentenceGraph& g = c.g1;
  const std::vector<int> depth = node_depths(g);
  for (const ParseNode& node : g.nodes) {
    if (node.head == 0) continue;
    const Lang dep_lang = node.lang;
    const Lang head_lang = g.nodes[static_cast<std::size_t>(node.head - 1)].lang;
    if (dep_lang == Lang::Other || head_lang == Lang::Other) continue;
    if (dep_lang == head_lang) continue;
    if (!edge_allowed(g, depth, node.index, rule)) return false;
  }
  return true;
}

Side oracle_label(const MinimalPair& pair, const SyntheticRule& rule) {
  const bool a_nat = candidate_is_natural(pair.a, rule);
  const bool b_nat = candidate_is_natural(pair.b, rule);
  if (a_nat == b_nat) throw AmbiguousPairError(pair.id);
  return a_nat ? Side::A : Side::B;
}

Dataset generate_dataset(const SyntheticRule& rule, const GenConfig& gcfg, Split split) {
  validate_rule(rule);
  validate_gen_config(gcfg);

  Dataset out;
  out.split = split;
  out.pairs.reserve(gcfg.n_pairs);
  const std::uint64_t base_seed = mix64(rule.seed, gcfg.seed);

  for (std::size_t idx = 0; idx < gcfg.n_pairs; ++idx) {
    Rng rng(base_seed, idx);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int n = gcfg.len_min +
                    static_cast<int>(rng.next_below(
                        static_cast<std::uint64_t>(gcfg.len_max - gcfg.len_min + 1)));
      TreeDraft t = sample_tree(n, rng);
      const std::vector<int> depth = node_depths(t.g1);

      // Candidate switch sites are adjacent edge pairs (head -> mid -> only
      // child of mid) where exactly one of the two edges allows a switch.
      // Placing the L2 subtree under the allowed edge is natural; one node
      // lower or higher, under the disallowed edge, is not. The two
      // assignments then differ at mid alone, and every non-deprel view of
      // the candidates is identically distributed.
      struct Site {
        int mid;        // dependent of the upper edge
        bool upper_ok;  // is the upper edge the allowed one?
      };
      std::vector<Site> sites;
      for (const ParseNode& node : t.g1.nodes) {
        if (node.head == 0) continue;
        const auto& kids = t.children[static_cast<std::size_t>(node.index)];
        if (kids.size() != 1) continue;
        const bool upper_ok = edge_allowed(t.g1, depth, node.index, rule);
        const bool lower_ok = edge_allowed(t.g1, depth, kids[0], rule);
        if (upper_ok != lower_ok) sites.push_back({node.index, upper_ok});
      }
      if (sites.empty()) continue;
      const Site site = sites[rng.next_below(sites.size())];

      // Natural tags: L2 on the subtree under the allowed edge.
      std::vector<char> below_mid(static_cast<std::size_t>(n) + 1, 0);
      collect_subtree(t, site.mid, below_mid);
      const int flip_node = site.mid;  // the one node the candidates disagree on
      auto lang_of = [&](int node_idx, bool natural) {
        bool l2 = below_mid[static_cast<std::size_t>(node_idx)] != 0;
        if (node_idx == flip_node) l2 = site.upper_ok == natural;
        return l2 ? Lang::L2 : Lang::L1;
      };

      // g2: same tree, deprels perturbed independently of the rule logic.
      SentenceGraph g2 = t.g1;
      for (ParseNode& node : g2.nodes) {
        if (node.head != 0 && rng.next_double() < gcfg.g2_perturb_prob)
          node.deprel = static_cast<int>(rng.next_below(kDepRelTags.size()));
      }

      auto make_candidate = [&](bool natural) {
        CandidateSentence c;
        c.g1 = t.g1;
        c.g2 = g2;
        for (int i = 1; i <= n; ++i) {
          const Lang lang = lang_of(i, natural);
          c.g1.nodes[static_cast<std::size_t>(i - 1)].lang = lang;
          c.g2.nodes[static_cast<std::size_t>(i - 1)].lang = lang;
        }
        return c;
      };

      MinimalPair pair;
      pair.id = "synth-" + std::to_string(idx + 1);
      const bool natural_is_a = rng.coin();
      pair.a = make_candidate(natural_is_a);
      pair.b = make_candidate(!natural_is_a);
      pair.label = natural_is_a ? Side::A : Side::B;
      out.pairs.push_back(std::move(pair));
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error("generate_dataset: rule unsatisfiable at the configured lengths "
                               "(1000 resample attempts exhausted)");
    }
  }
  return out;
}

}  // namespace csgnn
