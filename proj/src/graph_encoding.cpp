#include "csgnn/graph_encoding.hpp"

#include "csgnn/rng.hpp"

namespace csgnn {

const FeatureVocab& default_vocab() {
  static const FeatureVocab v{};
  return v;
}

namespace {

void encode_component(const SentenceGraph& g, int offset, Origin origin, EncodedGraph& out) {
  const int n = g.size();
  for (const ParseNode& node : g.nodes) {
    out.node_upos.push_back(node.upos);
    out.node_lang.push_back(static_cast<int>(node.lang));
    out.node_origin.push_back(static_cast<int>(origin));
    out.component.push_back(static_cast<int>(origin));
  }
  // Dependencies, both directions, sharing the dependent's relation index.
  for (const ParseNode& node : g.nodes) {
    if (node.head == 0) continue;
    const int dep = offset + node.index - 1;
    const int head = offset + node.head - 1;
    out.edges.push_back({head, dep, node.deprel});
    out.edges.push_back({dep, head, node.deprel});
  }
  for (int i = 0; i < n; ++i) {
    out.edges.push_back({offset + i, offset + i, kSelfRelIndex});
  }
}

}  // namespace

EncodedGraph encode_candidate(const CandidateSentence& c, const FeatureVocab&) {
  EncodedGraph out;
  out.node_count = c.g1.size() + c.g2.size();
  out.node_upos.reserve(static_cast<std::size_t>(out.node_count));
  encode_component(c.g1, 0, Origin::from_g1, out);
  encode_component(c.g2, c.g1.size(), Origin::from_g2, out);
  return out;
}

EncodedPair encode_pair(const MinimalPair& p, const FeatureVocab& v) {
  return {encode_candidate(p.a, v), encode_candidate(p.b, v), p.label};
}

std::vector<EncodedPair> encode_dataset(const Dataset& d, const FeatureVocab& v) {
  std::vector<EncodedPair> out;
  out.reserve(d.pairs.size());
  for (const MinimalPair& p : d.pairs) out.push_back(encode_pair(p, v));
  return out;
}

std::string_view ablation_mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::none: return "none";
    case AblationMode::random_deprel: return "random_deprel";
    case AblationMode::random_pos: return "random_pos";
    case AblationMode::random_deprel_pos: return "random_deprel_pos";
    case AblationMode::random_lang: return "random_lang";
    case AblationMode::random_all: return "random_all";
  }
  return "?";
}

std::optional<AblationMode> ablation_mode_from_name(std::string_view name) {
  for (AblationMode m : kAllAblationModes)
    if (ablation_mode_name(m) == name) return m;
  return std::nullopt;
}

Dataset randomize_features(const Dataset& d, AblationMode mode, std::uint64_t seed) {
  const bool hit_deprel = mode == AblationMode::random_deprel ||
                          mode == AblationMode::random_deprel_pos ||
                          mode == AblationMode::random_all;
  const bool hit_pos = mode == AblationMode::random_pos ||
                       mode == AblationMode::random_deprel_pos ||
                       mode == AblationMode::random_all;
  const bool hit_lang = mode == AblationMode::random_lang || mode == AblationMode::random_all;

  Dataset out = d;
  if (mode == AblationMode::none) return out;

  Rng rng(seed, 0x61626C6174696F6Eull);  // "ablation"
  const auto n_upos = static_cast<std::uint64_t>(kUposTags.size());
  const auto n_rel = static_cast<std::uint64_t>(kDepRelTags.size());  // SELF excluded
  const auto n_lang = static_cast<std::uint64_t>(kLangTags.size());
  for (MinimalPair& p : out.pairs) {
    for (CandidateSentence* c : {&p.a, &p.b}) {
      for (SentenceGraph* g : {&c->g1, &c->g2}) {
        for (ParseNode& node : g->nodes) {
          if (hit_pos) node.upos = static_cast<int>(rng.next_below(n_upos));
          if (hit_deprel && node.head != 0) node.deprel = static_cast<int>(rng.next_below(n_rel));
          if (hit_lang) node.lang = static_cast<Lang>(rng.next_below(n_lang));
        }
      }
    }
  }
  return out;
}

}  // namespace csgnn
