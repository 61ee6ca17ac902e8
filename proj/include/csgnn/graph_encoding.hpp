#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "csgnn/ud_data.hpp"

namespace csgnn {

enum class Origin : std::uint8_t { from_g1 = 0, from_g2 = 1 };

/// Fixed, versioned feature vocabulary shared by every model. Indices are
/// positions in the tag tables of ud_data.hpp; deprel gains SELF at the end.
struct FeatureVocab {
  std::string_view version = "v1";
  int upos_size = 17;
  int deprel_size = 38;  // 37 relations + SELF
  int lang_size = 3;
  int origin_size = 2;
};

const FeatureVocab& default_vocab();

struct EncodedEdge {
  int src = 0;
  int dst = 0;
  int deprel = 0;

  bool operator==(const EncodedEdge&) const = default;
};

/// Numeric union graph of one candidate sentence: both monolingual parses
/// side by side, never connected to each other. Every dependency appears in
/// both directions with the same relation index; every node carries one
/// SELF-labelled self-loop.
struct EncodedGraph {
  int node_count = 0;
  std::vector<int> node_upos;
  std::vector<int> node_lang;
  std::vector<int> node_origin;
  std::vector<EncodedEdge> edges;
  std::vector<int> component;  // 0 = from g1, 1 = from g2

  bool operator==(const EncodedGraph&) const = default;
};

struct EncodedPair {
  EncodedGraph enc_a;
  EncodedGraph enc_b;
  Side label = Side::A;
};

EncodedGraph encode_candidate(const CandidateSentence& c, const FeatureVocab& v = default_vocab());
EncodedPair encode_pair(const MinimalPair& p, const FeatureVocab& v = default_vocab());
std::vector<EncodedPair> encode_dataset(const Dataset& d, const FeatureVocab& v = default_vocab());

/// The ablation settings of the experiment's Table-2 analog.
enum class AblationMode : std::uint8_t {
  none = 0,
  random_deprel,
  random_pos,
  random_deprel_pos,
  random_lang,
  random_all,
};

inline constexpr std::array<AblationMode, 6> kAllAblationModes = {
    AblationMode::none,       AblationMode::random_deprel, AblationMode::random_pos,
    AblationMode::random_deprel_pos, AblationMode::random_lang, AblationMode::random_all};

std::string_view ablation_mode_name(AblationMode m);
/// Returns nullopt for unknown names.
std::optional<AblationMode> ablation_mode_from_name(std::string_view name);

/// Replaces the selected features with independent uniform draws over their
/// full vocabulary (SELF excluded from deprel draws, and the root token's
/// deprel is kept since it labels no edge). Structure, labels, ids and
/// agreement values are untouched. Deterministic given the seed.
Dataset randomize_features(const Dataset& d, AblationMode mode, std::uint64_t seed);

}  // namespace csgnn
