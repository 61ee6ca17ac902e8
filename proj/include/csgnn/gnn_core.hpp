#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "csgnn/graph_encoding.hpp"
#include "csgnn/linalg.hpp"

namespace csgnn {

enum class Architecture : std::uint8_t { GINE = 0, GAT = 1 };
std::string_view architecture_name(Architecture a);
std::optional<Architecture> architecture_from_name(std::string_view name);

struct ModelConfig {
  int hidden_dim = 12;
  int num_layers = 3;
  Architecture architecture = Architecture::GINE;
  int layer_mlp_expansion = 2;   // GINE MLP widens d -> expansion*d -> d
  int classifier_hidden = 12;
  std::uint64_t seed = 1;

  bool operator==(const ModelConfig&) const = default;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate_config(const ModelConfig& cfg);

/// One GINE layer: x'_i = mlp((1+eps) * x_i + sum_{j in N(i)} relu(x_j + e_ji))
/// where the mlp is w2 . relu . w1 and e_ji is the deprel embedding row of
/// the edge j->i.
struct GineLayer {
  double eps = 0.0;
  Affine w1;  // d -> expansion*d
  Affine w2;  // expansion*d -> d

  bool operator==(const GineLayer&) const = default;
};

/// One single-head GAT layer with edge features added to the messages:
///   m_j    = W x_j + e_ji
///   s_ij   = leaky_relu_0.2(attn . [W x_i || m_j])
///   x'_i   = sum_j softmax_j(s_ij) m_j
struct GatLayer {
  Affine w;   // d -> d
  Vec attn;   // 2d

  bool operator==(const GatLayer&) const = default;
};

struct ModelParameters {
  Matrix pos_embed;     // 17 x d
  Matrix deprel_embed;  // 38 x d (incl. SELF)
  Matrix lang_embed;    // 3 x d
  Matrix origin_embed;  // 2 x d
  std::vector<GineLayer> gine_layers;
  std::vector<GatLayer> gat_layers;
  Affine classifier1;   // 2d -> classifier_hidden
  Affine classifier2;   // classifier_hidden -> 2

  bool operator==(const ModelParameters&) const = default;
};

/// A named view of one parameter tensor, in the canonical ordering used for
/// initialization, optimizer state, counting and checkpoints.
struct TensorRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> data;
};

std::vector<TensorRef> tensor_refs(ModelParameters& p);

/// Zero-valued parameters with the shapes implied by cfg; also the gradient
/// holder type.
ModelParameters zero_params(const ModelConfig& cfg);

/// Embeddings and affine weights drawn uniform in +-sqrt(1/fan_in) (fan_in =
/// embedding width d for the tables); biases and eps start at zero.
/// Bit-identical for equal (cfg, cfg.seed).
ModelParameters init_params(const ModelConfig& cfg);

/// Exact number of learnable scalars for the configuration.
std::size_t param_count(const ModelConfig& cfg);

struct Logits {
  double score_a = 0.0;
  double score_b = 0.0;
};

/// Initial node states: pos_embed[upos] + lang_embed[lang] + origin_embed[origin].
Matrix node_init(const EncodedGraph& enc, const ModelParameters& p);

Matrix gine_layer(const Matrix& x, const EncodedGraph& enc, const GineLayer& layer,
                  const Matrix& deprel_embed);
Matrix gat_layer(const Matrix& x, const EncodedGraph& enc, const GatLayer& layer,
                 const Matrix& deprel_embed);

/// Arithmetic mean over all nodes of the union graph.
Vec mean_pool(const Matrix& x);

/// Per-candidate embedding: node_init, num_layers message-passing layers,
/// mean pooling.
Vec embed_candidate(const EncodedGraph& enc, const ModelParameters& p, const ModelConfig& cfg);

/// Unsymmetrized classifier output C2(relu(C1([emb_a || emb_b]))); used in
/// training together with order augmentation.
Logits classify_pair_raw(std::span<const double> emb_a, std::span<const double> emb_b,
                         const ModelParameters& p);

/// Symmetrized classifier output, invariant to presentation order:
/// 1/2 (raw(a,b) + swap(raw(b,a))).
Logits classify_pair(std::span<const double> emb_a, std::span<const double> emb_b,
                     const ModelParameters& p);

/// -log softmax(logits)[label], max-subtracted for stability.
double cross_entropy(const Logits& logits, Side label);

/// Softmax probability of each side, max-subtracted.
std::pair<double, double> softmax2(const Logits& logits);

/// Full unsymmetrized pass over the pair as presented (the training path).
Logits raw_forward(const EncodedPair& pair, const ModelParameters& p, const ModelConfig& cfg);

/// Full symmetrized pass (the inference path).
Logits forward(const EncodedPair& pair, const ModelParameters& p, const ModelConfig& cfg);

/// Loss of the unsymmetrized training path; the function the gradients
/// below differentiate.
double training_loss(const EncodedPair& pair, Side label, const ModelParameters& p,
                     const ModelConfig& cfg);

/// Adds d loss / d theta into `grad` (same shapes as p) and returns the loss.
/// Exact reverse-mode; the ReLU subgradient at 0 is 0.
double accumulate_gradients(const EncodedPair& pair, Side label, const ModelParameters& p,
                            const ModelConfig& cfg, ModelParameters& grad);

/// Convenience wrapper returning a fresh gradient holder.
ModelParameters gradients(const EncodedPair& pair, Side label, const ModelParameters& p,
                          const ModelConfig& cfg);

/// Versioned plain-text checkpoint; round-trips doubles bit-faithfully.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParameters& p);
std::string checkpoint_to_text(const ModelConfig& cfg, const ModelParameters& p);
std::pair<ModelConfig, ModelParameters> load_checkpoint(const std::filesystem::path& path);
std::pair<ModelConfig, ModelParameters> checkpoint_from_text(const std::string& text);

}  // namespace csgnn
