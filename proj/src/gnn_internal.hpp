#pragma once

// Forward-pass traces shared between the forward and backward translation
// units. Not part of the public surface.

#include "csgnn/gnn_core.hpp"

namespace csgnn::detail {

struct GineTrace {
  Matrix input;  // layer input x, n x d
  Matrix agg;    // (1+eps) x_i + sum relu(x_j + e_ji), n x d
  Matrix z1;     // w1 preactivation, n x (expansion*d)
  Matrix h1;     // relu(z1)
};

struct GatTrace {
  Matrix input;            // n x d
  Matrix wx;               // affine W x per node, n x d
  std::vector<Vec> msg;    // per edge, length d
  Vec pre;                 // per edge attention preactivation
  Vec alpha;               // per edge softmax weight
  std::vector<std::vector<int>> incoming;  // edge ids per destination node
};

struct CandidateTrace {
  Matrix x0;  // node_init output
  std::vector<GineTrace> gine;
  std::vector<GatTrace> gat;
  Matrix final_states;
  Vec pooled;
};

struct PairTrace {
  CandidateTrace a;
  CandidateTrace b;
  Vec concat;  // [emb_a || emb_b]
  Vec z1;      // classifier1 preactivation
  Vec h1;      // relu(z1)
  Logits logits;
};

Matrix gine_layer_fwd(const Matrix& x, const EncodedGraph& enc, const GineLayer& layer,
                      const Matrix& deprel_embed, GineTrace* trace);
Matrix gat_layer_fwd(const Matrix& x, const EncodedGraph& enc, const GatLayer& layer,
                     const Matrix& deprel_embed, GatTrace* trace);
Vec embed_candidate_traced(const EncodedGraph& enc, const ModelParameters& p,
                           const ModelConfig& cfg, CandidateTrace* trace);
Logits raw_forward_traced(const EncodedPair& pair, const ModelParameters& p,
                          const ModelConfig& cfg, PairTrace* trace);

inline constexpr double kLeakySlope = 0.2;

}  // namespace csgnn::detail
