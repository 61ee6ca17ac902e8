#include <cmath>

#include "csgnn/gnn_core.hpp"
#include "gnn_internal.hpp"

// Reverse-mode gradients of the training loss. Each *_bwd consumes the trace
// its forward counterpart recorded and accumulates into a zero_params-shaped
// holder.

namespace csgnn {

namespace {

using detail::CandidateTrace;
using detail::GatTrace;
using detail::GineTrace;
using detail::PairTrace;

// Returns d loss / d layer-input given d loss / d layer-output.
Matrix gine_layer_bwd(const Matrix& d_out, const EncodedGraph& enc, const GineLayer& layer,
                      const Matrix& deprel_embed, const GineTrace& tr, GineLayer& g_layer,
                      Matrix& g_deprel) {
  const std::size_t n = d_out.rows;
  const std::size_t d = tr.input.cols;
  const std::size_t ed = tr.z1.cols;

  Matrix d_agg(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* dy = d_out.row(i);
    const double* h1 = tr.h1.row(i);
    const double* z1 = tr.z1.row(i);
    const double* agg = tr.agg.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      double* gw2 = g_layer.w2.w.row(r);
      for (std::size_t c = 0; c < ed; ++c) gw2[c] += dy[r] * h1[c];
      g_layer.w2.b[r] += dy[r];
    }
    Vec dz1(ed, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const double* w2 = layer.w2.w.row(r);
      for (std::size_t c = 0; c < ed; ++c) dz1[c] += w2[c] * dy[r];
    }
    for (std::size_t c = 0; c < ed; ++c)
      if (z1[c] <= 0.0) dz1[c] = 0.0;
    double* dai = d_agg.row(i);
    for (std::size_t r = 0; r < ed; ++r) {
      double* gw1 = g_layer.w1.w.row(r);
      for (std::size_t c = 0; c < d; ++c) gw1[c] += dz1[r] * agg[c];
      g_layer.w1.b[r] += dz1[r];
      const double* w1 = layer.w1.w.row(r);
      for (std::size_t c = 0; c < d; ++c) dai[c] += w1[c] * dz1[r];
    }
  }

  Matrix d_x(n, d);
  const double self_w = 1.0 + layer.eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = tr.input.row(i);
    const double* dai = d_agg.row(i);
    double* dxi = d_x.row(i);
    double eps_acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dxi[c] = self_w * dai[c];
      eps_acc += xi[c] * dai[c];
    }
    g_layer.eps += eps_acc;
  }
  for (const EncodedEdge& e : enc.edges) {
    const double* xj = tr.input.row(static_cast<std::size_t>(e.src));
    const double* rel = deprel_embed.row(static_cast<std::size_t>(e.deprel));
    const double* dai = d_agg.row(static_cast<std::size_t>(e.dst));
    double* dxj = d_x.row(static_cast<std::size_t>(e.src));
    double* grel = g_deprel.row(static_cast<std::size_t>(e.deprel));
    for (std::size_t c = 0; c < d; ++c) {
      if (xj[c] + rel[c] > 0.0) {
        dxj[c] += dai[c];
        grel[c] += dai[c];
      }
    }
  }
  return d_x;
}

Matrix gat_layer_bwd(const Matrix& d_out, const EncodedGraph& enc, const GatLayer& layer,
                     const GatTrace& tr, GatLayer& g_layer, Matrix& g_deprel) {
  const std::size_t n = d_out.rows;
  const std::size_t d = tr.input.cols;
  const std::size_t n_edges = enc.edges.size();

  Matrix d_wx(n, d);
  std::vector<Vec> d_msg(n_edges, Vec(d, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int>& inc = tr.incoming[i];
    const double* dy = d_out.row(i);
    Vec d_alpha(inc.size());
    double s_dot = 0.0;
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const std::size_t eid = static_cast<std::size_t>(inc[k]);
      const Vec& m = tr.msg[eid];
      double da = 0.0;
      for (std::size_t c = 0; c < d; ++c) da += dy[c] * m[c];
      d_alpha[k] = da;
      s_dot += tr.alpha[eid] * da;
      Vec& dm = d_msg[eid];
      for (std::size_t c = 0; c < d; ++c) dm[c] += tr.alpha[eid] * dy[c];
    }
    const double* wxi = tr.wx.row(i);
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const std::size_t eid = static_cast<std::size_t>(inc[k]);
      const double ds = tr.alpha[eid] * (d_alpha[k] - s_dot);
      const double dpre = tr.pre[eid] > 0.0 ? ds : detail::kLeakySlope * ds;
      const Vec& m = tr.msg[eid];
      Vec& dm = d_msg[eid];
      double* dwxi = d_wx.row(i);
      for (std::size_t c = 0; c < d; ++c) {
        g_layer.attn[c] += dpre * wxi[c];
        g_layer.attn[d + c] += dpre * m[c];
        dwxi[c] += dpre * layer.attn[c];
        dm[c] += dpre * layer.attn[d + c];
      }
    }
  }

  for (std::size_t eid = 0; eid < n_edges; ++eid) {
    const EncodedEdge& e = enc.edges[eid];
    const Vec& dm = d_msg[eid];
    double* dwxj = d_wx.row(static_cast<std::size_t>(e.src));
    double* grel = g_deprel.row(static_cast<std::size_t>(e.deprel));
    for (std::size_t c = 0; c < d; ++c) {
      dwxj[c] += dm[c];
      grel[c] += dm[c];
    }
  }

  Matrix d_x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = tr.input.row(i);
    const double* dwxi = d_wx.row(i);
    double* dxi = d_x.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      double* gw = g_layer.w.w.row(r);
      for (std::size_t c = 0; c < d; ++c) gw[c] += dwxi[r] * xi[c];
      g_layer.w.b[r] += dwxi[r];
      const double* w = layer.w.w.row(r);
      for (std::size_t c = 0; c < d; ++c) dxi[c] += w[c] * dwxi[r];
    }
  }
  return d_x;
}

void candidate_bwd(const EncodedGraph& enc, const CandidateTrace& tr, const ModelParameters& p,
                   const ModelConfig& cfg, std::span<const double> d_pooled,
                   ModelParameters& grad) {
  const std::size_t n = static_cast<std::size_t>(enc.node_count);
  const std::size_t d = d_pooled.size();
  Matrix d_x(n, d);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* dxi = d_x.row(i);
    for (std::size_t c = 0; c < d; ++c) dxi[c] = d_pooled[c] * inv;
  }
  if (cfg.architecture == Architecture::GINE) {
    for (std::size_t l = p.gine_layers.size(); l-- > 0;) {
      d_x = gine_layer_bwd(d_x, enc, p.gine_layers[l], p.deprel_embed, tr.gine[l],
                           grad.gine_layers[l], grad.deprel_embed);
    }
  } else {
    for (std::size_t l = p.gat_layers.size(); l-- > 0;) {
      d_x = gat_layer_bwd(d_x, enc, p.gat_layers[l], tr.gat[l], grad.gat_layers[l],
                          grad.deprel_embed);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* dxi = d_x.row(i);
    double* gp = grad.pos_embed.row(static_cast<std::size_t>(enc.node_upos[i]));
    double* gl = grad.lang_embed.row(static_cast<std::size_t>(enc.node_lang[i]));
    double* go = grad.origin_embed.row(static_cast<std::size_t>(enc.node_origin[i]));
    for (std::size_t c = 0; c < d; ++c) {
      gp[c] += dxi[c];
      gl[c] += dxi[c];
      go[c] += dxi[c];
    }
  }
}

}  // namespace

double accumulate_gradients(const EncodedPair& pair, Side label, const ModelParameters& p,
                            const ModelConfig& cfg, ModelParameters& grad) {
  PairTrace tr;
  const Logits logits = detail::raw_forward_traced(pair, p, cfg, &tr);
  const double loss = cross_entropy(logits, label);

  auto [pa, pb] = softmax2(logits);
  const double d_logits[2] = {pa - (label == Side::A ? 1.0 : 0.0),
                              pb - (label == Side::B ? 1.0 : 0.0)};

  const std::size_t ch = tr.h1.size();
  const std::size_t two_d = tr.concat.size();
  Vec d_h1(ch, 0.0);
  for (std::size_t r = 0; r < 2; ++r) {
    double* gw = grad.classifier2.w.row(r);
    const double* w = p.classifier2.w.row(r);
    for (std::size_t c = 0; c < ch; ++c) {
      gw[c] += d_logits[r] * tr.h1[c];
      d_h1[c] += w[c] * d_logits[r];
    }
    grad.classifier2.b[r] += d_logits[r];
  }
  Vec d_z1(ch);
  for (std::size_t c = 0; c < ch; ++c) d_z1[c] = tr.z1[c] > 0.0 ? d_h1[c] : 0.0;
  Vec d_concat(two_d, 0.0);
  for (std::size_t r = 0; r < ch; ++r) {
    double* gw = grad.classifier1.w.row(r);
    const double* w = p.classifier1.w.row(r);
    for (std::size_t c = 0; c < two_d; ++c) {
      gw[c] += d_z1[r] * tr.concat[c];
      d_concat[c] += w[c] * d_z1[r];
    }
    grad.classifier1.b[r] += d_z1[r];
  }

  const std::size_t d = two_d / 2;
  candidate_bwd(pair.enc_a, tr.a, p, cfg, std::span<const double>(d_concat).first(d), grad);
  candidate_bwd(pair.enc_b, tr.b, p, cfg, std::span<const double>(d_concat).subspan(d), grad);
  return loss;
}

ModelParameters gradients(const EncodedPair& pair, Side label, const ModelParameters& p,
                          const ModelConfig& cfg) {
  ModelParameters grad = zero_params(cfg);
  accumulate_gradients(pair, label, p, cfg, grad);
  return grad;
}

}  // namespace csgnn
