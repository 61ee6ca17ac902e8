#include "csgnn/gnn_core.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csgnn/rng.hpp"
#include "gnn_internal.hpp"

namespace csgnn {

std::string_view architecture_name(Architecture a) {
  return a == Architecture::GINE ? "GINE" : "GAT";
}

std::optional<Architecture> architecture_from_name(std::string_view name) {
  if (name == "GINE" || name == "gine") return Architecture::GINE;
  if (name == "GAT" || name == "gat") return Architecture::GAT;
  return std::nullopt;
}

void validate_config(const ModelConfig& cfg) {
  if (cfg.hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
  if (cfg.num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
  if (cfg.layer_mlp_expansion < 1) throw std::invalid_argument("layer_mlp_expansion must be >= 1");
  if (cfg.classifier_hidden < 1) throw std::invalid_argument("classifier_hidden must be >= 1");
}

ModelParameters zero_params(const ModelConfig& cfg) {
  validate_config(cfg);
  const auto d = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t ed = d * static_cast<std::size_t>(cfg.layer_mlp_expansion);
  const auto ch = static_cast<std::size_t>(cfg.classifier_hidden);
  const FeatureVocab& v = default_vocab();

  ModelParameters p;
  p.pos_embed = Matrix(static_cast<std::size_t>(v.upos_size), d);
  p.deprel_embed = Matrix(static_cast<std::size_t>(v.deprel_size), d);
  p.lang_embed = Matrix(static_cast<std::size_t>(v.lang_size), d);
  p.origin_embed = Matrix(static_cast<std::size_t>(v.origin_size), d);
  if (cfg.architecture == Architecture::GINE) {
    p.gine_layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (GineLayer& l : p.gine_layers) {
      l.eps = 0.0;
      l.w1 = Affine(ed, d);
      l.w2 = Affine(d, ed);
    }
  } else {
    p.gat_layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (GatLayer& l : p.gat_layers) {
      l.w = Affine(d, d);
      l.attn = Vec(2 * d, 0.0);
    }
  }
  p.classifier1 = Affine(ch, 2 * d);
  p.classifier2 = Affine(2, ch);
  return p;
}

std::vector<TensorRef> tensor_refs(ModelParameters& p) {
  std::vector<TensorRef> refs;
  auto mat = [&](const std::string& name, Matrix& m) {
    refs.push_back({name, {m.rows, m.cols}, std::span<double>(m.data)});
  };
  auto vec = [&](const std::string& name, Vec& v) {
    refs.push_back({name, {v.size()}, std::span<double>(v)});
  };
  auto scalar = [&](const std::string& name, double& s) {
    refs.push_back({name, {1}, std::span<double>(&s, 1)});
  };
  mat("pos_embed", p.pos_embed);
  mat("deprel_embed", p.deprel_embed);
  mat("lang_embed", p.lang_embed);
  mat("origin_embed", p.origin_embed);
  for (std::size_t i = 0; i < p.gine_layers.size(); ++i) {
    const std::string pre = "layer" + std::to_string(i) + ".";
    scalar(pre + "eps", p.gine_layers[i].eps);
    mat(pre + "mlp.w1.weight", p.gine_layers[i].w1.w);
    vec(pre + "mlp.w1.bias", p.gine_layers[i].w1.b);
    mat(pre + "mlp.w2.weight", p.gine_layers[i].w2.w);
    vec(pre + "mlp.w2.bias", p.gine_layers[i].w2.b);
  }
  for (std::size_t i = 0; i < p.gat_layers.size(); ++i) {
    const std::string pre = "layer" + std::to_string(i) + ".";
    mat(pre + "w.weight", p.gat_layers[i].w.w);
    vec(pre + "w.bias", p.gat_layers[i].w.b);
    vec(pre + "attn", p.gat_layers[i].attn);
  }
  mat("classifier.c1.weight", p.classifier1.w);
  vec("classifier.c1.bias", p.classifier1.b);
  mat("classifier.c2.weight", p.classifier2.w);
  vec("classifier.c2.bias", p.classifier2.b);
  return refs;
}

std::size_t param_count(const ModelConfig& cfg) {
  ModelParameters p = zero_params(cfg);
  std::size_t count = 0;
  for (const TensorRef& t : tensor_refs(p)) count += t.data.size();
  return count;
}

namespace {

void draw_uniform(Rng& rng, std::span<double> data, double bound) {
  for (double& v : data) v = rng.next_in(-bound, bound);
}

}  // namespace

ModelParameters init_params(const ModelConfig& cfg) {
  ModelParameters p = zero_params(cfg);
  Rng rng(cfg.seed, 0x696E6974ull);  // "init"
  const double d = static_cast<double>(cfg.hidden_dim);
  const double ed = d * static_cast<double>(cfg.layer_mlp_expansion);
  const double ch = static_cast<double>(cfg.classifier_hidden);

  // Embedding rows are summed into d-wide states, so their fan_in is d.
  const double emb_bound = std::sqrt(1.0 / d);
  draw_uniform(rng, p.pos_embed.data, emb_bound);
  draw_uniform(rng, p.deprel_embed.data, emb_bound);
  draw_uniform(rng, p.lang_embed.data, emb_bound);
  draw_uniform(rng, p.origin_embed.data, emb_bound);
  for (GineLayer& l : p.gine_layers) {
    draw_uniform(rng, l.w1.w.data, std::sqrt(1.0 / d));
    draw_uniform(rng, l.w2.w.data, std::sqrt(1.0 / ed));
  }
  for (GatLayer& l : p.gat_layers) {
    draw_uniform(rng, l.w.w.data, std::sqrt(1.0 / d));
    draw_uniform(rng, l.attn, std::sqrt(1.0 / (2.0 * d)));
  }
  draw_uniform(rng, p.classifier1.w.data, std::sqrt(1.0 / (2.0 * d)));
  draw_uniform(rng, p.classifier2.w.data, std::sqrt(1.0 / ch));
  return p;
}

Matrix node_init(const EncodedGraph& enc, const ModelParameters& p) {
  const std::size_t d = p.pos_embed.cols;
  Matrix x(static_cast<std::size_t>(enc.node_count), d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* pos = p.pos_embed.row(static_cast<std::size_t>(enc.node_upos[i]));
    const double* lang = p.lang_embed.row(static_cast<std::size_t>(enc.node_lang[i]));
    const double* org = p.origin_embed.row(static_cast<std::size_t>(enc.node_origin[i]));
    double* out = x.row(i);
    for (std::size_t c = 0; c < d; ++c) out[c] = pos[c] + lang[c] + org[c];
  }
  return x;
}

namespace detail {

Matrix gine_layer_fwd(const Matrix& x, const EncodedGraph& enc, const GineLayer& layer,
                      const Matrix& deprel_embed, GineTrace* trace) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  Matrix agg(n, d);
  const double self_w = 1.0 + layer.eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double* ai = agg.row(i);
    for (std::size_t c = 0; c < d; ++c) ai[c] = self_w * xi[c];
  }
  for (const EncodedEdge& e : enc.edges) {
    const double* xj = x.row(static_cast<std::size_t>(e.src));
    const double* rel = deprel_embed.row(static_cast<std::size_t>(e.deprel));
    double* ai = agg.row(static_cast<std::size_t>(e.dst));
    for (std::size_t c = 0; c < d; ++c) ai[c] += relu(xj[c] + rel[c]);
  }
  Matrix z1(n, layer.w1.out_dim());
  Matrix h1(n, layer.w1.out_dim());
  Matrix out(n, layer.w2.out_dim());
  for (std::size_t i = 0; i < n; ++i) {
    Vec z = layer.w1.apply(std::span<const double>(agg.row(i), d));
    for (std::size_t c = 0; c < z.size(); ++c) {
      z1.at(i, c) = z[c];
      h1.at(i, c) = relu(z[c]);
    }
    Vec y = layer.w2.apply(std::span<const double>(h1.row(i), h1.cols));
    std::memcpy(out.row(i), y.data(), sizeof(double) * y.size());
  }
  if (trace) {
    trace->input = x;
    trace->agg = std::move(agg);
    trace->z1 = std::move(z1);
    trace->h1 = std::move(h1);
  }
  return out;
}

Matrix gat_layer_fwd(const Matrix& x, const EncodedGraph& enc, const GatLayer& layer,
                     const Matrix& deprel_embed, GatTrace* trace) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const std::size_t n_edges = enc.edges.size();

  Matrix wx(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    Vec y = layer.w.apply(std::span<const double>(x.row(i), d));
    std::memcpy(wx.row(i), y.data(), sizeof(double) * d);
  }

  std::vector<std::vector<int>> incoming(n);
  std::vector<Vec> msg(n_edges);
  Vec pre(n_edges);
  for (std::size_t eid = 0; eid < n_edges; ++eid) {
    const EncodedEdge& e = enc.edges[eid];
    incoming[static_cast<std::size_t>(e.dst)].push_back(static_cast<int>(eid));
    Vec m(d);
    const double* src = wx.row(static_cast<std::size_t>(e.src));
    const double* rel = deprel_embed.row(static_cast<std::size_t>(e.deprel));
    for (std::size_t c = 0; c < d; ++c) m[c] = src[c] + rel[c];
    const double* dst = wx.row(static_cast<std::size_t>(e.dst));
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += layer.attn[c] * dst[c];
    for (std::size_t c = 0; c < d; ++c) s += layer.attn[d + c] * m[c];
    pre[eid] = s;
    msg[eid] = std::move(m);
  }

  Vec alpha(n_edges, 0.0);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int>& inc = incoming[i];
    // Every node has at least its self-loop.
    double mx = -std::numeric_limits<double>::infinity();
    for (int eid : inc) {
      double s = pre[static_cast<std::size_t>(eid)];
      double act = s > 0.0 ? s : kLeakySlope * s;
      if (act > mx) mx = act;
    }
    double z = 0.0;
    for (int eid : inc) {
      double s = pre[static_cast<std::size_t>(eid)];
      double act = s > 0.0 ? s : kLeakySlope * s;
      double ex = std::exp(act - mx);
      alpha[static_cast<std::size_t>(eid)] = ex;
      z += ex;
    }
    double* oi = out.row(i);
    for (int eid : inc) {
      double a = alpha[static_cast<std::size_t>(eid)] / z;
      alpha[static_cast<std::size_t>(eid)] = a;
      const Vec& m = msg[static_cast<std::size_t>(eid)];
      for (std::size_t c = 0; c < d; ++c) oi[c] += a * m[c];
    }
  }

  if (trace) {
    trace->input = x;
    trace->wx = std::move(wx);
    trace->msg = std::move(msg);
    trace->pre = std::move(pre);
    trace->alpha = std::move(alpha);
    trace->incoming = std::move(incoming);
  }
  return out;
}

Vec embed_candidate_traced(const EncodedGraph& enc, const ModelParameters& p,
                           const ModelConfig& cfg, CandidateTrace* trace) {
  Matrix x = node_init(enc, p);
  if (trace) trace->x0 = x;
  if (cfg.architecture == Architecture::GINE) {
    if (trace) trace->gine.resize(p.gine_layers.size());
    for (std::size_t l = 0; l < p.gine_layers.size(); ++l) {
      x = gine_layer_fwd(x, enc, p.gine_layers[l], p.deprel_embed,
                         trace ? &trace->gine[l] : nullptr);
    }
  } else {
    if (trace) trace->gat.resize(p.gat_layers.size());
    for (std::size_t l = 0; l < p.gat_layers.size(); ++l) {
      x = gat_layer_fwd(x, enc, p.gat_layers[l], p.deprel_embed,
                        trace ? &trace->gat[l] : nullptr);
    }
  }
  Vec pooled = mean_pool(x);
  if (trace) {
    trace->final_states = std::move(x);
    trace->pooled = pooled;
  }
  return pooled;
}

Logits raw_forward_traced(const EncodedPair& pair, const ModelParameters& p,
                          const ModelConfig& cfg, PairTrace* trace) {
  Vec emb_a = embed_candidate_traced(pair.enc_a, p, cfg, trace ? &trace->a : nullptr);
  Vec emb_b = embed_candidate_traced(pair.enc_b, p, cfg, trace ? &trace->b : nullptr);
  Vec u(emb_a.size() + emb_b.size());
  std::copy(emb_a.begin(), emb_a.end(), u.begin());
  std::copy(emb_b.begin(), emb_b.end(), u.begin() + static_cast<std::ptrdiff_t>(emb_a.size()));
  Vec z1 = p.classifier1.apply(u);
  Vec h1(z1.size());
  for (std::size_t i = 0; i < z1.size(); ++i) h1[i] = relu(z1[i]);
  Vec out = p.classifier2.apply(h1);
  Logits logits{out[0], out[1]};
  if (trace) {
    trace->concat = std::move(u);
    trace->z1 = std::move(z1);
    trace->h1 = std::move(h1);
    trace->logits = logits;
  }
  return logits;
}

}  // namespace detail

Matrix gine_layer(const Matrix& x, const EncodedGraph& enc, const GineLayer& layer,
                  const Matrix& deprel_embed) {
  return detail::gine_layer_fwd(x, enc, layer, deprel_embed, nullptr);
}

Matrix gat_layer(const Matrix& x, const EncodedGraph& enc, const GatLayer& layer,
                 const Matrix& deprel_embed) {
  return detail::gat_layer_fwd(x, enc, layer, deprel_embed, nullptr);
}

Vec mean_pool(const Matrix& x) {
  if (x.rows == 0) throw std::invalid_argument("mean_pool on empty graph");
  Vec out(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    for (std::size_t c = 0; c < x.cols; ++c) out[c] += xi[c];
  }
  const double inv = 1.0 / static_cast<double>(x.rows);
  for (double& v : out) v *= inv;
  return out;
}

Vec embed_candidate(const EncodedGraph& enc, const ModelParameters& p, const ModelConfig& cfg) {
  return detail::embed_candidate_traced(enc, p, cfg, nullptr);
}

Logits classify_pair_raw(std::span<const double> emb_a, std::span<const double> emb_b,
                         const ModelParameters& p) {
  Vec u(emb_a.size() + emb_b.size());
  std::copy(emb_a.begin(), emb_a.end(), u.begin());
  std::copy(emb_b.begin(), emb_b.end(), u.begin() + static_cast<std::ptrdiff_t>(emb_a.size()));
  Vec z1 = p.classifier1.apply(u);
  for (double& v : z1) v = relu(v);
  Vec out = p.classifier2.apply(z1);
  return {out[0], out[1]};
}

Logits classify_pair(std::span<const double> emb_a, std::span<const double> emb_b,
                     const ModelParameters& p) {
  const Logits ab = classify_pair_raw(emb_a, emb_b, p);
  const Logits ba = classify_pair_raw(emb_b, emb_a, p);
  // swap(raw(b,a)) scores the original sides again.
  return {0.5 * (ab.score_a + ba.score_b), 0.5 * (ab.score_b + ba.score_a)};
}

double cross_entropy(const Logits& logits, Side label) {
  const double m = std::max(logits.score_a, logits.score_b);
  const double la = logits.score_a - m;
  const double lb = logits.score_b - m;
  const double log_z = std::log(std::exp(la) + std::exp(lb));
  return log_z - (label == Side::A ? la : lb);
}

std::pair<double, double> softmax2(const Logits& logits) {
  const double m = std::max(logits.score_a, logits.score_b);
  const double ea = std::exp(logits.score_a - m);
  const double eb = std::exp(logits.score_b - m);
  const double z = ea + eb;
  return {ea / z, eb / z};
}

Logits raw_forward(const EncodedPair& pair, const ModelParameters& p, const ModelConfig& cfg) {
  return detail::raw_forward_traced(pair, p, cfg, nullptr);
}

Logits forward(const EncodedPair& pair, const ModelParameters& p, const ModelConfig& cfg) {
  Vec emb_a = embed_candidate(pair.enc_a, p, cfg);
  Vec emb_b = embed_candidate(pair.enc_b, p, cfg);
  return classify_pair(emb_a, emb_b, p);
}

double training_loss(const EncodedPair& pair, Side label, const ModelParameters& p,
                     const ModelConfig& cfg) {
  return cross_entropy(raw_forward(pair, p, cfg), label);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Plain text, one tensor block per parameter, values written
// with std::to_chars so doubles survive a round trip bit-for-bit.

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ > text_.size()) return false;
    std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string::npos) {
      line = std::string_view(text_).substr(pos_);
      pos_ = text_.size() + 1;
      return !line.empty();
    }
    line = std::string_view(text_).substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return true;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void ckpt_fail(const std::string& msg) {
  throw std::runtime_error("checkpoint: " + msg);
}

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    ckpt_fail(std::string("bad ") + what);
  return v;
}

}  // namespace

std::string checkpoint_to_text(const ModelConfig& cfg, const ModelParameters& p) {
  std::string out;
  out += "csgnn-checkpoint v1\n";
  out += "arch ";
  out += architecture_name(cfg.architecture);
  out += "\nhidden_dim " + std::to_string(cfg.hidden_dim);
  out += "\nnum_layers " + std::to_string(cfg.num_layers);
  out += "\nmlp_expansion " + std::to_string(cfg.layer_mlp_expansion);
  out += "\nclassifier_hidden " + std::to_string(cfg.classifier_hidden);
  out += "\nseed " + std::to_string(cfg.seed);
  out += "\n";
  ModelParameters& mut = const_cast<ModelParameters&>(p);
  for (const TensorRef& t : tensor_refs(mut)) {
    out += "tensor " + t.name;
    for (std::size_t dim : t.shape) out += " " + std::to_string(dim);
    out += "\n";
    const std::size_t row = t.shape.size() == 2 ? t.shape[1] : t.data.size();
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      append_double(out, t.data[i]);
      out += (i % row == row - 1) ? '\n' : ' ';
    }
  }
  out += "end\n";
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParameters& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << checkpoint_to_text(cfg, p);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

std::pair<ModelConfig, ModelParameters> checkpoint_from_text(const std::string& text) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.next(line) || line != "csgnn-checkpoint v1")
    ckpt_fail("unsupported header (want \"csgnn-checkpoint v1\")");

  ModelConfig cfg;
  auto header = [&](const char* key) -> std::string_view {
    if (!reader.next(line)) ckpt_fail("truncated header");
    auto parts = split_ws(line);
    if (parts.size() != 2 || parts[0] != key)
      ckpt_fail(std::string("expected header field \"") + key + "\"");
    return parts[1];
  };
  auto arch = architecture_from_name(header("arch"));
  if (!arch) ckpt_fail("unknown architecture");
  cfg.architecture = *arch;
  cfg.hidden_dim = static_cast<int>(parse_u64(header("hidden_dim"), "hidden_dim"));
  cfg.num_layers = static_cast<int>(parse_u64(header("num_layers"), "num_layers"));
  cfg.layer_mlp_expansion = static_cast<int>(parse_u64(header("mlp_expansion"), "mlp_expansion"));
  cfg.classifier_hidden =
      static_cast<int>(parse_u64(header("classifier_hidden"), "classifier_hidden"));
  cfg.seed = parse_u64(header("seed"), "seed");
  validate_config(cfg);

  ModelParameters p = zero_params(cfg);
  for (TensorRef& t : tensor_refs(p)) {
    if (!reader.next(line)) ckpt_fail("truncated before tensor " + t.name);
    auto parts = split_ws(line);
    if (parts.size() < 2 || parts[0] != "tensor" || parts[1] != t.name)
      ckpt_fail("expected tensor " + t.name);
    if (parts.size() != 2 + t.shape.size()) ckpt_fail("wrong rank for tensor " + t.name);
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
      if (parse_u64(parts[2 + i], "shape") != t.shape[i])
        ckpt_fail("shape mismatch for tensor " + t.name);
    }
    std::size_t filled = 0;
    while (filled < t.data.size()) {
      if (!reader.next(line)) ckpt_fail("truncated values for tensor " + t.name);
      for (std::string_view tok : split_ws(line)) {
        if (filled >= t.data.size()) ckpt_fail("too many values for tensor " + t.name);
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
          ckpt_fail("bad value in tensor " + t.name);
        t.data[filled++] = v;
      }
    }
  }
  if (!reader.next(line) || line != "end") ckpt_fail("missing end marker");
  return {cfg, std::move(p)};
}

std::pair<ModelConfig, ModelParameters> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_text(buf.str());
}

}  // namespace csgnn
