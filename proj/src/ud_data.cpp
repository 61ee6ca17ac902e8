#include "csgnn/ud_data.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace csgnn {

using nlohmann::json;

namespace {

const std::unordered_map<std::string_view, int>& upos_map() {
  static const auto* m = [] {
    auto* map = new std::unordered_map<std::string_view, int>();
    for (std::size_t i = 0; i < kUposTags.size(); ++i) (*map)[kUposTags[i]] = static_cast<int>(i);
    return map;
  }();
  return *m;
}

const std::unordered_map<std::string_view, int>& deprel_map() {
  static const auto* m = [] {
    auto* map = new std::unordered_map<std::string_view, int>();
    for (std::size_t i = 0; i < kDepRelTags.size(); ++i) (*map)[kDepRelTags[i]] = static_cast<int>(i);
    return map;
  }();
  return *m;
}

}  // namespace

int upos_index(std::string_view tag) {
  auto it = upos_map().find(tag);
  return it == upos_map().end() ? -1 : it->second;
}

int deprel_index(std::string_view tag) {
  auto it = deprel_map().find(tag);
  return it == deprel_map().end() ? -1 : it->second;
}

int lang_index(std::string_view tag) {
  for (std::size_t i = 0; i < kLangTags.size(); ++i)
    if (kLangTags[i] == tag) return static_cast<int>(i);
  return -1;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view defect_reason(GraphDefect d) {
  switch (d) {
    case GraphDefect::none: return "ok";
    case GraphDefect::empty: return "empty";
    case GraphDefect::head_out_of_range: return "head_out_of_range";
    case GraphDefect::self_head: return "self_head";
    case GraphDefect::multiple_roots: return "multiple_roots";
    case GraphDefect::cycle: return "cycle";
  }
  return "?";
}

GraphValidation validate_sentence_graph(const SentenceGraph& g) {
  const int n = g.size();
  if (n == 0) return {GraphDefect::empty, 0};
  for (const ParseNode& node : g.nodes) {
    if (node.head < 0 || node.head > n) return {GraphDefect::head_out_of_range, node.index};
    if (node.head == node.index) return {GraphDefect::self_head, node.index};
  }
  // Walk head chains; a chain that revisits a node before reaching the root
  // is a cycle. 0 = unvisited, 1 = on current chain, 2 = known good.
  std::vector<std::uint8_t> state(static_cast<std::size_t>(n) + 1, 0);
  state[0] = 2;  // virtual root
  for (int start = 1; start <= n; ++start) {
    int cur = start;
    std::vector<int> chain;
    while (state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      chain.push_back(cur);
      cur = g.nodes[static_cast<std::size_t>(cur - 1)].head;
    }
    if (state[static_cast<std::size_t>(cur)] == 1) return {GraphDefect::cycle, cur};
    for (int v : chain) state[static_cast<std::size_t>(v)] = 2;
  }
  int roots = 0;
  int first_extra_root = 0;
  for (const ParseNode& node : g.nodes) {
    if (node.head == 0) {
      ++roots;
      if (roots == 2) first_extra_root = node.index;
    }
  }
  if (roots > 1) return {GraphDefect::multiple_roots, first_extra_root};
  return {};
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw DatasetFormatError(line, msg);
}

void expect_object_keys(const json& obj, std::initializer_list<const char*> keys,
                        std::size_t line, const char* what) {
  if (!obj.is_object()) fail(line, std::string(what) + " is not an object");
  for (const char* k : keys) {
    if (!obj.contains(k)) fail(line, std::string(what) + " missing field \"" + k + "\"");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) known = true;
    if (!known) fail(line, std::string(what) + " has unknown field \"" + it.key() + "\"");
  }
}

SentenceGraph parse_graph(const json& jg, std::size_t line, const std::string& where) {
  expect_object_keys(jg, {"nodes"}, line, where.c_str());
  const json& jnodes = jg["nodes"];
  if (!jnodes.is_array()) fail(line, where + ".nodes is not an array");
  SentenceGraph g;
  int index = 0;
  for (const json& jn : jnodes) {
    ++index;
    const std::string ctx = where + ".nodes[" + std::to_string(index) + "]";
    expect_object_keys(jn, {"upos", "lang", "head", "deprel"}, line, ctx.c_str());
    if (!jn["upos"].is_string()) fail(line, ctx + ".upos is not a string");
    if (!jn["lang"].is_string()) fail(line, ctx + ".lang is not a string");
    if (!jn["deprel"].is_string()) fail(line, ctx + ".deprel is not a string");
    if (!jn["head"].is_number_integer()) fail(line, ctx + ".head is not an integer");
    ParseNode node;
    node.index = index;
    const std::string upos = jn["upos"].get<std::string>();
    const std::string lang = jn["lang"].get<std::string>();
    const std::string deprel = jn["deprel"].get<std::string>();
    int u = upos_index(upos);
    if (u < 0) fail(line, ctx + ": unknown UPOS \"" + upos + "\"");
    int l = lang_index(lang);
    if (l < 0) fail(line, ctx + ": unknown language tag \"" + lang + "\"");
    int r = deprel_index(deprel);
    if (r < 0) fail(line, ctx + ": unknown deprel \"" + deprel + "\"");
    node.upos = u;
    node.lang = static_cast<Lang>(l);
    node.deprel = r;
    node.head = jn["head"].get<int>();
    g.nodes.push_back(node);
  }
  GraphValidation v = validate_sentence_graph(g);
  if (!v.ok()) {
    fail(line, where + ": invalid sentence graph (" + std::string(defect_reason(v.defect)) +
                   ", node " + std::to_string(v.node) + ")");
  }
  return g;
}

CandidateSentence parse_candidate(const json& jc, std::size_t line, const std::string& where) {
  expect_object_keys(jc, {"g1", "g2"}, line, where.c_str());
  CandidateSentence c;
  c.g1 = parse_graph(jc["g1"], line, where + ".g1");
  c.g2 = parse_graph(jc["g2"], line, where + ".g2");
  return c;
}

MinimalPair parse_record(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(line, std::string("malformed record: ") + e.what());
  }
  expect_object_keys(j, {"id", "label", "human_agreement", "A", "B"}, line, "record");
  MinimalPair p;
  if (!j["id"].is_string()) fail(line, "id is not a string");
  p.id = j["id"].get<std::string>();
  if (!j["label"].is_string()) fail(line, "label is not a string");
  const std::string label = j["label"].get<std::string>();
  if (label == "A")
    p.label = Side::A;
  else if (label == "B")
    p.label = Side::B;
  else
    fail(line, "label must be \"A\" or \"B\", got \"" + label + "\"");
  const json& ha = j["human_agreement"];
  if (ha.is_null()) {
    p.human_agreement = std::nullopt;
  } else if (ha.is_number()) {
    double v = ha.get<double>();
    if (v < 0.0 || v > 1.0) fail(line, "human_agreement out of [0,1]");
    p.human_agreement = v;
  } else {
    fail(line, "human_agreement must be a number or null");
  }
  p.a = parse_candidate(j["A"], line, "A");
  p.b = parse_candidate(j["B"], line, "B");
  return p;
}

json graph_to_json(const SentenceGraph& g) {
  json jnodes = json::array();
  for (const ParseNode& n : g.nodes) {
    jnodes.push_back({{"upos", std::string(kUposTags[static_cast<std::size_t>(n.upos)])},
                      {"lang", std::string(kLangTags[static_cast<std::size_t>(n.lang)])},
                      {"head", n.head},
                      {"deprel", std::string(kDepRelTags[static_cast<std::size_t>(n.deprel)])}});
  }
  return json{{"nodes", std::move(jnodes)}};
}

}  // namespace

Dataset parse_dataset_text(std::string_view text, Split split) {
  Dataset d;
  d.split = split;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;  // blank lines (incl. trailing newline) are skipped
    MinimalPair p = parse_record(std::string(line), line_no);
    if (!seen_ids.insert(p.id).second) fail(line_no, "duplicate id \"" + p.id + "\"");
    d.pairs.push_back(std::move(p));
  }
  return d;
}

Dataset parse_dataset(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), split);
}

std::string dataset_to_text(const Dataset& d) {
  std::unordered_set<std::string> seen_ids;
  std::string out;
  for (const MinimalPair& p : d.pairs) {
    if (!seen_ids.insert(p.id).second)
      throw std::runtime_error("write_dataset: duplicate id \"" + p.id + "\"");
    for (const SentenceGraph* g : {&p.a.g1, &p.a.g2, &p.b.g1, &p.b.g2}) {
      GraphValidation v = validate_sentence_graph(*g);
      if (!v.ok())
        throw std::runtime_error("write_dataset: invalid graph in pair \"" + p.id + "\" (" +
                                 std::string(defect_reason(v.defect)) + ")");
    }
    json j;
    j["id"] = p.id;
    j["label"] = std::string(side_name(p.label));
    if (p.human_agreement)
      j["human_agreement"] = *p.human_agreement;
    else
      j["human_agreement"] = nullptr;
    j["A"] = json{{"g1", graph_to_json(p.a.g1)}, {"g2", graph_to_json(p.a.g2)}};
    j["B"] = json{{"g1", graph_to_json(p.b.g1)}, {"g2", graph_to_json(p.b.g2)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  const std::string text = dataset_to_text(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace csgnn
