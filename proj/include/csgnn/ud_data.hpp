#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace csgnn {

// The 17 universal POS categories.
inline constexpr std::array<std::string_view, 17> kUposTags = {
    "ADJ", "ADP",  "ADV",  "AUX",   "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

// The 37 universal dependency relations. SELF is reserved for self-loop
// edges added at encoding time and never appears in input files; it lives
// at index 37 in the feature vocabulary.
inline constexpr std::array<std::string_view, 37> kDepRelTags = {
    "acl",      "advcl",      "advmod",  "amod",   "appos",  "aux",
    "case",     "cc",         "ccomp",   "clf",    "compound", "conj",
    "cop",      "csubj",      "dep",     "det",    "discourse", "dislocated",
    "expl",     "fixed",      "flat",    "goeswith", "iobj",  "list",
    "mark",     "nmod",       "nsubj",   "nummod", "obj",    "obl",
    "orphan",   "parataxis",  "punct",   "reparandum", "root", "vocative",
    "xcomp"};

inline constexpr int kSelfRelIndex = 37;  // index of SELF in the 38-entry vocab
inline constexpr std::string_view kSelfRelName = "SELF";

enum class Upos : std::uint8_t {};
enum class DepRel : std::uint8_t {};

enum class Lang : std::uint8_t { L1 = 0, L2 = 1, Other = 2 };
inline constexpr std::array<std::string_view, 3> kLangTags = {"L1", "L2", "OTHER"};

enum class Side : std::uint8_t { A = 0, B = 1 };
inline Side other_side(Side s) { return s == Side::A ? Side::B : Side::A; }
inline std::string_view side_name(Side s) { return s == Side::A ? "A" : "B"; }

/// Lookups between tag strings and vocabulary indices. Returns -1 for
/// unknown strings.
int upos_index(std::string_view tag);
int deprel_index(std::string_view tag);  // SELF is not accepted here
int lang_index(std::string_view tag);

/// One token of a dependency parse. `index` is the 1-based position in its
/// sentence; `head` uses the CoNLL-U convention (0 = root).
struct ParseNode {
  int index = 0;
  int upos = 0;    // index into kUposTags
  Lang lang = Lang::L1;
  int head = 0;
  int deprel = 0;  // index into kDepRelTags

  bool operator==(const ParseNode&) const = default;
};

struct SentenceGraph {
  std::vector<ParseNode> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  bool operator==(const SentenceGraph&) const = default;
};

/// One candidate sentence of a minimal pair: the dependency parses of its
/// two monolingual translations, each annotated with per-token language.
struct CandidateSentence {
  SentenceGraph g1;
  SentenceGraph g2;

  bool operator==(const CandidateSentence&) const = default;
};

struct MinimalPair {
  std::string id;
  CandidateSentence a;
  CandidateSentence b;
  Side label = Side::A;  // the naturally observed candidate
  std::optional<double> human_agreement;

  const CandidateSentence& candidate(Side s) const { return s == Side::A ? a : b; }
  bool operator==(const MinimalPair&) const = default;
};

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };
std::string_view split_name(Split s);

struct Dataset {
  std::vector<MinimalPair> pairs;
  Split split = Split::train;

  std::size_t size() const { return pairs.size(); }
  bool operator==(const Dataset&) const = default;
};

/// Machine-readable structural defects of a SentenceGraph.
enum class GraphDefect : std::uint8_t {
  none = 0,
  empty,
  head_out_of_range,
  self_head,
  multiple_roots,
  cycle,
};

struct GraphValidation {
  GraphDefect defect = GraphDefect::none;
  int node = 0;  // 1-based offending node where applicable, else 0

  bool ok() const { return defect == GraphDefect::none; }
};

std::string_view defect_reason(GraphDefect d);

/// Accepts iff the graph is a nonempty single-rooted tree with in-range,
/// non-self head links. Rejections carry a reason code; nothing is repaired.
GraphValidation validate_sentence_graph(const SentenceGraph& g);

/// Raised by parse_dataset with the 1-based line number of the bad record.
class DatasetFormatError : public std::runtime_error {
 public:
  DatasetFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads a line-delimited dataset file. Every record is validated; the
/// first violation aborts the parse with a DatasetFormatError.
Dataset parse_dataset(const std::filesystem::path& path, Split split = Split::train);

/// Parses records from an already-loaded string (one JSON object per line).
Dataset parse_dataset_text(std::string_view text, Split split = Split::train);

/// Writes the dataset in the format parse_dataset reads. Round-trips
/// exactly, including human_agreement.
void write_dataset(const Dataset& d, const std::filesystem::path& path);
std::string dataset_to_text(const Dataset& d);

}  // namespace csgnn
