#pragma once

// In-memory corpus model: CoNLL-U treebanks, VEMB embedding files and
// subword sidecar files.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lgen/error.hpp"
#include "lgen/matrix.hpp"

namespace lgen {

/// Per-sentence encoder outputs. `token_vectors` has one row per word.
struct EmbeddingRecord {
  std::vector<double> cls_layer2;
  std::vector<double> cls_final;
  Matrix token_vectors;

  std::size_t dim() const { return cls_final.size(); }
  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct Sentence {
  std::vector<std::string> words;
  std::vector<std::string> subword_tokens;
  std::optional<std::vector<std::string>> pos_tags;
  std::optional<std::vector<int>> heads;  // 0 = root, otherwise 1-based word index
  std::optional<std::vector<std::string>> deprels;
  std::optional<EmbeddingRecord> embedding;

  std::size_t size() const { return words.size(); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class Split { train, dev, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

struct VarietyCorpus {
  std::string variety_id;
  std::vector<Sentence> sentences;
  Split split = Split::train;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }

  std::size_t word_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  bool has_embeddings() const {
    for (const auto& s : sentences)
      if (!s.embedding) return false;
    return true;
  }
};

// Throws if any id is empty or repeated.
inline void validate_variety_ids(const std::vector<const VarietyCorpus*>& corpora) {
  std::unordered_set<std::string> seen;
  for (const VarietyCorpus* c : corpora) {
    if (c->variety_id.empty()) throw DataError("variety_id must be non-empty");
    if (!seen.insert(c->variety_id).second) throw DataError("duplicate variety_id: " + c->variety_id);
  }
}

// Checks the per-sentence annotation invariants.
inline void validate_sentence(const Sentence& s, std::size_t line) {
  const std::size_t n = s.size();
  if (s.pos_tags && s.pos_tags->size() != n) throw ParseError(line, "pos tag count differs from word count");
  if (s.deprels && s.deprels->size() != n) throw ParseError(line, "deprel count differs from word count");
  if (s.heads) {
    if (s.heads->size() != n) throw ParseError(line, "head count differs from word count");
    for (std::size_t i = 0; i < n; ++i) {
      const int h = (*s.heads)[i];
      if (h < 0 || static_cast<std::size_t>(h) > n) {
        throw ParseError(line, "head " + std::to_string(h) + " out of range for word " + std::to_string(i + 1));
      }
      if (static_cast<std::size_t>(h) == i + 1) {
        throw ParseError(line, "word " + std::to_string(i + 1) + " is its own head");
      }
    }
  }
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

// Accumulates one annotation column; '_' is absent. A column must be either
// fully present or fully absent within a sentence.
struct ColumnState {
  std::vector<std::string> values;
  std::size_t present = 0;
  std::size_t absent = 0;

  void add(std::string_view v) {
    if (v == "_") {
      ++absent;
      values.emplace_back();
    } else {
      ++present;
      values.emplace_back(v);
    }
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Parses CoNLL-U text. Multiword range rows ("1-2") and empty nodes ("1.1")
/// are skipped; comment lines are ignored.
inline std::vector<Sentence> parse_conllu(std::string_view text) {
  std::vector<Sentence> out;
  Sentence cur;
  detail::ColumnState upos, deprel;
  std::vector<int> heads;
  std::size_t heads_present = 0, heads_absent = 0;
  std::size_t line_no = 0;
  std::size_t sentence_line = 0;

  auto flush = [&](std::size_t at_line) {
    if (cur.words.empty()) return;
    if (upos.present && upos.absent) throw ParseError(at_line, "UPOS column partially annotated");
    if (deprel.present && deprel.absent) throw ParseError(at_line, "DEPREL column partially annotated");
    if (heads_present && heads_absent) throw ParseError(at_line, "HEAD column partially annotated");
    if (upos.present) cur.pos_tags = std::move(upos.values);
    if (deprel.present) cur.deprels = std::move(deprel.values);
    if (heads_present) cur.heads = std::move(heads);
    cur.subword_tokens = cur.words;
    validate_sentence(cur, sentence_line);
    out.push_back(std::move(cur));
    cur = Sentence{};
    upos = {};
    deprel = {};
    heads.clear();
    heads_present = heads_absent = 0;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (pos == text.size()) break;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush(line_no);
      continue;
    }
    if (line.front() == '#') continue;

    const auto cols = detail::split_tabs(line);
    if (cols.size() != 10) {
      throw ParseError(line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    }
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    if (cur.words.empty()) sentence_line = line_no;

    cur.words.emplace_back(cols[1]);
    upos.add(cols[3]);
    deprel.add(cols[7]);
    if (cols[6] == "_") {
      ++heads_absent;
      heads.push_back(-1);
    } else {
      int h = 0;
      const std::string head_str(cols[6]);
      std::size_t used = 0;
      try {
        h = std::stoi(head_str, &used);
      } catch (const std::exception&) {
        throw ParseError(line_no, "non-integer head '" + head_str + "'");
      }
      if (used != head_str.size()) throw ParseError(line_no, "non-integer head '" + head_str + "'");
      ++heads_present;
      heads.push_back(h);
    }
  }
  flush(line_no + 1);
  return out;
}

inline std::vector<Sentence> read_conllu_file(const std::string& path) {
  return parse_conllu(detail::read_file(path));
}

/// Writes plain token rows (no ranges or empty nodes). Absent columns become '_'.
inline std::string write_conllu(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const Sentence& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += std::to_string(i + 1);
      out += '\t';
      out += s.words[i];
      out += "\t_\t";
      out += s.pos_tags ? (*s.pos_tags)[i] : "_";
      out += "\t_\t_\t";
      out += s.heads ? std::to_string((*s.heads)[i]) : "_";
      out += '\t';
      out += s.deprels ? (*s.deprels)[i] : "_";
      out += "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// VEMB: "VEMB", u32 version = 1, u32 d, u32 record_count, then per record
// u32 word_count, d x f32 cls_layer2, d x f32 cls_final, word_count x d x f32
// token vectors (row-major). Little-endian.

inline constexpr char kVembMagic[4] = {'V', 'E', 'M', 'B'};
inline constexpr std::uint32_t kVembVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
  }

  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (!has(n)) throw EmbeddingError(EmbeddingErrorKind::truncated, "unexpected end of data");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct VembFile {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;
};

inline std::string serialize_vemb(const VembFile& file) {
  std::string out(kVembMagic, 4);
  detail::put_u32(out, kVembVersion);
  detail::put_u32(out, file.dim);
  detail::put_u32(out, static_cast<std::uint32_t>(file.records.size()));
  for (const EmbeddingRecord& r : file.records) {
    if (r.cls_layer2.size() != file.dim || r.cls_final.size() != file.dim ||
        (r.token_vectors.rows() > 0 && r.token_vectors.cols() != file.dim)) {
      throw EmbeddingError(EmbeddingErrorKind::dimension, "record width differs from header d");
    }
    detail::put_u32(out, static_cast<std::uint32_t>(r.token_vectors.rows()));
    for (double x : r.cls_layer2) detail::put_f32(out, x);
    for (double x : r.cls_final) detail::put_f32(out, x);
    for (double x : r.token_vectors.data()) detail::put_f32(out, x);
  }
  return out;
}

inline VembFile deserialize_vemb(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kVembMagic, 4) != 0) {
    throw EmbeddingError(EmbeddingErrorKind::magic, "expected 'VEMB'");
  }
  detail::ByteReader rd(bytes.substr(4));
  const std::uint32_t version = rd.u32();
  if (version != kVembVersion) throw EmbeddingError(EmbeddingErrorKind::version, std::to_string(version));
  VembFile file;
  file.dim = rd.u32();
  const std::uint32_t count = rd.u32();
  if (count > 0 && (file.dim == 0 || file.dim % 2 != 0)) {
    throw EmbeddingError(EmbeddingErrorKind::dimension, "d must be positive and even, got " + std::to_string(file.dim));
  }
  file.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    const std::uint32_t words = rd.u32();
    r.cls_layer2.resize(file.dim);
    r.cls_final.resize(file.dim);
    for (auto& x : r.cls_layer2) x = rd.f32();
    for (auto& x : r.cls_final) x = rd.f32();
    r.token_vectors = Matrix(words, file.dim);
    for (auto& x : r.token_vectors.data()) x = rd.f32();
    file.records.push_back(std::move(r));
  }
  if (rd.remaining() != 0) {
    throw EmbeddingError(EmbeddingErrorKind::record_count, "trailing bytes after " + std::to_string(count) + " records");
  }
  return file;
}

inline void write_binary_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

inline VembFile to_vemb(const VarietyCorpus& corpus) {
  VembFile file;
  for (const Sentence& s : corpus.sentences) {
    if (!s.embedding) throw DataError("sentence without embedding in corpus " + corpus.variety_id);
    if (file.records.empty()) file.dim = static_cast<std::uint32_t>(s.embedding->dim());
    file.records.push_back(*s.embedding);
  }
  return file;
}

inline void write_embeddings(const std::string& path, const VarietyCorpus& corpus) {
  write_binary_file(path, serialize_vemb(to_vemb(corpus)));
}

/// Attaches the i-th VEMB record to the i-th sentence. Any cardinality
/// mismatch raises; `expected_dim` (when non-zero) pins d across corpora.
inline VarietyCorpus attach_embeddings(VarietyCorpus corpus, VembFile file, std::size_t expected_dim = 0) {
  if (file.records.size() != corpus.sentences.size()) {
    throw EmbeddingError(EmbeddingErrorKind::record_count,
                         std::to_string(file.records.size()) + " records for " +
                             std::to_string(corpus.sentences.size()) + " sentences");
  }
  if (expected_dim != 0 && !file.records.empty() && file.dim != expected_dim) {
    throw EmbeddingError(EmbeddingErrorKind::dimension,
                         "d=" + std::to_string(file.dim) + ", expected " + std::to_string(expected_dim));
  }
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    if (file.records[i].token_vectors.rows() != corpus.sentences[i].size()) {
      throw EmbeddingError(EmbeddingErrorKind::token_count,
                           "sentence " + std::to_string(i) + ": " +
                               std::to_string(file.records[i].token_vectors.rows()) + " vectors for " +
                               std::to_string(corpus.sentences[i].size()) + " words");
    }
  }
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    corpus.sentences[i].embedding = std::move(file.records[i]);
  }
  return corpus;
}

inline VarietyCorpus load_embeddings(const std::string& path, VarietyCorpus corpus, std::size_t expected_dim = 0) {
  std::string bytes;
  try {
    bytes = detail::read_file(path);
  } catch (const DataError& e) {
    throw EmbeddingError(EmbeddingErrorKind::io, e.what());
  }
  return attach_embeddings(std::move(corpus), deserialize_vemb(bytes), expected_dim);
}

// Sidecar: one line per sentence, subword tokens separated by spaces.
inline std::string write_token_sidecar(const VarietyCorpus& corpus) {
  std::string out;
  for (const Sentence& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.subword_tokens.size(); ++i) {
      if (i) out += ' ';
      out += s.subword_tokens[i];
    }
    out += '\n';
  }
  return out;
}

inline VarietyCorpus attach_token_sidecar(VarietyCorpus corpus, std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> toks;
    std::size_t p = 0;
    while (p < line.size()) {
      const std::size_t sp = line.find(' ', p);
      const std::size_t end = sp == std::string_view::npos ? line.size() : sp;
      if (end > p) toks.emplace_back(line.substr(p, end - p));
      p = end + 1;
    }
    lines.push_back(std::move(toks));
    pos = nl + 1;
  }
  if (lines.size() != corpus.sentences.size()) {
    throw DataError("token sidecar has " + std::to_string(lines.size()) + " lines for " +
                    std::to_string(corpus.sentences.size()) + " sentences");
  }
  for (std::size_t i = 0; i < lines.size(); ++i) corpus.sentences[i].subword_tokens = std::move(lines[i]);
  return corpus;
}

/// Distinct subword types across the corpus.
inline std::set<std::string> token_type_set(const VarietyCorpus& corpus) {
  std::set<std::string> types;
  for (const Sentence& s : corpus.sentences) types.insert(s.subword_tokens.begin(), s.subword_tokens.end());
  return types;
}

/// Loads a corpus from a CoNLL-U file plus optional VEMB and sidecar files.
inline VarietyCorpus load_corpus(const std::string& variety_id, const std::string& conllu_path,
                                 const std::string& vemb_path = {}, const std::string& tokens_path = {},
                                 Split split = Split::train, std::size_t expected_dim = 0) {
  VarietyCorpus c;
  c.variety_id = variety_id;
  c.split = split;
  c.sentences = read_conllu_file(conllu_path);
  if (!vemb_path.empty()) c = load_embeddings(vemb_path, std::move(c), expected_dim);
  if (!tokens_path.empty()) c = attach_token_sidecar(std::move(c), detail::read_file(tokens_path));
  return c;
}

}  // namespace lgen
