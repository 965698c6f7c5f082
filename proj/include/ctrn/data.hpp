// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Corpus ingestion: tokenization, vocabulary, embedding files, TSV datasets
// grouped by query, negative sampling, and padded/masked batching. File
// formats are documented in docs/formats.md.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctrn/encoder.hpp"
#include "ctrn/error.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

// Lowercase, split on whitespace and ASCII punctuation. Bytes >= 0x80 are
// treated as word characters so UTF-8 text stays intact.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    const bool word = std::isalnum(c) || c >= 0x80;
    if (word) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Token <-> id map. Id 0 is PAD, 1 is OOV; real tokens start at 2, ordered
// by corpus frequency (ties lexicographic). Frozen after build.
class Vocabulary {
 public:
  Vocabulary() : id_to_token_{"<pad>", "<oov>"} {
    // PAD/OOV markers are not looked up by text; real tokens start at 2.
  }

  static Vocabulary build(const std::vector<std::vector<std::string>>& texts) {
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& toks : texts) {
      for (const auto& t : toks) ++freq[t];
    }
    std::vector<std::pair<std::string, std::size_t>> order(freq.begin(),
                                                           freq.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, n] : order) {
      (void)n;
      v.token_to_id_.emplace(tok, v.id_to_token_.size());
      v.id_to_token_.push_back(tok);
    }
    return v;
  }

  // Rebuilds a vocabulary from its dumped token list (ids 2..), e.g. from a
  // checkpoint. Order is the id assignment.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    for (const auto& tok : tokens) {
      v.token_to_id_.emplace(tok, v.id_to_token_.size());
      v.id_to_token_.push_back(tok);
    }
    return v;
  }

  std::size_t size() const { return id_to_token_.size(); }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kOovId : static_cast<int>(it->second);
  }

  const std::string& token(std::size_t id) const {
    if (id >= id_to_token_.size()) throw VocabError("token id out of range");
    return id_to_token_[id];
  }

  bool contains(const std::string& token) const {
    return token_to_id_.count(token) != 0;
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

 private:
  std::unordered_map<std::string, std::size_t> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct QAInstance {
  std::string query_id;
  std::vector<std::string> question;
  std::vector<std::string> answer;
  int label = 0;
};

struct LengthFilter {
  std::size_t min_tokens;
  std::size_t max_tokens;
};

// One instance per line: query_id <TAB> label <TAB> question <TAB> answer.
inline std::vector<QAInstance> read_tsv(
    const std::string& path,
    std::optional<LengthFilter> filter = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<QAInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    QAInstance inst;
    inst.query_id = fields[0];
    if (fields[1] != "0" && fields[1] != "1") {
      throw LabelError("line " + std::to_string(lineno) +
                       ": label must be 0 or 1");
    }
    inst.label = fields[1] == "1" ? 1 : 0;
    inst.question = tokenize(fields[2]);
    inst.answer = tokenize(fields[3]);
    if (inst.question.empty() || inst.answer.empty()) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": empty question or answer after tokenization");
    }
    if (filter) {
      const auto in_range = [&](std::size_t n) {
        return n >= filter->min_tokens && n <= filter->max_tokens;
      };
      if (!in_range(inst.question.size()) || !in_range(inst.answer.size())) {
        continue;
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

// Text embeddings, one token per line: token then `dim` decimal values.
// Vocab tokens missing from the file (including OOV) get seeded uniform
// +-0.25/sqrt(dim); PAD stays zero; the table is fixed (never trained).
inline EmbeddingTable load_embeddings(const std::string& path, std::size_t dim,
                                      const Vocabulary& vocab,
                                      std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings: " + path);
  std::unordered_map<std::string, std::vector<double>> file_vecs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.size() != dim) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(dim) + " values, got " +
                       std::to_string(vals.size()));
    }
    file_vecs[tok] = std::move(vals);
  }

  EmbeddingTable table;
  table.values = Tensor({vocab.size(), dim});
  Rng rng(seed);
  const double bound = 0.25 / std::sqrt(static_cast<double>(dim));
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    auto it = file_vecs.find(vocab.token(id));
    if (it != file_vecs.end()) {
      for (std::size_t j = 0; j < dim; ++j) table.values(id, j) = it->second[j];
    } else {
      for (std::size_t j = 0; j < dim; ++j) {
        table.values(id, j) = rng.uniform(-bound, bound);
      }
    }
  }
  return table;
}

// Seeded random table for corpora without pretrained vectors. The default
// bound is the same init law as the missing-token path of load_embeddings;
// pass a larger bound for pretrained-scale vectors (GloVe-like tables have
// per-dimension spread near 0.4).
inline EmbeddingTable random_embeddings(const Vocabulary& vocab,
                                        std::size_t dim, std::uint64_t seed,
                                        double bound = 0.0) {
  EmbeddingTable table;
  table.values = Tensor({vocab.size(), dim});
  Rng rng(seed);
  if (bound <= 0.0) bound = 0.25 / std::sqrt(static_cast<double>(dim));
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    for (std::size_t j = 0; j < dim; ++j) {
      table.values(id, j) = rng.uniform(-bound, bound);
    }
  }
  return table;
}

// Augments each query that has positives with `count` label-0 instances
// whose answers are drawn from other queries' answers. Draws are without
// replacement unless the pool is too small (then a warning is emitted and
// draws repeat).
inline std::vector<QAInstance> sample_negatives(
    const std::vector<QAInstance>& positives, std::uint64_t seed,
    std::size_t count = 4, std::ostream* warn = nullptr) {
  std::vector<QAInstance> out = positives;
  if (count == 0) return out;
  Rng rng(seed);
  for (const QAInstance& pos : positives) {
    if (pos.label != 1) continue;
    std::vector<const QAInstance*> pool;
    for (const QAInstance& other : positives) {
      if (other.query_id != pos.query_id) pool.push_back(&other);
    }
    if (pool.empty()) continue;
    const bool with_replacement = pool.size() < count;
    if (with_replacement && warn) {
      *warn << "warning: negative pool smaller than requested count for query "
            << pos.query_id << "; sampling with replacement\n";
    }
    std::vector<std::size_t> chosen;
    while (chosen.size() < count) {
      std::size_t pick = rng.index(pool.size());
      if (!with_replacement &&
          std::find(chosen.begin(), chosen.end(), pick) != chosen.end()) {
        continue;
      }
      chosen.push_back(pick);
    }
    for (std::size_t pick : chosen) {
      QAInstance neg;
      neg.query_id = pos.query_id;
      neg.question = pos.question;
      neg.answer = pool[pick]->answer;
      neg.label = 0;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

// Padded id matrices for a batch of pairs. Masks are true exactly for real
// steps; padded cells hold the PAD id. `instance_index` keeps provenance so
// batches can be mapped back to instances.
struct SequenceBatch {
  std::size_t size = 0;
  std::size_t q_cols = 0;
  std::size_t a_cols = 0;
  std::vector<int> q_ids;
  std::vector<int> a_ids;
  std::vector<std::size_t> q_len;
  std::vector<std::size_t> a_len;
  std::vector<std::uint8_t> q_mask;
  std::vector<std::uint8_t> a_mask;
  std::vector<int> labels;
  std::vector<std::size_t> instance_index;

  std::vector<int> q_row(std::size_t i) const {
    return {q_ids.begin() + static_cast<std::ptrdiff_t>(i * q_cols),
            q_ids.begin() + static_cast<std::ptrdiff_t>((i + 1) * q_cols)};
  }
  std::vector<int> a_row(std::size_t i) const {
    return {a_ids.begin() + static_cast<std::ptrdiff_t>(i * a_cols),
            a_ids.begin() + static_cast<std::ptrdiff_t>((i + 1) * a_cols)};
  }
  std::vector<std::uint8_t> q_mask_row(std::size_t i) const {
    return {q_mask.begin() + static_cast<std::ptrdiff_t>(i * q_cols),
            q_mask.begin() + static_cast<std::ptrdiff_t>((i + 1) * q_cols)};
  }
  std::vector<std::uint8_t> a_mask_row(std::size_t i) const {
    return {a_mask.begin() + static_cast<std::ptrdiff_t>(i * a_cols),
            a_mask.begin() + static_cast<std::ptrdiff_t>((i + 1) * a_cols)};
  }
};

inline std::vector<SequenceBatch> make_batches(
    const std::vector<QAInstance>& instances, const Vocabulary& vocab,
    std::size_t batch_size, std::uint64_t seed, bool shuffle = true) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(order);
  }
  std::vector<SequenceBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    SequenceBatch b;
    b.size = end - start;
    for (std::size_t i = start; i < end; ++i) {
      const QAInstance& inst = instances[order[i]];
      b.q_cols = std::max(b.q_cols, inst.question.size());
      b.a_cols = std::max(b.a_cols, inst.answer.size());
    }
    b.q_ids.assign(b.size * b.q_cols, kPadId);
    b.a_ids.assign(b.size * b.a_cols, kPadId);
    b.q_mask.assign(b.size * b.q_cols, 0);
    b.a_mask.assign(b.size * b.a_cols, 0);
    for (std::size_t r = 0; r < b.size; ++r) {
      const QAInstance& inst = instances[order[start + r]];
      const std::vector<int> q = vocab.encode(inst.question);
      const std::vector<int> a = vocab.encode(inst.answer);
      for (std::size_t t = 0; t < q.size(); ++t) {
        b.q_ids[r * b.q_cols + t] = q[t];
        b.q_mask[r * b.q_cols + t] = 1;
      }
      for (std::size_t t = 0; t < a.size(); ++t) {
        b.a_ids[r * b.a_cols + t] = a[t];
        b.a_mask[r * b.a_cols + t] = 1;
      }
      b.q_len.push_back(q.size());
      b.a_len.push_back(a.size());
      b.labels.push_back(inst.label);
      b.instance_index.push_back(order[start + r]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

using Stopwords = std::unordered_set<std::string>;

inline Stopwords load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword list: " + path);
  Stopwords out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

// Inverse document frequencies over the training corpus. Documents are each
// distinct question (by query_id) plus every answer; idf = ln(N/df), and a
// token outside the table falls back to ln(N).
struct IdfTable {
  std::unordered_map<std::string, double> idf;
  std::size_t n_docs = 0;

  double value(const std::string& token) const {
    auto it = idf.find(token);
    if (it != idf.end()) return it->second;
    return std::log(static_cast<double>(std::max<std::size_t>(n_docs, 1)));
  }
};

inline IdfTable compute_idf(const std::vector<QAInstance>& instances) {
  IdfTable table;
  std::unordered_map<std::string, std::size_t> df;
  std::unordered_set<std::string> seen_queries;
  const auto add_doc = [&](const std::vector<std::string>& tokens) {
    std::unordered_set<std::string> uniq(tokens.begin(), tokens.end());
    for (const auto& t : uniq) ++df[t];
    ++table.n_docs;
  };
  for (const QAInstance& inst : instances) {
    if (seen_queries.insert(inst.query_id).second) add_doc(inst.question);
    add_doc(inst.answer);
  }
  for (const auto& [tok, count] : df) {
    table.idf[tok] = std::log(static_cast<double>(table.n_docs) /
                              static_cast<double>(count));
  }
  return table;
}

// Keyword-matching toy corpus: each query carries one keyword from a shared
// pool, planted in both the question and its positive answer; `negatives`
// answers are sampled from queries with a different keyword, so the label is
// exactly keyword co-occurrence. `keyword_pool` = 0 picks roughly one pool
// entry per dozen queries so every keyword recurs across the corpus.
inline std::vector<QAInstance> synthetic_corpus(std::size_t n_queries,
                                                std::size_t negatives,
                                                std::uint64_t seed,
                                                std::size_t keyword_pool = 0) {
  if (keyword_pool == 0) {
    keyword_pool = std::max<std::size_t>(2, n_queries / 12);
  }
  Rng rng(seed);
  struct Entry {
    std::string kw;
    std::vector<std::string> question;
    std::vector<std::string> answer;
  };
  std::vector<Entry> queries;
  queries.reserve(n_queries);
  for (std::size_t q = 0; q < n_queries; ++q) {
    Entry e;
    e.kw = "kw" + std::to_string(q % keyword_pool);
    e.question = {"find", e.kw, "now"};
    e.answer = {"has", e.kw, "inside"};
    queries.push_back(std::move(e));
  }
  std::vector<QAInstance> out;
  out.reserve(n_queries * (1 + negatives));
  for (std::size_t q = 0; q < n_queries; ++q) {
    QAInstance pos;
    pos.query_id = "q" + std::to_string(q);
    pos.question = queries[q].question;
    pos.answer = queries[q].answer;
    pos.label = 1;
    out.push_back(pos);
    std::size_t added = 0;
    while (added < negatives) {
      const std::size_t r = rng.index(n_queries);
      if (queries[r].kw == queries[q].kw) continue;
      QAInstance neg;
      neg.query_id = pos.query_id;
      neg.question = pos.question;
      neg.answer = queries[r].answer;
      neg.label = 0;
      out.push_back(std::move(neg));
      ++added;
    }
  }
  return out;
}

}  // namespace ctrn
