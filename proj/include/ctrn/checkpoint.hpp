// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Versioned binary model container. All integers and the 64-bit float
// payloads are little-endian regardless of host; layout is documented in
// docs/formats.md.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ctrn/data.hpp"
#include "ctrn/error.hpp"
#include "ctrn/model.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

inline constexpr char kCheckpointMagic[8] = {'C', 'T', 'R', 'N',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CheckpointError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

inline std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw CheckpointError("truncated checkpoint");
  return s;
}

inline void put_tensor(std::ostream& out, const Tensor& t) {
  out.put(static_cast<char>(t.ndim()));
  for (std::size_t i = 0; i < t.ndim(); ++i) put_u64(out, t.extent(i));
  for (double v : t.data()) put_f64(out, v);
}

inline Tensor get_tensor(std::istream& in) {
  const int nd = in.get();
  if (nd < 1 || nd > 3) throw CheckpointError("bad tensor rank");
  std::vector<std::size_t> shape(static_cast<std::size_t>(nd));
  for (auto& e : shape) e = static_cast<std::size_t>(get_u64(in));
  Tensor t(shape);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = get_f64(in);
  return t;
}

}  // namespace detail

struct Checkpoint {
  std::string config_text;
  std::vector<std::string> vocab_tokens;  // ids 2.. in order
  Tensor embedding;                       // vocab_size x n
  std::size_t idf_docs = 0;
  std::vector<std::pair<std::string, double>> idf_entries;
  std::vector<std::string> stopwords;
  std::vector<std::pair<std::string, Tensor>> params;  // registry order
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_str(out, ckpt.config_text);
  detail::put_u64(out, ckpt.vocab_tokens.size());
  for (const auto& t : ckpt.vocab_tokens) detail::put_str(out, t);
  detail::put_tensor(out, ckpt.embedding);
  detail::put_u64(out, ckpt.idf_docs);
  detail::put_u64(out, ckpt.idf_entries.size());
  for (const auto& [tok, v] : ckpt.idf_entries) {
    detail::put_str(out, tok);
    detail::put_f64(out, v);
  }
  detail::put_u64(out, ckpt.stopwords.size());
  for (const auto& s : ckpt.stopwords) detail::put_str(out, s);
  detail::put_u64(out, ckpt.params.size());
  for (const auto& [name, tensor] : ckpt.params) {
    detail::put_str(out, name);
    detail::put_tensor(out, tensor);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw CheckpointError("not a ctrn checkpoint: " + path);
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_text = detail::get_str(in);
  const std::uint64_t nvocab = detail::get_u64(in);
  ckpt.vocab_tokens.reserve(nvocab);
  for (std::uint64_t i = 0; i < nvocab; ++i) {
    ckpt.vocab_tokens.push_back(detail::get_str(in));
  }
  ckpt.embedding = detail::get_tensor(in);
  ckpt.idf_docs = static_cast<std::size_t>(detail::get_u64(in));
  const std::uint64_t nidf = detail::get_u64(in);
  for (std::uint64_t i = 0; i < nidf; ++i) {
    std::string tok = detail::get_str(in);
    const double v = detail::get_f64(in);
    ckpt.idf_entries.emplace_back(std::move(tok), v);
  }
  const std::uint64_t nstop = detail::get_u64(in);
  for (std::uint64_t i = 0; i < nstop; ++i) {
    ckpt.stopwords.push_back(detail::get_str(in));
  }
  const std::uint64_t nparams = detail::get_u64(in);
  for (std::uint64_t i = 0; i < nparams; ++i) {
    std::string name = detail::get_str(in);
    Tensor t = detail::get_tensor(in);
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

// Collects everything needed to rebuild the model and score new data.
inline Checkpoint make_checkpoint(const RankingModel& model,
                                  const std::string& config_text,
                                  const Vocabulary& vocab, const IdfTable& idf,
                                  const Stopwords& stopwords) {
  Checkpoint ckpt;
  ckpt.config_text = config_text;
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    ckpt.vocab_tokens.push_back(vocab.token(id));
  }
  ckpt.embedding = model.table().values;
  ckpt.idf_docs = idf.n_docs;
  ckpt.idf_entries.assign(idf.idf.begin(), idf.idf.end());
  std::sort(ckpt.idf_entries.begin(), ckpt.idf_entries.end());
  ckpt.stopwords.assign(stopwords.begin(), stopwords.end());
  std::sort(ckpt.stopwords.begin(), ckpt.stopwords.end());
  for (const ParamEntry& e : model.params().entries()) {
    ckpt.params.emplace_back(e.name, e.node->value);
  }
  return ckpt;
}

// Loads checkpoint parameters into a freshly constructed model; names and
// shapes must match the registry exactly.
inline void restore_params(RankingModel& model, const Checkpoint& ckpt) {
  const auto& entries = model.params().entries();
  if (entries.size() != ckpt.params.size()) {
    throw CheckpointError("checkpoint parameter count mismatch");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != ckpt.params[i].first ||
        !entries[i].node->value.same_shape(ckpt.params[i].second)) {
      throw CheckpointError("checkpoint parameter mismatch at " +
                            ckpt.params[i].first);
    }
    entries[i].node->value = ckpt.params[i].second;
  }
}

}  // namespace ctrn
