#include "goalseq/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace goalseq {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
  // 53-bit mantissa, shifted off zero.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gumbel() { return -std::log(-std::log(uniform())); }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ValidationError("Rng::index: empty range");
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3 || tokens_[0] != kPadToken || tokens_[1] != kStartToken ||
      tokens_[2] != kUnkToken) {
    throw ValidationError("vocabulary must begin with <pad>, <start>, <unk>");
  }
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ValidationError("duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id() : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("token id " + std::to_string(id) + " outside [0, " +
                          std::to_string(size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read vocabulary: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int max_size) {
  if (corpus.empty()) throw ValidationError("build_vocab: empty corpus");
  if (max_size < 1) throw ValidationError("build_vocab: max_size must be >= 1");

  std::map<std::string, long> freq;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      if (tok == kPadToken || tok == kStartToken || tok == kUnkToken) continue;
      ++freq[tok];
    }
  }
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens{kPadToken, kStartToken, kUnkToken};
  const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(max_size - 1));
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(std::move(tokens));
}

TokenSequence encode(std::span<const std::string> sentence, const Vocabulary& vocab, int max_len) {
  if (max_len < 1) throw ValidationError("encode: sequence length must be >= 1");
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), vocab.pad_id());
  const int n = std::min<int>(max_len, static_cast<int>(sentence.size()));
  for (int i = 0; i < n; ++i) {
    int id = vocab.id(sentence[i]);
    if (id == vocab.pad_id() || id == vocab.start_id()) id = vocab.unk_id();
    seq.ids[static_cast<std::size_t>(i)] = id;
  }
  seq.true_length = n;
  return seq;
}

std::vector<std::string> decode(std::span<const int> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == vocab.pad_id()) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
  return decode(std::span<const int>(seq.ids), vocab);
}

void validate(const TokenSequence& seq, const Vocabulary& vocab) {
  if (seq.true_length < 0 || seq.true_length > seq.length()) {
    throw ValidationError("true_length outside [0, T]");
  }
  for (int i = 0; i < seq.length(); ++i) {
    const int id = seq.ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= vocab.size()) {
      throw ValidationError("token id " + std::to_string(id) + " out of range at position " +
                            std::to_string(i));
    }
    if ((i >= seq.true_length) != (id == vocab.pad_id())) {
      throw ValidationError("pad placement inconsistent with true_length at position " +
                            std::to_string(i));
    }
  }
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace goalseq
