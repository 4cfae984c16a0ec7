#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace goalseq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bad input: malformed files, out-of-range ids, inconsistent shapes.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training or evaluation failed after inputs were accepted (non-finite loss, etc).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; used to derive per-lane seeds from (seed, a, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();            // (0, 1), never exactly 0
  double normal();             // standard normal
  double gumbel();             // standard Gumbel
  std::size_t index(std::size_t n);  // uniform in [0, n)
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kStartToken = "<start>";
inline constexpr const char* kUnkToken = "<unk>";

class Vocabulary {
 public:
  Vocabulary() = default;
  /// `tokens` must start with the pad, start and unk specials in that order.
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int pad_id() const { return 0; }
  int start_id() const { return 1; }
  int unk_id() const { return 2; }

  /// Unknown tokens map to unk_id().
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Frequency-ordered vocabulary, ties broken lexicographically.
/// `max_size` bounds the non-structural entries (unk included); pad and start come on top.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int max_size);

struct TokenSequence {
  std::vector<int> ids;  // exactly T entries
  int true_length = 0;

  int length() const { return static_cast<int>(ids.size()); }
};

/// T x F feature matrix.
struct RealSequence {
  Matrix values;

  int steps() const { return static_cast<int>(values.rows()); }
  int features() const { return static_cast<int>(values.cols()); }
};

TokenSequence encode(std::span<const std::string> sentence, const Vocabulary& vocab, int max_len);
/// Stops at the first pad; ids past it are ignored.
std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab);
std::vector<std::string> decode(std::span<const int> ids, const Vocabulary& vocab);

/// Throws ValidationError if an id is out of range or a pad region is not trailing.
void validate(const TokenSequence& seq, const Vocabulary& vocab);

std::vector<std::string> split_whitespace(const std::string& line);
std::string join_tokens(std::span<const std::string> tokens);

}  // namespace goalseq
