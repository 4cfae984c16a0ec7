#include "goalseq/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace goalseq {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'Q', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ValidationError("checkpoint truncated: " + path.string());
  }
  return v;
}

std::string get_string(std::istream& in, const std::filesystem::path& path) {
  const std::uint64_t n = get_u64(in, path);
  if (n > (1ULL << 30)) throw ValidationError("checkpoint corrupt: " + path.string());
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw ValidationError("checkpoint truncated: " + path.string());
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_u64(out, kVersion);
  put_u64(out, ckpt.meta.size());
  for (const auto& [k, v] : ckpt.meta) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u64(out, ckpt.tensors.size());
  for (const auto& t : ckpt.tensors.tensors()) {
    put_string(out, t.name);
    put_u64(out, static_cast<std::uint64_t>(t.value.rows()));
    put_u64(out, static_cast<std::uint64_t>(t.value.cols()));
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(t.value.size() * sizeof(double)));
  }
  if (!out) throw RuntimeFailure("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read checkpoint: " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError("not a checkpoint file: " + path.string());
  }
  if (get_u64(in, path) != kVersion) throw ValidationError("unsupported checkpoint version: " + path.string());
  Checkpoint ckpt;
  const std::uint64_t n_meta = get_u64(in, path);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in, path);
    ckpt.meta[k] = get_string(in, path);
  }
  const std::uint64_t n_tensors = get_u64(in, path);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = get_string(in, path);
    const std::uint64_t rows = get_u64(in, path);
    const std::uint64_t cols = get_u64(in, path);
    if (rows > (1ULL << 24) || cols > (1ULL << 24)) throw ValidationError("checkpoint corrupt: " + path.string());
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (m.size() && !in.read(reinterpret_cast<char*>(m.data()),
                             static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw ValidationError("checkpoint truncated: " + path.string());
    }
    ckpt.tensors.add(std::move(name), std::move(m));
  }
  return ckpt;
}

void add_prefixed(ParamSet& into, const ParamSet& from, const std::string& prefix) {
  for (const auto& t : from.tensors()) into.add(prefix + t.name, t.value);
}

ParamSet take_prefixed(const ParamSet& from, const std::string& prefix) {
  ParamSet out;
  for (const auto& t : from.tensors()) {
    if (t.name.rfind(prefix, 0) == 0) out.add(t.name.substr(prefix.size()), t.value);
  }
  return out;
}

}  // namespace goalseq
