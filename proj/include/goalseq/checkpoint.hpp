#pragma once

#include "goalseq/nn.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace goalseq {

/// Flat container of string metadata and named tensors. Tensor values are
/// stored as raw IEEE doubles, so a save/load round trip is bit-exact.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParamSet tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws ValidationError on a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every tensor of `from` into `into` under `prefix` + name.
void add_prefixed(ParamSet& into, const ParamSet& from, const std::string& prefix);
/// Tensors of `from` whose names start with `prefix`, prefix stripped, in stored order.
ParamSet take_prefixed(const ParamSet& from, const std::string& prefix);

}  // namespace goalseq
