#include "goalseq/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>

namespace goalseq {

BleuConfig BleuConfig::uniform(int n) {
  if (n < 1) throw ValidationError("BLEU order must be >= 1");
  return BleuConfig{n, std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
}

void BleuConfig::validate() const {
  if (max_n < 1) throw ValidationError("BLEU order must be >= 1");
  if (weights.size() != static_cast<std::size_t>(max_n)) {
    throw ValidationError("BLEU weights must have max_n entries");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("BLEU weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("BLEU weights must sum to 1");
}

std::size_t NgramHash::operator()(const std::vector<int>& key) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ key.size();
  for (int v : key) h = mix_seed(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
  return static_cast<std::size_t>(h);
}

NgramCounts count_ngrams(std::span<const int> ids, int n) {
  NgramCounts counts;
  if (n < 1 || ids.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ids.size(); ++i) {
    ++counts[std::vector<int>(ids.begin() + static_cast<std::ptrdiff_t>(i),
                              ids.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return counts;
}

BleuReferences::BleuReferences(const std::vector<std::vector<int>>& references, int max_n)
    : max_counts_(static_cast<std::size_t>(std::max(max_n, 0))), count_(references.size()) {
  if (max_n < 1) throw ValidationError("BLEU order must be >= 1");
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");
  for (const auto& ref : references) {
    for (int n = 1; n <= max_n; ++n) {
      auto& best = max_counts_[static_cast<std::size_t>(n - 1)];
      for (const auto& [gram, c] : count_ngrams(ref, n)) {
        int& slot = best[gram];
        slot = std::max(slot, c);
      }
    }
  }
}

int BleuReferences::clipped_matches(const NgramCounts& candidate, int n) const {
  if (n < 1 || n > max_n()) throw ValidationError("BLEU order exceeds the reference index");
  const auto& best = max_counts_[static_cast<std::size_t>(n - 1)];
  int matched = 0;
  for (const auto& [gram, c] : candidate) {
    auto it = best.find(gram);
    if (it != best.end()) matched += std::min(c, it->second);
  }
  return matched;
}

BleuResult bleu_n(std::span<const int> candidate, const BleuReferences& refs, const BleuConfig& cfg) {
  cfg.validate();
  if (cfg.max_n > refs.max_n()) throw ValidationError("BLEU order exceeds the reference index");
  if (candidate.empty()) return {0.0, true};
  double log_score = 0.0;
  for (int n = 1; n <= cfg.max_n; ++n) {
    const auto counts = count_ngrams(candidate, n);
    const long total = static_cast<long>(candidate.size()) - n + 1;
    if (total <= 0) return {0.0, false};
    const int matched = refs.clipped_matches(counts, n);
    if (matched == 0) return {0.0, false};
    const double w = cfg.weights[static_cast<std::size_t>(n - 1)];
    log_score += w * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  return {std::exp(log_score), false};
}

std::vector<std::vector<int>> intern_tokens(const std::vector<std::vector<std::string>>& a,
                                            const std::vector<std::vector<std::string>>& b,
                                            std::vector<std::vector<int>>& b_ids) {
  std::map<std::string, int> ids;
  auto convert = [&](const std::vector<std::vector<std::string>>& in) {
    std::vector<std::vector<int>> out;
    out.reserve(in.size());
    for (const auto& s : in) {
      std::vector<int> row;
      row.reserve(s.size());
      for (const auto& tok : s) row.push_back(ids.emplace(tok, static_cast<int>(ids.size())).first->second);
      out.push_back(std::move(row));
    }
    return out;
  };
  auto a_ids = convert(a);
  b_ids = convert(b);
  return a_ids;
}

BleuResult bleu_n(std::span<const std::string> candidate,
                  const std::vector<std::vector<std::string>>& references, const BleuConfig& cfg) {
  std::vector<std::vector<int>> ref_ids;
  const std::vector<std::vector<std::string>> cand{{candidate.begin(), candidate.end()}};
  const auto cand_ids = intern_tokens(cand, references, ref_ids);
  return bleu_n(cand_ids[0], BleuReferences(ref_ids, cfg.max_n), cfg);
}

std::vector<double> batch_bleu_serial(const std::vector<std::vector<int>>& samples,
                                      const BleuReferences& refs, const BleuConfig& cfg) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = bleu_n(samples[i], refs, cfg).value;
  return out;
}

std::vector<double> batch_bleu(const std::vector<std::vector<int>>& samples,
                               const BleuReferences& refs, const BleuConfig& cfg) {
  cfg.validate();
  std::vector<double> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  const auto n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    try {
      out[si] = bleu_n(samples[si], refs, cfg).value;
    } catch (...) {
      errors[si] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double corpus_bleu_percent(const std::vector<std::vector<int>>& samples,
                           const std::vector<std::vector<int>>& references, int n) {
  if (samples.empty()) throw ValidationError("corpus BLEU needs at least one sample");
  const BleuReferences refs(references, n);
  const auto scores = batch_bleu(samples, refs, BleuConfig::uniform(n));
  double sum = 0.0;
  for (double s : scores) sum += s;
  return 100.0 * sum / static_cast<double>(scores.size());
}

double corpus_bleu_percent(const std::vector<std::vector<std::string>>& samples,
                           const std::vector<std::vector<std::string>>& references, int n) {
  std::vector<std::vector<int>> ref_ids;
  const auto sample_ids = intern_tokens(samples, references, ref_ids);
  return corpus_bleu_percent(sample_ids, ref_ids, n);
}

// ---------------------------------------------------------------------------

namespace {

double angle_between(double ax, double ay, double bx, double by) {
  const double na = std::hypot(ax, ay);
  const double nb = std::hypot(bx, by);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

EngagementGeometry engagement_geometry(const AircraftState& attacker, const AircraftState& target) {
  const double lx = attacker.x - target.x;  // target -> attacker
  const double ly = attacker.y - target.y;
  EngagementGeometry g;
  g.range = std::hypot(lx, ly);
  if (g.range == 0.0) return g;
  const double th = target.heading_deg * std::numbers::pi / 180.0;
  const double ah = attacker.heading_deg * std::numbers::pi / 180.0;
  g.aspect = angle_between(-std::cos(th), -std::sin(th), lx, ly);
  g.antenna_train = angle_between(std::cos(ah), std::sin(ah), -lx, -ly);
  return g;
}

void McGrewParams::validate() const {
  if (!(desired_range > 0.0)) throw ValidationError("McGrew desired_range must be > 0");
  if (!(range_scale > 0.0)) throw ValidationError("McGrew range_scale must be > 0");
  if (!(angle_weight >= 0.0 && angle_weight <= 1.0)) {
    throw ValidationError("McGrew angle_weight must be in [0, 1]");
  }
}

double mcgrew_step(const AircraftState& blue, const AircraftState& red, const McGrewParams& params) {
  const EngagementGeometry g = engagement_geometry(blue, red);
  const double s_angle = 0.5 * ((1.0 - g.aspect / 180.0) + (1.0 - g.antenna_train / 180.0));
  const double s_range =
      std::exp(-std::abs(g.range - params.desired_range) / (params.range_scale * params.desired_range));
  return params.angle_weight * s_angle + (1.0 - params.angle_weight) * s_range;
}

McGrewTrace trajectory_mcgrew(const TrajectoryRecord& record, const McGrewParams& params) {
  params.validate();
  const int steps = record.steps();
  if (steps < 1 || record.red.steps() != steps || record.blue.features() <= kHeading ||
      record.red.features() <= kHeading) {
    throw ValidationError("trajectory_mcgrew: malformed record");
  }
  McGrewTrace tr;
  tr.step_scores.resize(static_cast<std::size_t>(steps));
  double sum = 0.0;
  for (int t = 0; t < steps; ++t) {
    const AircraftState b{record.blue.values(t, kX), record.blue.values(t, kY), record.blue.values(t, kHeading)};
    const AircraftState r{record.red.values(t, kX), record.red.values(t, kY), record.red.values(t, kHeading)};
    const double s = mcgrew_step(b, r, params);
    tr.step_scores[static_cast<std::size_t>(t)] = s;
    sum += s;
  }
  tr.mean = sum / steps;
  tr.reported = 10.0 * tr.mean;
  return tr;
}

std::vector<double> batch_mcgrew_serial(const std::vector<TrajectoryRecord>& records,
                                        const McGrewParams& params) {
  std::vector<double> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = trajectory_mcgrew(records[i], params).mean;
  return out;
}

std::vector<double> batch_mcgrew(const std::vector<TrajectoryRecord>& records, const McGrewParams& params) {
  params.validate();
  std::vector<double> out(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  const auto n = static_cast<long>(records.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto ri = static_cast<std::size_t>(i);
    try {
      out[ri] = trajectory_mcgrew(records[ri], params).mean;
    } catch (...) {
      errors[ri] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace goalseq
