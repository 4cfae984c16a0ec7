#pragma once

#include "goalseq/core.hpp"
#include "goalseq/datasets.hpp"

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace goalseq {

// ---------------------------------------------------------------------------
// BLEU without brevity penalty: prod_n precision_n^{w_n}, 0 if any precision is 0.
// A candidate shorter than n has precision_n = 0.

struct BleuConfig {
  int max_n = 4;
  std::vector<double> weights;  // max_n entries, >= 0, sum 1

  static BleuConfig uniform(int n);
  void validate() const;
};

struct BleuResult {
  double value = 0.0;
  bool empty_candidate = false;  // value is 0 and the input was empty
};

struct NgramHash {
  std::size_t operator()(const std::vector<int>& key) const noexcept;
};
using NgramCounts = std::unordered_map<std::vector<int>, int, NgramHash>;

/// n-gram counts of `ids` for one order n.
NgramCounts count_ngrams(std::span<const int> ids, int n);

/// Per-order maximum reference counts, precomputed once for a reference set.
class BleuReferences {
 public:
  BleuReferences(const std::vector<std::vector<int>>& references, int max_n);
  int max_n() const { return static_cast<int>(max_counts_.size()); }
  std::size_t size() const { return count_; }
  /// Clipped matches of the candidate's order-n n-grams.
  int clipped_matches(const NgramCounts& candidate, int n) const;

 private:
  std::vector<NgramCounts> max_counts_;  // index n - 1
  std::size_t count_ = 0;
};

BleuResult bleu_n(std::span<const int> candidate, const BleuReferences& refs, const BleuConfig& cfg);
BleuResult bleu_n(std::span<const std::string> candidate,
                  const std::vector<std::vector<std::string>>& references, const BleuConfig& cfg);

/// 100 * mean over samples of uniform-weight BLEU-n against the whole reference set.
double corpus_bleu_percent(const std::vector<std::vector<int>>& samples,
                           const std::vector<std::vector<int>>& references, int n);
double corpus_bleu_percent(const std::vector<std::vector<std::string>>& samples,
                           const std::vector<std::vector<std::string>>& references, int n);

/// Per-sample BLEU values. Parallel over samples; order matches input.
std::vector<double> batch_bleu(const std::vector<std::vector<int>>& samples,
                               const BleuReferences& refs, const BleuConfig& cfg);
std::vector<double> batch_bleu_serial(const std::vector<std::vector<int>>& samples,
                                      const BleuReferences& refs, const BleuConfig& cfg);

/// Maps string tokens to dense ids shared between samples and references.
std::vector<std::vector<int>> intern_tokens(const std::vector<std::vector<std::string>>& a,
                                            const std::vector<std::vector<std::string>>& b,
                                            std::vector<std::vector<int>>& b_ids);

// ---------------------------------------------------------------------------
// Engagement geometry and the McGrew-style positional score.

struct AircraftState {
  double x = 0.0;
  double y = 0.0;
  double heading_deg = 0.0;  // counter-clockwise from +x
};

struct EngagementGeometry {
  double aspect = 0.0;         // at the target, tail direction vs line of sight to the attacker, [0, 180]
  double antenna_train = 0.0;  // at the attacker, nose vs line of sight to the target, [0, 180]
  double range = 0.0;
};

/// Coincident positions give all zeros.
EngagementGeometry engagement_geometry(const AircraftState& attacker, const AircraftState& target);

struct McGrewParams {
  double desired_range = 500.0;
  double range_scale = 5.0;
  double angle_weight = 0.5;

  void validate() const;
};

/// w * S_A + (1 - w) * S_R, in [0, 1].
double mcgrew_step(const AircraftState& blue, const AircraftState& red, const McGrewParams& params);

struct McGrewTrace {
  std::vector<double> step_scores;
  double mean = 0.0;      // mean step score
  double reported = 0.0;  // 10 * mean, i.e. the step sum scaled by 10 / T
};

McGrewTrace trajectory_mcgrew(const TrajectoryRecord& record, const McGrewParams& params);

/// Mean step score per record. Parallel over records; order matches input.
std::vector<double> batch_mcgrew(const std::vector<TrajectoryRecord>& records, const McGrewParams& params);
std::vector<double> batch_mcgrew_serial(const std::vector<TrajectoryRecord>& records,
                                        const McGrewParams& params);

}  // namespace goalseq
