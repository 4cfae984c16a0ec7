#pragma once

#include "goalseq/core.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace goalseq {

// ---------------------------------------------------------------------------
// Text

/// One whitespace-tokenized sentence per non-blank line, in file order.
/// Throws ValidationError for an unreadable or empty file.
std::vector<std::vector<std::string>> read_sentences(const std::filesystem::path& path);

std::vector<TokenSequence> load_text_corpus(const std::filesystem::path& path,
                                            const Vocabulary& vocab, int max_len);

/// Seeded toy grammar: det [adj] noun verb [det [adj] noun] [prep det [adj] noun].
/// Sentences are at most 11 tokens over a 29-word vocabulary.
std::vector<std::string> synth_grammar_corpus(int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trajectories

inline constexpr int kFeaturesPerFighter = 16;
inline constexpr int kDefaultTrajectorySteps = 40;

/// Per-fighter feature columns. Angles in degrees, headings counter-clockwise from +x.
enum Feature : int {
  kX = 0,
  kY = 1,
  kHeading = 2,
  kSpeed = 3,
  kTurnRate = 4,
  kRange = 5,
  kBearing = 6,   // line of sight to the other fighter relative to own heading, (-180, 180]
  kAspect = 7,    // aspect angle of the other fighter as seen from it
  kAntennaTrain = 8,
};

struct TrajectoryRecord {
  RealSequence blue;  // T x 16
  RealSequence red;   // T x 16
  double dt = 1.0;

  int steps() const { return blue.steps(); }
};

/// Header names for the 32 CSV columns: blue_* then red_*.
std::vector<std::string> trajectory_columns();

/// Rows of `kDefaultTrajectorySteps` (or `steps`) per trajectory, header first.
/// Errors name the offending trajectory index.
std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path,
                                                int steps = kDefaultTrajectorySteps,
                                                double dt = 1.0);
void write_trajectories(const std::filesystem::path& path,
                        const std::vector<TrajectoryRecord>& records);

/// T x 32 block [blue | red] and back.
Matrix joint_features(const TrajectoryRecord& record);
TrajectoryRecord split_features(const Matrix& joint, double dt);

struct SternConversionParams {
  double red_speed = 100.0;    // units/s
  double blue_speed = 160.0;   // units/s
  std::array<double, 2> initial_offset{0.0, 2500.0};  // blue minus red at t = 0
  double turn_rate = 9.0;      // deg/s
  double noise_std = 5.0;      // positional noise, units
  std::uint64_t seed = 0;
  int steps = kDefaultTrajectorySteps;
  double dt = 1.0;
  double trail_distance = 500.0;  // aim point behind red
  double offset_jitter = 0.2;     // relative, uniform per axis
  double heading_jitter = 30.0;   // deg, uniform around a southbound start

  void validate() const;
};

/// Red flies straight and level; blue turns toward a point trailing red and
/// slows to red's speed as it closes. Trajectory i uses mix_seed(seed, i).
std::vector<TrajectoryRecord> synth_stern_conversion(const SternConversionParams& params, int n);
/// Serial reference for synth_stern_conversion.
std::vector<TrajectoryRecord> synth_stern_conversion_serial(const SternConversionParams& params,
                                                            int n);

/// Fills heading, speed, turn rate and relative geometry from the x/y columns.
void derive_features(TrajectoryRecord& record);

/// Column-wise standardization of joint feature rows. Constant columns keep scale 1.
struct FeatureScaler {
  Vector mean;
  Vector scale;

  static FeatureScaler fit(const std::vector<TrajectoryRecord>& records);
  RealSequence transform(const TrajectoryRecord& record) const;
  TrajectoryRecord inverse(const RealSequence& seq, double dt) const;
};

}  // namespace goalseq
