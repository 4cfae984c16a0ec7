#include "goalseq/datasets.hpp"

#include "goalseq/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace goalseq {

std::vector<std::vector<std::string>> read_sentences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read corpus file: " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_whitespace(line);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  if (out.empty()) throw ValidationError("corpus file is empty: " + path.string());
  return out;
}

std::vector<TokenSequence> load_text_corpus(const std::filesystem::path& path,
                                            const Vocabulary& vocab, int max_len) {
  std::vector<TokenSequence> out;
  for (const auto& sentence : read_sentences(path)) out.push_back(encode(sentence, vocab, max_len));
  return out;
}

std::vector<std::string> synth_grammar_corpus(int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("synth_grammar_corpus: n must be >= 1");
  static const std::vector<std::string> dets{"the", "a"};
  static const std::vector<std::string> adjs{"big", "small", "red", "old", "quiet", "green", "tiny"};
  static const std::vector<std::string> nouns{"cat",  "dog", "bird", "man",  "woman",
                                              "child", "car", "house", "tree", "ball"};
  static const std::vector<std::string> verbs{"sees", "likes", "chases", "finds", "takes", "hears"};
  static const std::vector<std::string> preps{"near", "behind", "under", "with"};

  Rng rng(seed);
  // Zipf-like choice so the corpus has a learnable unigram skew.
  auto pick = [&](const std::vector<std::string>& words) -> const std::string& {
    double total = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) total += 1.0 / static_cast<double>(i + 1);
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < words.size(); ++i) {
      u -= 1.0 / static_cast<double>(i + 1);
      if (u <= 0.0) return words[i];
    }
    return words.back();
  };
  auto noun_phrase = [&](std::vector<std::string>& s) {
    s.push_back(pick(dets));
    if (rng.uniform() < 0.4) s.push_back(pick(adjs));
    s.push_back(pick(nouns));
  };

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> s;
    noun_phrase(s);
    s.push_back(pick(verbs));
    if (rng.uniform() < 0.7) noun_phrase(s);
    if (rng.uniform() < 0.4) {
      s.push_back(pick(preps));
      noun_phrase(s);
    }
    out.push_back(join_tokens(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kFeatureNames[kFeaturesPerFighter] = {
    "x",        "y",         "heading",   "speed",     "turn_rate", "range",
    "bearing",  "aspect",    "ata",       "reserved0", "reserved1", "reserved2",
    "reserved3", "reserved4", "reserved5", "reserved6"};

double wrap180(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;  // [-180, 180)
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::vector<std::string> trajectory_columns() {
  std::vector<std::string> cols;
  for (const char* side : {"blue_", "red_"}) {
    for (const char* name : kFeatureNames) cols.push_back(std::string(side) + name);
  }
  return cols;
}

Matrix joint_features(const TrajectoryRecord& record) {
  if (record.blue.steps() != record.red.steps() || record.blue.features() != kFeaturesPerFighter ||
      record.red.features() != kFeaturesPerFighter) {
    throw ValidationError("trajectory record shape mismatch");
  }
  Matrix m(record.steps(), 2 * kFeaturesPerFighter);
  m << record.blue.values, record.red.values;
  return m;
}

TrajectoryRecord split_features(const Matrix& joint, double dt) {
  if (joint.cols() != 2 * kFeaturesPerFighter) {
    throw ValidationError("joint trajectory features must have 32 columns");
  }
  TrajectoryRecord r;
  r.blue.values = joint.leftCols(kFeaturesPerFighter);
  r.red.values = joint.rightCols(kFeaturesPerFighter);
  r.dt = dt;
  return r;
}

std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path, int steps,
                                                double dt) {
  if (steps < 1) throw ValidationError("load_trajectories: steps must be >= 1");
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read trajectory file: " + path.string());
  const auto width = static_cast<std::size_t>(2 * kFeaturesPerFighter);
  std::vector<TrajectoryRecord> out;
  std::string line;
  if (!std::getline(in, line)) return out;  // empty file
  {
    std::vector<std::string> header;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    if (header != trajectory_columns()) {
      throw ValidationError("trajectory file has an unexpected header: " + path.string());
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t traj = rows.size() / static_cast<std::size_t>(steps);
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError("trajectory " + std::to_string(traj) + ": unparseable value '" + cell + "'");
      }
      if (!std::isfinite(v)) throw ValidationError("trajectory " + std::to_string(traj) + ": non-finite value");
      row.push_back(v);
    }
    if (row.size() != width) {
      throw ValidationError("trajectory " + std::to_string(traj) + ": ragged row with " +
                            std::to_string(row.size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() % static_cast<std::size_t>(steps) != 0) {
    throw ValidationError("trajectory " + std::to_string(rows.size() / static_cast<std::size_t>(steps)) +
                          ": truncated, expected " + std::to_string(steps) + " rows");
  }
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(steps)) {
    Matrix m(steps, static_cast<Eigen::Index>(width));
    for (int t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < width; ++c) m(t, static_cast<Eigen::Index>(c)) = rows[start + static_cast<std::size_t>(t)][c];
    }
    out.push_back(split_features(m, dt));
  }
  return out;
}

void write_trajectories(const std::filesystem::path& path,
                        const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write trajectory file: " + path.string());
  const auto cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  char buf[32];
  for (const auto& r : records) {
    const Matrix m = joint_features(r);
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(t, c));
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw RuntimeFailure("failed writing trajectory file: " + path.string());
}

void derive_features(TrajectoryRecord& record) {
  const int steps = record.steps();
  if (steps < 2 || record.red.steps() != steps) throw ValidationError("derive_features: need >= 2 aligned steps");
  const double dt = record.dt;
  for (Matrix* m : {&record.blue.values, &record.red.values}) {
    for (int t = 0; t < steps; ++t) {
      const int a = t + 1 < steps ? t : t - 1;  // forward difference, last row reuses the previous
      const double dx = (*m)(a + 1, kX) - (*m)(a, kX);
      const double dy = (*m)(a + 1, kY) - (*m)(a, kY);
      (*m)(t, kHeading) = deg(std::atan2(dy, dx));
      (*m)(t, kSpeed) = std::hypot(dx, dy) / dt;
    }
    for (int t = 0; t < steps; ++t) {
      (*m)(t, kTurnRate) = t == 0 ? 0.0 : wrap180((*m)(t, kHeading) - (*m)(t - 1, kHeading)) / dt;
    }
  }
  Matrix& blue = record.blue.values;
  Matrix& red = record.red.values;
  for (int t = 0; t < steps; ++t) {
    const AircraftState b{blue(t, kX), blue(t, kY), blue(t, kHeading)};
    const AircraftState r{red(t, kX), red(t, kY), red(t, kHeading)};
    const EngagementGeometry gb = engagement_geometry(b, r);  // blue attacking red
    const EngagementGeometry gr = engagement_geometry(r, b);  // red attacking blue
    blue(t, kRange) = red(t, kRange) = gb.range;
    blue(t, kBearing) = gb.range > 0.0 ? wrap180(deg(std::atan2(r.y - b.y, r.x - b.x)) - b.heading_deg) : 0.0;
    red(t, kBearing) = gr.range > 0.0 ? wrap180(deg(std::atan2(b.y - r.y, b.x - r.x)) - r.heading_deg) : 0.0;
    blue(t, kAspect) = gb.aspect;
    blue(t, kAntennaTrain) = gb.antenna_train;
    red(t, kAspect) = gr.aspect;
    red(t, kAntennaTrain) = gr.antenna_train;
  }
}

void SternConversionParams::validate() const {
  if (!(red_speed > 0.0) || !(blue_speed > 0.0)) throw ValidationError("stern conversion: speeds must be > 0");
  if (!(turn_rate > 0.0)) throw ValidationError("stern conversion: turn_rate must be > 0");
  if (!(noise_std >= 0.0)) throw ValidationError("stern conversion: noise_std must be >= 0");
  if (steps < 2) throw ValidationError("stern conversion: steps must be >= 2");
  if (!(dt > 0.0)) throw ValidationError("stern conversion: dt must be > 0");
  if (!(trail_distance >= 0.0) || !(offset_jitter >= 0.0) || !(heading_jitter >= 0.0)) {
    throw ValidationError("stern conversion: jitter and trail distance must be >= 0");
  }
}

namespace {

TrajectoryRecord synth_one(const SternConversionParams& p, int index) {
  Rng rng(mix_seed(p.seed, static_cast<std::uint64_t>(index)));
  auto jitter = [&](double scale) { return scale * (2.0 * rng.uniform() - 1.0); };
  const double dx = p.initial_offset[0] * (1.0 + jitter(p.offset_jitter));
  const double dy = p.initial_offset[1] * (1.0 + jitter(p.offset_jitter));
  double bh = -90.0 + jitter(p.heading_jitter);

  TrajectoryRecord rec;
  rec.dt = p.dt;
  rec.blue.values = Matrix::Zero(p.steps, kFeaturesPerFighter);
  rec.red.values = Matrix::Zero(p.steps, kFeaturesPerFighter);
  const double rh = 0.0;
  double rx = 0.0, ry = 0.0, bx = dx, by = dy;
  const double max_turn = p.turn_rate * p.dt;
  const double slow_radius = 3.0 * p.blue_speed * p.dt;
  for (int t = 0; t < p.steps; ++t) {
    rec.blue.values(t, kX) = bx;
    rec.blue.values(t, kY) = by;
    rec.red.values(t, kX) = rx;
    rec.red.values(t, kY) = ry;

    const double ax = rx - p.trail_distance * std::cos(rad(rh));
    const double ay = ry - p.trail_distance * std::sin(rad(rh));
    const double turn = std::clamp(wrap180(deg(std::atan2(ay - by, ax - bx)) - bh), -max_turn, max_turn);
    bh = wrap180(bh + turn);
    const double dist = std::hypot(ax - bx, ay - by);
    const double v = dist > slow_radius ? p.blue_speed
                                        : p.red_speed + (p.blue_speed - p.red_speed) * dist / slow_radius;
    bx += v * p.dt * std::cos(rad(bh));
    by += v * p.dt * std::sin(rad(bh));
    rx += p.red_speed * p.dt * std::cos(rad(rh));
    ry += p.red_speed * p.dt * std::sin(rad(rh));
  }
  if (p.noise_std > 0.0) {
    for (Matrix* m : {&rec.blue.values, &rec.red.values}) {
      for (int t = 0; t < p.steps; ++t) {
        (*m)(t, kX) += p.noise_std * rng.normal();
        (*m)(t, kY) += p.noise_std * rng.normal();
      }
    }
  }
  derive_features(rec);
  return rec;
}

}  // namespace

std::vector<TrajectoryRecord> synth_stern_conversion_serial(const SternConversionParams& params, int n) {
  params.validate();
  if (n < 1) throw ValidationError("synth_stern_conversion: n must be >= 1");
  std::vector<TrajectoryRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(synth_one(params, i));
  return out;
}

std::vector<TrajectoryRecord> synth_stern_conversion(const SternConversionParams& params, int n) {
  params.validate();
  if (n < 1) throw ValidationError("synth_stern_conversion: n must be >= 1");
  std::vector<TrajectoryRecord> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = synth_one(params, i);
  return out;
}

FeatureScaler FeatureScaler::fit(const std::vector<TrajectoryRecord>& records) {
  if (records.empty()) throw ValidationError("FeatureScaler: no records");
  const Eigen::Index cols = 2 * kFeaturesPerFighter;
  Vector sum = Vector::Zero(cols), sq = Vector::Zero(cols);
  double count = 0.0;
  for (const auto& r : records) {
    const Matrix m = joint_features(r);
    sum += m.colwise().sum().transpose();
    count += static_cast<double>(m.rows());
  }
  FeatureScaler s;
  s.mean = sum / count;
  for (const auto& r : records) {
    const Matrix m = joint_features(r);
    sq += (m.rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  s.scale = (sq / count).array().sqrt().matrix();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (!(s.scale(c) > 1e-12)) s.scale(c) = 1.0;
  }
  return s;
}

RealSequence FeatureScaler::transform(const TrajectoryRecord& record) const {
  Matrix m = joint_features(record);
  m = ((m.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  return RealSequence{std::move(m)};
}

TrajectoryRecord FeatureScaler::inverse(const RealSequence& seq, double dt) const {
  if (seq.features() != mean.size()) throw ValidationError("FeatureScaler: feature count mismatch");
  Matrix m = ((seq.values.array().rowwise() * scale.transpose().array()).rowwise() +
              mean.transpose().array())
                 .matrix();
  return split_features(m, dt);
}

}  // namespace goalseq
