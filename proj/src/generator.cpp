#include "goalseq/generator.hpp"

#include <cmath>
#include <numbers>

namespace goalseq {

std::string to_string(Mode mode) { return mode == Mode::discrete ? "discrete" : "real"; }

Mode parse_mode(const std::string& text) {
  if (text == "discrete") return Mode::discrete;
  if (text == "real") return Mode::real;
  throw ValidationError("unknown generator mode: " + text);
}

void GeneratorShape::validate() const {
  if (hidden < 1 || layers < 1) throw ValidationError("generator: hidden and layers must be >= 1");
  if (mode == Mode::discrete) {
    if (vocab_size < 2 || embed_dim < 1) {
      throw ValidationError("generator: discrete mode needs vocab_size >= 2 and embed_dim >= 1");
    }
    if (pad_id < 0 || pad_id >= vocab_size || start_id < 0 || start_id >= vocab_size ||
        pad_id == start_id) {
      throw ValidationError("generator: pad/start ids invalid");
    }
  } else {
    if (feature_dim < 1 || latent_dim < 1 || latent_hidden < 1) {
      throw ValidationError("generator: real mode needs feature_dim, latent sizes >= 1");
    }
  }
}

std::map<std::string, std::string> GeneratorShape::to_meta() const {
  return {{"gen.mode", to_string(mode)},
          {"gen.vocab_size", std::to_string(vocab_size)},
          {"gen.feature_dim", std::to_string(feature_dim)},
          {"gen.embed_dim", std::to_string(embed_dim)},
          {"gen.hidden", std::to_string(hidden)},
          {"gen.layers", std::to_string(layers)},
          {"gen.latent_dim", std::to_string(latent_dim)},
          {"gen.latent_hidden", std::to_string(latent_hidden)},
          {"gen.pad_id", std::to_string(pad_id)},
          {"gen.start_id", std::to_string(start_id)}};
}

GeneratorShape GeneratorShape::from_meta(const std::map<std::string, std::string>& meta) {
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ValidationError("checkpoint meta missing " + key);
    return it->second;
  };
  auto geti = [&](const std::string& key) { return std::stoi(get(key)); };
  GeneratorShape s;
  s.mode = parse_mode(get("gen.mode"));
  s.vocab_size = geti("gen.vocab_size");
  s.feature_dim = geti("gen.feature_dim");
  s.embed_dim = geti("gen.embed_dim");
  s.hidden = geti("gen.hidden");
  s.layers = geti("gen.layers");
  s.latent_dim = geti("gen.latent_dim");
  s.latent_hidden = geti("gen.latent_hidden");
  s.pad_id = geti("gen.pad_id");
  s.start_id = geti("gen.start_id");
  s.validate();
  return s;
}

GeneratorParams init_generator(const GeneratorShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  GeneratorParams g{shape, {}};
  const int out = shape.output_dim();
  int input = shape.feature_dim;
  if (shape.mode == Mode::discrete) {
    g.tensors.add("embed", uniform_matrix(shape.vocab_size, shape.embed_dim, 0.1, rng));
    input = shape.embed_dim;
  }
  for (int l = 0; l < shape.layers; ++l) {
    add_lstm_layer(g.tensors, "lstm" + std::to_string(l), l == 0 ? input : shape.hidden,
                   shape.hidden, rng);
  }
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  g.tensors.add("out.W", uniform_matrix(shape.hidden, out, out_scale, rng));
  g.tensors.add("out.b", Matrix::Zero(1, out));
  if (shape.mode == Mode::real) {
    const int f = shape.feature_dim, hq = shape.latent_hidden, dz = shape.latent_dim;
    const double fs = 1.0 / std::sqrt(static_cast<double>(f));
    const double hs = 1.0 / std::sqrt(static_cast<double>(hq));
    const double zs = 1.0 / std::sqrt(static_cast<double>(dz));
    g.tensors.add("enc.W1", uniform_matrix(f, hq, fs, rng));
    g.tensors.add("enc.b1", Matrix::Zero(1, hq));
    g.tensors.add("enc.Wmu", uniform_matrix(hq, dz, hs, rng));
    g.tensors.add("enc.bmu", Matrix::Zero(1, dz));
    g.tensors.add("enc.Wls", uniform_matrix(hq, dz, hs, rng));
    g.tensors.add("enc.bls", Matrix::Zero(1, dz));
    g.tensors.add("dec.W1", uniform_matrix(dz, hq, zs, rng));
    g.tensors.add("dec.b1", Matrix::Zero(1, hq));
    g.tensors.add("dec.W2", uniform_matrix(hq, f, hs, rng));
    g.tensors.add("dec.b2", Matrix::Zero(1, f));
  }
  return g;
}

HiddenState HiddenState::zeros(const GeneratorShape& shape, Eigen::Index batch) {
  HiddenState s;
  for (int l = 0; l < shape.layers; ++l) {
    s.h.push_back(Matrix::Zero(batch, shape.hidden));
    s.c.push_back(Matrix::Zero(batch, shape.hidden));
  }
  return s;
}

double gaussian_log_density(const Vector& x, const Vector& mean, double sigma) {
  const double f = static_cast<double>(x.size());
  return -0.5 * (x - mean).squaredNorm() / (sigma * sigma) - f * std::log(sigma) -
         0.5 * f * std::log(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Tape-level pieces.

namespace gen {
namespace {

struct TapeState {
  std::vector<LstmStateVars> layers;
};

TapeState zero_state(ad::Tape& tape, const GeneratorShape& shape, Eigen::Index batch) {
  TapeState s;
  for (int l = 0; l < shape.layers; ++l) {
    s.layers.push_back({tape.constant(Matrix::Zero(batch, shape.hidden)),
                        tape.constant(Matrix::Zero(batch, shape.hidden))});
  }
  return s;
}

/// Runs all layers one step and returns the output-head block.
ad::Var advance(const BoundParams& p, const GeneratorShape& shape, TapeState& state, ad::Var x) {
  for (int l = 0; l < shape.layers; ++l) {
    const auto names = lstm_names("lstm" + std::to_string(l));
    state.layers[static_cast<std::size_t>(l)] =
        lstm_step(x, state.layers[static_cast<std::size_t>(l)], p.at(names.weight),
                  p.at(names.bias));
    x = state.layers[static_cast<std::size_t>(l)].h;
  }
  return ad::add_row(ad::matmul(x, p.at("out.W")), p.at("out.b"));
}

HiddenState snapshot(const TapeState& s) {
  HiddenState out;
  for (const auto& l : s.layers) {
    out.h.push_back(l.h.value());
    out.c.push_back(l.c.value());
  }
  return out;
}

int sequence_length(std::span<const TokenSequence> batch) {
  if (batch.empty()) throw ValidationError("generator: empty batch");
  const int t = batch[0].length();
  for (const auto& s : batch) {
    if (s.length() != t) throw ValidationError("generator: ragged token batch");
  }
  return t;
}

ad::Var discrete_forward(const BoundParams& p, const GeneratorShape& shape,
                         std::span<const TokenSequence> batch, HiddenState* final_state) {
  if (shape.mode != Mode::discrete) throw ValidationError("generator: not in discrete mode");
  const int steps = sequence_length(batch);
  const auto rows = static_cast<Eigen::Index>(batch.size());
  for (const auto& s : batch) {
    for (int id : s.ids) {
      if (id < 0 || id >= shape.vocab_size) throw ValidationError("generator: token id out of range");
    }
  }
  ad::Tape& tape = p.tape();
  const Matrix mask = discrete_mask(batch);
  TapeState state = zero_state(tape, shape, rows);
  std::vector<int> inputs(batch.size(), shape.start_id);
  std::vector<int> targets(batch.size());
  std::vector<ad::Var> columns;
  for (int t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch.size(); ++b) targets[b] = batch[b].ids[static_cast<std::size_t>(t)];
    ad::Var logits = advance(p, shape, state, ad::gather_rows(p.at("embed"), inputs));
    ad::Var ll = ad::pick(ad::log_softmax_rows(logits), targets);
    columns.push_back(ad::mul(ll, tape.constant(mask.col(t))));
    inputs = targets;
  }
  if (final_state) *final_state = snapshot(state);
  return ad::concat_cols(columns);
}

ad::Var real_forward(const BoundParams& p, const GeneratorShape& shape,
                     std::span<const RealSequence> batch, double sigma, HiddenState* final_state) {
  if (shape.mode != Mode::real) throw ValidationError("generator: not in real mode");
  if (batch.empty()) throw ValidationError("generator: empty batch");
  if (!(sigma > 0.0)) throw ValidationError("generator: sigma_train must be > 0");
  const int steps = batch[0].steps();
  for (const auto& s : batch) {
    if (s.steps() != steps || s.features() != shape.feature_dim) {
      throw ValidationError("generator: real batch shape mismatch");
    }
  }
  const auto rows = static_cast<Eigen::Index>(batch.size());
  ad::Tape& tape = p.tape();
  auto row_block = [&](int t) {
    Matrix m(rows, shape.feature_dim);
    for (Eigen::Index b = 0; b < rows; ++b) m.row(b) = batch[static_cast<std::size_t>(b)].values.row(t);
    return m;
  };
  TapeState state = zero_state(tape, shape, rows);
  std::vector<ad::Var> columns{tape.constant(Matrix::Zero(rows, 1))};
  for (int t = 0; t + 1 < steps; ++t) {
    ad::Var mean = advance(p, shape, state, tape.constant(row_block(t)));
    columns.push_back(gaussian_log_density(tape.constant(row_block(t + 1)), mean, sigma));
  }
  if (final_state) *final_state = snapshot(state);
  return ad::concat_cols(columns);
}

}  // namespace

Matrix discrete_mask(std::span<const TokenSequence> batch) {
  const int steps = sequence_length(batch);
  Matrix mask = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), steps);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const int scored = std::min(steps, batch[b].true_length + 1);
    mask.row(static_cast<Eigen::Index>(b)).head(scored).setOnes();
  }
  return mask;
}

ad::Var discrete_log_likelihoods(const BoundParams& p, const GeneratorShape& shape,
                                 std::span<const TokenSequence> batch) {
  return discrete_forward(p, shape, batch, nullptr);
}

ad::Var real_transition_log_likelihoods(const BoundParams& p, const GeneratorShape& shape,
                                        std::span<const RealSequence> batch, double sigma) {
  return real_forward(p, shape, batch, sigma, nullptr);
}

LatentVars encode_latent(const BoundParams& p, ad::Var x1) {
  ad::Var h = ad::tanh(ad::add_row(ad::matmul(x1, p.at("enc.W1")), p.at("enc.b1")));
  return {ad::add_row(ad::matmul(h, p.at("enc.Wmu")), p.at("enc.bmu")),
          ad::add_row(ad::matmul(h, p.at("enc.Wls")), p.at("enc.bls"))};
}

ad::Var decode_first(const BoundParams& p, ad::Var z) {
  ad::Var h = ad::tanh(ad::add_row(ad::matmul(z, p.at("dec.W1")), p.at("dec.b1")));
  return ad::add_row(ad::matmul(h, p.at("dec.W2")), p.at("dec.b2"));
}

ad::Var kl_to_prior(const LatentVars& q) {
  // 0.5 * sum(mu^2 + exp(2 ls) - 1 - 2 ls)
  ad::Var terms = ad::add_scalar(
      ad::sub(ad::add(ad::square(q.mu), ad::exp(ad::scale(q.log_sigma, 2.0))),
              ad::scale(q.log_sigma, 2.0)),
      -1.0);
  return ad::scale(ad::row_sum(terms), 0.5);
}

ad::Var gaussian_log_density(ad::Var x, ad::Var mean, double sigma) {
  const double f = static_cast<double>(mean.cols());
  const double c = -f * std::log(sigma) - 0.5 * f * std::log(2.0 * std::numbers::pi);
  ad::Var sq = ad::row_sum(ad::square(ad::sub(x, mean)));
  return ad::add_scalar(ad::scale(sq, -0.5 / (sigma * sigma)), c);
}

RelaxedSample sample_relaxed(const BoundParams& p, const GeneratorShape& shape, int batch,
                             int steps, double tau, Rng& rng) {
  if (shape.mode != Mode::discrete) throw ValidationError("sample_relaxed: not in discrete mode");
  if (!(tau > 0.0)) throw ValidationError("sample_relaxed: tau must be > 0");
  if (batch < 1 || steps < 1) throw ValidationError("sample_relaxed: empty batch");
  ad::Tape& tape = p.tape();
  const int vocab = shape.vocab_size;
  RelaxedSample out;
  out.tokens.assign(static_cast<std::size_t>(batch), std::vector<int>(static_cast<std::size_t>(steps), shape.pad_id));
  out.mask = Matrix::Zero(batch, steps);

  TapeState state = zero_state(tape, shape, batch);
  std::vector<int> inputs(static_cast<std::size_t>(batch), shape.start_id);
  std::vector<int> hard(static_cast<std::size_t>(batch));
  Matrix alive = Matrix::Ones(batch, 1);
  std::vector<ad::Var> lp_columns;
  for (int t = 0; t < steps; ++t) {
    ad::Var logits = advance(p, shape, state, ad::gather_rows(p.at("embed"), inputs));
    Matrix noise(batch, vocab);
    for (int b = 0; b < batch; ++b) {
      for (int v = 0; v < vocab; ++v) noise(b, v) = rng.gumbel();
    }
    const Matrix perturbed = logits.value() + noise;
    Matrix ended_rows = Matrix::Zero(batch, vocab);
    for (int b = 0; b < batch; ++b) {
      if (alive(b, 0) > 0.0) {
        Eigen::Index arg = 0;
        perturbed.row(b).maxCoeff(&arg);
        hard[static_cast<std::size_t>(b)] = static_cast<int>(arg);
      } else {
        hard[static_cast<std::size_t>(b)] = shape.pad_id;
        ended_rows(b, shape.pad_id) = 1.0;
      }
      out.tokens[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)] = hard[static_cast<std::size_t>(b)];
    }
    out.mask.col(t) = alive;
    ad::Var alive_col = tape.constant(alive);
    ad::Var soft = ad::softmax_rows(ad::scale(ad::add(logits, tape.constant(noise)), 1.0 / tau));
    out.soft.push_back(ad::add(ad::mul_col(soft, alive_col), tape.constant(ended_rows)));
    lp_columns.push_back(ad::mul(ad::pick(ad::log_softmax_rows(logits), hard), alive_col));
    for (int b = 0; b < batch; ++b) {
      if (hard[static_cast<std::size_t>(b)] == shape.pad_id) alive(b, 0) = 0.0;
    }
    inputs = hard;
  }
  out.log_probs = ad::concat_cols(lp_columns);
  return out;
}

RealSample sample_real(const BoundParams& p, const GeneratorShape& shape, int batch, int steps,
                       double sigma_noise, double sigma_density, bool detach_actions, Rng& rng) {
  if (shape.mode != Mode::real) throw ValidationError("sample_real: not in real mode");
  if (batch < 1 || steps < 1) throw ValidationError("sample_real: empty batch");
  ad::Tape& tape = p.tape();
  const int f = shape.feature_dim;
  auto normals = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
    }
    return m;
  };

  RealSample out;
  std::vector<ad::Var> lp_columns;
  auto emit = [&](ad::Var mean) {
    ad::Var x = mean;
    if (sigma_noise > 0.0) x = ad::add(mean, tape.constant(normals(batch, f) * sigma_noise));
    ad::Var action = tape.constant(x.value());
    lp_columns.push_back(gaussian_log_density(action, mean, sigma_density));
    out.steps.push_back(detach_actions ? action : x);
    return out.steps.back();
  };

  ad::Var z = tape.constant(normals(batch, shape.latent_dim));
  ad::Var x = emit(decode_first(p, z));
  TapeState state = zero_state(tape, shape, batch);
  for (int t = 1; t < steps; ++t) x = emit(advance(p, shape, state, x));

  out.log_probs = ad::concat_cols(lp_columns);
  out.values.resize(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    Matrix v(steps, f);
    for (int t = 0; t < steps; ++t) v.row(t) = out.steps[static_cast<std::size_t>(t)].value().row(b);
    out.values[static_cast<std::size_t>(b)].values = std::move(v);
  }
  return out;
}

}  // namespace gen

// ---------------------------------------------------------------------------
// Single-sequence public operations.

TeacherForcedResult forward_teacher_forced(const GeneratorParams& g, const TokenSequence& seq) {
  ad::Tape tape;
  BoundParams p(tape, g.tensors, false);
  TeacherForcedResult r;
  const TokenSequence batch[] = {seq};
  ad::Var ll = gen::discrete_forward(p, g.shape, batch, &r.final_state);
  r.log_likelihoods.assign(ll.value().data(), ll.value().data() + ll.value().size());
  return r;
}

TeacherForcedResult forward_teacher_forced(const GeneratorParams& g, const RealSequence& seq,
                                           double sigma_train) {
  ad::Tape tape;
  BoundParams p(tape, g.tensors, false);
  TeacherForcedResult r;
  const RealSequence batch[] = {seq};
  ad::Var ll = gen::real_forward(p, g.shape, batch, sigma_train, &r.final_state);
  r.log_likelihoods.assign(ll.value().data(), ll.value().data() + ll.value().size());
  return r;
}

GumbelSample gumbel_softmax_sample(const Vector& logits, const Vector& gumbel_noise, double tau) {
  if (!(tau > 0.0)) throw ValidationError("gumbel_softmax_sample: tau must be > 0");
  if (logits.size() == 0 || gumbel_noise.size() != logits.size()) {
    throw ValidationError("gumbel_softmax_sample: logits/noise size mismatch");
  }
  const Vector perturbed = logits + gumbel_noise;
  GumbelSample s;
  Eigen::Index arg = 0;
  const double m = perturbed.maxCoeff(&arg);
  s.soft = ((perturbed.array() - m) / tau).exp().matrix();
  s.soft /= s.soft.sum();
  s.index = static_cast<int>(arg);
  s.hard = Vector::Zero(logits.size());
  s.hard(arg) = 1.0;
  return s;
}

GumbelSample gumbel_softmax_sample(const Vector& logits, double tau, Rng& rng) {
  Vector g(logits.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.gumbel();
  return gumbel_softmax_sample(logits, g, tau);
}

namespace infer {

Matrix embed(const GeneratorParams& g, std::span<const int> ids) {
  const Matrix& table = g.tensors.at("embed");
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = table.row(ids[r]);
  return out;
}

Matrix step(const GeneratorParams& g, HiddenState& state, const Matrix& input) {
  Matrix x = input;
  for (int l = 0; l < g.shape.layers; ++l) {
    const auto names = lstm_names("lstm" + std::to_string(l));
    const auto li = static_cast<std::size_t>(l);
    LstmState next = lstm_step(x, LstmState{state.h[li], state.c[li]}, g.tensors.at(names.weight),
                               g.tensors.at(names.bias));
    state.h[li] = std::move(next.h);
    state.c[li] = std::move(next.c);
    x = state.h[li];
  }
  Matrix out = x * g.tensors.at("out.W");
  out.rowwise() += g.tensors.at("out.b").row(0);
  return out;
}

}  // namespace infer

namespace {

Vector dec_mean(const GeneratorParams& g, const Vector& z) {
  Matrix h = (z.transpose() * g.tensors.at("dec.W1") + g.tensors.at("dec.b1")).array().tanh().matrix();
  Matrix m = h * g.tensors.at("dec.W2") + g.tensors.at("dec.b2");
  return m.row(0).transpose();
}

}  // namespace

Vector decode_first(const GeneratorParams& g, const Vector& z) {
  if (g.shape.mode != Mode::real) throw ValidationError("decode_first: not in real mode");
  if (z.size() != g.shape.latent_dim) throw ValidationError("decode_first: latent size mismatch");
  return dec_mean(g, z);
}

LatentPosterior encode_latent(const GeneratorParams& g, const Vector& x1) {
  if (g.shape.mode != Mode::real) throw ValidationError("encode_latent: not in real mode");
  if (x1.size() != g.shape.feature_dim) throw ValidationError("encode_latent: feature size mismatch");
  Matrix h = (x1.transpose() * g.tensors.at("enc.W1") + g.tensors.at("enc.b1")).array().tanh().matrix();
  LatentPosterior q;
  q.mu = (h * g.tensors.at("enc.Wmu") + g.tensors.at("enc.bmu")).row(0).transpose();
  q.sigma = (h * g.tensors.at("enc.Wls") + g.tensors.at("enc.bls")).row(0).transpose().array().exp().matrix();
  return q;
}

double kl_to_prior(const LatentPosterior& post) {
  if (post.mu.size() != post.sigma.size()) throw ValidationError("kl_to_prior: size mismatch");
  double kl = 0.0;
  for (Eigen::Index j = 0; j < post.mu.size(); ++j) {
    const double s = post.sigma(j);
    if (!(s > 0.0)) throw ValidationError("kl_to_prior: sigma_q must be > 0");
    const double mu = post.mu(j);
    kl += 0.5 * (mu * mu + s * s - 1.0 - std::log(s * s));
  }
  return kl;
}

SampledSequence sample_sequence_from(const GeneratorParams& g, const Vector& z, double sigma_sample,
                                     Rng& rng, int steps, double sigma_train) {
  if (g.shape.mode != Mode::real) throw ValidationError("sample_sequence_from: not in real mode");
  if (steps < 1) throw ValidationError("sample_sequence: steps must be >= 1");
  if (!(sigma_sample >= 0.0) || !(sigma_train > 0.0)) throw ValidationError("sample_sequence: bad sigma");
  const int f = g.shape.feature_dim;
  SampledSequence s;
  s.z = z;
  s.values.values = Matrix(steps, f);
  auto draw = [&](const Vector& mean) {
    Vector x = mean;
    if (sigma_sample > 0.0) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += sigma_sample * rng.normal();
    }
    s.log_probs.push_back(gaussian_log_density(x, mean, sigma_train));
    return x;
  };
  Vector x = draw(decode_first(g, z));
  s.values.values.row(0) = x.transpose();
  HiddenState state = HiddenState::zeros(g.shape, 1);
  for (int t = 1; t < steps; ++t) {
    Matrix mean = infer::step(g, state, x.transpose());
    x = draw(mean.row(0).transpose());
    s.values.values.row(t) = x.transpose();
  }
  return s;
}

SampledSequence sample_sequence(const GeneratorParams& g, double tau, double sigma_sample, Rng& rng,
                                int steps, double sigma_train) {
  if (steps < 1) throw ValidationError("sample_sequence: steps must be >= 1");
  if (g.shape.mode == Mode::real) {
    Vector z(g.shape.latent_dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return sample_sequence_from(g, z, sigma_sample, rng, steps, sigma_train);
  }

  SampledSequence s;
  s.tokens.ids.assign(static_cast<std::size_t>(steps), g.shape.pad_id);
  s.tokens.true_length = steps;
  HiddenState state = HiddenState::zeros(g.shape, 1);
  int input = g.shape.start_id;
  bool alive = true;
  for (int t = 0; t < steps; ++t) {
    const int ids[] = {input};
    Matrix logits = infer::step(g, state, infer::embed(g, ids));
    if (!alive) {
      Vector pad = Vector::Zero(g.shape.vocab_size);
      pad(g.shape.pad_id) = 1.0;
      s.soft.push_back(pad);
      s.log_probs.push_back(0.0);
      input = g.shape.pad_id;
      continue;
    }
    const Vector row = logits.row(0).transpose();
    GumbelSample gs = gumbel_softmax_sample(row, tau, rng);
    const Matrix lp = log_softmax_rows(logits);
    s.log_probs.push_back(lp(0, gs.index));
    s.soft.push_back(gs.soft);
    s.tokens.ids[static_cast<std::size_t>(t)] = gs.index;
    if (gs.index == g.shape.pad_id) {
      alive = false;
      s.tokens.true_length = t;
    }
    input = gs.index;
  }
  return s;
}

}  // namespace goalseq
