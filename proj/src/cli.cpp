#include "goalseq/cli.hpp"

#include "goalseq/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>

namespace goalseq {

Vector random_simplex(int size, Rng& rng, double zero_prob) {
  if (size < 1) throw ValidationError("random_simplex: size must be >= 1");
  Vector v(size);
  for (;;) {
    for (int i = 0; i < size; ++i) v(i) = rng.uniform() < zero_prob ? 0.0 : -std::log(rng.uniform());
    if (v.sum() > 0.0) break;
  }
  v /= v.sum();
  // Renormalize so the sum is 1 to the last ulp the constructor tolerates.
  v(0) += 1.0 - v.sum();
  if (v(0) < 0.0) v(0) = 0.0;
  return v;
}

TheoryReport verify_theory(std::uint64_t seed, int pairs_per_support) {
  if (pairs_per_support < 1) throw ValidationError("verify_theory: pairs must be >= 1");
  TheoryReport report;
  Rng rng(seed);
  for (int size : {2, 4, 8}) {
    for (int i = 0; i < pairs_per_support; ++i) {
      const FiniteDistribution pd(random_simplex(size, rng, 0.2));
      const FiniteDistribution pg(random_simplex(size, rng));
      report.max_identity_residual = std::max(report.max_identity_residual, identity_residual(pd, pg));
      const Vector dstar = optimal_discriminator(pd, pg);
      for (Eigen::Index x = 0; x < dstar.size(); ++x) {
        const double at_opt = inner_discriminator_objective(pd[x], pg[x], dstar(x));
        for (int k = 1; k <= 999; ++k) {
          const double alt = inner_discriminator_objective(pd[x], pg[x], k / 1000.0);
          report.max_grid_violation = std::max(report.max_grid_violation, at_opt - alt);
        }
      }
      ++report.pairs;
    }
  }
  return report;
}

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  TrainConfig config() const {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "TrainConfig file (key = value)");
  cmd->add_option("--seed", c.seed, "Run seed; overrides the config");
}

std::vector<std::vector<std::string>> read_lines_tokens(const std::string& path) {
  return read_sentences(path);
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goal-optimizing sequence generator: MLE + adversarial + policy-gradient training"};
  app.require_subcommand(1);

  // synth-data
  Common synth_c;
  std::string synth_kind, synth_out;
  int synth_count = 0, synth_test = 500;
  double synth_noise = 5.0;
  auto* synth = app.add_subcommand("synth-data", "Write a seeded desk-scale dataset");
  add_common(synth, synth_c);
  synth->add_option("--kind", synth_kind, "text | trajectory")->required()->check(CLI::IsMember({"text", "trajectory"}));
  synth->add_option("--out", synth_out, "Output directory (text) or CSV file (trajectory)")->required();
  synth->add_option("--count", synth_count, "Training sentences (default 1000) or trajectories (default 500)");
  synth->add_option("--test-count", synth_test, "Held-out sentences (text only)");
  synth->add_option("--noise", synth_noise, "Positional noise std (trajectory only)");

  // pretrain
  Common pre_c;
  std::string pre_mode = "discrete", pre_data, pre_out;
  int pre_epochs = 20, pre_len = 12, pre_vocab = 30, pre_hidden = 64, pre_layers = 1, pre_embed = 32,
      pre_batch = 32, pre_steps = kDefaultTrajectorySteps;
  double pre_lr = 5e-3, pre_dt = 1.0;
  auto* pre = app.add_subcommand("pretrain", "Maximum-likelihood pretraining of a fresh generator");
  add_common(pre, pre_c);
  pre->add_option("--mode", pre_mode, "discrete | real")->check(CLI::IsMember({"discrete", "real"}));
  pre->add_option("--data", pre_data, "Corpus (one sentence per line) or trajectory CSV")->required();
  pre->add_option("--out", pre_out, "Checkpoint to write")->required();
  pre->add_option("--epochs", pre_epochs);
  pre->add_option("--max-len", pre_len, "Sequence length T (discrete)");
  pre->add_option("--vocab-size", pre_vocab, "Word budget including unk (discrete)");
  pre->add_option("--hidden", pre_hidden);
  pre->add_option("--layers", pre_layers);
  pre->add_option("--embed", pre_embed);
  pre->add_option("--batch", pre_batch);
  pre->add_option("--lr", pre_lr, "Adam learning rate");
  pre->add_option("--steps", pre_steps, "Rows per trajectory (real)");
  pre->add_option("--dt", pre_dt, "Seconds per trajectory row (real)");

  // train
  Common tr_c;
  std::string tr_ckpt, tr_data, tr_out, tr_metrics, tr_manifest;
  long tr_steps = 200;
  int tr_batch = 32, tr_refs = 500, tr_bleu = 3, tr_disc_hidden = 32;
  double tr_lr = 1e-3;
  auto* tr = app.add_subcommand("train", "Adversarial + policy-gradient training from a checkpoint");
  add_common(tr, tr_c);
  tr->add_option("--checkpoint", tr_ckpt, "Pretrained checkpoint")->required();
  tr->add_option("--data", tr_data, "Training corpus or trajectory CSV")->required();
  tr->add_option("--out", tr_out, "Checkpoint to write")->required();
  tr->add_option("--steps", tr_steps);
  tr->add_option("--metrics", tr_metrics, "JSONL metrics log");
  tr->add_option("--manifest", tr_manifest, "Run manifest (JSON)");
  tr->add_option("--batch", tr_batch);
  tr->add_option("--lr", tr_lr, "SGD learning rate for G and D (momentum 0.9)");
  tr->add_option("--reward-refs", tr_refs, "Training sentences used as BLEU reward references");
  tr->add_option("--bleu-n", tr_bleu, "BLEU order of the training reward");
  tr->add_option("--disc-hidden", tr_disc_hidden);

  // generate
  Common gen_c;
  std::string gen_ckpt;
  int gen_count = 10;
  auto* gencmd = app.add_subcommand("generate", "Sample from a checkpoint");
  add_common(gencmd, gen_c);
  gencmd->add_option("--checkpoint", gen_ckpt)->required();
  gencmd->add_option("--count", gen_count);

  // evaluate
  Common ev_c;
  std::string ev_ckpt, ev_data;
  int ev_count = 500;
  auto* ev = app.add_subcommand("evaluate", "NLL_gen and BLEU-2..5, or mean McGrew score");
  add_common(ev, ev_c);
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--data", ev_data, "Held-out corpus (text)");
  ev->add_option("--count", ev_count, "Generated samples");

  // score
  Common sc_c;
  std::string sc_kind, sc_cands, sc_refs, sc_data;
  int sc_n = 4;
  auto* sc = app.add_subcommand("score", "Batch reward scoring");
  add_common(sc, sc_c);
  sc->add_option("--kind", sc_kind, "bleu | mcgrew")->required()->check(CLI::IsMember({"bleu", "mcgrew"}));
  sc->add_option("--candidates", sc_cands, "Candidate sentences (bleu)");
  sc->add_option("--references", sc_refs, "Reference sentences (bleu)");
  sc->add_option("--n", sc_n, "BLEU order");
  sc->add_option("--data", sc_data, "Trajectory CSV (mcgrew)");

  // verify-theory
  Common vt_c;
  int vt_pairs = 100;
  auto* vt = app.add_subcommand("verify-theory", "Finite-support check of the plugged-objective identity");
  add_common(vt, vt_c);
  vt->add_option("--pairs", vt_pairs, "Random pairs per support size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (*synth) {
      const TrainConfig cfg = synth_c.config();
      if (synth_kind == "text") {
        const int n = synth_count > 0 ? synth_count : 1000;
        if (synth_test < 1) throw ValidationError("--test-count must be >= 1");
        const auto lines = synth_grammar_corpus(n + synth_test, cfg.seed);
        std::filesystem::create_directories(synth_out);
        write_lines(std::filesystem::path(synth_out) / "train.txt", {lines.begin(), lines.begin() + n});
        write_lines(std::filesystem::path(synth_out) / "test.txt", {lines.begin() + n, lines.end()});
        out << "wrote " << n << " train and " << synth_test << " test sentences to " << synth_out << "\n";
      } else {
        SternConversionParams p;
        p.seed = cfg.seed;
        p.noise_std = synth_noise;
        const int n = synth_count > 0 ? synth_count : 500;
        write_trajectories(synth_out, synth_stern_conversion(p, n));
        out << "wrote " << n << " trajectories to " << synth_out << "\n";
      }
      return 0;
    }

    if (*pre) {
      const TrainConfig cfg = pre_c.config();
      PretrainOptions po;
      po.batch_size = pre_batch;
      po.optimizer = OptimizerConfig::adam(pre_lr);
      po.grad_clip = cfg.grad_clip;
      po.sigma_train = cfg.sigma_train;
      ModelBundle b;
      b.config = cfg;
      GeneratorShape shape;
      shape.mode = parse_mode(pre_mode);
      shape.hidden = pre_hidden;
      shape.layers = pre_layers;
      shape.embed_dim = pre_embed;
      PretrainReport report;
      if (shape.mode == Mode::discrete) {
        const auto sentences = read_lines_tokens(pre_data);
        b.vocab = build_vocab(sentences, pre_vocab);
        std::vector<TokenSequence> data;
        for (const auto& s : sentences) data.push_back(encode(s, *b.vocab, pre_len));
        shape.vocab_size = b.vocab->size();
        b.steps = pre_len;
        b.gen = init_generator(shape, mix_seed(cfg.seed, 11));
        report = pretrain_mle(b.gen, data, pre_epochs, po, cfg.seed);
      } else {
        TrajectoryTask task = make_trajectory_task(load_trajectories(pre_data, pre_steps, pre_dt));
        shape.feature_dim = 2 * kFeaturesPerFighter;
        b.steps = task.steps;
        b.dt = task.dt;
        b.scaler = task.scaler;
        b.gen = init_generator(shape, mix_seed(cfg.seed, 11));
        report = pretrain_mle(b.gen, task.train, pre_epochs, po, cfg.seed);
      }
      for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
        out << "epoch " << e + 1 << " loss " << report.epoch_losses[e] << "\n";
      }
      save_bundle(pre_out, b);
      out << "saved " << pre_out << "\n";
      return 0;
    }

    if (*tr) {
      TrainConfig cfg = tr_c.config();
      ModelBundle b = load_bundle(tr_ckpt);
      AdversarialOptions ao;
      ao.batch_size = tr_batch;
      ao.gen_optimizer = OptimizerConfig::sgd(tr_lr, 0.9);
      ao.disc_optimizer = OptimizerConfig::sgd(tr_lr, 0.9);
      DiscriminatorShape dshape{b.gen.shape.output_dim(), 32, tr_disc_hidden};
      DiscriminatorParams disc = b.disc ? *b.disc : init_discriminator(dshape, mix_seed(cfg.seed, 13));
      RunManifest manifest;
      if (b.gen.shape.mode == Mode::discrete) {
        if (!b.vocab) throw ValidationError("checkpoint has no vocabulary: " + tr_ckpt);
        std::vector<TokenSequence> data;
        for (const auto& s : read_lines_tokens(tr_data)) data.push_back(encode(s, *b.vocab, b.steps));
        Rng rng(mix_seed(cfg.seed, 0x7265));
        std::vector<std::vector<int>> refs;
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < tr_refs; ++i) {
          refs.push_back(strip_padding(data[order[i]], b.vocab->pad_id()));
        }
        auto index = std::make_shared<const BleuReferences>(refs, tr_bleu);
        manifest = train_adversarial(b.gen, disc, data, cfg, ao, tr_steps,
                                     make_bleu_reward(index, tr_bleu, b.vocab->pad_id()), b.trained_steps);
      } else {
        if (!b.scaler) throw ValidationError("checkpoint has no feature scaler: " + tr_ckpt);
        const auto records = load_trajectories(tr_data, b.steps, b.dt);
        std::vector<RealSequence> data;
        for (const auto& r : records) data.push_back(b.scaler->transform(r));
        manifest = train_adversarial(b.gen, disc, data, cfg, ao, tr_steps,
                                     make_mcgrew_reward(*b.scaler, McGrewParams{}, b.dt), b.trained_steps);
      }
      b.disc = disc;
      b.config = cfg;
      b.trained_steps += tr_steps;
      save_bundle(tr_out, b);
      if (!tr_metrics.empty()) manifest.write_metrics(tr_metrics);
      if (!tr_manifest.empty()) manifest.write(tr_manifest);
      if (!manifest.rows.empty()) out << to_json(manifest.rows.back()).dump() << "\n";
      out << "saved " << tr_out << "\n";
      return 0;
    }

    if (*gencmd) {
      const TrainConfig cfg = gen_c.config();
      const ModelBundle b = load_bundle(gen_ckpt);
      const auto samples = sample_batch(b.gen, gen_count, b.steps, cfg.seed, 1.0, cfg.sigma_sample,
                                        b.config.sigma_train);
      if (b.gen.shape.mode == Mode::discrete) {
        if (!b.vocab) throw ValidationError("checkpoint has no vocabulary: " + gen_ckpt);
        for (const auto& s : samples) {
          const auto words = decode(s.tokens, *b.vocab);
          out << join_tokens(words) << "\n";
        }
      } else {
        if (!b.scaler) throw ValidationError("checkpoint has no feature scaler: " + gen_ckpt);
        const auto cols = trajectory_columns();
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
        char buf[32];
        for (const auto& s : samples) {
          const Matrix m = joint_features(b.scaler->inverse(s.values, b.dt));
          for (Eigen::Index t = 0; t < m.rows(); ++t) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
              std::snprintf(buf, sizeof buf, "%.17g", m(t, c));
              out << (c ? "," : "") << buf;
            }
            out << "\n";
          }
        }
      }
      return 0;
    }

    if (*ev) {
      const TrainConfig cfg = ev_c.config();
      const ModelBundle b = load_bundle(ev_ckpt);
      nlohmann::json j;
      if (b.gen.shape.mode == Mode::discrete) {
        if (!b.vocab) throw ValidationError("checkpoint has no vocabulary: " + ev_ckpt);
        if (ev_data.empty()) throw ValidationError("evaluate: --data is required for text checkpoints");
        std::vector<TokenSequence> data;
        std::vector<std::vector<int>> refs;
        for (const auto& s : read_lines_tokens(ev_data)) {
          data.push_back(encode(s, *b.vocab, b.steps));
          refs.push_back(strip_padding(data.back(), b.vocab->pad_id()));
        }
        const auto bleu = evaluate_bleu_suite(b.gen, refs, ev_count, b.steps, cfg.seed);
        j = {{"nll_gen", evaluate_nll_gen(b.gen, data)},
             {"bleu2", bleu[0]}, {"bleu3", bleu[1]}, {"bleu4", bleu[2]}, {"bleu5", bleu[3]}};
      } else {
        if (!b.scaler) throw ValidationError("checkpoint has no feature scaler: " + ev_ckpt);
        j = {{"mcgrew", evaluate_mcgrew(b.gen, *b.scaler, ev_count, b.steps, b.dt, cfg.sigma_sample,
                                        McGrewParams{}, cfg.seed)}};
        if (!ev_data.empty()) {
          const auto records = load_trajectories(ev_data, b.steps, b.dt);
          std::vector<RealSequence> data;
          for (const auto& r : records) data.push_back(b.scaler->transform(r));
          j["nll_gen"] = evaluate_nll_gen(b.gen, data, b.config.sigma_train, cfg.seed);
        }
      }
      out << j.dump() << "\n";
      return 0;
    }

    if (*sc) {
      sc_c.config();
      if (sc_kind == "bleu") {
        if (sc_cands.empty() || sc_refs.empty()) throw ValidationError("score: --candidates and --references are required");
        const auto cands = read_lines_tokens(sc_cands);
        const auto refs = read_lines_tokens(sc_refs);
        std::vector<std::vector<int>> ref_ids;
        const auto cand_ids = intern_tokens(cands, refs, ref_ids);
        const BleuReferences index(ref_ids, sc_n);
        const auto scores = batch_bleu(cand_ids, index, BleuConfig::uniform(sc_n));
        double sum = 0.0;
        for (double s : scores) {
          out << s << "\n";
          sum += s;
        }
        out << "mean_bleu" << sc_n << "_percent " << 100.0 * sum / static_cast<double>(scores.size()) << "\n";
      } else {
        if (sc_data.empty()) throw ValidationError("score: --data is required for mcgrew");
        const auto records = load_trajectories(sc_data);
        if (records.empty()) throw ValidationError("score: no trajectories in " + sc_data);
        const auto means = batch_mcgrew(records, McGrewParams{});
        double sum = 0.0;
        for (double m : means) {
          out << 10.0 * m << "\n";
          sum += 10.0 * m;
        }
        out << "mean_mcgrew " << sum / static_cast<double>(means.size()) << "\n";
      }
      return 0;
    }

    if (*vt) {
      const TrainConfig cfg = vt_c.config();
      const TheoryReport r = verify_theory(cfg.seed, vt_pairs);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3e", r.max_identity_residual);
      out << "pairs " << r.pairs << "\n";
      out << "max identity residual " << buf << "\n";
      std::snprintf(buf, sizeof buf, "%.3e", r.max_grid_violation);
      out << "max grid violation " << buf << "\n";
      const bool ok = r.max_identity_residual < 1e-9 && r.max_grid_violation <= 1e-12;
      out << (ok ? "identity holds" : "identity FAILED") << "\n";
      return ok ? 0 : 2;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace goalseq
