#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include "tgc/core/parallel.hpp"
#include "tgc/data/dataset.hpp"
#include "tgc/eval/gam.hpp"
#include "tgc/eval/gradsuite.hpp"
#include "tgc/text/pretrain.hpp"
#include "tgc/train/trainer.hpp"

#ifndef TGC_VERSION
#define TGC_VERSION "0.0.0"
#endif
#ifndef TGC_GIT_REV
#define TGC_GIT_REV "unknown"
#endif

namespace tgc::cli {

namespace fs = std::filesystem;

inline std::string quote_arg(const std::string& a) {
  if (!a.empty() && a.find_first_of(" \t\"'\\$") == std::string::npos) return a;
  std::string q = "'";
  for (char c : a) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

/// <out>/run.manifest: command line, version, seed and any extra lines.
inline void write_run_manifest(const fs::path& out, const std::string& command, const std::vector<std::string>& args,
                               std::uint64_t seed, const std::string& extra = "") {
  fs::create_directories(out);
  std::ofstream m(out / "run.manifest");
  std::string joined;
  for (const auto& a : args) joined += (joined.empty() ? "" : " ") + quote_arg(a);
  m << "command = " << command << "\n"
    << "args = " << joined << "\n"
    << "version = " << TGC_VERSION << "\n"
    << "git_rev = " << TGC_GIT_REV << "\n"
    << "seed = " << seed << "\n"
    << "threads = " << num_threads() << "\n"
    << extra;
  if (!m) throw IoError("cannot write " + (out / "run.manifest").string());
}

/// Captions listed in a dataset manifest, without loading the videos.
inline std::vector<std::string> manifest_captions(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab != std::string::npos) out.push_back(line.substr(tab + 1));
  }
  return out;
}

inline std::vector<std::string> distinct(const std::vector<std::string>& v) {
  std::set<std::string> s;
  for (const auto& c : v) s.insert(normalize_caption(c));
  return {s.begin(), s.end()};
}

struct ModelHandle {
  fs::path checkpoint, encoder;
};

/// Accepts a run directory (uses its latest checkpoint and encoder/) or a
/// checkpoint directory (encoder from `encoder` or <run>/encoder).
inline ModelHandle resolve_model(const fs::path& p, const fs::path& encoder = {}) {
  ModelHandle h;
  if (fs::exists(p / "latest")) {
    std::ifstream in(p / "latest");
    std::string rel;
    std::getline(in, rel);
    h.checkpoint = p / rel;
    h.encoder = p / "encoder";
  } else if (fs::exists(p / "checkpoint.manifest")) {
    h.checkpoint = p;
    h.encoder = p.parent_path().parent_path() / "encoder";
  } else {
    throw IoError(p.string() + " is neither a run directory nor a checkpoint");
  }
  if (!encoder.empty()) h.encoder = encoder;
  return h;
}

inline int cmd_dataset(const std::string& preset_name, std::uint64_t seed, const fs::path& out,
                       const std::string& format, const std::string& idx_images, const std::string& idx_labels,
                       long count, long heldout, const std::vector<std::string>& args) {
  auto preset = dataset_preset(preset_name);
  if (count >= 0) preset.train_count = static_cast<std::size_t>(count);
  if (heldout >= 0) preset.heldout_count = static_cast<std::size_t>(heldout);
  if (idx_images.empty() != idx_labels.empty()) throw InputError("--idx-images and --idx-labels go together");
  SpriteSet source;
  if (!idx_images.empty()) source = load_sprites_idx(idx_images, idx_labels);
  const auto sprites = sprites_for(preset, idx_images.empty() ? nullptr : &source);
  const auto fmt = parse_video_format(format);
  write_run_manifest(out, "dataset", args, seed,
                     "preset = " + preset.name + "\nformat = " + format + "\ntrain_count = " +
                         std::to_string(preset.train_count) + "\nheldout_count = " +
                         std::to_string(preset.heldout_count) + "\nsprites = " +
                         (idx_images.empty() ? std::string("builtin") : idx_images) + "\n");
  const auto train = generate_split(preset, seed, false, sprites);
  write_split(out, "train", "manifest.tsv", train, fmt);
  const auto held = generate_split(preset, seed, true, sprites);
  if (!held.empty()) write_split(out, "heldout", "heldout.tsv", held, fmt);
  std::vector<std::string> caps;
  for (const auto& v : train) caps.push_back(v.caption);
  std::ofstream c(out / "captions.txt");
  for (const auto& s : distinct(caps)) c << s << "\n";
  std::printf("wrote %zu training and %zu held-out videos to %s\n", train.size(), held.size(), out.string().c_str());
  return 0;
}

inline int cmd_pretrain(const std::string& dataset, const std::string& corpus_file, const fs::path& out,
                        const PretrainOptions& opt, const TextEncoderConfig& ecfg,
                        const std::vector<std::string>& args) {
  if (dataset.empty() == corpus_file.empty()) throw InputError("pass exactly one of --dataset or --corpus");
  std::vector<std::string> texts;
  if (!dataset.empty()) {
    texts = manifest_captions(fs::path(dataset) / "manifest.tsv");
    if (fs::exists(fs::path(dataset) / "heldout.tsv")) {
      const auto h = manifest_captions(fs::path(dataset) / "heldout.tsv");
      texts.insert(texts.end(), h.begin(), h.end());
    }
  } else {
    std::ifstream in(corpus_file);
    if (!in) throw IoError("cannot read corpus " + corpus_file);
    for (std::string line; std::getline(in, line);) {
      if (!split_words(line).empty()) texts.push_back(line);
    }
  }
  texts = distinct(texts);
  if (texts.empty()) throw InputError("no captions to pretrain on");
  write_run_manifest(out, "pretrain-text", args, opt.seed,
                     "epochs = " + std::to_string(opt.epochs) + "\nlearning_rate = " + config_detail::num(opt.learning_rate) +
                         "\nembed_dim = " + std::to_string(ecfg.embed_dim) + "\nhidden = " +
                         std::to_string(ecfg.hidden) + "\ncaptions = " + std::to_string(texts.size()) + "\n");
  Rng rng(derive_seed(opt.seed, 0));
  TextEncoder<float> enc(Vocabulary::build(texts), ecfg, rng);
  std::vector<Caption> corpus;
  for (const auto& t : texts) corpus.push_back(tokenize(t, enc.vocab()));
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = pretrain_autoencoder(enc, corpus, opt);
  enc.save(out);
  std::ofstream csv(out / "pretrain.csv");
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) csv << e + 1 << "," << config_detail::num(rep.epoch_loss[e]) << "\n";
  std::ofstream(out / "pretrain.txt") << "captions " << rep.captions << "\nvocabulary " << enc.vocab().size()
                                      << "\naccuracy " << rep.accuracy << "\nchance " << rep.chance << "\n";
  std::printf("pretrained on %zu captions: reconstruction accuracy %.4f (chance %.4f), %.1fs\n", rep.captions,
              rep.accuracy, rep.chance,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

struct TrainArgs {
  std::string config, preset = "desk", scheme, dataset, encoder, heldout;
  fs::path out;
  long iterations = -1, seed = -1;
  std::vector<std::string> sets;
  bool resume = false, quiet = false;
};

inline TrainConfig resolve_train_config(const TrainArgs& a) {
  TrainConfig cfg = preset_config(a.preset);
  if (!a.config.empty()) apply_config_file(cfg, a.config);
  if (!a.scheme.empty()) apply_setting(cfg, "scheme", a.scheme);
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  if (!a.heldout.empty()) cfg.heldout = a.heldout;
  if (!a.encoder.empty()) cfg.encoder = a.encoder;
  if (a.iterations >= 0) cfg.iterations = static_cast<std::size_t>(a.iterations);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, config_detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  return cfg;
}

inline int cmd_train(const TrainArgs& a, const std::vector<std::string>& args) {
  const TrainConfig cfg = resolve_train_config(a);
  if (cfg.dataset.empty()) throw ConfigError("no dataset: pass --dataset or set dataset in the config");
  if (cfg.encoder.empty()) throw ConfigError("no text encoder: pass --encoder (see pretrain-text)");
  std::optional<Checkpoint> resume_from;
  if (a.resume) {
    if (!fs::exists(a.out / "latest")) throw IoError("nothing to resume in " + a.out.string());
    resume_from = load_checkpoint(resolve_model(a.out).checkpoint);
  }
  std::string extra = "config_hash = " + hex64(config_hash(cfg)) + "\n";
  std::istringstream ct(config_text(cfg));
  for (std::string line; std::getline(ct, line);) extra += "config." + line + "\n";
  if (resume_from) extra += "resumed_from = " + std::to_string(resume_from->iteration) + "\n";
  write_run_manifest(a.out, "train", args, cfg.seed, extra);

  const auto shape = cfg.model.video_shape();
  auto data = load_split(cfg.dataset, "manifest.tsv", shape[2], shape[3]);
  std::vector<std::string> probes;
  const fs::path held = !cfg.heldout.empty() ? fs::path(cfg.heldout) : fs::path(cfg.dataset) / "heldout.tsv";
  if (fs::exists(held)) probes = distinct(manifest_captions(held));
  auto enc = TextEncoder<float>::load(cfg.encoder);
  Trainer t(cfg, std::move(data), std::move(enc), probes);
  if (resume_from) t.restore(std::move(*resume_from));
  const std::size_t every = std::max<std::size_t>(1, cfg.iterations / 20);
  const auto t0 = std::chrono::steady_clock::now();
  t.run(a.out, [&](const StepReport& r) {
    if (a.quiet || (r.iteration % every != 0 && r.iteration != cfg.iterations)) return;
    std::printf("iter %zu/%zu  loss_d %.4f  loss_g %.4f  l_v %.4f  l_f %.4f  l_t %.4f  %.1fs\n", r.iteration,
                cfg.iterations, r.loss_d, r.loss_g, r.l_v, r.l_f, r.l_t,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::fflush(stdout);
  });
  std::printf("run written to %s\n", a.out.string().c_str());
  return 0;
}

inline int cmd_generate(const std::string& run, const std::string& checkpoint, const std::string& encoder,
                        const std::vector<std::string>& captions, std::uint64_t seed, std::size_t count,
                        const fs::path& out, const std::string& format, const std::vector<std::string>& args) {
  if (run.empty() == checkpoint.empty()) throw InputError("pass exactly one of --run or --checkpoint");
  if (captions.empty()) throw InputError("pass at least one --caption");
  const auto h = resolve_model(run.empty() ? fs::path(checkpoint) : fs::path(run), encoder);
  const auto fmt = parse_video_format(format);
  write_run_manifest(out, "generate", args, seed,
                     "checkpoint = " + h.checkpoint.string() + "\nencoder = " + h.encoder.string() + "\n");
  auto ckpt = load_checkpoint(h.checkpoint);
  const auto enc = TextEncoder<float>::load(h.encoder);
  if (enc.params().fingerprint() != ckpt.encoder_fingerprint) {
    std::cerr << "warning: encoder differs from the one the checkpoint was trained with\n";
  }
  std::ofstream listing(out / "samples.tsv");
  std::size_t k = 0;
  for (const auto& cap : captions) {
    for (std::size_t i = 0; i < count; ++i, ++k) {
      const std::uint64_t s = seed + i;
      const auto v = generate_from_caption(cap, ckpt.generator, enc, s);
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%03zu", k);
      const std::string file = std::string(name) + video_extension(fmt);
      export_video(v, out / file, fmt);
      listing << file << "\t" << cap << "\t" << s << "\n";
    }
  }
  std::printf("wrote %zu videos to %s\n", k, out.string().c_str());
  return 0;
}

inline int cmd_battle(const std::string& m1, const std::string& m2, const std::string& e1, const std::string& e2,
                      const fs::path& test, const std::string& manifest, std::size_t samples, std::uint64_t seed,
                      double tolerance, const fs::path& out, const std::vector<std::string>& args) {
  const auto h1 = resolve_model(m1, e1), h2 = resolve_model(m2, e2);
  const std::string man = !manifest.empty() ? manifest : fs::exists(test / "heldout.tsv") ? "heldout.tsv" : "manifest.tsv";
  write_run_manifest(out, "battle", args, seed,
                     "m1 = " + h1.checkpoint.string() + "\nm2 = " + h2.checkpoint.string() + "\ntest = " +
                         (test / man).string() + "\nsamples = " + std::to_string(samples) +
                         "\ntolerance = " + config_detail::num(tolerance) + "\n");
  auto c1 = std::make_shared<Checkpoint>(load_checkpoint(h1.checkpoint));
  auto c2 = std::make_shared<Checkpoint>(load_checkpoint(h2.checkpoint));
  const auto shape = c1->config.model.video_shape();
  const auto data = load_split(test, man, shape[2], shape[3]);
  const auto b1 = battle_model(c1, std::make_shared<TextEncoder<float>>(TextEncoder<float>::load(h1.encoder)));
  const auto b2 = battle_model(c2, std::make_shared<TextEncoder<float>>(TextEncoder<float>::load(h2.encoder)));
  const auto r = battle(b1, b2, data, samples, seed, tolerance);
  std::ofstream(out / "battle.csv") << battle_csv_header() << "\n" << battle_csv_row(r) << "\n";
  std::ofstream(out / "battle.txt") << battle_text(r);
  std::cout << battle_text(r);
  return 0;
}

inline int cmd_gradcheck(std::uint64_t seed, std::size_t instances, double tolerance, const std::string& filter,
                         const fs::path& out, const std::vector<std::string>& args) {
  write_run_manifest(out, "gradcheck", args, seed,
                     "instances = " + std::to_string(instances) + "\ntolerance = " + config_detail::num(tolerance) + "\n");
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_gradient_suite(seed, instances, tolerance, filter);
  if (res.empty()) throw InputError("no gradient case matches '" + filter + "'");
  std::ofstream csv(out / "gradcheck.csv");
  csv << "case,instances,coordinates,kinks,max_rel_error,pass\n";
  std::size_t failed = 0;
  for (const auto& r : res) {
    csv << r.name << "," << r.instances << "," << r.coordinates << "," << r.kinks << ","
        << config_detail::num(r.max_rel_error) << "," << (r.pass ? 1 : 0) << "\n";
    std::printf("%-36s %s  max rel error %.3g over %zu coordinates\n", r.name.c_str(), r.pass ? "ok  " : "FAIL",
                r.max_rel_error, r.coordinates);
    failed += !r.pass;
  }
  std::printf("%zu/%zu cases within %.0e, %.1fs\n", res.size() - failed, res.size(), tolerance,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  if (failed) throw NumericError(std::to_string(failed) + " gradient case(s) exceed the tolerance");
  return 0;
}

/// Entry point. Returns 0 on success, 1 on a library error (printed as
/// "error: <kind>: <message>") and 2 on a usage error.
inline int run(int argc, char** argv) {
  configure_threads_from_env();
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"tgc: caption-conditioned video GAN toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TGC_VERSION) + " (" + TGC_GIT_REV + ")");

  std::string out;
  std::uint64_t seed = 1;

  auto* ds = app.add_subcommand("dataset", "Render a bouncing-digit video dataset");
  std::string preset = "sbmg-desk", format = "gif", idx_images, idx_labels;
  long count = -1, heldout = -1;
  ds->add_option("--preset", preset, "sbmg-desk, sbmg, tbmg or tbmg-desk")->capture_default_str();
  ds->add_option("--seed", seed, "Dataset seed")->capture_default_str();
  ds->add_option("--out", out, "Output directory")->required();
  ds->add_option("--format", format, "gif, pnm or raw")->capture_default_str();
  ds->add_option("--idx-images", idx_images, "IDX image file for digit sprites");
  ds->add_option("--idx-labels", idx_labels, "IDX label file for digit sprites");
  ds->add_option("--count", count, "Override the training-split size");
  ds->add_option("--heldout", heldout, "Override the held-out split size");

  auto* pt = app.add_subcommand("pretrain-text", "Pretrain the sentence encoder as a sequence autoencoder");
  std::string pt_dataset, pt_corpus;
  PretrainOptions popt;
  TextEncoderConfig ecfg;
  pt->add_option("--dataset", pt_dataset, "Dataset directory whose captions form the corpus");
  pt->add_option("--corpus", pt_corpus, "Text file with one caption per line");
  pt->add_option("--epochs", popt.epochs)->capture_default_str();
  pt->add_option("--lr", popt.learning_rate)->capture_default_str();
  pt->add_option("--batch", popt.batch_size)->capture_default_str();
  pt->add_option("--seed", popt.seed)->capture_default_str();
  pt->add_option("--embed-dim", ecfg.embed_dim)->capture_default_str();
  pt->add_option("--hidden", ecfg.hidden, "Sentence embedding width (must equal s_dim)")->capture_default_str();
  pt->add_option("--out", out, "Encoder output directory")->required();

  auto* tr = app.add_subcommand("train", "Adversarial training");
  TrainArgs ta;
  tr->add_option("--config", ta.config, "Config file of key = value lines");
  tr->add_option("--preset", ta.preset, "desk or paper")->capture_default_str();
  tr->add_option("--scheme", ta.scheme, "tgans-c-1, tgans-c-2, tgans-c-c or tgans-c-a");
  tr->add_option("--dataset", ta.dataset, "Dataset directory");
  tr->add_option("--heldout", ta.heldout, "Held-out manifest whose captions seed the sample probes");
  tr->add_option("--encoder", ta.encoder, "Pretrained text encoder directory");
  tr->add_option("--out", ta.out, "Run directory")->required();
  tr->add_option("--iterations", ta.iterations);
  tr->add_option("--seed", ta.seed);
  tr->add_option("--set", ta.sets, "Override a config key (key=value), repeatable");
  tr->add_flag("--resume", ta.resume, "Continue from <out>/latest");
  tr->add_flag("--quiet", ta.quiet, "No progress lines");

  auto* gen = app.add_subcommand("generate", "Generate videos from captions");
  std::string g_run, g_ckpt, g_enc, g_format = "gif";
  std::vector<std::string> g_caps;
  std::size_t g_count = 1;
  gen->add_option("--run", g_run, "Run directory (latest checkpoint)");
  gen->add_option("--checkpoint", g_ckpt, "Checkpoint directory");
  gen->add_option("--encoder", g_enc, "Text encoder directory (default: the run's)");
  gen->add_option("--caption", g_caps, "Caption, repeatable")->required();
  gen->add_option("--seed", seed, "Noise seed; sample i uses seed + i")->capture_default_str();
  gen->add_option("--count", g_count, "Videos per caption")->capture_default_str();
  gen->add_option("--format", g_format, "gif, pnm or raw")->capture_default_str();
  gen->add_option("--out", out, "Output directory")->required();

  auto* bt = app.add_subcommand("battle", "Generative adversarial metric between two models");
  std::string m1, m2, e1, e2, test, test_manifest;
  std::size_t samples = 256;
  double tolerance = 0.1;
  bt->add_option("--m1", m1, "Run or checkpoint directory")->required();
  bt->add_option("--m2", m2, "Run or checkpoint directory")->required();
  bt->add_option("--e1", e1, "Encoder for M1 (default: from its run)");
  bt->add_option("--e2", e2, "Encoder for M2 (default: from its run)");
  bt->add_option("--test", test, "Dataset directory")->required();
  bt->add_option("--manifest", test_manifest, "Manifest inside --test (default heldout.tsv)");
  bt->add_option("--samples", samples)->capture_default_str();
  bt->add_option("--seed", seed)->capture_default_str();
  bt->add_option("--tolerance", tolerance)->capture_default_str();
  bt->add_option("--out", out, "Output directory")->required();

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  std::size_t instances = 20;
  double gc_tol = 1e-4;
  std::string filter;
  gc->add_option("--seed", seed)->capture_default_str();
  gc->add_option("--instances", instances)->capture_default_str();
  gc->add_option("--tolerance", gc_tol)->capture_default_str();
  gc->add_option("--filter", filter, "Only cases whose name contains this");
  gc->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage_error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try {
    if (*ds) return cmd_dataset(preset, seed, out, format, idx_images, idx_labels, count, heldout, args);
    if (*pt) return cmd_pretrain(pt_dataset, pt_corpus, out, popt, ecfg, args);
    if (*tr) return cmd_train(ta, args);
    if (*gen) return cmd_generate(g_run, g_ckpt, g_enc, g_caps, seed, g_count, out, g_format, args);
    if (*bt) return cmd_battle(m1, m2, e1, e2, test, test_manifest, samples, seed, tolerance, out, args);
    if (*gc) return cmd_gradcheck(seed, instances, gc_tol, filter, out, args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io_error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal_error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tgc::cli
