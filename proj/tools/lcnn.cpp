// lcnn: synthesize data, train, caption, evaluate, gradient-check.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "lcnn/checkpoint.hpp"
#include "lcnn/decoder.hpp"
#include "lcnn/errors.hpp"
#include "lcnn/gradcheck.hpp"
#include "lcnn/metrics.hpp"
#include "lcnn/run_config.hpp"
#include "lcnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace lcnn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Thrown for bad input that is not the fault of a particular file.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool has_key(const KeyValues& kv, const std::string& key) {
  for (const auto& entry : kv) {
    if (entry.first == key) return true;
  }
  return false;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw DataError("missing file " + p.string());
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 7;
  std::size_t n_images = 32;
  std::size_t grammar_size = 8;
  std::string out;
  bool force = false;
};

int run_synth(const SynthArgs& a) {
  if (a.n_images == 0) throw UsageError("--n-images must be positive");
  const fs::path out(a.out);
  if (fs::exists(out) && !fs::is_empty(out) && !a.force) {
    throw RefusalError("output directory " + out.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(out);
  const SynthCorpus corpus = synth_corpus(a.seed, a.n_images, a.grammar_size);
  save_captions(corpus.captions, out / "captions.tsv");
  save_features(corpus.features, out / "features.tsv");
  save_splits(assign_splits(corpus.features.ids(), a.seed), out / "splits.tsv");
  std::cout << "wrote " << corpus.captions.size() << " captions for " << corpus.features.size() << " images to "
            << out.string() << '\n';
  return 0;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::vector<std::string> overrides;
};

int run_train(const TrainArgs& a) {
  RunConfig config;
  KeyValues given;
  if (!a.config.empty()) {
    if (!fs::is_regular_file(a.config)) throw DataError("missing config file " + a.config);
    given = read_key_values(a.config);
    apply_key_values(config, given);
  }
  KeyValues overrides;
  for (const auto& o : a.overrides) overrides.push_back(parse_override(o));
  apply_key_values(config, overrides);
  given.insert(given.end(), overrides.begin(), overrides.end());

  const fs::path data(a.data);
  require_file(data / "captions.tsv");
  require_file(data / "features.tsv");
  const std::vector<RawCaption> captions = load_captions(data / "captions.tsv");
  const FeatureStore features = load_features(data / "features.tsv");
  std::map<std::string, std::string> split_of;
  if (fs::exists(data / "splits.tsv")) {
    for (const auto& [id, split] : load_splits(data / "splits.tsv")) split_of[id] = split;
  }
  std::vector<RawCaption> train_raw, val_raw;
  for (const RawCaption& c : captions) {
    const auto it = split_of.find(c.image_id);
    const std::string split = it == split_of.end() ? "train" : it->second;
    if (split == "train") train_raw.push_back(c);
    else if (split == "val") val_raw.push_back(c);
  }
  if (train_raw.empty()) throw DataError("no training captions in " + data.string());
  // Without a validation split, early stopping watches the training images.
  if (val_raw.empty()) val_raw = train_raw;

  std::vector<std::string> texts;
  for (const RawCaption& c : train_raw) texts.push_back(c.text);
  const Vocabulary vocab = Vocabulary::build(texts, config.min_count);

  if (has_key(given, "model.vocab_size") && config.model.vocab_size != vocab.size()) {
    throw DataError("model.vocab_size = " + std::to_string(config.model.vocab_size) + " but the vocabulary has " +
                    std::to_string(vocab.size()) + " entries");
  }
  if (has_key(given, "model.feature_dim") && config.model.feature_dim != features.dim()) {
    throw DataError("model.feature_dim = " + std::to_string(config.model.feature_dim) + " but features have " +
                    std::to_string(features.dim()) + " values");
  }
  config.model.vocab_size = vocab.size();
  config.model.feature_dim = features.dim();
  config.model.validate();
  config.train.validate();

  const fs::path out(a.out);
  fs::create_directories(out);
  {
    std::ofstream echo(out / "config.cfg");
    echo << format_key_values(to_key_values(config));
  }
  std::cout << format_key_values(to_key_values(config));

  Dataset train_set{encode_records(vocab, train_raw, config.max_words), &features};
  Dataset val_set{encode_records(vocab, val_raw, config.max_words), &features};
  CaptionerModel model(config.model, config.seed);
  std::cout << "parameters\t" << model.parameter_count() << '\n';

  std::ofstream report_file(out / "report.tsv");
  const TrainReport report = train(model, train_set, val_set, config.train, {}, [&](const EpochLog& e) {
    TrainReport one;
    one.epochs.push_back(e);
    write_report(one, report_file);
    write_report(one, std::cout);
    report_file.flush();
  });
  save_checkpoint(out / "checkpoint", model, vocab);
  std::cout << "stop\t" << report.stop_reason << "\nbest_epoch\t" << report.best_epoch << "\nbest_cider\t"
            << report.best_cider << '\n';
  if (report.diverged) {
    std::cerr << "training diverged: " << report.stop_reason << '\n';
    return kExitNumeric;
  }
  return 0;
}

// caption -------------------------------------------------------------------

struct CaptionArgs {
  std::string ckpt;
  std::string features;
  std::size_t beam = 2;
  std::size_t max_len = kDefaultMaxWords;
  std::string out;
};

int run_caption(const CaptionArgs& a) {
  if (a.beam == 0) throw UsageError("--beam must be at least 1");
  require_file(a.features);
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const FeatureStore features = load_features(a.features);
  if (features.size() > 0 && features.dim() != ckpt.model.config().feature_dim) {
    throw DataError("features have " + std::to_string(features.dim()) + " values, checkpoint expects " +
                    std::to_string(ckpt.model.config().feature_dim));
  }
  std::ofstream file;
  if (!a.out.empty()) file.open(a.out);
  std::ostream& out = a.out.empty() ? std::cout : file;
  out.precision(17);
  for (const std::string& id : features.ids()) {
    const auto ranked = beam_search(ckpt.model, features.at(id), a.beam, a.max_len);
    out << id << '\t' << ckpt.vocab.decode_text(ranked.front().tokens) << '\t' << ranked.front().log_prob << '\n';
  }
  return 0;
}

// eval ----------------------------------------------------------------------

int run_eval(const std::string& hyp_path, const std::string& ref_path) {
  require_file(hyp_path);
  require_file(ref_path);
  // The caption file may carry a third log-probability column; keep the text.
  std::vector<RawCaption> hyps = load_captions(hyp_path);
  for (RawCaption& h : hyps) h.text = h.text.substr(0, h.text.find('\t'));
  std::map<std::string, std::vector<std::string>> refs;
  for (const RawCaption& r : load_captions(ref_path)) refs[r.image_id].push_back(r.text);
  if (hyps.empty()) throw DataError("hypothesis file " + hyp_path + " is empty");

  std::vector<std::string> cands;
  std::vector<std::vector<std::string>> ref_sets;
  std::set<std::string> seen;
  for (const RawCaption& h : hyps) {
    if (!seen.insert(h.image_id).second) throw DataError("duplicate hypothesis for image '" + h.image_id + "'");
    const auto it = refs.find(h.image_id);
    if (it == refs.end()) throw DataError("no reference captions for image '" + h.image_id + "'");
    cands.push_back(h.text);
    ref_sets.push_back(it->second);
  }
  write_metric_report(evaluate_text(cands, ref_sets), std::cout);
  return 0;
}

// gradcheck -----------------------------------------------------------------

int run_gradcheck(const std::string& config_path, const std::string& cell) {
  std::vector<CellKind> cells = {CellKind::simple_rnn, CellKind::lstm, CellKind::gru, CellKind::rhn};
  if (!cell.empty() && cell != "all") cells = {parse_cell_kind(cell)};
  KeyValues extra;
  if (!config_path.empty()) {
    if (!fs::is_regular_file(config_path)) throw DataError("missing config file " + config_path);
    extra = read_key_values(config_path);
  }
  bool ok = true;
  std::cout.precision(3);
  for (CellKind kind : cells) {
    GradcheckSettings settings = small_gradcheck_settings(kind);
    apply_model_key_values(settings.model, extra);
    settings.model.cell = kind;
    const GradcheckResult result = gradient_check(settings);
    for (const BlockError& b : result.blocks) {
      std::cout << to_string(kind) << '\t' << b.name << '\t' << std::scientific << b.relative_error << '\n';
    }
    std::cout << to_string(kind) << "\tmax\t" << result.max_relative_error << '\t'
              << (result.passed ? "ok" : "FAILED") << '\n';
    ok = ok && result.passed;
  }
  return ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-CNN image captioner"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 2 usage or configuration error, 3 missing or malformed data, 4 numeric failure.\n"
      "train: settings come from built-in defaults, then --config, then each --set in order; later values win.");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic caption corpus");
  synth_cmd->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--n-images", synth.n_images, "number of images")->capture_default_str();
  synth_cmd->add_option("--grammar-size", synth.grammar_size, "choices per caption slot (1-16)")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_flag("--force", synth.force, "write into a non-empty directory");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a captioner");
  train_cmd->add_option("--config", train_args.config, "key = value config file");
  train_cmd->add_option("--data", train_args.data, "corpus directory (captions.tsv, features.tsv, splits.tsv)")
      ->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--set", train_args.overrides, "key=value override, repeatable");

  CaptionArgs caption;
  auto* caption_cmd = app.add_subcommand("caption", "decode captions for image features");
  caption_cmd->add_option("--ckpt", caption.ckpt, "checkpoint directory")->required();
  caption_cmd->add_option("--features", caption.features, "feature TSV")->required();
  caption_cmd->add_option("--beam", caption.beam, "beam width (1 = greedy)")->capture_default_str();
  caption_cmd->add_option("--max-len", caption.max_len, "maximum caption words")->capture_default_str();
  caption_cmd->add_option("--out", caption.out, "output TSV (default stdout)");

  std::string hyp, ref;
  auto* eval_cmd = app.add_subcommand("eval", "score captions with BLEU-1..4 and CIDEr");
  eval_cmd->add_option("--hyp", hyp, "hypothesis TSV (image_id, caption[, logprob])")->required();
  eval_cmd->add_option("--ref", ref, "reference caption TSV")->required();

  std::string gc_config, gc_cell;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check on a small random model");
  gc_cmd->add_option("--config", gc_config, "model.* / cnn.* keys applied to the small default");
  gc_cmd->add_option("--cell", gc_cell, "rnn, lstm, gru, rhn or all")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train_args);
    if (caption_cmd->parsed()) return run_caption(caption);
    if (eval_cmd->parsed()) return run_eval(hyp, ref);
    if (gc_cmd->parsed()) return run_gradcheck(gc_config, gc_cell);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RefusalError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    // Missing features, empty vocabularies, dimension mismatches, I/O failures.
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
