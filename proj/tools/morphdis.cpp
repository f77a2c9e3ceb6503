#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "morphdis/corpus.hpp"
#include "morphdis/decoder.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/eval.hpp"
#include "morphdis/model.hpp"
#include "morphdis/pretrain.hpp"
#include "morphdis/synthetic.hpp"
#include "morphdis/trainer.hpp"

namespace fs = std::filesystem;
using namespace morphdis;

namespace {

enum class LogLevel { kQuiet, kInfo, kDebug };
LogLevel g_log = LogLevel::kInfo;

template <typename... Args>
void info(const Args&... args) {
  if (g_log == LogLevel::kQuiet) return;
  (std::cerr << ... << args) << '\n';
}

GoldConvention convention(bool marker) {
  return marker ? GoldConvention::kMarker : GoldConvention::kFirst;
}

// Output goes to `path`, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void close(const std::string& path) {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw Error("write to '" + path + "' failed");
    }
  }

 private:
  std::ofstream file_;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

struct TrainArgs {
  std::string train, dev, tagset, out, model, embeddings, report;
  Hyper hyper;
  TrainOptions opt;
  std::uint64_t min_root_count = 2;
  std::uint64_t seed = 1;
  bool keep_params = false;
  bool gold_marker = false;
};

int cmd_train(const TrainArgs& a) {
  const TagsetConfig cfg = load_tagset_config(a.tagset);
  const auto conv = convention(a.gold_marker);
  const auto train_sents = read_corpus_file(a.train, cfg, ReadMode::kTrain, conv);
  const auto dev_sents = read_corpus_file(a.dev, cfg, ReadMode::kEval, conv);

  ModelState init;
  if (a.keep_params) {
    init = load_model_file(a.model);
    info("continuing from ", a.model, " (vocabulary and parameters kept)");
  } else {
    Hyper h = a.hyper;
    h.seed = a.seed;
    h.validate();
    const Vocabularies vocab = build_vocabularies(train_sents, cfg, a.min_root_count);
    init = init_params(vocab, h, cfg);
  }
  init.hyper.learning_rate = a.hyper.learning_rate;

  if (!a.embeddings.empty()) {
    const RootEmbeddings emb = read_embeddings_file(a.embeddings);
    const std::size_t n = set_pretrained_roots(init, emb.to_table());
    info("initialized ", n, " of ", emb.roots.size(), " pre-trained roots");
  }

  const auto train_enc = encode_corpus(train_sents, init.tagset, init.vocab);
  const auto dev_enc = encode_corpus(dev_sents, init.tagset, init.vocab);

  TrainOptions opt = a.opt;
  opt.shuffle_seed = a.seed;
  opt.decode.jobs = opt.jobs;
  opt.on_epoch = [](const EpochStats& e) {
    TrainingReport r;
    r.epochs.push_back(e);
    r.write_lines(std::cout);
    std::cout.flush();
  };
  info("training on ", train_sents.size(), " sentences, ", dev_sents.size(),
       " dev sentences");
  TrainResult result = train(train_enc, dev_enc, std::move(init), opt);
  info("best epoch ", result.report.best_epoch);

  save_model_file(result.model, a.out);
  if (!a.report.empty()) write_text_file(a.report, result.report.to_json() + "\n");
  return 0;
}

struct DecodeArgs {
  std::string model, in, out;
  std::size_t jobs = 1;
  std::size_t max_order = 0;
  bool kscores = false;
};

int cmd_disambiguate(const DecodeArgs& a) {
  const ModelState model = load_model_file(a.model);
  const auto sents = read_corpus_file(a.in, model.tagset, ReadMode::kDecode);
  const auto enc = encode_corpus(sents, model.tagset, model.vocab);
  DecodeOptions dopt;
  dopt.jobs = a.jobs;
  dopt.max_order = a.max_order;
  const auto results = decode_corpus(enc, model, dopt);

  Output out(a.out);
  for (std::size_t i = 0; i < sents.size(); ++i) {
    Sentence chosen;
    chosen.id = sents[i].id;
    for (std::size_t t = 0; t < sents[i].tokens.size(); ++t) {
      const Token& tok = sents[i].tokens[t];
      Token one;
      one.surface = tok.surface;
      one.candidates.push_back(tok.candidates[results[i].choice[t]]);
      one.gold = 0;
      chosen.tokens.push_back(std::move(one));
    }
    write_corpus(out.stream(), {chosen});
    if (a.kscores) {
      char buf[64];
      for (std::size_t t = 0; t < results[i].token_scores.size(); ++t) {
        std::snprintf(buf, sizeof buf, "# score %zu %.17g\n", t + 1,
                      results[i].token_scores[t]);
        out.stream() << buf;
      }
    }
  }
  out.close(a.out);
  info("disambiguated ", sents.size(), " sentences");
  return 0;
}

struct EvalArgs {
  std::string gold, pred, model, tagset, report;
  std::size_t jobs = 1;
  bool gold_marker = false;
};

int cmd_evaluate(const EvalArgs& a) {
  Metrics m;
  if (!a.model.empty()) {
    const ModelState model = load_model_file(a.model);
    const auto gold =
        read_corpus_file(a.gold, model.tagset, ReadMode::kEval, convention(a.gold_marker));
    DecodeOptions dopt;
    dopt.jobs = a.jobs;
    const auto pred =
        decode_corpus(encode_corpus(gold, model.tagset, model.vocab), model, dopt);
    m = evaluate(gold, pred, model.tagset);
  } else {
    const TagsetConfig cfg = load_tagset_config(a.tagset);
    const auto gold =
        read_corpus_file(a.gold, cfg, ReadMode::kEval, convention(a.gold_marker));
    const auto pred = read_corpus_file(a.pred, cfg, ReadMode::kEval);
    m = evaluate(gold, pred, cfg);
  }
  std::cout << format_metrics_table(m);
  if (!a.report.empty()) write_text_file(a.report, metrics_json(m) + "\n");
  return 0;
}

struct PretrainArgs {
  std::string in, out, model, tagset, roots;
  SkipgramOptions opt;
  std::size_t jobs = 1;
  bool gold_marker = false;
};

int cmd_pretrain(const PretrainArgs& a) {
  RootStream stream;
  if (!a.roots.empty()) {
    std::ifstream in(a.roots, std::ios::binary);
    if (!in) throw Error("cannot open '" + a.roots + "'");
    stream = read_root_stream(in);
  } else if (!a.model.empty()) {
    const ModelState model = load_model_file(a.model);
    const auto sents = read_corpus_file(a.in, model.tagset, ReadMode::kDecode);
    DecodeOptions dopt;
    dopt.jobs = a.jobs;
    const auto decoded =
        decode_corpus(encode_corpus(sents, model.tagset, model.vocab), model, dopt);
    stream = extract_roots(sents, decoded);
  } else {
    const TagsetConfig cfg = load_tagset_config(a.tagset);
    stream = extract_roots(
        read_corpus_file(a.in, cfg, ReadMode::kTrain, convention(a.gold_marker)));
  }
  if (a.jobs > 1) info("note: skip-gram training is single-threaded; --jobs only affects decoding");

  const RootEmbeddings emb = train_skipgram(stream, a.opt);
  write_embeddings_file(a.out, emb);
  info("wrote ", emb.roots.size(), " root vectors of dimension ", emb.dim());
  return 0;
}

struct InspectArgs {
  std::string model, embeddings, query;
  std::size_t k = 10;
};

void print_neighbors(const std::vector<std::pair<std::string, double>>& nn) {
  char buf[64];
  for (const auto& [root, cos] : nn) {
    std::snprintf(buf, sizeof buf, "%.6f", cos);
    std::cout << "  " << root << ' ' << buf << '\n';
  }
}

int cmd_inspect(const InspectArgs& a) {
  if (!a.model.empty()) {
    std::cout << read_model_header(a.model) << '\n';
    const ModelState model = load_model_file(a.model);
    std::cout << "vocabulary sizes:\n";
    for (Slot s : kSlotOrder)
      if (model.tagset.is_active(s))
        std::cout << "  " << slot_name(s) << ' ' << model.vocab[s].size() << '\n';
    if (!a.query.empty()) {
      const SlotVocab& roots = model.vocab[Slot::kRoot];
      const Matrix& table = model.params.embeddings[slot_index(Slot::kRoot)];
      std::vector<std::string> names;
      Matrix vecs(roots.size() - SlotVocab::kNumReserved, table.cols());
      for (std::uint32_t id = SlotVocab::kNumReserved; id < roots.size(); ++id) {
        names.push_back(roots.value(id));
        auto src = table.row(id);
        std::copy(src.begin(), src.end(), vecs.row(id - SlotVocab::kNumReserved).begin());
      }
      std::cout << "nearest to " << a.query << ":\n";
      print_neighbors(nearest_neighbors(names, vecs, a.query, a.k));
    }
  }
  if (!a.embeddings.empty()) {
    const RootEmbeddings emb = read_embeddings_file(a.embeddings);
    std::cout << "embeddings: " << emb.roots.size() << " roots, dimension " << emb.dim()
              << '\n';
    if (!a.query.empty()) {
      std::cout << "nearest to " << a.query << ":\n";
      print_neighbors(nearest_neighbors(emb.roots, emb.vectors, a.query, a.k));
    }
  }
  return 0;
}

struct SynthArgs {
  std::string out;
  SyntheticOptions opt;
  bool gold_marker = false;
};

int cmd_synth(const SynthArgs& a) {
  const auto sents = synthetic_corpus(a.opt, turkish_tagset());
  Output out(a.out);
  write_corpus(out.stream(), sents, convention(a.gold_marker));
  out.close(a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural morphological disambiguation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Progress messages on stderr")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->capture_default_str();

  auto existing = CLI::ExistingFile;

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model on a labeled corpus");
  train->add_option("--train", ta.train, "Labeled training corpus")->required()->check(existing);
  train->add_option("--dev", ta.dev, "Labeled development corpus")->required()->check(existing);
  train->add_option("--tagset", ta.tagset, "Tagset configuration file")
      ->required()
      ->check(existing);
  train->add_option("--out", ta.out, "Model file to write")->required();
  train->add_option("--model", ta.model, "Existing model, used with --keep-params")
      ->check(existing);
  train->add_option("--embeddings", ta.embeddings, "Pre-trained root embeddings")
      ->check(existing);
  train->add_option("--report", ta.report, "Write the JSON training report here");
  train->add_option("--window", ta.hyper.window, "Window length n")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  train->add_option("--root-dim", ta.hyper.root_dim, "Root embedding size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--pos-dim", ta.hyper.pos_dim, "Main/minor POS embedding size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--feat-dim", ta.hyper.feat_dim, "Other feature embedding size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--h1", ta.hyper.h1, "Per-word hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--h2", ta.hyper.h2, "Window hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lr", ta.hyper.learning_rate, "AdaGrad learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--epochs", ta.opt.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--neg-cap", ta.opt.neg_cap, "Negative windows kept per position")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--min-root-count", ta.min_root_count, "Rarer roots map to UNK")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--seed", ta.seed, "Seed for initialization and shuffling")
      ->capture_default_str();
  train->add_option("--jobs", ta.opt.jobs,
                    "Threads; values above 1 compute gradients in parallel blocks and "
                    "give results that differ from the single-threaded run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_flag("--keep-params", ta.keep_params,
                  "Continue from --model instead of re-initializing");
  train->add_flag("--gold-marker", ta.gold_marker,
                  "Gold analyses are marked with a leading '*' instead of listed first");

  DecodeArgs da;
  auto* dis = app.add_subcommand("disambiguate", "Choose one analysis per token");
  dis->add_option("--model", da.model, "Model file")->required()->check(existing);
  dis->add_option("--in", da.in, "Corpus to disambiguate")->required()->check(existing);
  dis->add_option("--out", da.out, "Output corpus (default stdout)");
  dis->add_option("--jobs", da.jobs, "Sentences decoded in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dis->add_option("--order", da.max_order,
                  "Lattice state order; 0 picks the default for the model's window")
      ->capture_default_str();
  dis->add_flag("--kscores", da.kscores, "Append '# score <t> <logp>' lines per sentence");

  EvalArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Score predictions against a gold corpus");
  ev->add_option("--gold,--in", ea.gold, "Gold corpus")->required()->check(existing);
  auto* pred_opt = ev->add_option("--pred", ea.pred, "Disambiguated corpus")->check(existing);
  auto* model_opt =
      ev->add_option("--model", ea.model, "Decode the gold corpus with this model instead")
          ->check(existing);
  ev->add_option("--tagset", ea.tagset, "Tagset configuration file (with --pred)")
      ->check(existing);
  ev->add_option("--report", ea.report, "Write metrics JSON here");
  ev->add_option("--jobs", ea.jobs, "Sentences decoded in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev->add_flag("--gold-marker", ea.gold_marker, "Gold corpus uses '*' markers");
  pred_opt->excludes(model_opt);

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "Learn root embeddings with skip-gram");
  auto* in_opt = pre->add_option("--in", pa.in, "Corpus")->check(existing);
  auto* roots_opt =
      pre->add_option("--roots", pa.roots, "Plain root stream, one sentence per line")
          ->check(existing);
  pre->add_option("--out", pa.out, "Embedding file to write")->required();
  pre->add_option("--model", pa.model, "Disambiguate --in with this model first")
      ->check(existing);
  pre->add_option("--tagset", pa.tagset, "Read --in as a labeled corpus")->check(existing);
  pre->add_option("--root-dim", pa.opt.dim, "Vector size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--context-window", pa.opt.context_window, "Maximum context distance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--negatives", pa.opt.negatives, "Negative samples per pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--epochs", pa.opt.epochs, "Passes over the stream")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--lr", pa.opt.start_learning_rate, "Initial learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--subsample", pa.opt.subsample_threshold,
                  "Frequent-root subsampling threshold; 0 disables")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  pre->add_option("--min-count", pa.opt.min_count, "Rarer roots are dropped")
      ->capture_default_str();
  pre->add_option("--seed", pa.opt.seed, "Random seed")->capture_default_str();
  pre->add_option("--jobs", pa.jobs, "Threads for decoding --in with --model")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_flag("--gold-marker", pa.gold_marker, "Labeled corpus uses '*' markers");
  in_opt->excludes(roots_opt);

  InspectArgs ia;
  auto* ins = app.add_subcommand("inspect", "Show a model header or embedding neighbors");
  ins->add_option("--model", ia.model, "Model file")->check(existing);
  ins->add_option("--embeddings", ia.embeddings, "Embedding file")->check(existing);
  ins->add_option("--query", ia.query, "Root whose nearest neighbors to list");
  ins->add_option("--k", ia.k, "Number of neighbors")->capture_default_str();

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Write a synthetic labeled corpus");
  syn->add_option("--out", sa.out, "Output corpus (default stdout)");
  syn->add_option("--sentences", sa.opt.sentences, "Sentence count")->capture_default_str();
  syn->add_option("--roots-per-class", sa.opt.roots_per_class, "Root inventory per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  syn->add_option("--seed", sa.opt.seed, "Random seed")->capture_default_str();
  syn->add_flag("--gold-marker", sa.gold_marker, "Mark gold with '*'");

  try {
    app.parse(argc, argv);
    if (*pre && pa.roots.empty() && pa.in.empty())
      throw CLI::ValidationError("pretrain", "one of --in or --roots is required");
    if (*pre && !pa.in.empty() && pa.model.empty() && pa.tagset.empty())
      throw CLI::ValidationError("pretrain", "--in needs --model or --tagset");
    if (*ev && ea.model.empty() && (ea.pred.empty() || ea.tagset.empty()))
      throw CLI::ValidationError("evaluate", "need --model, or --pred with --tagset");
    if (*train && ta.keep_params && ta.model.empty())
      throw CLI::ValidationError("train", "--keep-params requires --model");
    if (*ins && ia.model.empty() && ia.embeddings.empty())
      throw CLI::ValidationError("inspect", "need --model or --embeddings");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    for (auto* sub : app.get_subcommands())
      std::cerr << sub->help();
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return 2;
  }

  g_log = log_level == "quiet"   ? LogLevel::kQuiet
          : log_level == "debug" ? LogLevel::kDebug
                                 : LogLevel::kInfo;

  try {
    if (*train) return cmd_train(ta);
    if (*dis) return cmd_disambiguate(da);
    if (*ev) return cmd_evaluate(ea);
    if (*pre) return cmd_pretrain(pa);
    if (*ins) return cmd_inspect(ia);
    if (*syn) return cmd_synth(sa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
