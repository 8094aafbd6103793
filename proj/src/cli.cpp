#include "bibleqa/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "bibleqa/checkpoint.hpp"
#include "bibleqa/data_pipeline.hpp"
#include "bibleqa/errors.hpp"
#include "bibleqa/evaluation.hpp"
#include "bibleqa/log.hpp"
#include "bibleqa/training.hpp"

namespace bqa::cli {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

EmbeddingMatrix load_embedding_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open embeddings " + path.string());
  std::string line;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string tok;
    std::size_t n = 0;
    while (fields >> tok) ++n;
    if (n > 0) {
      dim = n - 1;
      break;
    }
  }
  if (dim == 0) throw ValidationError("embeddings file " + path.string() + " has no vectors");
  in.clear();
  in.seekg(0);
  return load_pretrained(in, dim);
}

namespace {

struct Options {
  std::string config_file;
  bool quiet = false;
  std::uint64_t seed = 1;

  // inputs
  std::string bible, trivia, data, input, corpus_text, embeddings, extra_embeddings, checkpoint, source;
  // outputs
  std::string out, report, history;

  std::string mode = "window-3";
  std::string translations = "KJV,ASV,YLT,WEB";
  std::string translation;
  std::string model = "rnn";
  std::string split = "all";

  // model
  std::size_t hidden = 100, filters = 100, kernel = 3;
  double dropout = 0.5;
  std::string readout = "final-state";
  std::string precision = "f32";
  std::size_t max_question_len = 30, max_answer_len = 60;

  // training
  std::optional<double> lr;  // per-model default when unset
  std::size_t batch_size = 32, epochs = 100, patience = 10;

  // embeddings
  std::size_t dim = 200, cbow_window = 5, negative = 5, cbow_epochs = 5;
  double cbow_lr = 0.05;
  bool full_softmax = false;
  std::size_t fallback_dim = 50;

  // predict / nearest
  std::string book, verses, question, word;
  int chapter = 0;
  std::size_t k = 10;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T, typename F>
T with_file(const std::string& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path);
  return f(in);
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

std::vector<QuestionGroup> load_groups(const Options& o) {
  auto groups = with_file<std::vector<QuestionGroup>>(o.data, [](std::istream& in) { return read_groups(in); });
  if (!o.translation.empty()) {
    std::erase_if(groups, [&](const QuestionGroup& g) { return g.translation != o.translation; });
    if (groups.empty()) throw ValidationError("no groups for translation " + o.translation);
  }
  return groups;
}

fs::path sidecar_vectors(const std::string& checkpoint) { return fs::path(checkpoint + ".vec"); }

// Explicit vector files, concatenated when two are given.
std::optional<EmbeddingMatrix> explicit_embeddings(const Options& o) {
  if (o.embeddings.empty()) return std::nullopt;
  EmbeddingMatrix m = load_embedding_file(o.embeddings);
  if (!o.extra_embeddings.empty()) m = concat_embeddings(m, load_embedding_file(o.extra_embeddings));
  return m;
}

EmbeddingMatrix embeddings_for_checkpoint(const Options& o) {
  if (auto m = explicit_embeddings(o)) return *m;
  const fs::path side = sidecar_vectors(o.checkpoint);
  if (fs::exists(side)) return load_embedding_file(side);
  throw ValidationError("no --embeddings given and no " + side.string() + " next to the checkpoint");
}

ModelConfig model_config(const Options& o, std::size_t input_dim) {
  ModelConfig c;
  c.kind = parse_model_kind(o.model);
  c.input_dim = input_dim;
  c.hidden = o.hidden;
  c.filters = o.filters;
  c.window = o.kernel;
  c.dropout = o.dropout;
  if (o.readout != "final-state" && o.readout != "max-pool") throw ValidationError("unknown readout " + o.readout);
  c.readout = o.readout == "max-pool" ? BidafReadout::MaxPool : BidafReadout::FinalState;
  if (o.precision != "f32" && o.precision != "f64") throw ValidationError("precision must be f32 or f64");
  c.precision = o.precision == "f32" ? Precision::F32 : Precision::F64;
  return c;
}

TrainConfig train_config(const Options& o, ModelKind kind) {
  TrainConfig t;
  t.learning_rate = o.lr.value_or(kind == ModelKind::Cnn ? 1e-4 : 1e-3);
  t.batch_size = o.batch_size;
  t.max_epochs = o.epochs;
  t.patience = o.patience;
  t.seed = o.seed;
  t.validate();
  return t;
}

std::string history_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["stopped_early"] = h.stopped_early;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_f1", e.val_f1}});
  }
  return j.dump(2) + "\n";
}

std::string dataset_name(const std::string& path) { return fs::path(path).filename().string(); }

std::vector<std::vector<std::string>> corpus_sentences(const Options& o) {
  std::vector<std::vector<std::string>> sentences;
  if (!o.bible.empty()) {
    const BibleCorpus corpus = with_file<BibleCorpus>(o.bible, [](std::istream& in) { return parse_bible(in); });
    for (const auto& [_, books] : corpus.translations())
      for (const auto& [__, chapters] : books)
        for (const auto& [___, verses] : chapters)
          for (const auto& v : verses) sentences.push_back(tokenize(v));
  }
  if (!o.corpus_text.empty()) {
    std::ifstream in(o.corpus_text);
    std::string line;
    while (std::getline(in, line)) {
      auto toks = tokenize(line);
      if (!toks.empty()) sentences.push_back(std::move(toks));
    }
  }
  return sentences;
}

CbowConfig cbow_config(const Options& o, std::size_t dim) {
  CbowConfig c;
  c.window = o.cbow_window;
  c.dim = dim;
  c.negative_samples = o.negative;
  c.epochs = o.cbow_epochs;
  c.learning_rate = o.cbow_lr;
  c.seed = o.seed;
  c.full_softmax = o.full_softmax;
  return c;
}

// Trains, evaluates on the held-out test split, writes checkpoint and report.
int run_training(const Options& o, std::ostream& out, const Checkpoint* source) {
  const auto groups = load_groups(o);
  EmbeddingMatrix emb;
  bool trained_vectors = false;
  if (auto m = explicit_embeddings(o)) {
    emb = std::move(*m);
  } else {
    std::vector<std::vector<std::string>> sentences;
    for (const auto& g : groups) {
      sentences.push_back(g.question_tokens);
      for (const auto& c : g.candidates) sentences.push_back(c.tokens);
    }
    logging::info("no --embeddings given; training CBOW vectors on the dataset text");
    emb = train_cbow(sentences, cbow_config(o, o.fallback_dim)).embeddings;
    trained_vectors = true;
  }

  const DatasetSplit split = split_dataset(groups, o.seed);
  const SequenceLimits limits{o.max_question_len, o.max_answer_len};
  const auto train_set = encode_groups(split.train, emb, limits);
  const auto val_set = encode_groups(split.val, emb, limits);
  const auto test_set = encode_groups(split.test, emb, limits);

  ModelConfig mc;
  if (source) {
    mc = source->config;
    mc.input_dim = emb.dim;
  } else {
    mc = model_config(o, emb.dim);
  }
  PairModel model(mc, o.seed);
  if (source) {
    const TransferReport tr = transfer_weights(*source, model);
    logging::info("transfer: " + std::to_string(tr.copied.size()) + " copied, " + std::to_string(tr.extended.size()) +
              " extended, " + std::to_string(tr.skipped.size()) + " skipped");
  }
  Options eff = o;
  eff.model = to_string(mc.kind);
  const TrainConfig tc = train_config(eff, mc.kind);
  logging::info("training " + to_string(mc.kind) + " on " + std::to_string(split.train.size()) + " groups, validating on " +
            std::to_string(split.val.size()) + ", testing on " + std::to_string(split.test.size()));
  const TrainHistory history = train(model, train_set, val_set, tc);
  logging::info("best epoch " + std::to_string(history.best_epoch) + " of " + std::to_string(history.epochs.size()));

  const EvalReport rep = evaluate(predict(model, test_set));
  const ReportContext ctx{to_string(mc.kind), dataset_name(o.data), o.translation.empty() ? "all" : o.translation,
                          o.seed};
  if (!o.out.empty()) {
    write_file_atomic(o.out, save_checkpoint(model));
    if (trained_vectors) {
      std::ostringstream vec;
      write_embeddings(vec, emb);
      write_file_atomic(sidecar_vectors(o.out), vec.str());
    }
  }
  if (!o.history.empty()) write_file_atomic(o.history, history_json(history));
  emit(o.report, report_json(rep, ctx), out);
  return kExitOk;
}

int run_build_dataset(const Options& o) {
  const BibleCorpus corpus = with_file<BibleCorpus>(o.bible, [](std::istream& in) { return parse_bible(in); });
  const auto questions =
      with_file<std::vector<TriviaQuestion>>(o.trivia, [](std::istream& in) { return parse_trivia(in); });
  DatasetSpec spec = parse_context_mode(o.mode);
  spec.translations = split_list(o.translations);
  const auto groups = build_bibleqa(corpus, questions, spec);
  std::ostringstream buf;
  write_groups(buf, groups);
  write_file_atomic(o.out, buf.str());
  logging::info("wrote " + std::to_string(groups.size()) + " groups to " + o.out);
  return kExitOk;
}

int run_convert_span(const Options& o) {
  const auto records =
      with_file<std::vector<SpanRecord>>(o.input, [](std::istream& in) { return parse_span_records(in); });
  const SpanConversion conv = convert_span_dataset(records);
  for (const auto& msg : conv.rejected) logging::warn(msg);
  std::ostringstream buf;
  write_groups(buf, conv.groups);
  write_file_atomic(o.out, buf.str());
  logging::info("wrote " + std::to_string(conv.groups.size()) + " groups; dropped " +
            std::to_string(conv.dropped_cross_boundary) + ", rejected " + std::to_string(conv.rejected.size()));
  return kExitOk;
}

int run_train_embeddings(const Options& o) {
  if (o.bible.empty() && o.corpus_text.empty()) throw ValidationError("train-embeddings needs --bible or --text");
  const auto sentences = corpus_sentences(o);
  const CbowResult r = train_cbow(sentences, cbow_config(o, o.dim));
  logging::info("CBOW loss " + std::to_string(r.epoch_losses.front()) + " -> " + std::to_string(r.epoch_losses.back()));
  std::ostringstream buf;
  write_embeddings(buf, r.embeddings);
  write_file_atomic(o.out, buf.str());
  return kExitOk;
}

int run_evaluate(const Options& o, std::ostream& out) {
  auto groups = load_groups(o);
  if (o.split == "test") {
    groups = split_dataset(groups, o.seed).test;
  } else if (o.split != "all") {
    throw ValidationError("--split must be all or test");
  }
  PredictionSet preds;
  std::string model_name = o.model;
  if (o.model == "baseline") {
    preds = random_baseline(groups, o.seed);
  } else {
    if (o.checkpoint.empty()) throw ValidationError("evaluate --model " + o.model + " needs --checkpoint");
    const Checkpoint ckpt = read_checkpoint_file(o.checkpoint);
    if (to_string(ckpt.config.kind) != o.model) {
      throw ValidationError("checkpoint holds a " + to_string(ckpt.config.kind) + " model, not " + o.model);
    }
    const PairModel model(ckpt.config, ckpt.params);
    const EmbeddingMatrix emb = embeddings_for_checkpoint(o);
    preds = predict(model, encode_groups(groups, emb, {o.max_question_len, o.max_answer_len}));
  }
  const ReportContext ctx{model_name, dataset_name(o.data), o.translation.empty() ? "all" : o.translation, o.seed};
  emit(o.report.empty() ? o.out : o.report, report_json(evaluate(preds), ctx), out);
  return kExitOk;
}

int run_predict(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint_file(o.checkpoint);
  const PairModel model(ckpt.config, ckpt.params);
  const EmbeddingMatrix emb = embeddings_for_checkpoint(o);
  const BibleCorpus corpus = with_file<BibleCorpus>(o.bible, [](std::istream& in) { return parse_bible(in); });
  const std::string translation = o.translation.empty() ? "KJV" : o.translation;
  const auto* chapter = corpus.chapter(translation, o.book, o.chapter);
  if (!chapter) throw ValidationError(translation + " " + o.book + " " + std::to_string(o.chapter) + " not in corpus");

  int first = 1, last = static_cast<int>(chapter->size());
  if (!o.verses.empty()) {
    const auto dash = o.verses.find('-');
    try {
      first = std::stoi(o.verses.substr(0, dash));
      last = dash == std::string::npos ? first : std::stoi(o.verses.substr(dash + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad --verses '" + o.verses + "'");
    }
  }
  if (first < 1 || last < first || last > static_cast<int>(chapter->size())) {
    throw ValidationError("verse range " + o.verses + " outside the chapter");
  }

  const auto q = embed_sequence(tokenize(o.question), emb, o.max_question_len);
  std::vector<double> scores;
  for (int v = first; v <= last; ++v) {
    scores.push_back(model.score(q, embed_sequence(tokenize((*chapter)[static_cast<std::size_t>(v - 1)]), emb,
                                                   o.max_answer_len)));
  }
  nlohmann::ordered_json j;
  j["question"] = o.question;
  j["translation"] = translation;
  j["selected"] = {{"book", o.book}, {"chapter", o.chapter}, {"verse", first + static_cast<int>(select_answer(scores))}};
  j["candidates"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    j["candidates"].push_back({{"verse", first + static_cast<int>(i)},
                               {"score", scores[i]},
                               {"rank", rank_candidates(scores, i)},
                               {"text", (*chapter)[static_cast<std::size_t>(first - 1) + i]}});
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int run_nearest(const Options& o, std::ostream& out) {
  const EmbeddingMatrix emb = load_embedding_file(o.embeddings);
  out.precision(6);
  for (const auto& [tok, sim] : nearest_neighbors(o.word, emb, o.k)) out << tok << '\t' << std::fixed << sim << '\n';
  return kExitOk;
}

// Appends `--key value` for every config-file key not already on the command line.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") path = args[i + 1];
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    bool present = false;
    for (const auto& a : args) present = present || a == flag || a.starts_with(flag + "=");
    if (present) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

}  // namespace

int dispatch(const std::vector<std::string>& raw_args, std::ostream& out) {
  Options o;
  CLI::App app{"Answer sentence selection over Bible verses", "bibleqa"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_file, "JSON config file; command-line flags take precedence");
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "Only log warnings and errors");
  };
  auto model_flags = [&](CLI::App* sub) {
    sub->add_option("--hidden", o.hidden, "LSTM hidden size")->capture_default_str();
    sub->add_option("--filters", o.filters, "CNN filter count")->capture_default_str();
    sub->add_option("--kernel", o.kernel, "CNN window size")->capture_default_str();
    sub->add_option("--dropout", o.dropout, "CNN dropout rate")->capture_default_str();
    sub->add_option("--readout", o.readout, "BiDAF readout: final-state or max-pool")->capture_default_str();
    sub->add_option("--precision", o.precision, "Parameter storage: f32 or f64")->capture_default_str();
  };
  auto train_flags = [&](CLI::App* sub) {
    sub->add_option("--lr", o.lr, "AdaGrad learning rate (default 0.001; 0.0001 for cnn)");
    sub->add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
    sub->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
    sub->add_option("--patience", o.patience, "Early-stopping patience")->capture_default_str();
    sub->add_option("--history", o.history, "Write per-epoch history JSON here");
    sub->add_option("--fallback-dim", o.fallback_dim, "CBOW dimension when no --embeddings are given")
        ->capture_default_str();
  };
  auto embedding_flags = [&](CLI::App* sub) {
    sub->add_option("--embeddings", o.embeddings, "Word vectors (token followed by reals per line)");
    sub->add_option("--extra-embeddings", o.extra_embeddings, "Second vector file concatenated after --embeddings");
    sub->add_option("--max-question-len", o.max_question_len, "Question token limit")->capture_default_str();
    sub->add_option("--max-answer-len", o.max_answer_len, "Candidate token limit")->capture_default_str();
  };
  auto cbow_flags = [&](CLI::App* sub) {
    sub->add_option("--cbow-window", o.cbow_window, "CBOW context window")->capture_default_str();
    sub->add_option("--negative", o.negative, "Negative samples per target")->capture_default_str();
    sub->add_option("--cbow-epochs", o.cbow_epochs, "CBOW epochs")->capture_default_str();
    sub->add_option("--cbow-lr", o.cbow_lr, "CBOW learning rate")->capture_default_str();
    sub->add_flag("--full-softmax", o.full_softmax, "Exact softmax instead of negative sampling");
  };

  auto* build = app.add_subcommand("build-dataset", "Build BibleQA question groups from a corpus and trivia");
  common(build);
  build->add_option("--bible", o.bible, "Bible TSV (translation, book, chapter, verse, text)")->required();
  build->add_option("--trivia", o.trivia, "Trivia TSV or JSON lines")->required();
  build->add_option("--mode", o.mode, "window-N or chapter")->capture_default_str();
  build->add_option("--translations", o.translations, "Comma-separated translation ids")->capture_default_str();
  build->add_option("--out", o.out, "Output JSON lines")->required();

  auto* conv = app.add_subcommand("convert-span", "Convert span-answer records to sentence groups");
  common(conv);
  conv->add_option("--input", o.input, "JSON lines {context, question, answer_text, answer_start}")->required();
  conv->add_option("--out", o.out, "Output JSON lines")->required();

  auto* emb = app.add_subcommand("train-embeddings", "Train CBOW word vectors");
  common(emb);
  emb->add_option("--bible", o.bible, "Bible TSV; every verse is one sentence");
  emb->add_option("--text", o.corpus_text, "Plain text; every line is one sentence");
  emb->add_option("--dim", o.dim, "Vector dimension")->capture_default_str();
  cbow_flags(emb);
  emb->add_option("--out", o.out, "Output vectors")->required();

  auto* tr = app.add_subcommand("train", "Train a model with early stopping and report test metrics");
  common(tr);
  tr->add_option("--model", o.model, "rnn, cnn or bidaf")->required();
  tr->add_option("--data", o.data, "Dataset JSON lines")->required();
  tr->add_option("--translation", o.translation, "Keep only this translation");
  tr->add_option("--out", o.out, "Checkpoint output");
  tr->add_option("--report", o.report, "Report output (default: stdout)");
  embedding_flags(tr);
  model_flags(tr);
  train_flags(tr);
  cbow_flags(tr);

  auto* tt = app.add_subcommand("transfer-train", "Fine-tune from a source checkpoint on target data");
  common(tt);
  tt->add_option("--source", o.source, "Source checkpoint")->required();
  tt->add_option("--data", o.data, "Target dataset JSON lines")->required();
  tt->add_option("--translation", o.translation, "Keep only this translation");
  tt->add_option("--out", o.out, "Checkpoint output");
  tt->add_option("--report", o.report, "Report output (default: stdout)");
  embedding_flags(tt);
  train_flags(tt);
  cbow_flags(tt);

  auto* ev = app.add_subcommand("evaluate", "Score a dataset and report F1 and MRR");
  common(ev);
  ev->add_option("--model", o.model, "baseline, rnn, cnn or bidaf")->required();
  ev->add_option("--data", o.data, "Dataset JSON lines")->required();
  ev->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  ev->add_option("--translation", o.translation, "Keep only this translation");
  ev->add_option("--split", o.split, "all, or test for the held-out split of --seed")->capture_default_str();
  ev->add_option("--out", o.out, "Report output (default: stdout)");
  embedding_flags(ev);

  auto* pr = app.add_subcommand("predict", "Score one question against a verse range");
  common(pr);
  pr->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  pr->add_option("--bible", o.bible, "Bible TSV")->required();
  pr->add_option("--translation", o.translation, "Translation id (default KJV)");
  pr->add_option("--book", o.book, "Book name")->required();
  pr->add_option("--chapter", o.chapter, "Chapter number")->required();
  pr->add_option("--verses", o.verses, "Verse or range, e.g. 17-19 (default: whole chapter)");
  pr->add_option("--question", o.question, "Question text")->required();
  embedding_flags(pr);

  auto* nn = app.add_subcommand("nearest", "Nearest neighbours of a word by cosine similarity");
  common(nn);
  nn->add_option("--embeddings", o.embeddings, "Word vectors")->required();
  nn->add_option("--word", o.word, "Query word")->required();
  nn->add_option("--k", o.k, "Number of neighbours")->capture_default_str();

  try {
    std::vector<std::string> args = merge_config_file(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const Error& e) {
    logging::error(e.what());
    return kExitValidation;
  }

  const logging::Level saved = logging::threshold();
  if (o.quiet) logging::threshold() = logging::Level::Warn;
  struct Restore {
    logging::Level level;
    ~Restore() { logging::threshold() = level; }
  } restore{saved};

  CLI::App* sub = app.get_subcommands().front();
  try {
    for (const std::string* path : {&o.bible, &o.trivia, &o.data, &o.input, &o.corpus_text, &o.embeddings,
                                    &o.extra_embeddings, &o.checkpoint, &o.source}) {
      if (!path->empty() && !fs::exists(*path)) throw NotFoundError("input path does not exist: " + *path);
    }
    logging::info("config: " + sub->get_name() + " " + sub->config_to_str(true, false));
    logging::info("seed: " + std::to_string(o.seed));

    const std::string& name = sub->get_name();
    if (name == "build-dataset") return run_build_dataset(o);
    if (name == "convert-span") return run_convert_span(o);
    if (name == "train-embeddings") return run_train_embeddings(o);
    if (name == "train") return run_training(o, out, nullptr);
    if (name == "transfer-train") {
      const Checkpoint source = read_checkpoint_file(o.source);
      return run_training(o, out, &source);
    }
    if (name == "evaluate") return run_evaluate(o, out);
    if (name == "predict") return run_predict(o, out);
    if (name == "nearest") return run_nearest(o, out);
    return kExitUsage;
  } catch (const ValidationError& e) {
    logging::error(e.what());
    return kExitValidation;
  } catch (const NotFoundError& e) {
    logging::error(e.what());
    return kExitValidation;
  } catch (const ParseError& e) {
    logging::error(e.what());
    return kExitValidation;
  } catch (const InsufficientDataError& e) {
    logging::error(e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    logging::error(e.what());
    return kExitRuntime;
  }
}

}  // namespace bqa::cli
