#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "charmt/checkpoint.hpp"
#include "charmt/config.hpp"
#include "charmt/corpus.hpp"
#include "charmt/diagnostics.hpp"
#include "charmt/eval.hpp"
#include "charmt/model.hpp"
#include "charmt/search.hpp"
#include "charmt/training.hpp"

namespace charmt::cli {

namespace detail {

struct VocabPaths {
  std::string src_words, src_chars, tgt_words, tgt_chars;

  static VocabPaths from_prefix(const std::string& prefix) {
    require(!prefix.empty(), "config field 'vocab' (path prefix) is required");
    return {prefix + ".src.words", prefix + ".src.chars", prefix + ".tgt.words",
            prefix + ".tgt.chars"};
  }
};

inline CorpusVocabs load_vocabs(const RunConfig& cfg) {
  const VocabPaths paths = VocabPaths::from_prefix(cfg.vocab);
  CorpusVocabs v;
  v.src_words = Vocab::load(paths.src_words, Vocab::Kind::kWord);
  v.tgt_words = Vocab::load(paths.tgt_words, Vocab::Kind::kWord);
  if (cfg.mode == "char") {
    v.src_chars = Vocab::load(paths.src_chars, Vocab::Kind::kChar);
    v.tgt_chars = Vocab::load(paths.tgt_chars, Vocab::Kind::kChar);
  }
  return v;
}

inline ParallelCorpus load_pair_files(const std::string& src, const std::string& tgt,
                                      const RunConfig& cfg) {
  require(!src.empty() && !tgt.empty(), "source and target paths are required");
  ParallelCorpus corpus =
      load_parallel(src, tgt, cfg.model.max_word_len, cfg.model.max_sent_len);
  // The word baseline trains and decodes on lowercased data; the character
  // model keeps true case.
  if (cfg.mode == "word") return lowercase_transform(corpus);
  return corpus;
}

inline std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(' ', start);
    if (end == std::string::npos) end = line.size();
    if (end > start) words.push_back(line.substr(start, end - start));
    if (end == line.size()) break;
    start = end + 1;
  }
  return words;
}

inline std::vector<TokenSentence> read_token_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::vector<TokenSentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(split_words(line));
  }
  return out;
}

template <typename S>
TranslationModel<S> make_model(const RunConfig& cfg) {
  return TranslationModel<S>(cfg.model, model_kind_from_string(cfg.mode),
                             load_vocabs(cfg));
}

template <typename S>
TrainDataset make_dataset(const TranslationModel<S>& model,
                          const ParallelCorpus& train, const ParallelCorpus& dev) {
  const bool with_chars = model.kind() == ModelKind::kChar;
  TrainDataset data;
  data.train = encode_corpus(train, model.vocabs(), with_chars,
                             model.config().max_word_len);
  data.dev = encode_corpus(dev, model.vocabs(), with_chars,
                           model.config().max_word_len);
  for (const auto& pair : dev.pairs) {
    std::vector<std::string> words;
    for (const auto& w : pair.source) words.push_back(w.text);
    data.dev_sources.push_back(
        encode_source_words(words, model.vocabs().src_words,
                            with_chars ? &model.vocabs().src_chars : nullptr,
                            model.config().max_word_len));
    TokenSentence ref;
    for (const auto& w : pair.target) ref.push_back(w.text);
    data.dev_references.push_back(std::move(ref));
  }
  return data;
}

}  // namespace detail

// build-vocab: derive the four vocabulary files from the training corpus.
inline int cmd_build_vocab(const RunConfig& cfg, std::ostream& out) {
  const ParallelCorpus corpus =
      detail::load_pair_files(cfg.train_src, cfg.train_tgt, cfg);
  const auto paths = detail::VocabPaths::from_prefix(cfg.vocab);
  const Vocab src_words = build_word_vocab(corpus, Side::kSource, cfg.model.min_count);
  const Vocab tgt_words = build_word_vocab(corpus, Side::kTarget, cfg.model.min_count);
  const Vocab src_chars = build_char_vocab(corpus, Side::kSource);
  const Vocab tgt_chars = build_char_vocab(corpus, Side::kTarget);
  src_words.save(paths.src_words);
  tgt_words.save(paths.tgt_words);
  src_chars.save(paths.src_chars);
  tgt_chars.save(paths.tgt_chars);
  out << "source words: " << src_words.size() << " (incl. 4 reserved)\n"
      << "target words: " << tgt_words.size() << "\n"
      << "source chars: " << src_chars.size() << "\n"
      << "target chars: " << tgt_chars.size() << "\n";
  return 0;
}

template <typename S>
int cmd_train(const RunConfig& cfg, std::ostream& log) {
  ParallelCorpus train = detail::load_pair_files(cfg.train_src, cfg.train_tgt, cfg);
  require(!cfg.dev_src.empty() && !cfg.dev_tgt.empty(),
          "train needs dev_src and dev_tgt for early stopping");
  ParallelCorpus dev = detail::load_pair_files(cfg.dev_src, cfg.dev_tgt, cfg);
  if (!cfg.alignments.empty()) load_alignments(cfg.alignments, train);

  TranslationModel<S> model = detail::make_model<S>(cfg);
  TrainDataset data = detail::make_dataset(model, train, dev);

  std::string ckpt_dir = cfg.checkpoint_dir;
  if (!ckpt_dir.empty()) std::filesystem::create_directories(ckpt_dir);

  LayerwiseResult result;
  if (model.kind() == ModelKind::kChar)
    result = train_layerwise(model, data, &log, ckpt_dir);
  else
    result = train_word_baseline(model, data, &log, ckpt_dir);
  log << "training finished: best dev BLEU " << result.final_dev_bleu << '\n';
  return 0;
}

struct TranslateOptions {
  std::string checkpoint;
  std::string input;   // empty = stdin
  std::string output;  // empty = stdout
  int beam_kw = 0;     // 0 = config value
  int beam_kc = 0;
  bool length_norm = false;
};

template <typename S>
int cmd_translate(const RunConfig& cfg, const TranslateOptions& opt) {
  TranslationModel<S> model = detail::make_model<S>(cfg);
  if (model.kind() == ModelKind::kChar) model.set_projection(Projection::kC2w);
  std::string ckpt = opt.checkpoint;
  if (ckpt.empty() && !cfg.checkpoint_dir.empty())
    ckpt = cfg.checkpoint_dir + "/model.best.ckpt";
  require(!ckpt.empty(), "no checkpoint given (flag --checkpoint or checkpoint_dir)");
  load_checkpoint(ckpt, model);

  const int k_w = opt.beam_kw > 0 ? opt.beam_kw : cfg.model.k_w;
  const int k_c = opt.beam_kc > 0 ? opt.beam_kc : cfg.model.k_c;

  std::ifstream file_in;
  if (!opt.input.empty()) {
    file_in.open(opt.input, std::ios::binary);
    require(file_in.good(), "cannot open input: " + opt.input);
  }
  std::istream& in = opt.input.empty() ? std::cin : file_in;
  std::ofstream file_out;
  if (!opt.output.empty()) {
    file_out.open(opt.output, std::ios::binary);
    require(file_out.good(), "cannot open output: " + opt.output);
  }
  std::ostream& out = opt.output.empty() ? std::cout : file_out;

  const bool with_chars = model.kind() == ModelKind::kChar;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> words = detail::split_words(line);
    if (cfg.mode == "word") words = lowercase_words(words);
    if (words.empty()) {
      out << '\n';
      continue;
    }
    EncodedSentence src = encode_source_words(
        words, model.vocabs().src_words,
        with_chars ? &model.vocabs().src_chars : nullptr, cfg.model.max_word_len);
    BeamResult res = word_beam_translate(model, src, k_w, k_c,
                                         cfg.model.max_sent_len, opt.length_norm);
    const auto tokens = result_to_words(model, res);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i];
    }
    out << '\n';
  }
  return 0;
}

inline int cmd_evaluate(const std::string& cand_path, const std::string& ref_path,
                        bool smooth, std::ostream& out) {
  const auto cands = detail::read_token_file(cand_path);
  const auto refs = detail::read_token_file(ref_path);
  require(cands.size() == refs.size(),
          "candidate and reference files have different line counts");
  const BleuReport report = bleu(cands, refs, smooth);
  out << report.to_json().dump() << '\n';
  return 0;
}

struct NeighborOptions {
  std::string checkpoint;
  std::string side = "src";          // src | tgt
  std::string provider;              // lookup | c2w; default depends on mode
  int k = 5;
  std::vector<std::string> queries;
};

template <typename S>
int cmd_neighbors(const RunConfig& cfg, const NeighborOptions& opt, std::ostream& out) {
  TranslationModel<S> model = detail::make_model<S>(cfg);
  std::string ckpt = opt.checkpoint;
  if (ckpt.empty() && !cfg.checkpoint_dir.empty())
    ckpt = cfg.checkpoint_dir + "/model.best.ckpt";
  require(!ckpt.empty(), "no checkpoint given (flag --checkpoint or checkpoint_dir)");
  load_checkpoint(ckpt, model);

  require(opt.side == "src" || opt.side == "tgt", "side must be 'src' or 'tgt'");
  const Side side = opt.side == "src" ? Side::kSource : Side::kTarget;
  std::string provider = opt.provider;
  if (provider.empty()) provider = cfg.mode == "char" ? "c2w" : "lookup";
  require(provider == "lookup" || provider == "c2w",
          "provider must be 'lookup' or 'c2w'");
  const Projection proj = provider == "c2w" ? Projection::kC2w : Projection::kLookup;
  if (proj == Projection::kC2w)
    require(model.kind() == ModelKind::kChar,
            "the word baseline has no C2W embeddings");

  const Vocab& words =
      side == Side::kSource ? model.vocabs().src_words : model.vocabs().tgt_words;
  const Vocab& chars =
      side == Side::kSource ? model.vocabs().src_chars : model.vocabs().tgt_chars;

  auto embed = [&](const std::string& token) {
    EncodedWord w;
    w.word_id = words.encode(token);
    if (model.kind() == ModelKind::kChar)
      w.char_ids = encode_word_chars(utf8_decode(token), chars, cfg.model.max_word_len);
    const Tensor<S> v = model.word_embedding(side, w, proj);
    std::vector<double> out_vec(v.size());
    for (int i = 0; i < v.size(); ++i) out_vec[i] = static_cast<double>(v[i]);
    return out_vec;
  };

  std::vector<std::pair<std::string, std::vector<double>>> table;
  for (int id = ids::kReserved; id < words.size(); ++id)
    table.push_back({words.decode(id), embed(words.decode(id))});

  for (const std::string& query : opt.queries) {
    const auto ranked = nearest_neighbors(query, embed(query), table, opt.k);
    for (const auto& n : ranked) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", n.similarity);
      out << query << '\t' << n.word << '\t' << buf << '\n';
    }
  }
  return 0;
}

inline int cmd_gradcheck(std::uint64_t seed, int samples, double epsilon,
                         std::ostream& out) {
  const auto reports = gradient_check_suite<double>(seed, epsilon, samples);
  double worst = 0;
  for (const auto& r : reports) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r.max_rel_error);
    out << r.component << ": " << buf << '\n';
    worst = std::max(worst, r.max_rel_error);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", worst);
  out << "max relative error: " << buf << '\n';
  return worst < 1e-4 ? 0 : 2;
}

template <typename F>
int with_precision(const RunConfig& cfg, F&& f) {
  if (cfg.precision == "float64") return f(double{});
  return f(float{});
}

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 usage error, 2 data error.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"hierarchical character-level neural machine translation"};
  app.require_subcommand(1);

  std::string config_path;
  TranslateOptions tr_opt;
  NeighborOptions nb_opt;
  std::string eval_cand, eval_ref;
  bool eval_smooth = false;
  std::uint64_t gc_seed = 1;
  int gc_samples = 25;
  double gc_epsilon = 1e-5;

  CLI::App* build = app.add_subcommand("build-vocab",
                                       "write the four vocab files from the training corpus");
  build->add_option("--config", config_path, "JSON run config")->required();

  CLI::App* train = app.add_subcommand("train", "train a model with early stopping");
  train->add_option("--config", config_path, "JSON run config")->required();

  CLI::App* translate = app.add_subcommand("translate",
                                           "translate sentences from a file or stdin");
  translate->add_option("--config", config_path, "JSON run config")->required();
  translate->add_option("--checkpoint", tr_opt.checkpoint, "checkpoint file");
  translate->add_option("--input", tr_opt.input, "input file (default stdin)");
  translate->add_option("--output", tr_opt.output, "output file (default stdout)");
  translate->add_option("--beam-kw", tr_opt.beam_kw, "word beam width override");
  translate->add_option("--beam-kc", tr_opt.beam_kc, "character beam width override");
  translate->add_flag("--length-norm", tr_opt.length_norm,
                      "rank hypotheses by per-word log probability");

  CLI::App* evaluate = app.add_subcommand("evaluate",
                                          "corpus BLEU of a candidate file against a "
                                          "single-reference file (JSON on stdout)");
  evaluate->add_option("candidates", eval_cand, "candidate translations")->required();
  evaluate->add_option("references", eval_ref, "reference translations")->required();
  evaluate->add_flag("--smooth", eval_smooth, "add-one smoothing for tiny corpora");

  CLI::App* neighbors = app.add_subcommand("neighbors",
                                           "cosine nearest neighbors of query words");
  neighbors->add_option("--config", config_path, "JSON run config")->required();
  neighbors->add_option("--checkpoint", nb_opt.checkpoint, "checkpoint file");
  neighbors->add_option("--side", nb_opt.side, "src or tgt (default src)");
  neighbors->add_option("--provider", nb_opt.provider,
                        "lookup or c2w (default follows mode)");
  neighbors->add_option("-k,--top", nb_opt.k, "neighbors per query (default 5)");
  neighbors->add_option("queries", nb_opt.queries, "query words")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                           "finite-difference gradient suite at 64-bit");
  gradcheck->add_option("--seed", gc_seed, "random seed");
  gradcheck->add_option("--samples", gc_samples, "sampled parameters per component");
  gradcheck->add_option("--epsilon", gc_epsilon, "central difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(build))
      return cmd_build_vocab(load_run_config(config_path), std::cout);
    if (app.got_subcommand(train)) {
      const RunConfig cfg = load_run_config(config_path);
      return with_precision(cfg, [&](auto tag) {
        return cmd_train<decltype(tag)>(cfg, std::cout);
      });
    }
    if (app.got_subcommand(translate)) {
      const RunConfig cfg = load_run_config(config_path);
      return with_precision(cfg, [&](auto tag) {
        return cmd_translate<decltype(tag)>(cfg, tr_opt);
      });
    }
    if (app.got_subcommand(evaluate))
      return cmd_evaluate(eval_cand, eval_ref, eval_smooth, std::cout);
    if (app.got_subcommand(neighbors)) {
      const RunConfig cfg = load_run_config(config_path);
      return with_precision(cfg, [&](auto tag) {
        return cmd_neighbors<decltype(tag)>(cfg, nb_opt, std::cout);
      });
    }
    if (app.got_subcommand(gradcheck))
      return cmd_gradcheck(gc_seed, gc_samples, gc_epsilon, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace charmt::cli
