#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "charmt/error.hpp"

namespace charmt {

// Model dimensions, beam widths and training hyperparameters. Defaults are
// the reference setup: 150-dim LSTM states, 50-dim word and character
// projections, 100-dim alignment space, beams 5/5, batches of 40, 100 NCE
// negatives, 5-epoch patience.
struct ModelConfig {
  int d_lstm = 150;  // LSTM state and cell size, all LSTMs
  int d_sw = 50;     // source word projection
  int d_tw = 50;     // target word projection
  int d_sc = 50;     // source character projection
  int d_tc = 50;     // target character projection
  int d_z = 100;     // alignment space
  int k_w = 5;       // word-level beam
  int k_c = 5;       // character-level beam
  int batch_size = 40;
  int nce_negatives = 100;
  int patience_epochs = 5;
  double learning_rate = 0.2;
  std::uint64_t seed = 1;
  int max_word_len = 64;
  int max_sent_len = 128;
  double supervision_weight = 1.0;
  int min_count = 2;       // word-vocab frequency cutoff
  int distill_epochs = 500;
  double distill_lr = 0.05;
  int max_epochs = 200;    // hard cap per training stage

  void validate() const {
    require(d_lstm > 0 && d_sw > 0 && d_tw > 0 && d_sc > 0 && d_tc > 0 && d_z > 0,
            "all dimensions must be positive");
    require(k_w >= 1 && k_c >= 1, "beam widths must be at least 1");
    require(batch_size >= 1, "batch_size must be at least 1");
    require(nce_negatives >= 1, "nce_negatives must be at least 1");
    require(patience_epochs >= 1, "patience_epochs must be at least 1");
    require(learning_rate > 0, "learning_rate must be positive");
    require(max_word_len >= 1 && max_sent_len >= 1, "length caps must be positive");
    require(min_count >= 1, "min_count must be at least 1");
    require(supervision_weight >= 0, "supervision_weight must be non-negative");
  }
};

// Everything a run needs: the model config plus file paths and the model
// kind. Unknown keys in a config file are rejected so hyperparameter typos
// fail loudly instead of falling back to defaults.
struct RunConfig {
  std::string mode = "char";        // "word" or "char"
  std::string precision = "float32";  // "float32" or "float64"
  ModelConfig model;
  std::string train_src, train_tgt;
  std::string dev_src, dev_tgt;
  std::string alignments;      // optional Pharaoh file
  std::string vocab;           // path prefix for the four vocab files
  std::string checkpoint_dir;

  void validate() const {
    require(mode == "word" || mode == "char", "mode must be 'word' or 'char'");
    require(precision == "float32" || precision == "float64",
            "precision must be 'float32' or 'float64'");
    model.validate();
  }
};

inline nlohmann::json model_config_to_json(const ModelConfig& m) {
  return nlohmann::json{{"d_lstm", m.d_lstm},
                        {"d_sw", m.d_sw},
                        {"d_tw", m.d_tw},
                        {"d_sc", m.d_sc},
                        {"d_tc", m.d_tc},
                        {"d_z", m.d_z},
                        {"k_w", m.k_w},
                        {"k_c", m.k_c},
                        {"batch_size", m.batch_size},
                        {"nce_negatives", m.nce_negatives},
                        {"patience_epochs", m.patience_epochs},
                        {"learning_rate", m.learning_rate},
                        {"seed", m.seed},
                        {"max_word_len", m.max_word_len},
                        {"max_sent_len", m.max_sent_len},
                        {"supervision_weight", m.supervision_weight},
                        {"min_count", m.min_count},
                        {"distill_epochs", m.distill_epochs},
                        {"distill_lr", m.distill_lr},
                        {"max_epochs", m.max_epochs}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "mode") cfg.mode = value.get<std::string>();
      else if (key == "precision") cfg.precision = value.get<std::string>();
      else if (key == "d_lstm") cfg.model.d_lstm = value.get<int>();
      else if (key == "d_sw") cfg.model.d_sw = value.get<int>();
      else if (key == "d_tw") cfg.model.d_tw = value.get<int>();
      else if (key == "d_sc") cfg.model.d_sc = value.get<int>();
      else if (key == "d_tc") cfg.model.d_tc = value.get<int>();
      else if (key == "d_z") cfg.model.d_z = value.get<int>();
      else if (key == "k_w") cfg.model.k_w = value.get<int>();
      else if (key == "k_c") cfg.model.k_c = value.get<int>();
      else if (key == "batch_size") cfg.model.batch_size = value.get<int>();
      else if (key == "nce_negatives") cfg.model.nce_negatives = value.get<int>();
      else if (key == "patience_epochs") cfg.model.patience_epochs = value.get<int>();
      else if (key == "learning_rate") cfg.model.learning_rate = value.get<double>();
      else if (key == "seed") cfg.model.seed = value.get<std::uint64_t>();
      else if (key == "max_word_len") cfg.model.max_word_len = value.get<int>();
      else if (key == "max_sent_len") cfg.model.max_sent_len = value.get<int>();
      else if (key == "supervision_weight") cfg.model.supervision_weight = value.get<double>();
      else if (key == "min_count") cfg.model.min_count = value.get<int>();
      else if (key == "distill_epochs") cfg.model.distill_epochs = value.get<int>();
      else if (key == "distill_lr") cfg.model.distill_lr = value.get<double>();
      else if (key == "max_epochs") cfg.model.max_epochs = value.get<int>();
      else if (key == "train_src") cfg.train_src = value.get<std::string>();
      else if (key == "train_tgt") cfg.train_tgt = value.get<std::string>();
      else if (key == "dev_src") cfg.dev_src = value.get<std::string>();
      else if (key == "dev_tgt") cfg.dev_tgt = value.get<std::string>();
      else if (key == "alignments") cfg.alignments = value.get<std::string>();
      else if (key == "vocab") cfg.vocab = value.get<std::string>();
      else if (key == "checkpoint_dir") cfg.checkpoint_dir = value.get<std::string>();
      else fail("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      fail("bad value for config key '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j = model_config_to_json(cfg.model);
  j["mode"] = cfg.mode;
  j["precision"] = cfg.precision;
  j["train_src"] = cfg.train_src;
  j["train_tgt"] = cfg.train_tgt;
  j["dev_src"] = cfg.dev_src;
  j["dev_tgt"] = cfg.dev_tgt;
  j["alignments"] = cfg.alignments;
  j["vocab"] = cfg.vocab;
  j["checkpoint_dir"] = cfg.checkpoint_dir;
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("malformed config JSON in " + path + ": " + e.what());
  }
  require(j.is_object(), "config root must be a JSON object");
  return run_config_from_json(j);
}

}  // namespace charmt
