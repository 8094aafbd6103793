#pragma once

// Question/candidate pair scorers. Each model maps two embedded token
// sequences to a probability in (0, 1) that the candidate answers the question.
//
// Parameters live in a ParameterSet under dotted names ("q_lstm.W_i", ...).
// A forward pass binds them into a Graph so the same code serves training
// (variables) and inference (constants).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bibleqa/autodiff.hpp"
#include "bibleqa/embeddings.hpp"
#include "bibleqa/rng.hpp"

namespace bqa {

enum class ModelKind { Rnn, Cnn, Bidaf };
enum class BidafReadout { FinalState, MaxPool };
enum class Precision { F32, F64 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::Rnn;
  std::size_t input_dim = 100;
  std::size_t hidden = 100;
  std::size_t filters = 100;
  std::size_t window = 3;
  double dropout = 0.5;
  BidafReadout readout = BidafReadout::FinalState;
  // F32 keeps every stored parameter exactly representable as a float.
  Precision precision = Precision::F32;

  bool operator==(const ModelConfig&) const = default;
};

// ---- LSTM -------------------------------------------------------------------

// Names the parameters of one LSTM: <prefix>.W_{i,f,o,c} with shape
// [(input_dim + hidden_dim) x hidden_dim] (input rows first, then recurrent
// rows) and <prefix>.b_{i,f,o,c} with shape [1 x hidden_dim].
struct LstmCell {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  std::string weight(char gate) const { return prefix + ".W_" + gate; }
  std::string bias(char gate) const { return prefix + ".b_" + gate; }
};

inline constexpr char kLstmGates[] = {'i', 'f', 'o', 'c'};

// Xavier-uniform weights, zero biases, forget-gate bias 1.
void init_lstm(ParameterSet& params, const LstmCell& cell, Rng& rng);

struct LstmState {
  Var cell;    // [1 x hidden]
  Var hidden;  // [1 x hidden]
};

LstmState zero_state(Graph& g, const LstmCell& cell);
LstmState lstm_step(const BoundParams& p, const LstmCell& cell, const LstmState& state, Var x);

struct LstmOutput {
  Var final_hidden;               // [1 x hidden]
  std::vector<Var> hidden_states;  // one [1 x hidden] per real step
};

// Runs the first `length` rows of seq (rows beyond it are padding). A zero
// length yields the zero state.
LstmOutput encode_lstm(Graph& g, const BoundParams& p, const LstmCell& cell, const Tensor& seq,
                       std::size_t length);

// ---- pair models --------------------------------------------------------------

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // dropout masks; required when training with dropout > 0
};

Var rnn_pair_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg,
                     const EmbeddedSequence& q, const EmbeddedSequence& a);

// Also returns the pooled [1 x filters] vectors for inspection.
struct CnnForward {
  Var probability;
  Var question_pooled;
  Var answer_pooled;
};
CnnForward cnn_pair_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg,
                            const EmbeddedSequence& q, const EmbeddedSequence& a,
                            const ForwardOptions& opt);

struct BidafAttention {
  Var similarity;        // S: [t_a x t_q]
  Var c2q_weights;       // row-softmax of S
  Var attended_question;  // Q~: [t_a x hidden]
  Var attended_answer;    // A~: [t_a x hidden], one pooled vector tiled
  Var merged;            // G: [t_a x 4*hidden]
};

// q_enc [t_q x h], a_enc [t_a x h], alpha [1 x 3h].
BidafAttention bidaf_attention(Var q_enc, Var a_enc, Var alpha);

Var bidaf_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg, const EmbeddedSequence& q,
                  const EmbeddedSequence& a);

// Input-layer geometry of a parameter whose leading rows read embedding
// dimensions: rows = blocks * input_dim + trailing_rows, each block laid out
// as one embedding vector.
struct InputLayout {
  std::size_t blocks = 1;
  std::size_t input_dim = 0;
  std::size_t trailing_rows = 0;
};

class PairModel {
 public:
  // Randomly initialized from `seed`.
  PairModel(const ModelConfig& cfg, std::uint64_t seed);
  // Parameters supplied by the caller; names and shapes must match the config.
  PairModel(const ModelConfig& cfg, ParameterSet params);

  static PairModel zeros(const ModelConfig& cfg);
  static ParameterSet parameter_shapes(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return cfg_.kind; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  Var forward(Graph& g, const BoundParams& p, const EmbeddedSequence& q, const EmbeddedSequence& a,
              const ForwardOptions& opt = {}) const;
  // Inference-mode probability.
  double score(const EmbeddedSequence& q, const EmbeddedSequence& a) const;

  // Parameters that read embedding vectors directly, keyed by name.
  static std::optional<InputLayout> input_layout(const ModelConfig& cfg, const std::string& name);
  std::optional<InputLayout> input_layout(const std::string& name) const { return input_layout(cfg_, name); }

  // Rounds stored values to float when precision is F32.
  void normalize_precision();

 private:
  ModelConfig cfg_;
  ParameterSet params_;
};

}  // namespace bqa
