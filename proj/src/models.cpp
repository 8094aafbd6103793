#include "bibleqa/models.hpp"

#include <algorithm>
#include <cmath>

#include "bibleqa/errors.hpp"

namespace bqa {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Rnn: return "rnn";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Bidaf: return "bidaf";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "rnn") return ModelKind::Rnn;
  if (name == "cnn") return ModelKind::Cnn;
  if (name == "bidaf") return ModelKind::Bidaf;
  throw ValidationError("unknown model kind: " + name);
}

// ---- LSTM -------------------------------------------------------------------

namespace {

void add_lstm_shapes(ParameterSet& params, const LstmCell& cell) {
  for (char gate : kLstmGates) {
    params.add(cell.weight(gate), Tensor(Shape{cell.input_dim + cell.hidden_dim, cell.hidden_dim}));
    params.add(cell.bias(gate), Tensor(Shape{1, cell.hidden_dim}));
  }
}

void xavier_fill(Tensor& t, Rng& rng) {
  const double fan = static_cast<double>(t.extent(0) + t.extent(1));
  const double limit = std::sqrt(6.0 / fan);
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
}

bool is_bias(const std::string& name) {
  const auto dot = name.rfind('.');
  return name.compare(dot + 1, 1, "b") == 0;
}

const Var& param(const BoundParams& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw NotFoundError("missing parameter " + name);
  return it->second;
}

Var dense(const BoundParams& p, const std::string& prefix, Var x) {
  return add(matmul(x, param(p, prefix + ".W")), param(p, prefix + ".b"));
}

LstmOutput encode_rows(Graph& g, const BoundParams& p, const LstmCell& cell, std::span<const Var> rows) {
  LstmState state = zero_state(g, cell);
  LstmOutput out;
  out.hidden_states.reserve(rows.size());
  for (const auto& x : rows) {
    state = lstm_step(p, cell, state, x);
    out.hidden_states.push_back(state.hidden);
  }
  out.final_hidden = state.hidden;
  return out;
}

std::vector<Var> constant_rows(Graph& g, const Tensor& seq, std::size_t length) {
  if (seq.rank() != 2) throw ShapeError("sequence must be rank 2, got " + shape_str(seq.shape()));
  if (length > seq.extent(0)) throw ShapeError("sequence length exceeds its rows");
  std::vector<Var> rows;
  rows.reserve(length);
  for (std::size_t t = 0; t < length; ++t) rows.push_back(g.constant(seq.rows(t, t + 1)));
  return rows;
}

void check_input_dim(const EmbeddedSequence& s, std::size_t dim) {
  if (s.rows.rank() != 2 || s.rows.extent(1) != dim) {
    throw ShapeError("embedded sequence " + shape_str(s.rows.shape()) + " does not match model input dim " +
                     std::to_string(dim));
  }
}

LstmCell rnn_question_cell(const ModelConfig& c) { return {"q_lstm", c.input_dim, c.hidden}; }
LstmCell rnn_answer_cell(const ModelConfig& c) { return {"a_lstm", c.input_dim, c.hidden}; }
LstmCell bidaf_embed_cell(const ModelConfig& c) { return {"emb_lstm", c.input_dim, c.hidden}; }
LstmCell bidaf_model_cell(const ModelConfig& c) { return {"model_lstm", 4 * c.hidden, c.hidden}; }

}  // namespace

void init_lstm(ParameterSet& params, const LstmCell& cell, Rng& rng) {
  for (char gate : kLstmGates) {
    Tensor w(Shape{cell.input_dim + cell.hidden_dim, cell.hidden_dim});
    xavier_fill(w, rng);
    params.add(cell.weight(gate), std::move(w));
    params.add(cell.bias(gate), Tensor::filled(Shape{1, cell.hidden_dim}, gate == 'f' ? 1.0 : 0.0));
  }
}

LstmState zero_state(Graph& g, const LstmCell& cell) {
  return {g.constant(Tensor(Shape{1, cell.hidden_dim})), g.constant(Tensor(Shape{1, cell.hidden_dim}))};
}

LstmState lstm_step(const BoundParams& p, const LstmCell& cell, const LstmState& state, Var x) {
  const Shape want{1, cell.input_dim};
  if (x.shape() != want) {
    throw ShapeError(cell.prefix + ": input " + shape_str(x.shape()) + ", expected " + shape_str(want));
  }
  const Shape hs{1, cell.hidden_dim};
  if (state.cell.shape() != hs || state.hidden.shape() != hs) {
    throw ShapeError(cell.prefix + ": state shape does not match hidden size " +
                     std::to_string(cell.hidden_dim));
  }
  Var xh = concat(x, state.hidden, 1);
  auto gate = [&](char name) { return add(matmul(xh, param(p, cell.weight(name))), param(p, cell.bias(name))); };
  Var in = sigmoid(gate('i'));
  Var forget = sigmoid(gate('f'));
  Var out = sigmoid(gate('o'));
  Var candidate = tanh(gate('c'));
  Var c_next = add(mul(forget, state.cell), mul(in, candidate));
  Var h_next = mul(out, tanh(c_next));
  return {c_next, h_next};
}

LstmOutput encode_lstm(Graph& g, const BoundParams& p, const LstmCell& cell, const Tensor& seq,
                       std::size_t length) {
  const auto rows = constant_rows(g, seq, length);
  return encode_rows(g, p, cell, rows);
}

// ---- RNN ----------------------------------------------------------------------

Var rnn_pair_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg, const EmbeddedSequence& q,
                     const EmbeddedSequence& a) {
  check_input_dim(q, cfg.input_dim);
  check_input_dim(a, cfg.input_dim);
  Var hq = encode_lstm(g, p, rnn_question_cell(cfg), q.rows, q.length).final_hidden;
  Var ha = encode_lstm(g, p, rnn_answer_cell(cfg), a.rows, a.length).final_hidden;
  return sigmoid(dense(p, "out", concat(hq, ha, 1)));
}

// ---- CNN ----------------------------------------------------------------------

namespace {

// Rows i..i+k-1 flattened into one row per window; the sequence is cut at its
// true length and zero-padded up to k.
Tensor window_matrix(const EmbeddedSequence& s, std::size_t k) {
  const std::size_t dim = s.rows.extent(1);
  const std::size_t len = std::max(s.length, k);
  const std::size_t positions = len - k + 1;
  Tensor out(Shape{positions, k * dim});
  for (std::size_t i = 0; i < positions; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = i + j;
      if (src >= s.length) continue;
      std::copy_n(s.rows.values().data() + src * dim, dim, out.values().data() + i * k * dim + j * dim);
    }
  return out;
}

Var pooled_features(Graph& g, const BoundParams& p, const ModelConfig& cfg, const EmbeddedSequence& s) {
  Tensor windows = window_matrix(s, cfg.window);
  const std::size_t positions = windows.extent(0);
  Var conv = relu(add(matmul(g.constant(std::move(windows)), param(p, "conv.W")),
                      tile(param(p, "conv.b"), 0, positions)));
  return reshape(reduce(ReduceKind::Max, conv, 0), Shape{1, cfg.filters});
}

Var dropout(Graph& g, Var x, double rate, Rng& rng) {
  Tensor mask(x.shape());
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep;
  return mul(x, g.constant(std::move(mask)));
}

}  // namespace

CnnForward cnn_pair_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg, const EmbeddedSequence& q,
                            const EmbeddedSequence& a, const ForwardOptions& opt) {
  check_input_dim(q, cfg.input_dim);
  check_input_dim(a, cfg.input_dim);
  CnnForward out;
  out.question_pooled = pooled_features(g, p, cfg, q);
  out.answer_pooled = pooled_features(g, p, cfg, a);
  Var qv = out.question_pooled;
  Var av = out.answer_pooled;
  if (opt.training && cfg.dropout > 0.0) {
    if (!opt.rng) throw ValidationError("dropout in training mode needs an Rng");
    qv = dropout(g, qv, cfg.dropout, *opt.rng);
    av = dropout(g, av, cfg.dropout, *opt.rng);
  }
  out.probability = sigmoid(dense(p, "out", concat(qv, av, 1)));
  return out;
}

// ---- BiDAF --------------------------------------------------------------------

BidafAttention bidaf_attention(Var q_enc, Var a_enc, Var alpha) {
  const Shape& qs = q_enc.shape();
  const Shape& as = a_enc.shape();
  if (qs.size() != 2 || as.size() != 2 || qs[1] != as[1]) {
    throw ShapeError("bidaf_attention: question " + shape_str(qs) + " and answer " + shape_str(as) +
                     " encodings disagree");
  }
  const std::size_t h = qs[1], tq = qs[0], ta = as[0];
  if (alpha.shape() != Shape{1, 3 * h}) {
    throw ShapeError("bidaf_attention: alpha " + shape_str(alpha.shape()) + ", expected " +
                     shape_str({1, 3 * h}));
  }
  Var w_answer = slice(alpha, 1, 0, h);
  Var w_question = slice(alpha, 1, h, 2 * h);
  Var w_product = slice(alpha, 1, 2 * h, 3 * h);

  // S[j,k] = w_a . a_j + w_q . q_k + w_p . (a_j * q_k)
  Var answer_term = tile(matmul(a_enc, transpose(w_answer)), 1, tq);
  Var question_term = tile(transpose(matmul(q_enc, transpose(w_question))), 0, ta);
  Var product_term = matmul(mul(a_enc, tile(w_product, 0, ta)), transpose(q_enc));

  BidafAttention out;
  out.similarity = add(add(answer_term, question_term), product_term);
  out.c2q_weights = softmax(out.similarity);
  out.attended_question = matmul(out.c2q_weights, q_enc);

  Var row_max = reshape(reduce(ReduceKind::Max, out.similarity, 1), Shape{1, ta});
  Var q2c_weights = softmax(row_max);
  out.attended_answer = tile(matmul(q2c_weights, a_enc), 0, ta);

  const Var parts[] = {a_enc, out.attended_question, mul(a_enc, out.attended_question),
                       mul(a_enc, out.attended_answer)};
  out.merged = concat(parts, 1);
  return out;
}

namespace {

Var stack_rows(const std::vector<Var>& rows) { return concat(rows, 0); }

}  // namespace

Var bidaf_forward(Graph& g, const BoundParams& p, const ModelConfig& cfg, const EmbeddedSequence& q,
                  const EmbeddedSequence& a) {
  check_input_dim(q, cfg.input_dim);
  check_input_dim(a, cfg.input_dim);
  const LstmCell embed = bidaf_embed_cell(cfg);
  // An empty side reads as a single PAD row.
  auto encode = [&](const EmbeddedSequence& s) {
    std::vector<Var> rows = constant_rows(g, s.rows, s.length);
    if (rows.empty()) rows.push_back(g.constant(Tensor(Shape{1, cfg.input_dim})));
    return stack_rows(encode_rows(g, p, embed, rows).hidden_states);
  };
  Var q_enc = encode(q);
  Var a_enc = encode(a);
  BidafAttention att = bidaf_attention(q_enc, a_enc, param(p, "alpha.w"));

  const std::size_t ta = a_enc.shape()[0];
  std::vector<Var> g_rows;
  g_rows.reserve(ta);
  for (std::size_t j = 0; j < ta; ++j) g_rows.push_back(slice(att.merged, 0, j, j + 1));
  LstmOutput modeled = encode_rows(g, p, bidaf_model_cell(cfg), g_rows);

  Var summary = modeled.final_hidden;
  if (cfg.readout == BidafReadout::MaxPool) {
    summary = reshape(reduce(ReduceKind::Max, stack_rows(modeled.hidden_states), 0), Shape{1, cfg.hidden});
  }
  return sigmoid(dense(p, "out", summary));
}

// ---- PairModel ------------------------------------------------------------------

ParameterSet PairModel::parameter_shapes(const ModelConfig& cfg) {
  ParameterSet p;
  switch (cfg.kind) {
    case ModelKind::Rnn:
      add_lstm_shapes(p, rnn_question_cell(cfg));
      add_lstm_shapes(p, rnn_answer_cell(cfg));
      p.add("out.W", Tensor(Shape{2 * cfg.hidden, 1}));
      break;
    case ModelKind::Cnn:
      if (cfg.window < 1) throw ValidationError("CNN window must be >= 1");
      if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ValidationError("dropout must lie in [0, 1)");
      p.add("conv.W", Tensor(Shape{cfg.window * cfg.input_dim, cfg.filters}));
      p.add("conv.b", Tensor(Shape{1, cfg.filters}));
      p.add("out.W", Tensor(Shape{2 * cfg.filters, 1}));
      break;
    case ModelKind::Bidaf:
      add_lstm_shapes(p, bidaf_embed_cell(cfg));
      add_lstm_shapes(p, bidaf_model_cell(cfg));
      p.add("alpha.w", Tensor(Shape{1, 3 * cfg.hidden}));
      p.add("out.W", Tensor(Shape{cfg.hidden, 1}));
      break;
  }
  p.add("out.b", Tensor(Shape{1, 1}));
  return p;
}

PairModel::PairModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), params_(parameter_shapes(cfg)) {
  Rng rng(seed);
  for (auto& [name, t] : params_) {
    if (!is_bias(name)) {
      xavier_fill(t, rng);
    } else if (name.ends_with(".b_f")) {
      for (auto& v : t.values()) v = 1.0;
    }
  }
  normalize_precision();
}

PairModel::PairModel(const ModelConfig& cfg, ParameterSet params) : cfg_(cfg), params_(std::move(params)) {
  const ParameterSet expected = parameter_shapes(cfg);
  if (expected.names() != params_.names()) {
    throw ShapeError("parameter names do not match a " + to_string(cfg.kind) + " model");
  }
  for (const auto& [name, t] : expected) {
    if (params_.at(name).shape() != t.shape()) {
      throw ShapeError(name + ": shape " + shape_str(params_.at(name).shape()) + ", expected " +
                       shape_str(t.shape()));
    }
  }
}

PairModel PairModel::zeros(const ModelConfig& cfg) { return PairModel(cfg, parameter_shapes(cfg)); }

Var PairModel::forward(Graph& g, const BoundParams& p, const EmbeddedSequence& q, const EmbeddedSequence& a,
                       const ForwardOptions& opt) const {
  switch (cfg_.kind) {
    case ModelKind::Rnn: return rnn_pair_forward(g, p, cfg_, q, a);
    case ModelKind::Cnn: return cnn_pair_forward(g, p, cfg_, q, a, opt).probability;
    case ModelKind::Bidaf: return bidaf_forward(g, p, cfg_, q, a);
  }
  throw ValidationError("unknown model kind");
}

double PairModel::score(const EmbeddedSequence& q, const EmbeddedSequence& a) const {
  Graph g;
  return forward(g, bind_constants(g, params_), q, a).value().item();
}

std::optional<InputLayout> PairModel::input_layout(const ModelConfig& cfg, const std::string& name) {
  const auto dot = name.find('.');
  const std::string prefix = name.substr(0, dot);
  const bool weight = name.compare(dot + 1, 1, "W") == 0;
  if (!weight) return std::nullopt;
  switch (cfg.kind) {
    case ModelKind::Rnn:
      if (prefix == "q_lstm" || prefix == "a_lstm") return InputLayout{1, cfg.input_dim, cfg.hidden};
      break;
    case ModelKind::Cnn:
      if (prefix == "conv") return InputLayout{cfg.window, cfg.input_dim, 0};
      break;
    case ModelKind::Bidaf:
      if (prefix == "emb_lstm") return InputLayout{1, cfg.input_dim, cfg.hidden};
      break;
  }
  return std::nullopt;
}

void PairModel::normalize_precision() {
  if (cfg_.precision != Precision::F32) return;
  for (auto& [_, t] : params_)
    for (auto& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace bqa
