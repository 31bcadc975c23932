#include "veriscope/neural.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "veriscope/error.h"
#include "veriscope/rng.h"
#include "veriscope/text.h"

namespace veriscope {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd Sigmoid(const VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

VectorXd Tanh(const VectorXd& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

// Activations and states of one direction over the unmasked steps.
struct DirectionTrace {
  MatrixXd x;      // E x T, in processing order
  MatrixXd gates;  // 4H x T, activated [i, f, g, o]
  MatrixXd c;      // H x (T + 1); column 0 is the initial state
  MatrixXd h;      // H x (T + 1)

  VectorXd Final() const { return h.col(h.cols() - 1); }
};

struct BranchTrace {
  DirectionTrace fwd;
  DirectionTrace bwd;
};

struct ForwardTrace {
  std::array<BranchTrace, kBranches> branches;
  VectorXd encoding;  // 10H, before dropout
  VectorXd input;     // dense input: dropped-out encoding + similarities
  VectorXd hidden;
  VectorXd probs;     // [false, true]
};

MatrixXd Gather(const WordMatrix& vectors, const TokenSequence& seq, bool reverse) {
  std::vector<int> steps;
  for (std::size_t t = 0; t < seq.ids.size(); ++t) {
    if (t < seq.mask.size() && seq.mask[t]) steps.push_back(seq.ids[t]);
  }
  if (reverse) std::reverse(steps.begin(), steps.end());
  MatrixXd x(vectors.rows(), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (steps[t] < 0 || steps[t] >= vectors.cols()) ThrowInvalid("token id out of range");
    x.col(static_cast<Eigen::Index>(t)) = vectors.col(steps[t]);
  }
  return x;
}

DirectionTrace RunDirection(const LstmParams& p, MatrixXd x) {
  const Eigen::Index hidden = p.U.cols();
  const Eigen::Index steps = x.cols();
  if (steps > 0 && x.rows() != p.W.cols()) ThrowInvalid("input width does not match LSTM");
  DirectionTrace tr;
  tr.gates.resize(4 * hidden, steps);
  tr.c = MatrixXd::Zero(hidden, steps + 1);
  tr.h = MatrixXd::Zero(hidden, steps + 1);
  if (steps > 0) {
    MatrixXd z = p.W * x;
    z.colwise() += p.b;
    for (Eigen::Index t = 0; t < steps; ++t) {
      VectorXd zt = z.col(t) + p.U * tr.h.col(t);
      auto gates = tr.gates.col(t);
      gates.segment(0, 2 * hidden) = Sigmoid(zt.segment(0, 2 * hidden));
      gates.segment(2 * hidden, hidden) = Tanh(zt.segment(2 * hidden, hidden));
      gates.segment(3 * hidden, hidden) = Sigmoid(zt.segment(3 * hidden, hidden));
      tr.c.col(t + 1) = gates.segment(hidden, hidden).cwiseProduct(tr.c.col(t)) +
                        gates.segment(0, hidden).cwiseProduct(gates.segment(2 * hidden, hidden));
      tr.h.col(t + 1) =
          gates.segment(3 * hidden, hidden).cwiseProduct(Tanh(tr.c.col(t + 1)));
    }
  }
  tr.x = std::move(x);
  return tr;
}

void BackwardDirection(const LstmParams& p, const DirectionTrace& tr,
                       const VectorXd& dh_final, LstmParams* g, double weight) {
  const Eigen::Index steps = tr.x.cols();
  if (steps == 0) return;
  const Eigen::Index hidden = p.U.cols();
  MatrixXd dz(4 * hidden, steps);
  VectorXd dh = dh_final;
  VectorXd dc = VectorXd::Zero(hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto gates = tr.gates.col(t);
    const VectorXd i = gates.segment(0, hidden);
    const VectorXd f = gates.segment(hidden, hidden);
    const VectorXd gg = gates.segment(2 * hidden, hidden);
    const VectorXd o = gates.segment(3 * hidden, hidden);
    const VectorXd tc = Tanh(tr.c.col(t + 1));
    const VectorXd d_o = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    auto col = dz.col(t);
    col.segment(0, hidden) = dc.cwiseProduct(gg).cwiseProduct(
        i.cwiseProduct((1.0 - i.array()).matrix()));
    col.segment(hidden, hidden) = dc.cwiseProduct(tr.c.col(t)).cwiseProduct(
        f.cwiseProduct((1.0 - f.array()).matrix()));
    col.segment(2 * hidden, hidden) =
        dc.cwiseProduct(i).cwiseProduct((1.0 - gg.array().square()).matrix());
    col.segment(3 * hidden, hidden) =
        d_o.cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
    dc = dc.cwiseProduct(f);
    dh = p.U.transpose() * col;
  }
  g->W.noalias() += weight * dz * tr.x.transpose();
  g->U.noalias() += weight * dz * tr.h.leftCols(steps).transpose();
  g->b.noalias() += weight * dz.rowwise().sum();
}

void CheckDims(const NnModel& model, const EncodedExample& ex) {
  if (!ex.vectors) ThrowInvalid("encoded example has no word vectors");
  if (static_cast<std::size_t>(ex.vectors->rows()) != model.embedding_dim()) {
    ThrowInvalid("word vector width " + std::to_string(ex.vectors->rows()) +
                 " does not match model input " + std::to_string(model.embedding_dim()));
  }
  if (static_cast<std::size_t>(ex.similarities.size()) != model.similarity_dim()) {
    ThrowInvalid("similarity block has " + std::to_string(ex.similarities.size()) +
                 " values, model expects " + std::to_string(model.similarity_dim()));
  }
  for (const TokenSequence& s : ex.branches) {
    if (s.mask.size() != s.ids.size()) ThrowInvalid("mask length differs from sequence length");
  }
}

ForwardTrace Forward(const NnModel& model, const EncodedExample& ex, const VectorXd& keep) {
  CheckDims(model, ex);
  const Eigen::Index two_h = 2 * static_cast<Eigen::Index>(model.lstm_units());
  ForwardTrace tr;
  tr.encoding.resize(two_h * static_cast<Eigen::Index>(kBranches));
  for (std::size_t k = 0; k < kBranches; ++k) {
    const BiLstm& bi = model.branches[k];
    tr.branches[k].fwd = RunDirection(bi.forward, Gather(*ex.vectors, ex.branches[k], false));
    tr.branches[k].bwd = RunDirection(bi.backward, Gather(*ex.vectors, ex.branches[k], true));
    const Eigen::Index off = static_cast<Eigen::Index>(k) * two_h;
    tr.encoding.segment(off, two_h / 2) = tr.branches[k].fwd.Final();
    tr.encoding.segment(off + two_h / 2, two_h / 2) = tr.branches[k].bwd.Final();
  }
  tr.input.resize(tr.encoding.size() + ex.similarities.size());
  tr.input.head(tr.encoding.size()) =
      keep.size() ? VectorXd(tr.encoding.cwiseProduct(keep)) : tr.encoding;
  tr.input.tail(ex.similarities.size()) = ex.similarities;
  tr.hidden = Tanh(model.dense_w * tr.input + model.dense_b);
  VectorXd logits = model.out_w * tr.hidden + model.out_b;
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp().matrix();
  tr.probs = e / e.sum();
  return tr;
}

double CrossEntropyFromLogProbs(const NnModel& model, const ForwardTrace& tr, Label label) {
  VectorXd logits = model.out_w * tr.hidden + model.out_b;
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(LabelIndex(label));
}

VectorXd KeepMask(std::size_t size, double dropout, Rng& rng) {
  VectorXd keep(static_cast<Eigen::Index>(size));
  const double scale = 1.0 / (1.0 - dropout);
  for (Eigen::Index k = 0; k < keep.size(); ++k) {
    keep(k) = rng.Uniform() < dropout ? 0.0 : scale;
  }
  return keep;
}

NnModel ZeroLike(const NnModel& model) {
  NnModel z = NnModel::Zero(model.embedding_dim(), model.lstm_units(), model.hidden_units(),
                            model.similarity_dim());
  z.config = model.config;
  z.branch_names = model.branch_names;
  return z;
}

void FillUniform(MatrixXd* m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m->rows() + m->cols()));
  for (Eigen::Index j = 0; j < m->cols(); ++j) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = rng.Uniform(-limit, limit);
  }
}

std::vector<const EncodedExample*> Pointers(std::span<const EncodedExample> xs) {
  std::vector<const EncodedExample*> out;
  for (const EncodedExample& x : xs) out.push_back(&x);
  return out;
}

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
};

Evaluation Evaluate(const NnModel& model, std::span<const EncodedExample> data) {
  Evaluation e;
  if (data.empty()) return e;
  std::size_t correct = 0;
  for (const EncodedExample& ex : data) {
    const ForwardResult r = nn_forward(model, ex, false);
    const Label predicted = r.prob_true > r.prob_false ? Label::kTrue : Label::kFalse;
    if (predicted == ex.label) ++correct;
    const double p = ex.label == Label::kTrue ? r.prob_true : r.prob_false;
    e.loss -= std::log(std::max(p, 1e-300));
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  e.loss /= static_cast<double>(data.size());
  return e;
}

}  // namespace

LstmParams LstmParams::Zero(std::size_t input_dim, std::size_t hidden) {
  const auto h = static_cast<Eigen::Index>(hidden);
  return {MatrixXd::Zero(4 * h, static_cast<Eigen::Index>(input_dim)),
          MatrixXd::Zero(4 * h, h), VectorXd::Zero(4 * h)};
}

LstmState lstm_step(const LstmParams& params, const VectorXd& x, const VectorXd& h_prev,
                    const VectorXd& c_prev) {
  const Eigen::Index hidden = params.U.cols();
  if (x.size() != params.W.cols() || h_prev.size() != hidden || c_prev.size() != hidden) {
    ThrowInvalid("lstm_step: dimension mismatch");
  }
  const VectorXd z = params.W * x + params.U * h_prev + params.b;
  const VectorXd i = Sigmoid(z.segment(0, hidden));
  const VectorXd f = Sigmoid(z.segment(hidden, hidden));
  const VectorXd g = Tanh(z.segment(2 * hidden, hidden));
  const VectorXd o = Sigmoid(z.segment(3 * hidden, hidden));
  LstmState s;
  s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  s.h = o.cwiseProduct(Tanh(s.c));
  return s;
}

Eigen::VectorXd bilstm_encode(const LstmParams& fwd, const LstmParams& bwd,
                              const MatrixXd& sequence, std::span<const std::uint8_t> mask) {
  if (static_cast<std::size_t>(sequence.cols()) != mask.size()) {
    ThrowInvalid("bilstm_encode: mask length differs from sequence length");
  }
  std::vector<Eigen::Index> steps;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) steps.push_back(static_cast<Eigen::Index>(t));
  }
  MatrixXd x(sequence.rows(), static_cast<Eigen::Index>(steps.size()));
  MatrixXd xr(sequence.rows(), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    x.col(static_cast<Eigen::Index>(t)) = sequence.col(steps[t]);
    xr.col(static_cast<Eigen::Index>(t)) = sequence.col(steps[steps.size() - 1 - t]);
  }
  const Eigen::Index hidden = fwd.U.cols();
  VectorXd out(2 * hidden);
  out.head(hidden) = RunDirection(fwd, std::move(x)).Final();
  out.tail(hidden) = RunDirection(bwd, std::move(xr)).Final();
  return out;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0) || !(l2_lambda >= 0) || batch_size == 0 || epochs == 0 ||
      lstm_units == 0 || hidden_units == 0) {
    ThrowInvalid("training configuration values must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) ThrowInvalid("dropout must lie in [0, 1)");
  if (!(rms_decay > 0.0 && rms_decay < 1.0) || !(rms_epsilon > 0.0)) {
    ThrowInvalid("RMSprop decay must lie in (0, 1) and epsilon must be positive");
  }
}

NnModel NnModel::Zero(std::size_t embedding_dim, std::size_t lstm_units,
                      std::size_t hidden_units, std::size_t similarity_dim) {
  NnModel m;
  for (BiLstm& b : m.branches) {
    b.forward = LstmParams::Zero(embedding_dim, lstm_units);
    b.backward = LstmParams::Zero(embedding_dim, lstm_units);
  }
  const auto in = static_cast<Eigen::Index>(kBranches * 2 * lstm_units + similarity_dim);
  const auto hid = static_cast<Eigen::Index>(hidden_units);
  m.dense_w = MatrixXd::Zero(hid, in);
  m.dense_b = VectorXd::Zero(hid);
  m.out_w = MatrixXd::Zero(2, hid);
  m.out_b = VectorXd::Zero(2);
  m.config.lstm_units = lstm_units;
  m.config.hidden_units = hidden_units;
  return m;
}

NnModel NnModel::Init(std::size_t embedding_dim, std::size_t similarity_dim,
                      const TrainConfig& config, Rng& rng) {
  NnModel m = Zero(embedding_dim, config.lstm_units, config.hidden_units, similarity_dim);
  m.config = config;
  const auto h = static_cast<Eigen::Index>(config.lstm_units);
  for (BiLstm& b : m.branches) {
    for (LstmParams* p : {&b.forward, &b.backward}) {
      FillUniform(&p->W, rng);
      FillUniform(&p->U, rng);
      p->b.segment(h, h).setOnes();
    }
  }
  FillUniform(&m.dense_w, rng);
  FillUniform(&m.out_w, rng);
  return m;
}

std::size_t NnModel::similarity_dim() const {
  return static_cast<std::size_t>(dense_w.cols()) - kBranches * 2 * lstm_units();
}

std::vector<TensorRef> tensors(NnModel& model) {
  std::vector<TensorRef> out;
  auto add = [&](std::string name, auto& t, bool bias) {
    out.push_back({std::move(name), t.data(), static_cast<std::size_t>(t.size()), bias});
  };
  for (std::size_t k = 0; k < kBranches; ++k) {
    const std::string& n = model.branch_names[k];
    add(n + ".fwd.W", model.branches[k].forward.W, false);
    add(n + ".fwd.U", model.branches[k].forward.U, false);
    add(n + ".fwd.b", model.branches[k].forward.b, true);
    add(n + ".bwd.W", model.branches[k].backward.W, false);
    add(n + ".bwd.U", model.branches[k].backward.U, false);
    add(n + ".bwd.b", model.branches[k].backward.b, true);
  }
  add("dense.W", model.dense_w, false);
  add("dense.b", model.dense_b, true);
  add("out.W", model.out_w, false);
  add("out.b", model.out_b, true);
  return out;
}

SequenceEncoder::SequenceEncoder(const EmbeddingTable& table) : table_(&table) {
  auto m = std::make_shared<WordMatrix>(static_cast<Eigen::Index>(table.dimension()),
                                        static_cast<Eigen::Index>(table.size()));
  for (std::size_t w = 0; w < table.size(); ++w) {
    auto row = table.Row(w);
    for (std::size_t k = 0; k < row.size(); ++k) {
      (*m)(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = row[k];
    }
  }
  vectors_ = std::move(m);
}

TokenSequence SequenceEncoder::Encode(std::string_view text, std::size_t max_tokens) const {
  TokenSequence seq;
  for (const Token& t : tokenize(text)) {
    if (seq.ids.size() >= max_tokens) break;
    const int id = table_->IndexOf(t.lower);
    if (id < 0) continue;
    seq.ids.push_back(id);
    seq.mask.push_back(1);
  }
  return seq;
}

ForwardResult nn_forward(const NnModel& model, const EncodedExample& example,
                         bool train_mode, std::uint64_t seed) {
  VectorXd keep;
  if (train_mode && model.config.dropout > 0.0) {
    Rng rng(seed);
    keep = KeepMask(kBranches * 2 * model.lstm_units(), model.config.dropout, rng);
  }
  ForwardTrace tr = Forward(model, example, keep);
  ForwardResult r;
  r.prob_false = tr.probs(0);
  r.prob_true = tr.probs(1);
  r.hidden = std::move(tr.hidden);
  r.encoding = std::move(tr.encoding);
  return r;
}

Eigen::VectorXd hidden_embedding(const NnModel& model, const EncodedExample& example) {
  return nn_forward(model, example, false).hidden;
}

std::array<Eigen::VectorXd, kBranches> branch_encodings(const NnModel& model,
                                                        const EncodedExample& example) {
  const VectorXd enc = nn_forward(model, example, false).encoding;
  const Eigen::Index two_h = 2 * static_cast<Eigen::Index>(model.lstm_units());
  std::array<VectorXd, kBranches> out;
  for (std::size_t k = 0; k < kBranches; ++k) {
    out[k] = enc.segment(static_cast<Eigen::Index>(k) * two_h, two_h);
  }
  return out;
}

double cross_entropy(const NnModel& model, const EncodedExample& example) {
  const ForwardTrace tr = Forward(model, example, VectorXd());
  return CrossEntropyFromLogProbs(model, tr, example.label);
}

double l2_penalty(const NnModel& model, double lambda) {
  NnModel& m = const_cast<NnModel&>(model);
  double sum = 0.0;
  for (const TensorRef& t : tensors(m)) {
    if (t.is_bias) continue;
    for (std::size_t k = 0; k < t.size; ++k) sum += t.data[k] * t.data[k];
  }
  return lambda * sum;
}

NnModel l2_gradient(const NnModel& model, double lambda) {
  NnModel grad = ZeroLike(model);
  auto src = tensors(const_cast<NnModel&>(model));
  auto dst = tensors(grad);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].is_bias) continue;
    for (std::size_t k = 0; k < src[i].size; ++k) {
      dst[i].data[k] = 2.0 * lambda * src[i].data[k];
    }
  }
  return grad;
}

double accumulate_gradient(const NnModel& model, const EncodedExample& example,
                           const VectorXd& dropout_keep, NnModel* grad, double weight) {
  const ForwardTrace tr = Forward(model, example, dropout_keep);
  const double loss = CrossEntropyFromLogProbs(model, tr, example.label);

  VectorXd dlogits = tr.probs;
  dlogits(LabelIndex(example.label)) -= 1.0;
  grad->out_w.noalias() += weight * dlogits * tr.hidden.transpose();
  grad->out_b.noalias() += weight * dlogits;
  const VectorXd dhidden = model.out_w.transpose() * dlogits;
  const VectorXd dpre = dhidden.cwiseProduct((1.0 - tr.hidden.array().square()).matrix());
  grad->dense_w.noalias() += weight * dpre * tr.input.transpose();
  grad->dense_b.noalias() += weight * dpre;
  const VectorXd dinput = model.dense_w.transpose() * dpre;
  VectorXd denc = dinput.head(tr.encoding.size());
  if (dropout_keep.size()) denc = denc.cwiseProduct(dropout_keep);

  const Eigen::Index hidden = static_cast<Eigen::Index>(model.lstm_units());
  for (std::size_t k = 0; k < kBranches; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * 2 * hidden;
    BackwardDirection(model.branches[k].forward, tr.branches[k].fwd,
                      denc.segment(off, hidden), &grad->branches[k].forward, weight);
    BackwardDirection(model.branches[k].backward, tr.branches[k].bwd,
                      denc.segment(off + hidden, hidden), &grad->branches[k].backward, weight);
  }
  return loss;
}

TrainResult nn_train(std::span<const EncodedExample> train,
                     std::span<const EncodedExample> dev, const TrainConfig& config) {
  config.Validate();
  if (train.empty()) ThrowInvalid("nn_train: empty training set");
  bool has_true = false;
  bool has_false = false;
  for (const EncodedExample& ex : train) {
    (ex.label == Label::kTrue ? has_true : has_false) = true;
  }
  if (!has_true || !has_false) ThrowInvalid("nn_train: training data needs both classes");

  const std::size_t embedding_dim = static_cast<std::size_t>(train[0].vectors->rows());
  const std::size_t similarity_dim = static_cast<std::size_t>(train[0].similarities.size());

  Rng rng(config.seed);
  TrainResult result;
  result.model = NnModel::Init(embedding_dim, similarity_dim, config, rng);
  NnModel& model = result.model;
  NnModel cache = ZeroLike(model);
  auto params = tensors(model);
  auto caches = tensors(cache);

  std::vector<const EncodedExample*> order = Pointers(train);
  double best_dev = -1.0;
  double best_dev_loss = 0.0;
  NnModel best = model;
  const std::size_t encoding_size = kBranches * 2 * config.lstm_units;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(std::span<const EncodedExample*>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      NnModel grad = ZeroLike(model);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const VectorXd keep = config.dropout > 0.0
                                  ? KeepMask(encoding_size, config.dropout, rng)
                                  : VectorXd();
        batch_loss += weight * accumulate_gradient(model, *order[i], keep, &grad, weight);
      }
      batch_loss += l2_penalty(model, config.l2_lambda);
      auto grads = tensors(grad);
      for (std::size_t t = 0; t < params.size(); ++t) {
        const bool decay = !params[t].is_bias && config.l2_lambda > 0.0;
        for (std::size_t k = 0; k < params[t].size; ++k) {
          double g = grads[t].data[k];
          if (decay) g += 2.0 * config.l2_lambda * params[t].data[k];
          double& v = caches[t].data[k];
          v = config.rms_decay * v + (1.0 - config.rms_decay) * g * g;
          params[t].data[k] -= config.learning_rate * g / (std::sqrt(v) + config.rms_epsilon);
        }
      }
      loss_sum += batch_loss;
      ++batches;
    }
    // Accuracy of the updated parameters on the training data.
    for (const EncodedExample* ex : order) {
      const ForwardResult r = nn_forward(model, *ex, false);
      if ((r.prob_true > r.prob_false) == (ex->label == Label::kTrue)) ++correct;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(batches);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    const Evaluation on_dev = Evaluate(model, dev);
    stats.dev_accuracy = on_dev.accuracy;
    stats.dev_loss = on_dev.loss;
    result.history.push_back(stats);
    if (!dev.empty() && (stats.dev_accuracy > best_dev ||
                         (stats.dev_accuracy == best_dev && stats.dev_loss < best_dev_loss))) {
      best_dev = stats.dev_accuracy;
      best_dev_loss = stats.dev_loss;
      best = model;
      result.best_epoch = epoch;
    }
  }
  if (dev.empty()) {
    result.best_epoch = config.epochs;
  } else {
    model = std::move(best);
  }
  return result;
}

GradCheckReport grad_check(const NnModel& model, const EncodedExample& example,
                           const GradCheckOptions& options) {
  NnModel m = model;
  const double lambda = m.config.l2_lambda;
  NnModel analytic = l2_gradient(m, lambda);
  accumulate_gradient(m, example, VectorXd(), &analytic);
  if (options.tamper) options.tamper(analytic);

  auto params = tensors(m);
  auto grads = tensors(analytic);
  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    std::vector<std::size_t> coords(params[t].size);
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = k;
    if (coords.size() > options.samples_per_tensor) {
      rng.Shuffle(std::span<std::size_t>(coords));
      coords.resize(options.samples_per_tensor);
    }
    for (std::size_t k : coords) {
      double& w = params[t].data[k];
      const double original = w;
      // The L2 change of one coordinate is added in closed form: differencing
      // the whole penalty would bury small gradients in rounding error.
      w = original + options.epsilon;
      const double up = cross_entropy(m, example);
      w = original - options.epsilon;
      const double down = cross_entropy(m, example);
      w = original;
      const double up_w = original + options.epsilon, down_w = original - options.epsilon;
      const double l2_delta =
          params[t].is_bias ? 0.0 : lambda * (up_w * up_w - down_w * down_w);
      const double numeric = (up - down + l2_delta) / (2.0 * options.epsilon);
      const double a = grads[t].data[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = params[t].name;
      }
    }
  }
  return report;
}

std::string SaveNnModel(const NnModel& model) {
  using nlohmann::json;
  NnModel& m = const_cast<NnModel&>(model);
  const TrainConfig& c = model.config;
  json config = {{"learning_rate", c.learning_rate}, {"l2_lambda", c.l2_lambda},
                 {"dropout", c.dropout},             {"batch_size", c.batch_size},
                 {"epochs", c.epochs},               {"seed", c.seed},
                 {"lstm_units", c.lstm_units},       {"hidden_units", c.hidden_units},
                 {"rms_decay", c.rms_decay},         {"rms_epsilon", c.rms_epsilon},
                 {"max_tokens", c.max_tokens}};
  json ts = json::array();
  for (const TensorRef& t : tensors(m)) {
    ts.push_back({{"name", t.name}, {"data", std::vector<double>(t.data, t.data + t.size)}});
  }
  const json j = {{"format", "veriscope.nn"},
                  {"version", 1},
                  {"embedding_dim", model.embedding_dim()},
                  {"lstm_units", model.lstm_units()},
                  {"hidden_units", model.hidden_units()},
                  {"similarity_dim", model.similarity_dim()},
                  {"branch_names", model.branch_names},
                  {"config", config},
                  {"tensors", ts}};
  return j.dump();
}

NnModel LoadNnModel(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "veriscope.nn" || j.at("version") != 1) {
      throw Error(ErrorCode::kFormatError, "not a version 1 network checkpoint");
    }
    NnModel m = NnModel::Zero(j.at("embedding_dim"), j.at("lstm_units"),
                              j.at("hidden_units"), j.at("similarity_dim"));
    m.branch_names = j.at("branch_names").get<std::array<std::string, kBranches>>();
    const json& c = j.at("config");
    TrainConfig& cfg = m.config;
    cfg.learning_rate = c.at("learning_rate");
    cfg.l2_lambda = c.at("l2_lambda");
    cfg.dropout = c.at("dropout");
    cfg.batch_size = c.at("batch_size");
    cfg.epochs = c.at("epochs");
    cfg.seed = c.at("seed");
    cfg.lstm_units = c.at("lstm_units");
    cfg.hidden_units = c.at("hidden_units");
    cfg.rms_decay = c.at("rms_decay");
    cfg.rms_epsilon = c.at("rms_epsilon");
    cfg.max_tokens = c.at("max_tokens").get<std::array<std::size_t, kBranches>>();
    auto refs = tensors(m);
    const json& ts = j.at("tensors");
    if (ts.size() != refs.size()) throw Error(ErrorCode::kFormatError, "tensor count mismatch");
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const auto data = ts[i].at("data").get<std::vector<double>>();
      if (ts[i].at("name") != refs[i].name || data.size() != refs[i].size) {
        throw Error(ErrorCode::kFormatError, "tensor " + refs[i].name + " does not match");
      }
      std::copy(data.begin(), data.end(), refs[i].data);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("network checkpoint: ") + e.what());
  }
}

}  // namespace veriscope
