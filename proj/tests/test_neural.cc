#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/neural.h"
#include "veriscope/rng.h"

namespace veriscope {
namespace {

using testing::CodeOf;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd RandomMatrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-scale, scale);
  return m;
}

LstmParams RandomLstm(std::size_t e, std::size_t h, Rng& rng) {
  LstmParams p;
  p.W = RandomMatrix(4 * h, e, rng);
  p.U = RandomMatrix(4 * h, h, rng);
  p.b = RandomMatrix(4 * h, 1, rng);
  return p;
}

EncodedExample RandomExample(std::shared_ptr<const WordMatrix> vectors, std::size_t sims,
                             std::size_t max_len, Rng& rng) {
  EncodedExample ex;
  ex.vectors = vectors;
  for (auto& seq : ex.branches) {
    const std::size_t n = rng.Below(max_len + 1);
    for (std::size_t t = 0; t < n; ++t) {
      seq.ids.push_back(static_cast<int>(rng.Below(static_cast<std::uint64_t>(vectors->cols()))));
      seq.mask.push_back(1);
    }
  }
  ex.similarities = RandomMatrix(static_cast<Eigen::Index>(sims), 1, rng);
  ex.label = rng.Below(2) ? Label::kTrue : Label::kFalse;
  return ex;
}

TrainConfig SmallConfig(std::size_t lstm, std::size_t hidden) {
  TrainConfig c;
  c.lstm_units = lstm;
  c.hidden_units = hidden;
  return c;
}

TEST_CASE("lstm_step") {
  const LstmParams zero = LstmParams::Zero(3, 2);
  const LstmState s = lstm_step(zero, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                                Eigen::VectorXd::Zero(2));
  CHECK(s.h.isZero(0));
  CHECK(s.c.isZero(0));

  // H = 1, E = 1: gates stacked [i, f, g, o].
  LstmParams p = LstmParams::Zero(1, 1);
  p.W << 0.5, -0.3, 0.8, 0.1;
  p.U << 0.2, 0.4, -0.6, 0.7;
  p.b << 0.1, 1.0, 0.0, -0.2;
  const double x = 0.9, h0 = -0.4, c0 = 0.3;
  const double i = Sigmoid(0.5 * x + 0.2 * h0 + 0.1);
  const double f = Sigmoid(-0.3 * x + 0.4 * h0 + 1.0);
  const double g = std::tanh(0.8 * x - 0.6 * h0);
  const double o = Sigmoid(0.1 * x + 0.7 * h0 - 0.2);
  const double c = f * c0 + i * g;
  const LstmState one = lstm_step(p, Eigen::VectorXd::Constant(1, x),
                                  Eigen::VectorXd::Constant(1, h0),
                                  Eigen::VectorXd::Constant(1, c0));
  CHECK(one.c(0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(one.h(0) == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));

  // Forget gate saturated open, input gate shut.
  LstmParams carry = LstmParams::Zero(1, 1);
  carry.b << -1e3, 1e3, 0.0, 0.0;
  const LstmState kept = lstm_step(carry, Eigen::VectorXd::Constant(1, 2.0),
                                   Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.7));
  CHECK(kept.c(0) == 0.7);
}

TEST_CASE("bilstm_encode") {
  Rng rng(21);
  const LstmParams fwd = RandomLstm(3, 2, rng), bwd = RandomLstm(3, 2, rng);

  Eigen::MatrixXd one = RandomMatrix(3, 1, rng);
  const std::vector<std::uint8_t> m1 = {1};
  const Eigen::VectorXd enc1 = bilstm_encode(fwd, bwd, one, m1);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  CHECK(enc1.head(2).isApprox(lstm_step(fwd, one.col(0), z, z).h));
  CHECK(enc1.tail(2).isApprox(lstm_step(bwd, one.col(0), z, z).h));

  Eigen::MatrixXd seq = RandomMatrix(3, 4, rng);
  const std::vector<std::uint8_t> mask = {1, 1, 1, 1};
  Eigen::MatrixXd padded(3, 7);
  padded << seq, RandomMatrix(3, 3, rng);
  const std::vector<std::uint8_t> padded_mask = {1, 1, 1, 1, 0, 0, 0};
  CHECK(bilstm_encode(fwd, bwd, seq, mask) == bilstm_encode(fwd, bwd, padded, padded_mask));

  Eigen::MatrixXd pal(3, 5);
  pal << seq.col(0), seq.col(1), seq.col(2), seq.col(1), seq.col(0);
  const std::vector<std::uint8_t> all5(5, 1);
  const Eigen::VectorXd sym = bilstm_encode(fwd, fwd, pal, all5);
  CHECK((sym.head(2) - sym.tail(2)).cwiseAbs().maxCoeff() < 1e-15);

  const std::vector<std::uint8_t> none(4, 0);
  CHECK(bilstm_encode(fwd, bwd, seq, none).isZero(0));
}

TEST_CASE("nn_forward") {
  Rng rng(5);
  auto vectors = std::make_shared<const WordMatrix>(RandomMatrix(4, 12, rng));
  const NnModel model = NnModel::Init(4, 24, SmallConfig(3, 6), rng);
  for (int trial = 0; trial < 20; ++trial) {
    const EncodedExample ex = RandomExample(vectors, 24, 5, rng);
    const ForwardResult r = nn_forward(model, ex);
    CHECK(r.prob_true + r.prob_false == doctest::Approx(1.0).epsilon(1e-12));
    const ForwardResult again = nn_forward(model, ex);
    CHECK(r.prob_true == again.prob_true);
    CHECK(r.hidden == again.hidden);
    const Eigen::VectorXd h = hidden_embedding(model, ex);
    CHECK(h == r.hidden);
    CHECK(h.cwiseAbs().maxCoeff() < 1.0);

    const ForwardResult dropped = nn_forward(model, ex, true, 17 + trial);
    CHECK(dropped.prob_true + dropped.prob_false == doctest::Approx(1.0).epsilon(1e-12));
  }

  const NnModel zero = NnModel::Zero(4, 3, 6, 24);
  const EncodedExample ex = RandomExample(vectors, 24, 5, rng);
  const ForwardResult half = nn_forward(zero, ex);
  CHECK(half.prob_true == 0.5);
  CHECK(half.prob_false == 0.5);
  CHECK(cross_entropy(zero, ex) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  EncodedExample bad = ex;
  bad.similarities = Eigen::VectorXd::Zero(5);
  CHECK(CodeOf([&] { nn_forward(model, bad); }) == ErrorCode::kInvalidArgument);

  // Identical inputs give identical task embeddings.
  CHECK(hidden_embedding(model, ex) == hidden_embedding(model, EncodedExample(ex)));
}

TEST_CASE("grad_check on random small configurations") {
  Rng rng(1234);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t e = 1 + rng.Below(6), h = 1 + rng.Below(4);
    auto vectors = std::make_shared<const WordMatrix>(RandomMatrix(e, 9, rng));
    TrainConfig config = SmallConfig(h, 2 + rng.Below(5));
    config.l2_lambda = rng.Uniform(0.0, 0.2);
    const NnModel model = NnModel::Init(e, 24, config, rng);
    const EncodedExample ex = RandomExample(vectors, 24, 5, rng);
    const GradCheckReport report = grad_check(model, ex);
    INFO("trial " << trial << " worst " << report.worst_tensor);
    CHECK(report.max_relative_error < 1e-4);
    CHECK(report.coordinates_checked > 0);
  }
}

TEST_CASE("grad_check negative control and bias regularization") {
  Rng rng(77);
  auto vectors = std::make_shared<const WordMatrix>(RandomMatrix(3, 6, rng));
  TrainConfig config = SmallConfig(2, 4);
  const NnModel model = NnModel::Init(3, 24, config, rng);
  const EncodedExample ex = RandomExample(vectors, 24, 4, rng);

  GradCheckOptions tampered;
  tampered.tamper = [](NnModel& g) { g.dense_w *= 1.5; };
  CHECK(grad_check(model, ex, tampered).max_relative_error > 1e-2);

  NnModel heavy = model;
  heavy.config.l2_lambda = 50.0;
  CHECK(grad_check(heavy, ex).max_relative_error < 1e-4);
  NnModel grad = l2_gradient(heavy, 50.0);
  for (const TensorRef& t : tensors(grad)) {
    if (!t.is_bias) continue;
    for (std::size_t k = 0; k < t.size; ++k) CHECK(t.data[k] == 0.0);
  }

  NnModel biases_only = NnModel::Zero(3, 2, 4, 24);
  for (const TensorRef& t : tensors(biases_only)) {
    if (t.is_bias) std::fill(t.data, t.data + t.size, 3.0);
  }
  CHECK(l2_penalty(biases_only, 50.0) == 0.0);

  NnModel zero = NnModel::Zero(3, 2, 4, 24);
  NnModel zgrad = l2_gradient(zero, 0.1);
  for (const TensorRef& t : tensors(zgrad)) {
    for (std::size_t k = 0; k < t.size; ++k) CHECK(t.data[k] == 0.0);
  }
  CHECK(l2_penalty(zero, 0.1) == 0.0);
}

std::vector<EncodedExample> Separable(std::size_t n, Rng& rng,
                                      std::shared_ptr<const WordMatrix> vectors) {
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    EncodedExample ex = RandomExample(vectors, 24, 4, rng);
    ex.label = i % 2 ? Label::kTrue : Label::kFalse;
    ex.similarities(0) = ex.label == Label::kTrue ? 1.0 : -1.0;
    out.push_back(std::move(ex));
  }
  return out;
}

TEST_CASE("nn_train") {
  Rng rng(2018);
  auto vectors = std::make_shared<const WordMatrix>(RandomMatrix(4, 10, rng));
  const auto train = Separable(20, rng, vectors);

  TrainConfig config = SmallConfig(4, 8);
  config.seed = 3;
  const TrainResult r = nn_train(train, {}, config);
  REQUIRE(r.history.size() == 400);
  CHECK(r.history.back().train_accuracy == 1.0);
  std::size_t correct = 0;
  for (const auto& ex : train) {
    const bool says_true = nn_forward(r.model, ex).prob_true > 0.5;
    correct += says_true == (ex.label == Label::kTrue);
  }
  CHECK(correct == train.size());

  config.epochs = 30;
  const TrainResult a = nn_train(train, train, config);
  const TrainResult b = nn_train(train, train, config);
  CHECK(SaveNnModel(a.model) == SaveNnModel(b.model));
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.best_epoch >= 1);
  CHECK(a.best_epoch <= 30);

  std::vector<EncodedExample> one_class = train;
  for (auto& ex : one_class) ex.label = Label::kFalse;
  CHECK(CodeOf([&] { nn_train(one_class, {}, config); }) == ErrorCode::kInvalidArgument);

  TrainConfig bad = config;
  bad.dropout = 1.0;
  CHECK(CodeOf([&] { bad.Validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(8);
  auto vectors = std::make_shared<const WordMatrix>(RandomMatrix(5, 10, rng));
  TrainConfig config = SmallConfig(3, 7);
  config.l2_lambda = 0.0123456789;
  const NnModel model = NnModel::Init(5, 24, config, rng);
  const std::string saved = SaveNnModel(model);
  const NnModel loaded = LoadNnModel(saved);
  CHECK(SaveNnModel(loaded) == saved);
  CHECK(loaded.config.l2_lambda == config.l2_lambda);
  for (int i = 0; i < 25; ++i) {
    const EncodedExample ex = RandomExample(vectors, 24, 5, rng);
    CHECK(nn_forward(model, ex).prob_true == nn_forward(loaded, ex).prob_true);
  }
  CHECK(CodeOf([] { LoadNnModel("{\"format\":\"other\"}"); }) == ErrorCode::kFormatError);
}

}  // namespace
}  // namespace veriscope
