#ifndef VERISCOPE_NEURAL_H_
#define VERISCOPE_NEURAL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "veriscope/embed.h"
#include "veriscope/label.h"

namespace veriscope {

class Rng;

// One LSTM direction. Gate rows are stacked [input, forget, cell, output].
struct LstmParams {
  Eigen::MatrixXd W;  // 4H x E
  Eigen::MatrixXd U;  // 4H x H
  Eigen::VectorXd b;  // 4H

  static LstmParams Zero(std::size_t input_dim, std::size_t hidden);
  std::size_t hidden() const { return static_cast<std::size_t>(U.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(W.cols()); }
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

LstmState lstm_step(const LstmParams& params, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev);

// Final forward state followed by final backward state (2H values). Steps
// whose mask is 0 leave the state untouched; a fully masked sequence encodes
// to zeros. `sequence` holds one column per time step.
Eigen::VectorXd bilstm_encode(const LstmParams& fwd, const LstmParams& bwd,
                              const Eigen::MatrixXd& sequence,
                              std::span<const std::uint8_t> mask);

inline constexpr std::size_t kBranches = 5;

// Text sources fed to the five LSTM branches, in network order.
enum class Branch { kClaim = 0, kGooglePage, kGoogleSnippet, kBingPage, kBingSnippet };

struct TrainConfig {
  double learning_rate = 0.001;
  double l2_lambda = 0.1;
  double dropout = 0.5;
  std::size_t batch_size = 32;
  std::size_t epochs = 400;
  std::uint64_t seed = 1;
  std::size_t lstm_units = 25;
  std::size_t hidden_units = 60;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  // Token caps per branch: claim, pages (sentence triplets), snippets.
  std::array<std::size_t, kBranches> max_tokens = {64, 128, 64, 128, 64};

  void Validate() const;
};

struct BiLstm {
  LstmParams forward;
  LstmParams backward;
};

struct NnModel {
  std::array<BiLstm, kBranches> branches;
  Eigen::MatrixXd dense_w;  // hidden x (5 * 2H + similarities)
  Eigen::VectorXd dense_b;
  Eigen::MatrixXd out_w;    // 2 x hidden; row 0 is the false class
  Eigen::VectorXd out_b;
  TrainConfig config;
  std::array<std::string, kBranches> branch_names = {
      "claim", "google_page", "google_snippet", "bing_page", "bing_snippet"};

  static NnModel Zero(std::size_t embedding_dim, std::size_t lstm_units,
                      std::size_t hidden_units, std::size_t similarity_dim);
  // Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases
  // except the forget gate, which starts at 1.
  static NnModel Init(std::size_t embedding_dim, std::size_t similarity_dim,
                      const TrainConfig& config, Rng& rng);

  std::size_t embedding_dim() const { return branches[0].forward.input_dim(); }
  std::size_t lstm_units() const { return branches[0].forward.hidden(); }
  std::size_t hidden_units() const { return static_cast<std::size_t>(dense_b.size()); }
  std::size_t similarity_dim() const;
};

// Named view of one parameter tensor, in a fixed order.
struct TensorRef {
  std::string name;
  double* data;
  std::size_t size;
  bool is_bias;
};
std::vector<TensorRef> tensors(NnModel& model);

struct TokenSequence {
  std::vector<int> ids;  // rows of the shared vector matrix
  std::vector<std::uint8_t> mask;
};

// Word vectors as an E x V matrix shared by encoded examples.
using WordMatrix = Eigen::MatrixXd;

struct EncodedExample {
  std::array<TokenSequence, kBranches> branches;
  Eigen::VectorXd similarities;
  Label label = Label::kFalse;
  std::shared_ptr<const WordMatrix> vectors;
};

// Maps text to token ids over an embedding table. Out-of-vocabulary words are
// skipped, long inputs are truncated from the right.
class SequenceEncoder {
 public:
  explicit SequenceEncoder(const EmbeddingTable& table);

  TokenSequence Encode(std::string_view text, std::size_t max_tokens) const;
  const std::shared_ptr<const WordMatrix>& vectors() const { return vectors_; }
  std::size_t dimension() const { return static_cast<std::size_t>(vectors_->rows()); }

 private:
  const EmbeddingTable* table_;
  std::shared_ptr<const WordMatrix> vectors_;
};

struct ForwardResult {
  double prob_true = 0.5;
  double prob_false = 0.5;
  Eigen::VectorXd hidden;
  Eigen::VectorXd encoding;  // concatenated 2H encodings of the five branches
};

ForwardResult nn_forward(const NnModel& model, const EncodedExample& example,
                         bool train_mode = false, std::uint64_t seed = 0);

// Dense-layer activations at inference.
Eigen::VectorXd hidden_embedding(const NnModel& model, const EncodedExample& example);

// Per-branch bi-LSTM encodings (each 2H) at inference.
std::array<Eigen::VectorXd, kBranches> branch_encodings(const NnModel& model,
                                                        const EncodedExample& example);

// Cross-entropy of one example, no regularization, no dropout.
double cross_entropy(const NnModel& model, const EncodedExample& example);

// lambda * sum of squared weights (biases excluded).
double l2_penalty(const NnModel& model, double lambda);

// Gradient of the L2 term alone, shaped like the model.
NnModel l2_gradient(const NnModel& model, double lambda);

// Cross-entropy of one example and its gradient accumulated into `grad`
// (shaped like the model). `dropout_keep` is the scaled keep mask over the
// concatenated branch encodings, or empty for no dropout.
double accumulate_gradient(const NnModel& model, const EncodedExample& example,
                           const Eigen::VectorXd& dropout_keep, NnModel* grad,
                           double weight = 1.0);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean regularized batch loss
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;
  double dev_loss = 0.0;  // mean cross-entropy, no regularization
};

struct TrainResult {
  NnModel model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 1-based; the returned snapshot
};

// RMSprop on mean cross-entropy + lambda * sum of squared weights, shuffled
// mini-batches. Returns the epoch with the best dev accuracy; ties go to the
// lower dev cross-entropy, then the earlier epoch. Without dev data the last
// epoch is returned. Throws kInvalidArgument
// unless both classes occur in the training data.
TrainResult nn_train(std::span<const EncodedExample> train,
                     std::span<const EncodedExample> dev, const TrainConfig& config);

struct GradCheckOptions {
  double epsilon = 1e-5;
  std::size_t samples_per_tensor = 20;
  std::uint64_t seed = 7;
  // Called on the analytic gradient before comparison (negative controls).
  std::function<void(NnModel&)> tamper;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t coordinates_checked = 0;
};

// Central differences of cross-entropy + L2 (lambda from model.config) against
// the analytic gradient, dropout disabled. The relative error of a coordinate
// is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const NnModel& model, const EncodedExample& example,
                           const GradCheckOptions& options = {});

// Versioned JSON checkpoint of every tensor and the training configuration.
std::string SaveNnModel(const NnModel& model);
NnModel LoadNnModel(std::string_view json);

}  // namespace veriscope

#endif  // VERISCOPE_NEURAL_H_
