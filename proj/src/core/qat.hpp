/* Copyright 2026 The Octav Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OCTAV_CORE_QAT_HPP_
#define OCTAV_CORE_QAT_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "core/estimators.hpp"
#include "core/quantizer.hpp"

namespace octav {

// Row-major so that a weight row (one output feature) is contiguous and
// PerRow(0) groups line up with Eigen storage.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kIdentity, kRelu };

// kNone: full precision.
// kMaxScaled: per-row max weights, per-tensor max activations, every step.
// kOctavDynamic: OCTAV recomputed on every tensor at every step.
// kOctavStatic: scalars frozen in QuantConfig::static_scalars.
enum class QuantMode { kNone, kMaxScaled, kOctavDynamic, kOctavStatic };

struct Layer {
  RowMatrix weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::kIdentity;
};

struct StaticScalars {
  std::vector<std::vector<double>> weights;  // per layer, one per output row
  std::vector<double> activations;           // per layer, for its input
};

struct QuantConfig {
  QuantMode mode = QuantMode::kNone;
  int bits = 4;
  EstimatorKind weight_estimator = EstimatorKind::kMad;
  EstimatorKind activation_estimator = EstimatorKind::kPwl;
  // By default the first and last layers stay in full precision.
  bool quantize_first_last = false;
  StaticScalars static_scalars;
  int octav_iterations = 10;

  void SetPolicy(const MphPolicy& p) {
    weight_estimator = p.weights;
    activation_estimator = p.activations;
  }
};

// Multi-layer perceptron y = f_L(W_L q(f_{L-1}(...)) + b_L). Each quantized
// layer fake-quantizes its weight (per output row) and its input
// (per tensor; unsigned when the input comes out of a ReLU).
class ToyNet {
 public:
  // widths = {in, h1, ..., out}. Hidden layers use `hidden`, the last layer
  // is linear. Weights ~ N(0, gain / fan_in), biases zero.
  ToyNet(const std::vector<std::size_t>& widths, Activation hidden, std::uint64_t seed,
         double gain = 2.0);

  std::size_t layer_count() const noexcept { return layers.size(); }
  bool IsQuantized(std::size_t l) const noexcept;
  // Signedness of layer l's input.
  Signedness InputSignedness(std::size_t l) const noexcept;

  std::vector<Layer> layers;
  QuantConfig quant;
};

struct LayerCache {
  RowMatrix input;        // pre-quantization input X_l, batch x in
  RowMatrix q_input;      // fake-quantized input
  RowMatrix input_mask;   // backward multipliers for the input (empty if none)
  RowMatrix q_weight;     // fake-quantized weight
  RowMatrix weight_mask;  // backward multipliers for the weight (empty if none)
  RowMatrix pre_activation;
  RowMatrix output;
  std::vector<double> weight_scalars;
  double input_scalar = 0.0;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  const RowMatrix& logits() const { return layers.back().output; }
};

ForwardCache Forward(const ToyNet& net, const RowMatrix& batch);

struct Gradients {
  std::vector<RowMatrix> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<RowMatrix> activations;  // dLoss/dX_l at each layer input
};

// Backpropagates dLoss/d(output) through the cached pass using the masks of
// the configured estimators.
Gradients Backward(const ToyNet& net, const ForwardCache& cache, const RowMatrix& upstream);

struct LossAndGradients {
  double loss;
  Gradients grads;
};

// Mean softmax cross-entropy over the batch.
LossAndGradients ForwardBackward(const ToyNet& net, const RowMatrix& batch,
                                 const std::vector<int>& labels);
double SoftmaxCrossEntropy(const RowMatrix& logits, const std::vector<int>& labels);

// Fraction of rows whose argmax logit equals the label.
double Accuracy(const ToyNet& net, const RowMatrix& x, const std::vector<int>& labels);

struct Dataset {
  RowMatrix train_x;
  std::vector<int> train_y;
  RowMatrix test_x;
  std::vector<int> test_y;
  int classes = 0;
};

struct BlobConfig {
  int classes = 8;
  std::size_t dims = 16;
  std::size_t train = 8000;
  std::size_t test = 2000;
  double center_scale = 1.0;  // class centers ~ N(0, center_scale^2 I)
  double noise = 1.0;         // per-sample N(0, noise^2 I) around the center
  std::uint64_t seed = 0;
};

Dataset MakeBlobs(const BlobConfig& cfg);

// Calibrates kOctavStatic scalars from one full-precision pass over `batch`:
// OCTAV per weight row and per activation tensor.
StaticScalars CalibrateStatic(const ToyNet& net, const RowMatrix& batch);

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;  // shuffling
};

struct TrainingCurve {
  std::vector<double> test_accuracy;  // one per epoch
  std::vector<double> train_loss;     // mean over the epoch's steps
  bool diverged = false;              // a non-finite loss stopped training

  std::string ToCsv() const;
};

// Plain SGD. Deterministic given the net, the data and cfg.seed.
TrainingCurve TrainToy(ToyNet& net, const Dataset& data, const TrainConfig& cfg);

// One SGD step; returns the loss and the gradients that were applied.
LossAndGradients SgdStep(ToyNet& net, const RowMatrix& batch, const std::vector<int>& labels,
                         double learning_rate);

struct VarianceReport {
  // Per clip site l (the input of layer l), averaged over batches.
  std::vector<double> ste_variance;
  std::vector<double> pwl_variance;
  std::vector<double> ratio;            // mean of per-batch Var(STE)/Var(PWL)
  std::vector<double> ratio_stderr;     // standard error of that mean
  std::vector<double> clip_probability; // mean of per-batch P(|X_l| > s_l)
  // Mean over batches of prod_{i >= l} 1 / (1 - p_i), with p_i measured on
  // the same batch as the ratio.
  std::vector<double> predicted;
  // Mean and standard error of the per-batch (ratio - prediction).
  std::vector<double> excess;
  std::vector<double> excess_stderr;
  std::size_t batches = 0;

  std::string ToJson() const;
};

// Gradient-variance probe. Every layer of `net` must be quantized with
// static activation scalars. For each batch a single forward pass is
// followed by two backward passes from the same N(0, 1) upstream gradient,
// one with STE and one with PWL activation masks.
VarianceReport MeasureVarianceRatio(const ToyNet& net, const std::vector<RowMatrix>& batches,
                                    std::uint64_t seed);

struct LearnedParamCount {
  std::vector<std::size_t> tensors;  // indices of the tracked layers
  std::vector<std::size_t> total;    // N per tracked tensor
  // [iteration][tensor]: weights whose backward multiplier is nonzero.
  std::vector<std::vector<std::size_t>> active;
  // [iteration][tensor]: weights whose value differs from the initial one.
  std::vector<std::vector<std::size_t>> moved;
  // Per tensor: weights clipped at the first step that later moved.
  std::vector<std::size_t> clipped_then_moved;
};

// Trains with plain SGD on `data` for `steps` minibatches and counts, per
// quantized weight tensor, how many weights still receive gradient.
// Requires kOctavStatic and at least one initially clipped weight.
LearnedParamCount TrackLearnedParams(ToyNet& net, const Dataset& data, int steps,
                                     double learning_rate, std::size_t batch_size,
                                     std::uint64_t seed);

}  // namespace octav

#endif  // OCTAV_CORE_QAT_HPP_
