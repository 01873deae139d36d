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
#include "core/qat.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "core/error.hpp"
#include "core/solver.hpp"
#include "json.hpp"

namespace octav {
namespace {

std::span<const double> Span(const RowMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

std::span<double> MutableSpan(RowMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

QuantSpec SpecFor(int bits, Signedness signedness) {
  QuantSpec spec;
  spec.bits = bits;
  spec.signedness = signedness;
  return spec;
}

double MaxMagnitude(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double OctavScalar(std::span<const double> v, const QuantSpec& spec, int iterations) {
  OctavConfig cfg;
  cfg.iterations = iterations;
  return SolveGroup(v, spec, cfg).final();
}

std::vector<double> WeightScalars(const ToyNet& net, std::size_t l, const QuantSpec& spec) {
  const RowMatrix& w = net.layers[l].weight;
  const auto rows = static_cast<std::size_t>(w.rows());
  const auto cols = static_cast<std::size_t>(w.cols());
  std::vector<double> out(rows);
  switch (net.quant.mode) {
    case QuantMode::kMaxScaled:
      for (std::size_t r = 0; r < rows; ++r) {
        out[r] = MaxMagnitude(Span(w).subspan(r * cols, cols));
      }
      break;
    case QuantMode::kOctavDynamic:
      for (std::size_t r = 0; r < rows; ++r) {
        out[r] = OctavScalar(Span(w).subspan(r * cols, cols), spec, net.quant.octav_iterations);
      }
      break;
    case QuantMode::kOctavStatic:
      Require(l < net.quant.static_scalars.weights.size() &&
                  net.quant.static_scalars.weights[l].size() == rows,
              "static weight scalars missing for layer " + std::to_string(l));
      out = net.quant.static_scalars.weights[l];
      break;
    case QuantMode::kNone:
      break;
  }
  return out;
}

double InputScalar(const ToyNet& net, std::size_t l, const RowMatrix& x, const QuantSpec& spec) {
  switch (net.quant.mode) {
    case QuantMode::kMaxScaled:
      return MaxMagnitude(Span(x));
    case QuantMode::kOctavDynamic:
      return OctavScalar(Span(x), spec, net.quant.octav_iterations);
    case QuantMode::kOctavStatic:
      Require(l < net.quant.static_scalars.activations.size(),
              "static activation scalar missing for layer " + std::to_string(l));
      return net.quant.static_scalars.activations[l];
    case QuantMode::kNone:
      break;
  }
  return 0.0;
}

// Population variance over all entries.
double Variance(const RowMatrix& m) {
  const double mean = m.mean();
  return (m.array() - mean).square().mean();
}

RowMatrix GatherRows(const RowMatrix& x, const std::vector<std::size_t>& order,
                     std::size_t begin, std::size_t end) {
  RowMatrix out(static_cast<Eigen::Index>(end - begin), x.cols());
  for (std::size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) = x.row(static_cast<Eigen::Index>(order[i]));
  }
  return out;
}

std::vector<int> GatherLabels(const std::vector<int>& y, const std::vector<std::size_t>& order,
                              std::size_t begin, std::size_t end) {
  std::vector<int> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(y[order[i]]);
  return out;
}

}  // namespace

ToyNet::ToyNet(const std::vector<std::size_t>& widths, Activation hidden, std::uint64_t seed,
               double gain) {
  Require(widths.size() >= 3, "a toy net needs at least 2 layers");
  for (const std::size_t w : widths) Require(w > 0, "layer width must be positive");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(gain / static_cast<double>(in)));
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = normal(rng);
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    layer.activation = (l + 2 == widths.size()) ? Activation::kIdentity : hidden;
    layers.push_back(std::move(layer));
  }
}

bool ToyNet::IsQuantized(std::size_t l) const noexcept {
  if (quant.mode == QuantMode::kNone) return false;
  return quant.quantize_first_last || (l > 0 && l + 1 < layers.size());
}

Signedness ToyNet::InputSignedness(std::size_t l) const noexcept {
  return (l > 0 && layers[l - 1].activation == Activation::kRelu) ? Signedness::kUnsigned
                                                                  : Signedness::kSigned;
}

ForwardCache Forward(const ToyNet& net, const RowMatrix& batch) {
  Require(batch.cols() == net.layers.front().weight.cols(), "batch width does not match net");
  ForwardCache cache;
  cache.layers.resize(net.layer_count());
  const RowMatrix* x = &batch;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Layer& layer = net.layers[l];
    LayerCache& c = cache.layers[l];
    c.input = *x;
    if (!net.IsQuantized(l)) {
      c.q_input = c.input;
      c.q_weight = layer.weight;
    } else {
      const QuantSpec wspec = SpecFor(net.quant.bits, Signedness::kSigned);
      const QuantSpec aspec = SpecFor(net.quant.bits, net.InputSignedness(l));
      c.weight_scalars = WeightScalars(net, l, wspec);
      const GroupView wview = MakeGroupView(
          {static_cast<std::size_t>(layer.weight.rows()), static_cast<std::size_t>(layer.weight.cols())},
          Granularity::PerRow(0));
      c.q_weight.resizeLike(layer.weight);
      c.weight_mask.resizeLike(layer.weight);
      FakeQuant(Span(layer.weight), wview, c.weight_scalars, wspec, net.quant.weight_estimator,
                MutableSpan(c.q_weight), MutableSpan(c.weight_mask));

      c.input_scalar = InputScalar(net, l, c.input, aspec);
      const GroupView aview = MakeGroupView({static_cast<std::size_t>(c.input.size())},
                                            Granularity::PerTensor());
      c.q_input.resizeLike(c.input);
      c.input_mask.resizeLike(c.input);
      const double s = c.input_scalar;
      FakeQuant(Span(c.input), aview, std::span<const double>(&s, 1), aspec,
                net.quant.activation_estimator, MutableSpan(c.q_input), MutableSpan(c.input_mask));
    }
    c.pre_activation = c.q_input * c.q_weight.transpose();
    c.pre_activation.rowwise() += layer.bias.transpose();
    c.output = layer.activation == Activation::kRelu ? RowMatrix(c.pre_activation.cwiseMax(0.0))
                                                     : c.pre_activation;
    x = &c.output;
  }
  return cache;
}

Gradients Backward(const ToyNet& net, const ForwardCache& cache, const RowMatrix& upstream) {
  const std::size_t n = net.layer_count();
  Require(cache.layers.size() == n, "cache does not match net");
  Require(upstream.rows() == cache.logits().rows() && upstream.cols() == cache.logits().cols(),
          "upstream gradient shape mismatch");
  Gradients g;
  g.weights.resize(n);
  g.biases.resize(n);
  g.activations.resize(n);
  RowMatrix d = upstream;
  for (std::size_t k = n; k-- > 0;) {
    const LayerCache& c = cache.layers[k];
    if (net.layers[k].activation == Activation::kRelu) {
      d = d.cwiseProduct((c.pre_activation.array() > 0.0).cast<double>().matrix());
    }
    g.weights[k] = d.transpose() * c.q_input;
    if (c.weight_mask.size() > 0) g.weights[k] = g.weights[k].cwiseProduct(c.weight_mask);
    g.biases[k] = d.colwise().sum().transpose();
    RowMatrix dx = d * c.q_weight;
    if (c.input_mask.size() > 0) dx = dx.cwiseProduct(c.input_mask);
    g.activations[k] = dx;
    d = std::move(dx);
  }
  return g;
}

double SoftmaxCrossEntropy(const RowMatrix& logits, const std::vector<int>& labels) {
  Require(static_cast<std::size_t>(logits.rows()) == labels.size(), "label count mismatch");
  double loss = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    loss += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return loss / static_cast<double>(logits.rows());
}

LossAndGradients ForwardBackward(const ToyNet& net, const RowMatrix& batch,
                                 const std::vector<int>& labels) {
  Require(static_cast<std::size_t>(batch.rows()) == labels.size(), "label count mismatch");
  const ForwardCache cache = Forward(net, batch);
  const RowMatrix& logits = cache.logits();
  const auto classes = logits.cols();
  for (const int y : labels) Require(y >= 0 && y < classes, "label out of range");
  RowMatrix up(logits.rows(), classes);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(r).array() - m).exp().matrix();
    up.row(r) = e / e.sum();
    up(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  up /= static_cast<double>(logits.rows());
  return {SoftmaxCrossEntropy(logits, labels), Backward(net, cache, up)};
}

double Accuracy(const ToyNet& net, const RowMatrix& x, const std::vector<int>& labels) {
  const ForwardCache cache = Forward(net, x);
  const RowMatrix& logits = cache.logits();
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    hits += arg == labels[static_cast<std::size_t>(r)];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Dataset MakeBlobs(const BlobConfig& cfg) {
  Require(cfg.classes >= 2 && cfg.dims > 0 && cfg.train > 0 && cfg.test > 0,
          "invalid blob configuration");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, cfg.classes - 1);
  const auto dims = static_cast<Eigen::Index>(cfg.dims);
  RowMatrix centers(cfg.classes, dims);
  for (Eigen::Index i = 0; i < centers.size(); ++i) {
    centers.data()[i] = cfg.center_scale * normal(rng);
  }
  auto fill = [&](std::size_t n, RowMatrix& x, std::vector<int>& y) {
    x.resize(static_cast<Eigen::Index>(n), dims);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = pick(rng);
      for (Eigen::Index d = 0; d < dims; ++d) {
        x(static_cast<Eigen::Index>(i), d) = centers(y[i], d) + cfg.noise * normal(rng);
      }
    }
  };
  Dataset data;
  data.classes = cfg.classes;
  fill(cfg.train, data.train_x, data.train_y);
  fill(cfg.test, data.test_x, data.test_y);
  return data;
}

StaticScalars CalibrateStatic(const ToyNet& net, const RowMatrix& batch) {
  ToyNet fp = net;
  fp.quant.mode = QuantMode::kNone;
  const ForwardCache cache = Forward(fp, batch);
  StaticScalars out;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const RowMatrix& w = net.layers[l].weight;
    const auto cols = static_cast<std::size_t>(w.cols());
    std::vector<double> rows(static_cast<std::size_t>(w.rows()));
    const QuantSpec wspec = SpecFor(net.quant.bits, Signedness::kSigned);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      rows[r] = OctavScalar(Span(w).subspan(r * cols, cols), wspec, net.quant.octav_iterations);
    }
    out.weights.push_back(std::move(rows));
    const QuantSpec aspec = SpecFor(net.quant.bits, net.InputSignedness(l));
    out.activations.push_back(
        OctavScalar(Span(cache.layers[l].input), aspec, net.quant.octav_iterations));
  }
  return out;
}

LossAndGradients SgdStep(ToyNet& net, const RowMatrix& batch, const std::vector<int>& labels,
                         double learning_rate) {
  LossAndGradients lg = ForwardBackward(net, batch, labels);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.layers[l].weight -= learning_rate * lg.grads.weights[l];
    net.layers[l].bias -= learning_rate * lg.grads.biases[l];
  }
  return lg;
}

std::string TrainingCurve::ToCsv() const {
  std::ostringstream os;
  os << "epoch,test_accuracy,train_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < test_accuracy.size(); ++e) {
    os << e + 1 << ',' << test_accuracy[e] << ',' << train_loss[e] << '\n';
  }
  return os.str();
}

TrainingCurve TrainToy(ToyNet& net, const Dataset& data, const TrainConfig& cfg) {
  Require(cfg.epochs >= 1 && cfg.batch_size >= 1 && cfg.learning_rate > 0.0,
          "invalid training configuration");
  const auto n = static_cast<std::size_t>(data.train_x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  TrainingCurve curve;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t b = 0; b < n && !curve.diverged; b += cfg.batch_size) {
      const std::size_t e = std::min(n, b + cfg.batch_size);
      const double loss = SgdStep(net, GatherRows(data.train_x, order, b, e),
                                  GatherLabels(data.train_y, order, b, e), cfg.learning_rate)
                              .loss;
      curve.diverged = !std::isfinite(loss) || !net.layers.front().weight.allFinite();
      loss_sum += loss;
      ++steps;
    }
    if (curve.diverged) {
      // No usable model remains; the rest of the curve sits at chance.
      const double chance = 1.0 / data.classes;
      while (static_cast<int>(curve.test_accuracy.size()) < cfg.epochs) {
        curve.test_accuracy.push_back(chance);
        curve.train_loss.push_back(std::numeric_limits<double>::infinity());
      }
      break;
    }
    curve.train_loss.push_back(loss_sum / static_cast<double>(steps));
    curve.test_accuracy.push_back(Accuracy(net, data.test_x, data.test_y));
  }
  return curve;
}

std::string VarianceReport::ToJson() const {
  nlohmann::json j{{"batches", batches},
                   {"ste_variance", ste_variance},
                   {"pwl_variance", pwl_variance},
                   {"ratio", ratio},
                   {"ratio_stderr", ratio_stderr},
                   {"clip_probability", clip_probability},
                   {"predicted", predicted},
                   {"excess", excess},
                   {"excess_stderr", excess_stderr}};
  return j.dump();
}

VarianceReport MeasureVarianceRatio(const ToyNet& net, const std::vector<RowMatrix>& batches,
                                    std::uint64_t seed) {
  Require(net.quant.mode == QuantMode::kOctavStatic && net.quant.quantize_first_last,
          "variance probe needs static scalars on every layer");
  Require(batches.size() >= 2, "variance probe needs at least 2 batches");
  const std::size_t n = net.layer_count();
  ToyNet ste = net;
  ste.quant.activation_estimator = EstimatorKind::kSte;
  ToyNet pwl = net;
  pwl.quant.activation_estimator = EstimatorKind::kPwl;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // [layer][batch]
  std::vector<std::vector<double>> ratios(n);
  std::vector<std::vector<double>> predictions(n);
  VarianceReport report;
  report.batches = batches.size();
  report.ste_variance.assign(n, 0.0);
  report.pwl_variance.assign(n, 0.0);
  report.clip_probability.assign(n, 0.0);
  std::vector<double> p(n);
  for (const RowMatrix& batch : batches) {
    const ForwardCache cs = Forward(ste, batch);
    const ForwardCache cp = Forward(pwl, batch);
    RowMatrix up(cs.logits().rows(), cs.logits().cols());
    for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = normal(rng);
    const Gradients gs = Backward(ste, cs, up);
    const Gradients gp = Backward(pwl, cp, up);
    for (std::size_t l = 0; l < n; ++l) {
      const double vs = Variance(gs.activations[l]);
      const double vp = Variance(gp.activations[l]);
      if (!(vp > 0.0)) {
        Fail(ErrorCode::kDegenerate, "zero-variance gradient at layer " + std::to_string(l));
      }
      ratios[l].push_back(vs / vp);
      report.ste_variance[l] += vs;
      report.pwl_variance[l] += vp;
      const RowMatrix& x = cs.layers[l].input;
      const double s = cs.layers[l].input_scalar;
      const bool is_signed = net.InputSignedness(l) == Signedness::kSigned;
      const auto clipped = is_signed ? (x.array().abs() > s).count() : (x.array() > s).count();
      p[l] = static_cast<double>(clipped) / static_cast<double>(x.size());
      report.clip_probability[l] += p[l];
    }
    double product = 1.0;
    for (std::size_t l = n; l-- > 0;) {
      product /= 1.0 - p[l];
      predictions[l].push_back(product);
    }
  }
  const auto nb = static_cast<double>(batches.size());
  auto mean_and_stderr = [nb](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / nb;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(ss / (nb - 1.0) / nb)};
  };
  for (std::size_t l = 0; l < n; ++l) {
    report.ste_variance[l] /= nb;
    report.pwl_variance[l] /= nb;
    report.clip_probability[l] /= nb;
    const auto [ratio, ratio_se] = mean_and_stderr(ratios[l]);
    report.ratio.push_back(ratio);
    report.ratio_stderr.push_back(ratio_se);
    report.predicted.push_back(mean_and_stderr(predictions[l]).first);
    std::vector<double> excess(ratios[l].size());
    for (std::size_t b = 0; b < excess.size(); ++b) excess[b] = ratios[l][b] - predictions[l][b];
    const auto [ex, ex_se] = mean_and_stderr(excess);
    report.excess.push_back(ex);
    report.excess_stderr.push_back(ex_se);
  }
  return report;
}

LearnedParamCount TrackLearnedParams(ToyNet& net, const Dataset& data, int steps,
                                     double learning_rate, std::size_t batch_size,
                                     std::uint64_t seed) {
  Require(net.quant.mode == QuantMode::kOctavStatic, "tracking needs static scalars");
  Require(steps >= 1 && batch_size >= 1, "invalid tracking configuration");
  LearnedParamCount out;
  std::vector<RowMatrix> initial;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (!net.IsQuantized(l)) continue;
    out.tensors.push_back(l);
    out.total.push_back(static_cast<std::size_t>(net.layers[l].weight.size()));
    initial.push_back(net.layers[l].weight);
  }
  Require(!out.tensors.empty(), "no quantized weight tensor to track");

  // mask[t][i] != 0 iff weight i of tensor t receives gradient.
  auto masks = [&]() {
    std::vector<std::vector<double>> m;
    for (const std::size_t l : out.tensors) {
      const RowMatrix& w = net.layers[l].weight;
      const auto cols = w.cols();
      const std::vector<double>& s = net.quant.static_scalars.weights[l];
      std::vector<double> row_masks(static_cast<std::size_t>(w.size()));
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        row_masks[static_cast<std::size_t>(i)] =
            BackwardScale(w.data()[i], s[static_cast<std::size_t>(i / cols)],
                          net.quant.weight_estimator, Signedness::kSigned);
      }
      m.push_back(std::move(row_masks));
    }
    return m;
  };

  // Weights beyond their static scalar before the first step.
  std::vector<std::vector<bool>> clipped_at_start;
  std::size_t clipped_count = 0;
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    const RowMatrix& w = initial[t];
    Require(out.tensors[t] < net.quant.static_scalars.weights.size() &&
                net.quant.static_scalars.weights[out.tensors[t]].size() ==
                    static_cast<std::size_t>(w.rows()),
            "static weight scalars missing for layer " + std::to_string(out.tensors[t]));
    const auto& s = net.quant.static_scalars.weights[out.tensors[t]];
    std::vector<bool> clipped(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      clipped[static_cast<std::size_t>(i)] =
          std::fabs(w.data()[i]) > s[static_cast<std::size_t>(i / w.cols())];
      clipped_count += clipped[static_cast<std::size_t>(i)];
    }
    clipped_at_start.push_back(std::move(clipped));
  }
  if (clipped_count == 0) {
    Fail(ErrorCode::kInvalidArgument, "no weight exceeds its static scalar; test is vacuous");
  }
  const auto n = static_cast<std::size_t>(data.train_x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::size_t cursor = n;
  for (int step = 0; step < steps; ++step) {
    const auto m = masks();
    std::vector<std::size_t> active;
    for (const auto& tm : m) {
      active.push_back(static_cast<std::size_t>(
          std::count_if(tm.begin(), tm.end(), [](double v) { return v != 0.0; })));
    }
    out.active.push_back(std::move(active));

    if (cursor + batch_size > n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    SgdStep(net, GatherRows(data.train_x, order, cursor, cursor + batch_size),
            GatherLabels(data.train_y, order, cursor, cursor + batch_size), learning_rate);
    cursor += batch_size;

    std::vector<std::size_t> moved;
    for (std::size_t t = 0; t < out.tensors.size(); ++t) {
      moved.push_back(static_cast<std::size_t>(
          (net.layers[out.tensors[t]].weight.array() != initial[t].array()).count()));
    }
    out.moved.push_back(std::move(moved));
  }
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    const RowMatrix& w = net.layers[out.tensors[t]].weight;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      count += clipped_at_start[t][k] && w.data()[i] != initial[t].data()[i];
    }
    out.clipped_then_moved.push_back(count);
  }
  return out;
}

}  // namespace octav
