// Fully connected networks with analytic backprop and an Adam optimizer.
//
// Parameters live in flat, shape-tagged tensors (BasicParamSet) so they can be
// shipped over the federation wire unchanged. Network math maps those buffers
// into Eigen matrices; samples are stored column-wise (dim x batch).
#ifndef SAGIN_NN_HPP_
#define SAGIN_NN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagin::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXf = Matrix<float>;
using VectorXf = Vector<float>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Head { kLogits, kValues };

struct NetSpec {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  Head head = Head::kValues;

  void validate() const;
  int num_affine() const { return static_cast<int>(hidden.size()) + 1; }
  int fan_in(int layer) const { return layer == 0 ? input : hidden[layer - 1]; }
  int fan_out(int layer) const { return layer == num_affine() - 1 ? output : hidden[layer]; }
};

// Aligned so vectorized kernels see the same element split wherever the buffer
// lands on the heap; otherwise float sums depend on allocation addresses.
template <typename Scalar>
using TensorData = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

template <std::floating_point Scalar>
struct BasicTensor {
  std::vector<std::uint32_t> shape;
  TensorData<Scalar> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  bool operator==(const BasicTensor&) const = default;
};

/// Ordered list of tensors. For an MLP the order is W0, b0, W1, b1, ... with
/// weights stored row-major as [fan_out, fan_in].
template <std::floating_point Scalar>
struct BasicParamSet {
  std::vector<BasicTensor<Scalar>> tensors;

  std::uint64_t layout_id() const;
  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.data.size();
    return n;
  }
  bool same_layout(const BasicParamSet& other) const;
  bool operator==(const BasicParamSet&) const = default;

  template <std::floating_point Other>
  BasicParamSet<Other> cast() const {
    BasicParamSet<Other> out;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) {
      out.tensors.push_back({t.shape, TensorData<Other>(t.data.begin(), t.data.end())});
    }
    return out;
  }
};

using Tensor = BasicTensor<float>;
using ParamSet = BasicParamSet<float>;

/// FNV-1a over (tensor count, rank, dims) as little-endian u32 words.
std::uint64_t layout_hash(const std::vector<std::vector<std::uint32_t>>& shapes);

template <std::floating_point Scalar>
std::uint64_t BasicParamSet<Scalar>::layout_id() const {
  std::vector<std::vector<std::uint32_t>> shapes;
  shapes.reserve(tensors.size());
  for (const auto& t : tensors) shapes.push_back(t.shape);
  return layout_hash(shapes);
}

template <std::floating_point Scalar>
bool BasicParamSet<Scalar>::same_layout(const BasicParamSet& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].shape != other.tensors[i].shape) return false;
  }
  return true;
}

/// Zero-filled parameters shaped for `spec`.
template <std::floating_point Scalar = float>
BasicParamSet<Scalar> zero_params(const NetSpec& spec) {
  spec.validate();
  BasicParamSet<Scalar> p;
  for (int l = 0; l < spec.num_affine(); ++l) {
    const auto out = static_cast<std::uint32_t>(spec.fan_out(l));
    const auto in = static_cast<std::uint32_t>(spec.fan_in(l));
    p.tensors.push_back({{out, in}, TensorData<Scalar>(std::size_t{out} * in, Scalar(0))});
    p.tensors.push_back({{out}, TensorData<Scalar>(out, Scalar(0))});
  }
  return p;
}

template <std::floating_point Scalar>
BasicParamSet<Scalar> zeros_like(const BasicParamSet<Scalar>& like) {
  BasicParamSet<Scalar> p = like;
  for (auto& t : p.tensors) std::fill(t.data.begin(), t.data.end(), Scalar(0));
  return p;
}

/// Uniform fan-in initialization; the last layer is shrunk by `output_scale`.
ParamSet init_params(const NetSpec& spec, std::mt19937_64& rng, float output_scale = 0.1f);

/// Checks that `params` is shaped for `spec`.
template <std::floating_point Scalar>
void check_layout(const NetSpec& spec, const BasicParamSet<Scalar>& params) {
  if (params.tensors.size() != static_cast<std::size_t>(2 * spec.num_affine())) {
    throw DimensionError("parameter count does not match network spec");
  }
  for (int l = 0; l < spec.num_affine(); ++l) {
    const auto& w = params.tensors[2 * l];
    const auto& b = params.tensors[2 * l + 1];
    const std::vector<std::uint32_t> ws{static_cast<std::uint32_t>(spec.fan_out(l)),
                                        static_cast<std::uint32_t>(spec.fan_in(l))};
    const std::vector<std::uint32_t> bs{static_cast<std::uint32_t>(spec.fan_out(l))};
    if (w.shape != ws || b.shape != bs || w.data.size() != w.numel() || b.data.size() != b.numel()) {
      throw DimensionError("layer " + std::to_string(l) + " shape does not match network spec");
    }
  }
}

namespace detail {

template <std::floating_point Scalar>
Eigen::Map<const RowMajorMatrix<Scalar>> weight(const NetSpec& spec, const BasicParamSet<Scalar>& p,
                                                int l) {
  return {p.tensors[2 * l].data.data(), spec.fan_out(l), spec.fan_in(l)};
}

template <std::floating_point Scalar>
Eigen::Map<const Vector<Scalar>> bias(const NetSpec& spec, const BasicParamSet<Scalar>& p, int l) {
  return {p.tensors[2 * l + 1].data.data(), spec.fan_out(l)};
}

// activations[0] is the input; activations[l] the post-tanh output of hidden layer l.
template <std::floating_point Scalar>
Matrix<Scalar> forward_cached(const NetSpec& spec, const BasicParamSet<Scalar>& params,
                              const Matrix<Scalar>& inputs, std::vector<Matrix<Scalar>>* activations) {
  check_layout(spec, params);
  if (inputs.rows() != spec.input) {
    throw DimensionError("input has " + std::to_string(inputs.rows()) + " rows, expected " +
                         std::to_string(spec.input));
  }
  Matrix<Scalar> a = inputs;
  const int last = spec.num_affine() - 1;
  for (int l = 0; l <= last; ++l) {
    Matrix<Scalar> z = weight(spec, params, l) * a;
    z.colwise() += bias(spec, params, l);
    if (activations) activations->push_back(std::move(a));
    if (l < last) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

}  // namespace detail

/// Batched forward pass: `inputs` is input_dim x batch.
template <std::floating_point Scalar>
Matrix<Scalar> forward_batch(const NetSpec& spec, const BasicParamSet<Scalar>& params,
                             const Matrix<Scalar>& inputs) {
  return detail::forward_cached<Scalar>(spec, params, inputs, nullptr);
}

template <std::floating_point Scalar>
Vector<Scalar> forward(const NetSpec& spec, const BasicParamSet<Scalar>& params,
                       const Vector<Scalar>& input) {
  Matrix<Scalar> in = input;
  return forward_batch(spec, params, in).col(0);
}

/// Sum over the batch of (d output / d params)^T * upstream.
template <std::floating_point Scalar>
BasicParamSet<Scalar> grad_batch(const NetSpec& spec, const BasicParamSet<Scalar>& params,
                                 const Matrix<Scalar>& inputs, const Matrix<Scalar>& upstream) {
  std::vector<Matrix<Scalar>> acts;
  const Matrix<Scalar> out = detail::forward_cached(spec, params, inputs, &acts);
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw DimensionError("upstream gradient shape does not match network output");
  }
  BasicParamSet<Scalar> g = zeros_like(params);
  Matrix<Scalar> delta = upstream;
  for (int l = spec.num_affine() - 1; l >= 0; --l) {
    Eigen::Map<RowMajorMatrix<Scalar>> gw(g.tensors[2 * l].data.data(), spec.fan_out(l), spec.fan_in(l));
    Eigen::Map<Vector<Scalar>> gb(g.tensors[2 * l + 1].data.data(), spec.fan_out(l));
    gw.noalias() = delta * acts[l].transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Matrix<Scalar> back = detail::weight(spec, params, l).transpose() * delta;
      // acts[l] is tanh output of the previous layer; d tanh = 1 - tanh^2.
      delta = (back.array() * (Scalar(1) - acts[l].array().square())).matrix();
    }
  }
  return g;
}

template <std::floating_point Scalar>
BasicParamSet<Scalar> grad(const NetSpec& spec, const BasicParamSet<Scalar>& params,
                           const Vector<Scalar>& input, const Vector<Scalar>& upstream) {
  Matrix<Scalar> in = input;
  Matrix<Scalar> up = upstream;
  return grad_batch(spec, params, in, up);
}

/// Row-wise numerically stable softmax over each column.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_columns(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Matrix<S> out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    auto col = out.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return out;
}

inline constexpr float kLogProbFloor = -30.0f;

/// log of probabilities clamped below at kLogProbFloor.
template <typename Derived>
Matrix<typename Derived::Scalar> clamped_log(const Eigen::MatrixBase<Derived>& probs) {
  using S = typename Derived::Scalar;
  return probs.array().log().max(S(kLogProbFloor)).matrix();
}

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t step = 0;

  static AdamState for_params(const ParamSet& p) { return {zeros_like(p), zeros_like(p), 0}; }
};

/// One bias-corrected Adam update; returns the new parameters.
ParamSet adam_step(ParamSet params, const ParamSet& grads, float lr, AdamState& state,
                   const AdamConfig& cfg = {});

/// Adam on a single scalar (used for log-temperature).
struct ScalarAdam {
  double m = 0.0;
  double v = 0.0;
  std::int64_t step = 0;

  double update(double value, double grad, double lr, const AdamConfig& cfg = {});
};

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, scale_floor * s)
/// over all parameters of the scalar objective  upstream . forward(params, input),
/// where s is the largest analytic gradient magnitude in the same tensor.
/// Parameters come from init_params (output scale 1); inputs and upstream from U(-1, 1).
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

GradCheckResult gradient_check(const NetSpec& spec, std::mt19937_64& rng, int batch = 3,
                               double step = 1e-3, double scale_floor = 1e-2);

NetSpec random_spec(std::mt19937_64& rng, int max_layers = 3, int max_width = 16);

}  // namespace sagin::nn

#endif  // SAGIN_NN_HPP_
