#include "sagin/nn.hpp"

#include <cmath>

namespace sagin::nn {

void NetSpec::validate() const {
  if (input < 1 || output < 1) throw DimensionError("NetSpec: input and output dims must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw DimensionError("NetSpec: hidden widths must be >= 1");
  }
}

std::uint64_t layout_hash(const std::vector<std::vector<std::uint32_t>>& shapes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint32_t word) {
    for (int i = 0; i < 4; ++i) {
      h ^= (word >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  mix(static_cast<std::uint32_t>(shapes.size()));
  for (const auto& s : shapes) {
    mix(static_cast<std::uint32_t>(s.size()));
    for (auto d : s) mix(d);
  }
  return h;
}

ParamSet init_params(const NetSpec& spec, std::mt19937_64& rng, float output_scale) {
  ParamSet p = zero_params<float>(spec);
  for (int l = 0; l < spec.num_affine(); ++l) {
    float bound = 1.0f / std::sqrt(static_cast<float>(spec.fan_in(l)));
    if (l == spec.num_affine() - 1) bound *= output_scale;
    std::uniform_real_distribution<float> u(-bound, bound);
    for (auto& w : p.tensors[2 * l].data) w = u(rng);
  }
  return p;
}

ParamSet adam_step(ParamSet params, const ParamSet& grads, float lr, AdamState& state,
                   const AdamConfig& cfg) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v)) {
    throw DimensionError("adam_step: parameter, gradient and moment layouts differ");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const float c1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
  const float c2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    Eigen::Map<Eigen::ArrayXf> p(params.tensors[i].data.data(), params.tensors[i].data.size());
    Eigen::Map<const Eigen::ArrayXf> g(grads.tensors[i].data.data(), grads.tensors[i].data.size());
    Eigen::Map<Eigen::ArrayXf> m(state.m.tensors[i].data.data(), state.m.tensors[i].data.size());
    Eigen::Map<Eigen::ArrayXf> v(state.v.tensors[i].data.data(), state.v.tensors[i].data.size());
    m = cfg.beta1 * m + (1.0f - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0f - cfg.beta2) * g.square();
    p -= lr * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
  }
  return params;
}

double ScalarAdam::update(double value, double grad, double lr, const AdamConfig& cfg) {
  ++step;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
  const double mh = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
  const double vh = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
  return value - lr * mh / (std::sqrt(vh) + cfg.epsilon);
}

NetSpec random_spec(std::mt19937_64& rng, int max_layers, int max_width) {
  std::uniform_int_distribution<int> layers(1, max_layers);
  std::uniform_int_distribution<int> width(1, max_width);
  NetSpec spec;
  spec.input = width(rng);
  const int n = layers(rng);
  for (int i = 0; i + 1 < n; ++i) spec.hidden.push_back(width(rng));
  spec.output = width(rng);
  spec.head = (rng() & 1u) ? Head::kLogits : Head::kValues;
  return spec;
}

GradCheckResult gradient_check(const NetSpec& spec, std::mt19937_64& rng, int batch, double step,
                               double scale_floor) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BasicParamSet<double> params = init_params(spec, rng, 1.0f).cast<double>();
  Matrix<double> inputs(spec.input, batch);
  Matrix<double> upstream(spec.output, batch);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs(i) = unit(rng);
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream(i) = unit(rng);

  auto objective = [&](const BasicParamSet<double>& p) {
    return (forward_batch(spec, p, inputs).array() * upstream.array()).sum();
  };
  const BasicParamSet<double> analytic = grad_batch(spec, params, inputs, upstream);

  GradCheckResult result;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    double scale = 0.0;
    for (double g : analytic.tensors[t].data) scale = std::max(scale, std::abs(g));
    // Entries that cancel to near zero are judged against the tensor's scale;
    // otherwise O(step^2) truncation dominates their relative error.
    const double floor = std::max(scale_floor * scale, 1e-12);
    for (std::size_t i = 0; i < params.tensors[t].data.size(); ++i) {
      const double saved = params.tensors[t].data[i];
      params.tensors[t].data[i] = saved + step;
      const double up = objective(params);
      params.tensors[t].data[i] = saved - step;
      const double down = objective(params);
      params.tensors[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.tensors[t].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
      ++result.parameters_checked;
    }
  }
  return result;
}

}  // namespace sagin::nn
