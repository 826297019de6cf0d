#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "sagin/nn.hpp"
#include "sagin/rng.hpp"
#include "sagin/serialize.hpp"

using namespace sagin::nn;

namespace {

ParamSet random_params(const NetSpec& spec, std::mt19937_64& rng) {
  ParamSet p = zero_params<float>(spec);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (auto& t : p.tensors)
    for (auto& x : t.data) x = g(rng);
  return p;
}

}  // namespace

TEST_CASE("forward of a single affine layer") {
  NetSpec spec{2, {}, 2};
  ParamSet p = zero_params<float>(spec);
  p.tensors[0].data = {1, 2, 3, 4};  // row-major [out, in]
  p.tensors[1].data = {0.5f, -1};
  const VectorXf y = forward(spec, p, VectorXf{{1.0f, -1.0f}});
  CHECK(y[0] == doctest::Approx(-0.5));
  CHECK(y[1] == doctest::Approx(-2.0));
}

TEST_CASE("hidden layers use tanh") {
  NetSpec spec{1, {1}, 1};
  ParamSet p = zero_params<float>(spec);
  p.tensors[0].data = {2};
  p.tensors[2].data = {3};
  const double x = 0.4;
  CHECK(forward(spec, p, VectorXf{{0.4f}})[0] == doctest::Approx(3 * std::tanh(2 * x)).epsilon(1e-6));
}

TEST_CASE("linear layer gradient is input outer upstream") {
  NetSpec spec{3, {}, 2};
  std::mt19937_64 rng(4);
  ParamSet p = random_params(spec, rng);
  VectorXf x{{0.5f, -1.0f, 2.0f}};
  VectorXf up{{1.5f, -0.25f}};
  const ParamSet g = grad(spec, p, x, up);
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) CHECK(g.tensors[0].data[o * 3 + i] == doctest::Approx(up[o] * x[i]));
    CHECK(g.tensors[1].data[o] == doctest::Approx(up[o]));
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  NetSpec spec{4, {5, 3}, 2};
  std::mt19937_64 rng(5);
  const ParamSet p = random_params(spec, rng);
  const ParamSet g = grad(spec, p, VectorXf(VectorXf::Ones(4)), VectorXf(VectorXf::Zero(2)));
  for (const auto& t : g.tensors)
    for (float v : t.data) CHECK(v == 0.0f);
}

TEST_CASE("dimension errors") {
  NetSpec spec{3, {4}, 2};
  const ParamSet p = zero_params<float>(spec);
  CHECK_THROWS_AS(forward(spec, p, VectorXf(VectorXf::Zero(2))), DimensionError);
  CHECK_THROWS_AS(forward(NetSpec{3, {5}, 2}, p, VectorXf(VectorXf::Zero(3))), DimensionError);
  CHECK_THROWS_AS(grad(spec, p, VectorXf(VectorXf::Zero(3)), VectorXf(VectorXf::Zero(3))), DimensionError);
  CHECK_THROWS_AS((NetSpec{0, {}, 1}.validate()), DimensionError);
}

TEST_CASE("gradient check on random small networks") {
  auto rng = sagin::stream_rng(11, 0);
  for (int i = 0; i < 20; ++i) {
    const NetSpec spec = random_spec(rng);
    CHECK(spec.num_affine() <= 3);
    const auto r = gradient_check(spec, rng);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.parameters_checked == zero_params<double>(spec).numel());
  }
}

TEST_CASE("first Adam step moves each weight by lr against the gradient sign") {
  NetSpec spec{2, {}, 1};
  ParamSet p = zero_params<float>(spec);
  ParamSet g = zeros_like(p);
  g.tensors[0].data = {0.3f, -2.0f};
  g.tensors[1].data = {0.0f};
  AdamState s = AdamState::for_params(p);
  const ParamSet q = adam_step(p, g, 0.01f, s);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
  CHECK(q.tensors[0].data[0] == doctest::Approx(-0.01).epsilon(1e-5));
  CHECK(q.tensors[0].data[1] == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(q.tensors[1].data[0] == 0.0f);
  CHECK(s.step == 1);

  AdamState s2 = AdamState::for_params(p);
  CHECK(adam_step(p, g, 0.01f, s2) == q);
}

TEST_CASE("Adam minimises a quadratic") {
  ScalarAdam opt;
  double x = 5.0;
  for (int i = 0; i < 3000; ++i) x = opt.update(x, 2 * (x - 1.5), 0.01);
  CHECK(x == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("softmax and clamped log") {
  MatrixXf logits(3, 1);
  logits << 1000.0f, 1000.0f, -1000.0f;
  const MatrixXf p = softmax_columns(logits);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(2, 0) == 0.0f);
  CHECK(clamped_log(p)(2, 0) == kLogProbFloor);
}

TEST_CASE("serialization byte layout") {
  ParamSet p;
  p.tensors.push_back({{2}, {1.0f, -2.0f}});
  const auto bytes = serialize(p);
  // magic 4 + version 4 + layout 8 + count 4 + rank 4 + dim 4 + payload 8
  REQUIRE(bytes.size() == 36);
  CHECK(std::memcmp(bytes.data(), "SGPS", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[16] == 1);  // one tensor
  CHECK(bytes[20] == 1);  // rank 1
  CHECK(bytes[24] == 2);  // dim 2
  // 1.0f = 0x3f800000, little-endian
  CHECK(bytes[28] == 0x00);
  CHECK(bytes[31] == 0x3f);
  CHECK(bytes[35] == 0xc0);  // -2.0f = 0xc0000000
}

TEST_CASE("serialization round-trips bitwise, including non-finite values") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const NetSpec spec = random_spec(rng);
    ParamSet p = random_params(spec, rng);
    if (i % 7 == 0) {
      p.tensors[0].data[0] = -0.0f;
      p.tensors[1].data[0] = std::numeric_limits<float>::infinity();
    }
    const ParamSet q = deserialize(serialize(p), p.layout_id());
    REQUIRE(q.tensors.size() == p.tensors.size());
    for (std::size_t t = 0; t < p.tensors.size(); ++t) {
      CHECK(q.tensors[t].shape == p.tensors[t].shape);
      CHECK(std::memcmp(q.tensors[t].data.data(), p.tensors[t].data.data(), 4 * p.tensors[t].data.size()) == 0);
    }
  }
  ParamSet nan;
  nan.tensors.push_back({{1}, {std::bit_cast<float>(0x7fc00123u)}});
  CHECK(std::bit_cast<std::uint32_t>(deserialize(serialize(nan)).tensors[0].data[0]) == 0x7fc00123u);
}

TEST_CASE("deserialize rejects malformed input") {
  NetSpec spec{3, {4}, 2};
  const ParamSet p = zero_params<float>(spec);
  auto bytes = serialize(p);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize(bad_version), FormatError);

  CHECK_THROWS_AS(deserialize(std::span(bytes).first(bytes.size() - 1)), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), FormatError);

  CHECK_THROWS_AS(deserialize(bytes, p.layout_id() + 1), FormatError);
  CHECK_NOTHROW(deserialize(bytes, p.layout_id()));
}

TEST_CASE("layout id depends on shapes only") {
  NetSpec a{3, {4}, 2};
  NetSpec b{3, {5}, 2};
  std::mt19937_64 rng(1);
  CHECK(random_params(a, rng).layout_id() == zero_params<float>(a).layout_id());
  CHECK(zero_params<float>(a).layout_id() != zero_params<float>(b).layout_id());
}

TEST_CASE("parameter files") {
  NetSpec spec{2, {3}, 1};
  std::mt19937_64 rng(2);
  const ParamSet p = random_params(spec, rng);
  const std::string path = "nn_params_test.bin";
  write_file(path, p);
  CHECK(read_file(path, p.layout_id()) == p);
  std::remove(path.c_str());
}
