#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lisce/cnn/network.hpp"
#include "lisce/cnn/tensor.hpp"
#include "lisce/cnn/train.hpp"
#include "lisce/errors.hpp"

using namespace lisce;
using namespace lisce::cnn;

TEST_CASE("3x3 convolution over an all-ones image counts the valid taps") {
  ConvLayer<double> l = ConvLayer<double>::make(1, 1, false);
  for (auto& w : l.kernel) w = 1.0;
  Tensor4<double> x(1, 5, 5, 1);
  for (auto& v : x.v) v = 1.0;
  const Tensor4<double> y = conv2d_same(x, l);
  CHECK(y(0, 2, 2, 0) == 9.0);  // interior: full 3x3 support
  CHECK(y(0, 0, 2, 0) == 6.0);  // edge: one row padded away
  CHECK(y(0, 0, 0, 0) == 4.0);  // corner: 2x2 support
  CHECK(y(0, 4, 4, 0) == 4.0);
}

TEST_CASE("convolution bias and channel wiring") {
  ConvLayer<double> l = ConvLayer<double>::make(2, 1, false);
  // Identity tap on channel 1 only, bias 10.
  l.k_at(1, 1, 1, 0) = 1.0;
  l.bias[0] = 10.0;
  Tensor4<double> x(1, 3, 3, 2);
  x(0, 1, 1, 0) = 5.0;
  x(0, 1, 1, 1) = 7.0;
  const Tensor4<double> y = conv2d_same(x, l);
  CHECK(y(0, 1, 1, 0) == 17.0);
  CHECK(y(0, 0, 0, 0) == 10.0);
  CHECK_THROWS_AS(conv2d_same(Tensor4<double>(1, 2, 2, 3), l), NumericalError);
}

TEST_CASE("batch norm standardizes a two-point batch") {
  ConvLayer<double> l = ConvLayer<double>::make(1, 1, true);
  Tensor4<double> x(2, 1, 1, 1);
  x(0, 0, 0, 0) = -1.0;
  x(1, 0, 0, 0) = 1.0;
  const Tensor4<double> y = batch_norm(x, l, Mode::train);
  // mean 0, biased var 1 -> 1/sqrt(1 + 1e-5).
  CHECK(y(0, 0, 0, 0) == doctest::Approx(-0.999995).epsilon(1e-9));
  CHECK(y(1, 0, 0, 0) == doctest::Approx(0.999995).epsilon(1e-9));
}

TEST_CASE("batch norm running statistics blend at momentum 0.9") {
  ConvLayer<double> l = ConvLayer<double>::make(1, 1, true);
  Tensor4<double> x(2, 1, 1, 1);
  x(0, 0, 0, 0) = 0.0;
  x(1, 0, 0, 0) = 2.0;  // batch mean 1, biased var 1
  (void)batch_norm(x, l, Mode::train);
  CHECK(l.run_mean[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(l.run_var[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Infer mode uses the running statistics, not the batch.
  Tensor4<double> probe(1, 1, 1, 1);
  probe(0, 0, 0, 0) = 0.1;
  const Tensor4<double> y = batch_norm(probe, l, Mode::infer);
  CHECK(y(0, 0, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  ConvLayer<double> plain = ConvLayer<double>::make(1, 1, false);
  CHECK_THROWS_AS(batch_norm(x, plain, Mode::train), NumericalError);
}

TEST_CASE("relu backward gates on the pre-activation sign") {
  Tensor4<double> pre(1, 1, 1, 3);
  pre(0, 0, 0, 0) = -1.0;
  pre(0, 0, 0, 1) = 0.0;
  pre(0, 0, 0, 2) = 2.0;
  Tensor4<double> d(1, 1, 1, 3);
  d.v = {5.0, 5.0, 5.0};
  relu_backward_inplace(d, pre);
  CHECK(d.v[0] == 0.0);
  CHECK(d.v[1] == 0.0);
  CHECK(d.v[2] == 5.0);
}

TEST_CASE("interleave4 splits even/odd rows into channels and inverts") {
  Tensor4<float> img(2, 4, 3, 2);
  for (std::size_t i = 0; i < img.size(); ++i) img.v[i] = static_cast<float>(i);
  const Tensor4<float> packed = interleave4(img);
  REQUIRE(packed.h == 2);
  REQUIRE(packed.c == 4);
  CHECK(packed(0, 1, 2, 0) == img(0, 2, 2, 0));
  CHECK(packed(0, 1, 2, 1) == img(0, 3, 2, 0));
  CHECK(packed(0, 1, 2, 2) == img(0, 2, 2, 1));
  CHECK(packed(0, 1, 2, 3) == img(0, 3, 2, 1));
  const Tensor4<float> back = deinterleave4(packed);
  CHECK(back.v == img.v);
  CHECK_THROWS_AS(interleave4(Tensor4<float>(1, 3, 3, 2)), OddAntennaCount);
}

TEST_CASE("ffdnet noise map encodes the per-component noise level") {
  Tensor4<float> img(1, 4, 11, 2);
  const float sigma = std::sqrt(10.0f);
  const Tensor4<float> packed = ffdnet_pack(img, {sigma}, 11);
  REQUIRE(packed.c == 5);
  // sigma / sqrt(2 T_p) = sqrt(10 / 22)
  CHECK(packed(0, 0, 0, 4) == doctest::Approx(std::sqrt(10.0 / 22.0)).epsilon(1e-6));
  CHECK(packed(0, 1, 7, 4) == packed(0, 0, 0, 4));
  CHECK_THROWS_AS(ffdnet_pack(img, {sigma, sigma}, 11), NumericalError);
}

TEST_CASE("image packing round trips the stacked vector") {
  cxvec z(6);
  for (int i = 0; i < 6; ++i) z[i] = cxd(i, -i);
  const Tensor4<float> img = to_image<float>(z, 2);
  REQUIRE(img.h == 2);
  REQUIRE(img.w == 3);
  CHECK(img(0, 1, 2, 0) == 5.0f);   // z[2*2+1].real()
  CHECK(img(0, 1, 2, 1) == -5.0f);  // z[2*2+1].imag()
  const cxvec back = from_image(img);
  CHECK((back - z).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(to_image<float>(z, 4), NumericalError);
}

TEST_CASE("network wiring") {
  const Network<float> net = make_network<float>(Arch::dncnn, 5, 8, 10, 10);
  REQUIRE(net.layers.size() == 5);
  CHECK(net.layers[0].c_in == 2);
  CHECK(net.layers[0].c_out == 8);
  CHECK_FALSE(net.layers[0].has_bn);
  for (int l = 1; l < 4; ++l) {
    CHECK(net.layers[l].c_in == 8);
    CHECK(net.layers[l].c_out == 8);
    CHECK(net.layers[l].has_bn);
  }
  CHECK(net.layers[4].c_out == 2);
  CHECK_FALSE(net.layers[4].has_bn);
  const Network<float> ff = make_network<float>(Arch::ffdnet, 3, 4, 10, 10);
  CHECK(ff.layers[0].c_in == 5);
  CHECK(ff.layers[2].c_out == 4);
  CHECK_THROWS_AS(make_network<float>(Arch::ffdnet, 3, 4, 9, 10), OddAntennaCount);
  CHECK_THROWS_AS(make_network<float>(Arch::dncnn, 1, 4, 10, 10), NumericalError);
}

TEST_CASE("init_weights draws at variance 2/(9 c_in)") {
  Network<double> net = make_network<double>(Arch::dncnn, 3, 64, 10, 10);
  RngStream rng = make_stream(5, StreamTag::weight_init, 0);
  init_weights(net, rng);
  const auto& k = net.layers[1].kernel;  // 9*64*64 entries
  double sum = 0, sumsq = 0;
  for (double w : k) {
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / k.size();
  const double var = sumsq / k.size() - mean * mean;
  CHECK(std::abs(mean) < 0.005);
  CHECK(var == doctest::Approx(2.0 / (9.0 * 64.0)).epsilon(0.1));
  for (double b : net.layers[0].bias) CHECK(b == 0.0);
  // The final conv starts at zero: the untrained net is the identity map.
  for (double w : net.layers.back().kernel) CHECK(w == 0.0);
}

TEST_CASE("a zero network is the identity denoiser") {
  Network<float> net = make_network<float>(Arch::dncnn, 3, 2, 4, 3);
  Tensor4<float> img(2, 4, 4, 2);
  for (std::size_t i = 0; i < img.size(); ++i) img.v[i] = static_cast<float>(i % 7) - 3.0f;
  const Tensor4<float> out = dncnn_forward(net, img, Mode::infer);
  CHECK(out.v == img.v);
}

TEST_CASE("adam takes a signed lr-sized first step") {
  Network<double> net = make_network<double>(Arch::dncnn, 2, 2, 4, 3);
  Network<double> g = zeros_like(net);
  g.layers[0].kernel[0] = 0.7;
  g.layers[1].kernel[3] = -1.3;
  AdamState<double> st{zeros_like(net), zeros_like(net), 0};
  TrainConfig cfg;
  adam_step(net, g, st, cfg);
  // With zero history, m_hat/sqrt(v_hat) = sign(g) up to eps.
  CHECK(net.layers[0].kernel[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(net.layers[1].kernel[3] == doctest::Approx(0.001).epsilon(1e-6));
  CHECK(net.layers[0].kernel[1] == 0.0);
  CHECK(st.t == 1);
}

namespace {

// One scalar training loss and its analytic parameter gradients.
template <typename Fn>
void check_param_gradients(Network<double>& net, const Fn& loss_fn,
                           const Network<double>& grads) {
  const double h = 1e-4;
  auto probe = [&](std::vector<double>& w, const std::vector<double>& g) {
    const std::size_t idx[] = {0, g.size() / 2, g.size() - 1};
    for (const std::size_t i : idx) {
      const double keep = w[i];
      w[i] = keep + h;
      const double up = loss_fn();
      w[i] = keep - h;
      const double dn = loss_fn();
      w[i] = keep;
      const double fd = (up - dn) / (2 * h);
      const double tol = 1e-6 * std::max(1.0, std::abs(g[i]));
      CHECK(std::abs(fd - g[i]) <= tol);
    }
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    probe(net.layers[l].kernel, grads.layers[l].kernel);
    probe(net.layers[l].bias, grads.layers[l].bias);
    if (net.layers[l].has_bn) {
      probe(net.layers[l].gamma, grads.layers[l].gamma);
      probe(net.layers[l].beta, grads.layers[l].beta);
    }
  }
}

}  // namespace

TEST_CASE("dncnn analytic gradients match central differences") {
  Network<double> net = make_network<double>(Arch::dncnn, 3, 2, 4, 3);
  RngStream rng = make_stream(12, StreamTag::weight_init, 0);
  init_weights(net, rng);
  // The final conv initializes to zero, which would cut the gradient path to
  // every earlier layer; give it nonzero weights so the whole stack is live.
  for (auto& w : net.layers.back().kernel) w = 0.3 * rng.normal();
  Tensor4<double> in(3, 4, 4, 2), tg(3, 4, 4, 2);
  for (auto& v : in.v) v = rng.normal();
  for (auto& v : tg.v) v = rng.normal();

  Network<double> grads;
  (void)loss_and_grads<double>(net, in, tg, nullptr, 4, grads);
  auto loss_fn = [&]() {
    Network<double> g;
    return loss_and_grads<double>(net, in, tg, nullptr, 4, g);
  };
  check_param_gradients(net, loss_fn, grads);
}

TEST_CASE("ffdnet analytic gradients match central differences") {
  Network<double> net = make_network<double>(Arch::ffdnet, 3, 2, 4, 3);
  RngStream rng = make_stream(13, StreamTag::weight_init, 0);
  init_weights(net, rng);
  for (auto& w : net.layers.back().kernel) w = 0.3 * rng.normal();
  Tensor4<double> in(3, 4, 4, 2), tg(3, 4, 4, 2);
  for (auto& v : in.v) v = rng.normal();
  for (auto& v : tg.v) v = rng.normal();
  const std::vector<double> sigma = {0.5, 1.0, 2.0};

  Network<double> grads;
  (void)loss_and_grads(net, in, tg, &sigma, 4, grads);
  auto loss_fn = [&]() {
    Network<double> g;
    return loss_and_grads(net, in, tg, &sigma, 4, g);
  };
  check_param_gradients(net, loss_fn, grads);
}

TEST_CASE("loss_and_grads reports the mean squared residual") {
  Network<double> net = make_network<double>(Arch::dncnn, 2, 2, 2, 2);
  // Zero weights: output equals input, so loss = mean ||in - tg||^2.
  Tensor4<double> in(2, 2, 3, 2), tg(2, 2, 3, 2);
  RngStream rng = make_stream(14, StreamTag::misc, 0);
  for (auto& v : in.v) v = rng.normal();
  for (auto& v : tg.v) v = rng.normal();
  Network<double> g;
  const double loss = loss_and_grads<double>(net, in, tg, nullptr, 3, g);
  double want = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double e = in.v[i] - tg.v[i];
    want += e * e;
  }
  want /= 2.0;
  CHECK(loss == doctest::Approx(want).epsilon(1e-12));
}
