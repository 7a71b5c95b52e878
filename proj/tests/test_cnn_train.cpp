#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lisce/cnn/train.hpp"
#include "lisce/cnn/weights_io.hpp"
#include "lisce/errors.hpp"
#include "lisce/estimation.hpp"

using namespace lisce;
using namespace lisce::cnn;

namespace {

DatasetSpec micro_spec() {
  DatasetSpec s;
  s.profile = CorrelationProfile{4, 3, 0.6, 0.6, 0.6};
  s.n = 24;
  s.snr_db = {-5, 0, 5};
  s.seed = 11;
  s.tag = StreamTag::dataset_train;
  return s;
}

std::filesystem::path tmp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("dataset generation is deterministic and thread-count independent") {
  const DatasetSpec spec = micro_spec();
  const Dataset<float> a = generate_dataset<float>(spec, 1);
  const Dataset<float> b = generate_dataset<float>(spec, 3);
  CHECK(a.inputs.v == b.inputs.v);
  CHECK(a.targets.v == b.targets.v);
  CHECK(a.sigma == b.sigma);
  CHECK(a.snr_db == b.snr_db);
  DatasetSpec other = spec;
  other.seed = 12;
  CHECK_FALSE(generate_dataset<float>(other, 1).inputs.v == a.inputs.v);
}

TEST_CASE("dataset rotates through the SNR grid per sample") {
  const Dataset<float> ds = generate_dataset<float>(micro_spec(), 2);
  REQUIRE(ds.count() == 24);
  for (int i = 0; i < 24; ++i) {
    const double snr = micro_spec().snr_db[i % 3];
    CHECK(ds.snr_db[i] == snr);
    CHECK(ds.sigma[i] ==
          doctest::Approx(std::sqrt(std::pow(10.0, -snr / 10.0))).epsilon(1e-6));
  }
}

TEST_CASE("dataset inputs are LS estimates of the stored targets") {
  // Mean input-vs-target squared error over fixed-SNR samples approaches the
  // LS closed form M(K+1) sigma2 / T_p.
  DatasetSpec spec;
  spec.profile = CorrelationProfile{4, 3, 0.6, 0.6, 0.6};
  spec.n = 4000;
  spec.snr_db = {0};
  spec.seed = 3;
  spec.tag = StreamTag::dataset_val;
  const Dataset<float> ds = generate_dataset<float>(spec, 0);
  double total = 0;
  for (std::size_t i = 0; i < ds.inputs.v.size(); ++i) {
    const double e = static_cast<double>(ds.inputs.v[i]) - ds.targets.v[i];
    total += e * e;
  }
  total /= spec.n;
  const double want = 4.0 * 4.0 * 1.0 / 4.0;  // M(K+1) sigma2 / T_p
  CHECK(total == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("weight files round trip bit-exact") {
  Network<float> net = make_network<float>(Arch::ffdnet, 4, 3, 6, 5);
  RngStream rng = make_stream(21, StreamTag::weight_init, 0);
  init_weights(net, rng);
  // Perturb bn stats so the round trip covers them too.
  net.layers[1].run_mean[0] = 0.25f;
  net.layers[2].run_var[1] = 3.5f;

  const auto path = tmp_file("lisce_w_rt.lisw");
  save_weights(net, path.string());
  const Network<float> back = load_weights(path.string());
  CHECK(back.arch == Arch::ffdnet);
  CHECK(back.depth == 4);
  CHECK(back.n_f == 3);
  CHECK(back.m == 6);
  CHECK(back.k == 5);
  REQUIRE(back.layers.size() == net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(back.layers[l].kernel == net.layers[l].kernel);
    CHECK(back.layers[l].bias == net.layers[l].bias);
    CHECK(back.layers[l].gamma == net.layers[l].gamma);
    CHECK(back.layers[l].run_mean == net.layers[l].run_mean);
    CHECK(back.layers[l].run_var == net.layers[l].run_var);
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset files round trip bit-exact") {
  const Dataset<float> ds = generate_dataset<float>(micro_spec(), 2);
  const auto path = tmp_file("lisce_d_rt.lisd");
  save_dataset(ds, path.string());
  const Dataset<float> back = load_dataset(path.string());
  CHECK(back.M == ds.M);
  CHECK(back.K == ds.K);
  CHECK(back.inputs.v == ds.inputs.v);
  CHECK(back.targets.v == ds.targets.v);
  CHECK(back.sigma == ds.sigma);
  REQUIRE(back.snr_db.size() == ds.snr_db.size());
  for (std::size_t i = 0; i < ds.snr_db.size(); ++i)
    CHECK(back.snr_db[i] == doctest::Approx(ds.snr_db[i]).epsilon(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("corrupted weight files are rejected by failure mode") {
  Network<float> net = make_network<float>(Arch::dncnn, 3, 2, 4, 3);
  RngStream rng = make_stream(22, StreamTag::weight_init, 0);
  init_weights(net, rng);
  const auto path = tmp_file("lisce_w_bad.lisw");
  save_weights(net, path.string());
  const std::vector<char> good = slurp(path);

  SUBCASE("wrong magic") {
    auto bad = good;
    bad[0] = 'X';
    spit(path, bad);
    CHECK_THROWS_AS(load_weights(path.string()), BadMagic);
  }
  SUBCASE("unsupported version") {
    auto bad = good;
    bad[4] = 9;
    spit(path, bad);
    CHECK_THROWS_AS(load_weights(path.string()), VersionMismatch);
  }
  SUBCASE("flipped payload byte") {
    auto bad = good;
    bad[good.size() / 2] ^= 0x40;
    spit(path, bad);
    CHECK_THROWS_AS(load_weights(path.string()), ChecksumMismatch);
  }
  SUBCASE("truncation") {
    auto bad = good;
    bad.resize(good.size() - 9);
    spit(path, bad);
    CHECK_THROWS_AS(load_weights(path.string()), TruncatedFile);
  }
  SUBCASE("trailing garbage") {
    auto bad = good;
    bad.push_back(0);
    spit(path, bad);
    CHECK_THROWS_AS(load_weights(path.string()), SchemaMismatch);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_weights((path.parent_path() / "nope.lisw").string()), IoError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupted dataset files are rejected by failure mode") {
  DatasetSpec spec = micro_spec();
  spec.n = 6;
  const Dataset<float> ds = generate_dataset<float>(spec, 1);
  const auto path = tmp_file("lisce_d_bad.lisd");
  save_dataset(ds, path.string());
  const std::vector<char> good = slurp(path);

  SUBCASE("wrong magic") {
    auto bad = good;
    bad[1] = 'Q';
    spit(path, bad);
    CHECK_THROWS_AS(load_dataset(path.string()), BadMagic);
  }
  SUBCASE("flipped payload byte") {
    auto bad = good;
    bad[good.size() / 2] ^= 0x01;
    spit(path, bad);
    CHECK_THROWS_AS(load_dataset(path.string()), ChecksumMismatch);
  }
  SUBCASE("truncation") {
    auto bad = good;
    bad.resize(good.size() - 3);
    spit(path, bad);
    CHECK_THROWS_AS(load_dataset(path.string()), TruncatedFile);
  }
  std::filesystem::remove(path);
}

TEST_CASE("micro training run improves on the first epoch and logs it") {
  DatasetSpec spec = micro_spec();
  spec.n = 48;
  const Dataset<float> train_ds = generate_dataset<float>(spec, 0);
  DatasetSpec vspec = spec;
  vspec.n = 24;
  vspec.tag = StreamTag::dataset_val;
  const Dataset<float> val_ds = generate_dataset<float>(vspec, 0);

  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 3;
  cfg.seed = 4;
  cfg.threads = 2;
  const TrainResult<float> res = train(Arch::dncnn, 3, 2, train_ds, val_ds, cfg);
  REQUIRE_FALSE(res.log.empty());
  CHECK(res.log.front().epoch == 1);
  CHECK(res.log.front().improved);
  CHECK(res.best_epoch >= 1);
  CHECK(res.best_val > 0.0);
  for (const auto& e : res.log) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(std::isfinite(e.val_loss));
  }
  // Returned network is the best-validation snapshot.
  Network<float> best = res.net;
  const double replay = validation_loss(best, val_ds, 4, cfg.batch_size, 2);
  CHECK(replay == doctest::Approx(res.best_val).epsilon(1e-6));
}

TEST_CASE("patience stops training when improvement stalls") {
  DatasetSpec spec = micro_spec();
  spec.n = 16;
  const Dataset<float> ds = generate_dataset<float>(spec, 0);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 50;
  cfg.patience = 3;
  // Demand a halving every epoch; epoch 1 always improves over infinity,
  // nothing after can.
  cfg.improvement_delta = 0.5;
  cfg.lr = 0.0;
  const TrainResult<float> res = train(Arch::dncnn, 2, 2, ds, ds, cfg);
  CHECK(res.log.size() == 4);  // 1 improvement + 3 stalls
  CHECK(res.best_epoch == 1);
}

TEST_CASE("training is deterministic for a fixed seed") {
  DatasetSpec spec = micro_spec();
  spec.n = 32;
  const Dataset<float> ds = generate_dataset<float>(spec, 0);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 2;
  cfg.seed = 7;
  const TrainResult<float> a = train(Arch::dncnn, 3, 2, ds, ds, cfg);
  cfg.threads = 3;
  const TrainResult<float> b = train(Arch::dncnn, 3, 2, ds, ds, cfg);
  REQUIRE(a.log.size() == b.log.size());
  CHECK(a.log.back().train_loss == b.log.back().train_loss);
  CHECK(a.log.back().val_loss == b.log.back().val_loss);
  for (std::size_t l = 0; l < a.net.layers.size(); ++l)
    CHECK(a.net.layers[l].kernel == b.net.layers[l].kernel);
}

TEST_CASE("evaluate_mse on a zero network reproduces the dataset input error") {
  DatasetSpec spec = micro_spec();
  spec.n = 40;
  spec.snr_db = {0};
  Dataset<float> ds = generate_dataset<float>(spec, 0);
  Network<float> zero = make_network<float>(Arch::dncnn, 3, 2, 4, 3);
  const EmpiricalMse got = evaluate_mse(zero, ds, 2);

  double direct = 0, cascaded = 0;
  for (int s = 0; s < ds.count(); ++s)
    for (int i = 0; i < ds.inputs.h; ++i)
      for (int j = 0; j < ds.inputs.w; ++j)
        for (int ch = 0; ch < 2; ++ch) {
          const double e = static_cast<double>(ds.inputs(s, i, j, ch)) -
                           ds.targets(s, i, j, ch);
          (j == 0 ? direct : cascaded) += e * e;
        }
  CHECK(got.direct == doctest::Approx(direct / ds.count()).epsilon(1e-6));
  CHECK(got.cascaded == doctest::Approx(cascaded / ds.count()).epsilon(1e-6));
  CHECK(got.total == doctest::Approx(got.direct + got.cascaded).epsilon(1e-12));
  CHECK(got.trials == 40);
}

TEST_CASE("a zero-network denoiser leaves the LS estimate untouched") {
  const CorrelationProfile p{4, 3, 0.6, 0.6, 0.6};
  const ChannelModel model(p);
  const PhaseShiftMatrix phi = dft_phase_matrix(4, 3);
  const Network<float> zero = make_network<float>(Arch::dncnn, 3, 2, 4, 3);
  const Denoiser den = make_dncnn_denoiser(zero);
  const EmpiricalMse ls = empirical_mse(EstimMethod::ls, model, phi, 1.0, 100, 5);
  const EmpiricalMse dn =
      empirical_mse(EstimMethod::dncnn, model, phi, 1.0, 100, 5, 0, &den);
  // Identical up to the float32 round trip through the image tensor.
  CHECK(dn.total == doctest::Approx(ls.total).epsilon(1e-5));
  CHECK(dn.direct == doctest::Approx(ls.direct).epsilon(1e-5));
}

TEST_CASE("cnn methods demand a denoiser") {
  const ChannelModel model(CorrelationProfile{4, 3, 0.6, 0.6, 0.6});
  CHECK_THROWS_AS(
      empirical_mse(EstimMethod::ffdnet, model, dft_phase_matrix(4, 3), 1.0, 10, 1),
      NumericalError);
}
