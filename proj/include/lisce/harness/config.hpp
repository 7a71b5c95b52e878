#pragma once

// Line-based `key = value` experiment configuration. `#` starts a comment,
// blank lines are skipped, unknown keys are hard errors. Every value has a
// default except `experiment`, which must be present.
//
// Defaults: m=10, k=10, rho1=rho2=rho3=0.6, t_p=0 (resolved to k+1),
// t_c=196, trials=2000, seed=1, threads=0 (auto), out="out",
// gamma_tr_db=-10, snr_db=-10,-5,0,5,10, rho_grid=0,0.3,0.6,0.9,
// gamma_bar_db=-5,0,5, k_grid=2,8,32,128, arch=dncnn, depth=8, n_f=4,
// n_train=16000, n_val=8000, n_test=6000, batch=100, lr=0.001,
// max_epochs=200, patience=5, improvement_delta=1e-5, mm_inits=5,
// mm_eps=1e-6, mm_max_iter=500. train_snr_db defaults by arch: 0 for
// dncnn, -5,0,5 for ffdnet. methods defaults by experiment.

#include <cstdint>
#include <string>
#include <vector>

#include "lisce/cnn/network.hpp"
#include "lisce/channel.hpp"

namespace lisce::harness {

enum class Experiment {
  mse_vs_snr,
  mse_vs_rho,
  mm_trace,
  rate_vs_snr,
  rate_vs_k,
  table_hyperparams,
  train,
  gen_data,
};

const char* experiment_name(Experiment e);

// One plotted/evaluated series. The *_analytic kinds are closed-form rows
// (trials = 0, stderr = 0); the others are Monte Carlo.
enum class SeriesKind { ls, lmmse, ls_analytic, lmmse_analytic, dncnn, ffdnet, genie };

const char* series_name(SeriesKind s);

struct ExperimentConfig {
  Experiment experiment = Experiment::mse_vs_snr;

  CorrelationProfile profile;  // m, k, rho1..3
  int t_p = 0;  // 0 resolves to k+1
  int t_c = 196;
  int trials = 2000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware default
  std::string out = "out";

  std::vector<SeriesKind> methods;  // empty = experiment default
  std::vector<double> snr_db = {-10, -5, 0, 5, 10};
  std::vector<double> rho_grid = {0, 0.3, 0.6, 0.9};
  double gamma_tr_db = -10;
  std::vector<double> gamma_bar_db = {-5, 0, 5};
  std::vector<int> k_grid = {2, 8, 32, 128};

  cnn::Arch arch = cnn::Arch::dncnn;
  int depth = 8;
  int n_f = 4;
  int n_train = 16000;
  int n_val = 8000;
  int n_test = 6000;
  std::vector<double> train_snr_db;  // empty = arch default
  int batch = 100;
  int max_epochs = 200;
  int patience = 5;
  double lr = 1e-3;
  double improvement_delta = 1e-5;

  std::string weights;         // train output / eval input for `arch`
  std::string weights_dncnn;   // eval input when both nets participate
  std::string weights_ffdnet;
  std::string dataset;         // gen-data output / optional eval input

  int mm_inits = 5;
  double mm_eps = 1e-6;
  int mm_max_iter = 500;

  int resolved_t_p() const { return t_p == 0 ? profile.K + 1 : t_p; }
  std::vector<SeriesKind> resolved_methods() const;
  std::vector<double> resolved_train_snr_db() const;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical form; parse_config(echo_config(c)) == c.
std::string echo_config(const ExperimentConfig& cfg);

}  // namespace lisce::harness
