#include "lisce/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lisce/errors.hpp"

namespace lisce::harness {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& s, int line) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) fail(line, "not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s, int line) {
  long long v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) fail(line, "not an integer: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s, int line) {
  std::uint64_t v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) fail(line, "not an unsigned integer: '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s, int line) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "empty list element");
    out.push_back(item);
  }
  if (out.empty()) fail(line, "empty list");
  return out;
}

std::vector<double> to_double_list(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& item : split_list(s, line)) out.push_back(to_double(item, line));
  return out;
}

std::vector<int> to_int_list(const std::string& s, int line) {
  std::vector<int> out;
  for (const auto& item : split_list(s, line)) {
    const long long v = to_int(item, line);
    if (v < 1) fail(line, "list element must be positive");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

double to_rho(const std::string& s, int line) {
  const double r = to_double(s, line);
  if (!(r >= 0.0 && r < 1.0)) fail(line, "correlation must lie in [0, 1)");
  return r;
}

int to_int_min(const std::string& s, int line, long long lo, const char* what) {
  const long long v = to_int(s, line);
  if (v < lo) fail(line, std::string(what) + " out of range");
  return static_cast<int>(v);
}

// Shortest decimal form that parses back to the same double, so the echo is
// readable and still round-trips exactly.
std::string fmt_double(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15)
    return std::to_string(static_cast<long long>(v));
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) return buf;
  }
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt_double(v[i]);
  }
  return s;
}

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::mse_vs_snr: return "mse-vs-snr";
    case Experiment::mse_vs_rho: return "mse-vs-rho";
    case Experiment::mm_trace: return "mm-trace";
    case Experiment::rate_vs_snr: return "rate-vs-snr";
    case Experiment::rate_vs_k: return "rate-vs-k";
    case Experiment::table_hyperparams: return "table-hyperparams";
    case Experiment::train: return "train";
    case Experiment::gen_data: return "gen-data";
  }
  return "?";
}

const char* series_name(SeriesKind s) {
  switch (s) {
    case SeriesKind::ls: return "ls";
    case SeriesKind::lmmse: return "lmmse";
    case SeriesKind::ls_analytic: return "ls-analytic";
    case SeriesKind::lmmse_analytic: return "lmmse-analytic";
    case SeriesKind::dncnn: return "dncnn";
    case SeriesKind::ffdnet: return "ffdnet";
    case SeriesKind::genie: return "genie";
  }
  return "?";
}

std::vector<SeriesKind> ExperimentConfig::resolved_methods() const {
  if (!methods.empty()) return methods;
  switch (experiment) {
    case Experiment::mse_vs_snr:
    case Experiment::mse_vs_rho:
      return {SeriesKind::ls, SeriesKind::lmmse, SeriesKind::ls_analytic,
              SeriesKind::lmmse_analytic};
    case Experiment::rate_vs_snr:
      return {SeriesKind::genie, SeriesKind::ls, SeriesKind::lmmse};
    case Experiment::rate_vs_k:
      return {SeriesKind::genie};
    default:
      return {};
  }
}

std::vector<double> ExperimentConfig::resolved_train_snr_db() const {
  if (!train_snr_db.empty()) return train_snr_db;
  if (arch == cnn::Arch::ffdnet) return {-5, 0, 5};
  return {0};
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool have_experiment = false;

  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) fail(line, "expected `key = value`");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (val.empty()) fail(line, "empty value for key '" + key + "'");

    if (key == "experiment") {
      bool found = false;
      for (Experiment e :
           {Experiment::mse_vs_snr, Experiment::mse_vs_rho, Experiment::mm_trace,
            Experiment::rate_vs_snr, Experiment::rate_vs_k,
            Experiment::table_hyperparams, Experiment::train, Experiment::gen_data}) {
        if (val == experiment_name(e)) {
          cfg.experiment = e;
          found = true;
          break;
        }
      }
      if (!found) fail(line, "unknown experiment '" + val + "'");
      have_experiment = true;
    } else if (key == "m") {
      cfg.profile.M = to_int_min(val, line, 1, "m");
    } else if (key == "k") {
      cfg.profile.K = to_int_min(val, line, 1, "k");
    } else if (key == "rho") {
      cfg.profile.rho1 = cfg.profile.rho2 = cfg.profile.rho3 = to_rho(val, line);
    } else if (key == "rho1") {
      cfg.profile.rho1 = to_rho(val, line);
    } else if (key == "rho2") {
      cfg.profile.rho2 = to_rho(val, line);
    } else if (key == "rho3") {
      cfg.profile.rho3 = to_rho(val, line);
    } else if (key == "t_p") {
      cfg.t_p = to_int_min(val, line, 0, "t_p");
    } else if (key == "t_c") {
      cfg.t_c = to_int_min(val, line, 1, "t_c");
    } else if (key == "trials") {
      cfg.trials = to_int_min(val, line, 1, "trials");
    } else if (key == "seed") {
      cfg.seed = to_u64(val, line);
    } else if (key == "threads") {
      cfg.threads = to_int_min(val, line, 0, "threads");
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& item : split_list(val, line)) {
        bool found = false;
        for (SeriesKind s : {SeriesKind::ls, SeriesKind::lmmse, SeriesKind::ls_analytic,
                             SeriesKind::lmmse_analytic, SeriesKind::dncnn,
                             SeriesKind::ffdnet, SeriesKind::genie}) {
          if (item == series_name(s)) {
            cfg.methods.push_back(s);
            found = true;
            break;
          }
        }
        if (!found) fail(line, "unknown method '" + item + "'");
      }
    } else if (key == "snr_db") {
      cfg.snr_db = to_double_list(val, line);
    } else if (key == "rho_grid") {
      cfg.rho_grid.clear();
      for (const auto& item : split_list(val, line)) cfg.rho_grid.push_back(to_rho(item, line));
    } else if (key == "gamma_tr_db") {
      cfg.gamma_tr_db = to_double(val, line);
    } else if (key == "gamma_bar_db") {
      cfg.gamma_bar_db = to_double_list(val, line);
    } else if (key == "k_grid") {
      cfg.k_grid = to_int_list(val, line);
    } else if (key == "arch") {
      if (val == "dncnn") cfg.arch = cnn::Arch::dncnn;
      else if (val == "ffdnet") cfg.arch = cnn::Arch::ffdnet;
      else fail(line, "unknown arch '" + val + "'");
    } else if (key == "depth") {
      cfg.depth = to_int_min(val, line, 2, "depth");
    } else if (key == "n_f") {
      cfg.n_f = to_int_min(val, line, 1, "n_f");
    } else if (key == "n_train") {
      cfg.n_train = to_int_min(val, line, 1, "n_train");
    } else if (key == "n_val") {
      cfg.n_val = to_int_min(val, line, 1, "n_val");
    } else if (key == "n_test") {
      cfg.n_test = to_int_min(val, line, 1, "n_test");
    } else if (key == "train_snr_db") {
      cfg.train_snr_db = to_double_list(val, line);
    } else if (key == "batch") {
      cfg.batch = to_int_min(val, line, 1, "batch");
    } else if (key == "max_epochs") {
      cfg.max_epochs = to_int_min(val, line, 1, "max_epochs");
    } else if (key == "patience") {
      cfg.patience = to_int_min(val, line, 0, "patience");
    } else if (key == "lr") {
      cfg.lr = to_double(val, line);
      if (!(cfg.lr > 0)) fail(line, "lr must be positive");
    } else if (key == "improvement_delta") {
      cfg.improvement_delta = to_double(val, line);
      if (!(cfg.improvement_delta >= 0)) fail(line, "improvement_delta must be >= 0");
    } else if (key == "weights") {
      cfg.weights = val;
    } else if (key == "weights_dncnn") {
      cfg.weights_dncnn = val;
    } else if (key == "weights_ffdnet") {
      cfg.weights_ffdnet = val;
    } else if (key == "dataset") {
      cfg.dataset = val;
    } else if (key == "mm_inits") {
      cfg.mm_inits = to_int_min(val, line, 0, "mm_inits");
    } else if (key == "mm_eps") {
      cfg.mm_eps = to_double(val, line);
      if (!(cfg.mm_eps > 0)) fail(line, "mm_eps must be positive");
    } else if (key == "mm_max_iter") {
      cfg.mm_max_iter = to_int_min(val, line, 1, "mm_max_iter");
    } else {
      throw UnknownKey("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  if (!have_experiment) throw MissingRequired("missing required key 'experiment'");
  if (cfg.t_p != 0 && cfg.t_p < cfg.profile.K + 1)
    throw ParseError("t_p must be 0 (auto) or at least k+1");

  std::vector<std::string> paths;
  for (const std::string* p : {&cfg.weights, &cfg.weights_dncnn, &cfg.weights_ffdnet,
                               &cfg.dataset})
    if (!p->empty()) paths.push_back(*p);
  std::sort(paths.begin(), paths.end());
  if (std::adjacent_find(paths.begin(), paths.end()) != paths.end())
    throw ParseError("referenced file paths must be distinct");

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "experiment = " << experiment_name(cfg.experiment) << "\n";
  o << "m = " << cfg.profile.M << "\n";
  o << "k = " << cfg.profile.K << "\n";
  o << "rho1 = " << fmt_double(cfg.profile.rho1) << "\n";
  o << "rho2 = " << fmt_double(cfg.profile.rho2) << "\n";
  o << "rho3 = " << fmt_double(cfg.profile.rho3) << "\n";
  o << "t_p = " << cfg.t_p << "\n";
  o << "t_c = " << cfg.t_c << "\n";
  o << "trials = " << cfg.trials << "\n";
  o << "seed = " << cfg.seed << "\n";
  o << "threads = " << cfg.threads << "\n";
  o << "out = " << cfg.out << "\n";
  if (!cfg.methods.empty()) {
    o << "methods = ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
      o << (i ? ", " : "") << series_name(cfg.methods[i]);
    o << "\n";
  }
  o << "snr_db = " << fmt_list(cfg.snr_db) << "\n";
  o << "rho_grid = " << fmt_list(cfg.rho_grid) << "\n";
  o << "gamma_tr_db = " << fmt_double(cfg.gamma_tr_db) << "\n";
  o << "gamma_bar_db = " << fmt_list(cfg.gamma_bar_db) << "\n";
  o << "k_grid = " << fmt_list(cfg.k_grid) << "\n";
  o << "arch = " << cnn::arch_name(cfg.arch) << "\n";
  o << "depth = " << cfg.depth << "\n";
  o << "n_f = " << cfg.n_f << "\n";
  o << "n_train = " << cfg.n_train << "\n";
  o << "n_val = " << cfg.n_val << "\n";
  o << "n_test = " << cfg.n_test << "\n";
  if (!cfg.train_snr_db.empty()) o << "train_snr_db = " << fmt_list(cfg.train_snr_db) << "\n";
  o << "batch = " << cfg.batch << "\n";
  o << "max_epochs = " << cfg.max_epochs << "\n";
  o << "patience = " << cfg.patience << "\n";
  o << "lr = " << fmt_double(cfg.lr) << "\n";
  o << "improvement_delta = " << fmt_double(cfg.improvement_delta) << "\n";
  if (!cfg.weights.empty()) o << "weights = " << cfg.weights << "\n";
  if (!cfg.weights_dncnn.empty()) o << "weights_dncnn = " << cfg.weights_dncnn << "\n";
  if (!cfg.weights_ffdnet.empty()) o << "weights_ffdnet = " << cfg.weights_ffdnet << "\n";
  if (!cfg.dataset.empty()) o << "dataset = " << cfg.dataset << "\n";
  o << "mm_inits = " << cfg.mm_inits << "\n";
  o << "mm_eps = " << fmt_double(cfg.mm_eps) << "\n";
  o << "mm_max_iter = " << cfg.mm_max_iter << "\n";
  return o.str();
}

}  // namespace lisce::harness
