// Command-line front end: sample, estimate, detect, reduce, roc, validate, bounds.
#include "gdp/core.hpp"
#include "gdp/dimred.hpp"
#include "gdp/estimator.hpp"
#include "gdp/io.hpp"
#include "gdp/parallel.hpp"
#include "gdp/sampler.hpp"
#include "gdp/spiked.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

// Thrown for argument combinations CLI11 cannot express; mapped to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SigmaArgs {
  std::string kind = "iso";
  int d = 2;
  double lambda = 1.0;
  std::string u;
  std::string file;
};

void add_sigma_options(CLI::App* app, SigmaArgs& s) {
  app->add_option("--sigma", s.kind, "iso, spiked, or file (JSON matrix, see --sigma-file)")
      ->check(CLI::IsMember({"iso", "spiked", "file"}));
  app->add_option("--d", s.d, "dimension")->check(CLI::PositiveNumber);
  app->add_option("--lambda", s.lambda, "spike strength for --sigma spiked");
  app->add_option("--u", s.u, "comma-separated spike direction (default e1)");
  app->add_option("--sigma-file", s.file, "JSON file with a 'sigma' matrix");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

gdp::ScatteringMatrix make_sigma(const SigmaArgs& s) {
  if (s.kind == "iso") {
    return gdp::ScatteringMatrix::isotropic(s.d, 1.0 / (2.0 * std::numbers::pi));
  }
  if (s.kind == "spiked") {
    Eigen::VectorXd u = Eigen::VectorXd::Unit(s.d, 0);
    if (!s.u.empty()) {
      const auto v = parse_list(s.u);
      if (static_cast<int>(v.size()) != s.d) {
        throw UsageError("--u must have d entries");
      }
      u = Eigen::Map<const Eigen::VectorXd>(v.data(), s.d).normalized();
    }
    return gdp::spiked_scattering({s.lambda, u}, s.d);
  }
  if (s.file.empty()) {
    throw UsageError("--sigma file needs --sigma-file");
  }
  const auto j = gdp::read_json(s.file);
  return gdp::ScatteringMatrix(gdp::matrix_from_json(j.contains("sigma") ? j.at("sigma") : j));
}

// Every option of the subcommand with its effective value, for the config echo.
json echo_config(const CLI::App* app) {
  json cfg = json::object();
  for (const auto* opt : app->get_options()) {
    if (opt == app->get_help_ptr()) {
      continue;
    }
    const std::string name = opt->get_single_name();
    if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (opt->get_items_expected_max() == 0) {
      cfg[name] = "false";
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void emit(const std::string& out, const json& envelope) {
  if (out.empty() || out == "-") {
    std::cout << envelope.dump(2) << '\n';
  } else {
    gdp::write_json(out, envelope);
  }
}

gdp::EstimatorConfig make_estimator(double r, double R, double C0) {
  gdp::EstimatorConfig cfg;
  if (r > 0.0) {
    cfg.r = r;
  }
  if (R > 0.0) {
    cfg.R = R;
  }
  cfg.C0 = C0;
  return cfg;
}

json bounds_payload(const gdp::EstimateResult& est, const gdp::ScatteringMatrix& reference,
                    double C, double c) {
  const int d = static_cast<int>(est.sigma_hat.rows());
  json j;
  const auto bias = gdp::bias_bound(reference, est.r_used);
  const auto var = gdp::variance_bound(est.r_used, d, est.n, C);
  j["bias_bound"] = bias ? json(*bias) : json(nullptr);
  j["variance_bound"] = var ? json(*var) : json(nullptr);
  j["rate"] = est.n > 1.0 ? json(gdp::risk_rate(est.n, d, c)) : json(nullptr);
  return j;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian determinantal point process toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", gdp::kToolVersion);

  // sample
  auto* sample = app.add_subcommand("sample", "draw a GDP (or Poisson) pattern on a torus box");
  SigmaArgs sample_sigma;
  double sample_L = 30.0;
  std::uint64_t sample_seed = 1;
  double sample_tol = 1e-6;
  double sample_poisson = 0.0;
  std::string sample_out = "pattern";
  add_sigma_options(sample, sample_sigma);
  sample->add_option("--L", sample_L, "box side")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "random seed");
  sample->add_option("--tol", sample_tol, "spectral truncation tolerance");
  sample->add_option("--poisson", sample_poisson, "draw Poisson with this intensity instead");
  sample->add_option("--out", sample_out, "output prefix (<prefix>.csv, <prefix>.json)");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate the scattering matrix of a pattern");
  std::string est_pattern;
  double est_r = 0.0;
  double est_R = 0.0;
  double est_C0 = 1.0;
  double est_C = 1.0;
  double est_c = 1.0;
  std::string est_out;
  SigmaArgs est_ref;
  estimate->add_option("--pattern", est_pattern, "pattern prefix")->required();
  estimate->add_option("--r", est_r, "cut-off (0 = automatic)");
  estimate->add_option("--R", est_R, "window radius (0 = from the pattern window)");
  estimate->add_option("--C0", est_C0, "automatic cut-off constant");
  estimate->add_option("--C", est_C, "variance-bound constant");
  estimate->add_option("--c", est_c, "rate constant");
  add_sigma_options(estimate, est_ref);
  estimate->add_option("--out", est_out, "output JSON (default stdout)");

  // detect
  auto* detect = app.add_subcommand("detect", "spike detection test and spike direction");
  std::string det_pattern;
  double det_r = 0.0;
  double det_R = 0.0;
  double det_C0 = 1.0;
  std::string det_mode = "analytic";
  double det_t = 20.0;
  double det_c = 1.0;
  double det_delta = 0.05;
  std::size_t det_reps = 200;
  std::uint64_t det_seed = 1;
  std::size_t det_threads = 0;
  std::string det_out;
  detect->add_option("--pattern", det_pattern, "pattern prefix")->required();
  detect->add_option("--r", det_r, "cut-off (0 = automatic)");
  detect->add_option("--R", det_R, "window radius (0 = from the pattern window)");
  detect->add_option("--C0", det_C0, "automatic cut-off constant");
  detect->add_option("--mode", det_mode, "analytic or calibrated")
      ->check(CLI::IsMember({"analytic", "calibrated"}));
  detect->add_option("--t", det_t, "threshold multiplier (analytic mode)");
  detect->add_option("--c", det_c, "rate constant (analytic mode)");
  detect->add_option("--delta", det_delta, "level (calibrated mode)");
  detect->add_option("--replicates", det_reps, "null replicates (calibrated mode)");
  detect->add_option("--seed", det_seed, "seed for null replicates");
  detect->add_option("--threads", det_threads, "worker threads (0 = GDP_THREADS or all cores)");
  detect->add_option("--out", det_out, "output JSON (default stdout)");

  // reduce
  auto* reduce = app.add_subcommand("reduce", "DPP or PCA embedding of a tabular dataset");
  std::string red_data;
  std::string red_label;
  std::string red_method = "dpp";
  int red_k = 2;
  double red_r = 0.0;
  double red_R = 0.0;
  bool red_standardize = false;
  bool red_no_center = false;
  bool red_no_scale = false;
  std::string red_dir = ".";
  reduce->add_option("--data", red_data, "CSV with header")->required();
  reduce->add_option("--label-column", red_label, "column holding labels");
  reduce->add_option("--method", red_method, "dpp or pca")->check(CLI::IsMember({"dpp", "pca"}));
  reduce->add_option("--k", red_k, "number of components")->check(CLI::PositiveNumber);
  reduce->add_option("--r", red_r, "explicit DPP cut-off (0 = all pairs)");
  reduce->add_option("--R", red_R, "scale the pair sum by 1/|B(R - r)| (0 = 1/N)");
  reduce->add_flag("--standardize", red_standardize, "standardize columns before the DPP fit");
  reduce->add_flag("--no-center", red_no_center, "PCA without centering");
  reduce->add_flag("--no-scale", red_no_scale, "PCA on the covariance instead of correlation");
  reduce->add_option("--out-dir", red_dir, "directory for embedding.csv, scree.csv, reduce.json");

  // roc
  auto* roc = app.add_subcommand("roc", "ROC curve of a risk score from an embedding");
  std::string roc_embedding;
  std::string roc_positive;
  int roc_component = 1;
  bool roc_flip = false;
  std::string roc_dir = ".";
  roc->add_option("--embedding", roc_embedding, "embedding CSV written by reduce")->required();
  roc->add_option("--positive", roc_positive, "label of the positive class")->required();
  roc->add_option("--component", roc_component, "1-based component")->check(CLI::PositiveNumber);
  roc->add_flag("--flip", roc_flip, "use +coordinate instead of -coordinate as the score");
  roc->add_option("--out-dir", roc_dir, "directory for roc.csv and auc.json");

  // validate
  auto* validate = app.add_subcommand("validate", "pair-correlation and count-concentration checks");
  SigmaArgs val_sigma;
  double val_L = 30.0;
  std::size_t val_reps = 100;
  std::uint64_t val_seed = 1;
  double val_width = 0.1;
  double val_rmax = 2.0;
  double val_R = 0.0;
  std::size_t val_threads = 0;
  std::string val_dir = ".";
  add_sigma_options(validate, val_sigma);
  validate->add_option("--L", val_L, "box side")->check(CLI::PositiveNumber);
  validate->add_option("--replicates", val_reps, "number of patterns");
  validate->add_option("--seed", val_seed, "base seed");
  validate->add_option("--bin-width", val_width, "pair-correlation bin width");
  validate->add_option("--rmax", val_rmax, "largest pair distance");
  validate->add_option("--R", val_R, "ball radius for counts (0 = L/2)");
  validate->add_option("--threads", val_threads, "worker threads (0 = default)");
  validate->add_option("--out-dir", val_dir, "directory for pair_correlation.csv, validate.json");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "evaluate the theoretical bounds");
  bool b_bern = false;
  bool b_bias = false;
  bool b_var = false;
  bool b_rate = false;
  double b_eps = 0.1;
  double b_R = 10.0;
  double b_r = 3.0;
  double b_n = 1000.0;
  double b_C = 1.0;
  double b_c = 1.0;
  SigmaArgs b_sigma;
  std::string b_out;
  bounds->add_flag("--bernstein", b_bern, "count concentration bound");
  bounds->add_flag("--bias", b_bias, "squared-Frobenius bias bound");
  bounds->add_flag("--variance", b_var, "variance bound");
  bounds->add_flag("--rate", b_rate, "risk rate");
  bounds->add_option("--eps", b_eps, "relative deviation");
  bounds->add_option("--R", b_R, "window radius");
  bounds->add_option("--r", b_r, "cut-off");
  bounds->add_option("--n", b_n, "expected count");
  bounds->add_option("--C", b_C, "variance constant");
  bounds->add_option("--c", b_c, "rate constant");
  add_sigma_options(bounds, b_sigma);
  bounds->add_option("--out", b_out, "output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  try {
    if (sample->parsed()) {
      const gdp::BoxWindow box{sample_L, sample_sigma.d};
      gdp::PointPattern p;
      if (sample_poisson > 0.0) {
        p = gdp::sample_poisson(sample_poisson, box, sample_seed);
      } else {
        gdp::SamplerOptions opts;
        opts.tol = sample_tol;
        p = gdp::sample_gdp(make_sigma(sample_sigma), box, sample_seed, opts);
      }
      gdp::write_pattern(sample_out, p);
      // The sidecar carries the window; add the run envelope next to it.
      auto meta = gdp::read_json(sample_out + ".json");
      meta["run"] = gdp::make_envelope("sample", echo_config(sample), {{"count", p.size()}},
                                       elapsed());
      gdp::write_json(sample_out + ".json", meta);
    } else if (estimate->parsed()) {
      const auto p = gdp::read_pattern(est_pattern);
      const auto est = gdp::estimate_scattering(p, make_estimator(est_r, est_R, est_C0));
      json payload = gdp::to_json(est);
      payload["bounds"] = bounds_payload(est, make_sigma(est_ref), est_C, est_c);
      emit(est_out, gdp::make_envelope("estimate", echo_config(estimate), payload, elapsed()));
    } else if (detect->parsed()) {
      const auto p = gdp::read_pattern(det_pattern);
      const auto cfg = make_estimator(det_r, det_R, det_C0);
      const auto est = gdp::estimate_scattering(p, cfg);
      json payload;
      payload["estimate"] = gdp::to_json(est);
      if (det_mode == "analytic") {
        payload["detection"] = gdp::to_json(
            gdp::detection_test(est.sigma_hat, est.n, p.dim(), det_t, det_c));
      } else {
        gdp::CalibrationConfig cal;
        cal.delta = det_delta;
        cal.replicates = det_reps;
        cal.seed = det_seed;
        cal.estimator = cfg;
        cal.estimator.R.reset();
        if (!cfg.r) {
          // Fix the cut-off so the null statistic is computed exactly like the observed one.
          cal.estimator.r = est.r_used;
        }
        cal.threads = det_threads;
        const auto null = gdp::calibrate_null(est.n, p.dim(), cal);
        payload["detection"] = gdp::to_json(gdp::calibrated_test(est.sigma_hat, null));
        payload["calibration"] = gdp::to_json(null);
      }
      if (p.dim() >= 1) {
        payload["spike"] = gdp::to_json(gdp::estimate_spike(est.sigma_hat));
      }
      emit(det_out, gdp::make_envelope("detect", echo_config(detect), payload, elapsed()));
    } else if (reduce->parsed()) {
      const auto data = gdp::load_dataset(
          red_data, red_label.empty() ? std::nullopt : std::optional<std::string>(red_label));
      gdp::ProjectionResult proj;
      if (red_method == "dpp") {
        gdp::DppOptions opts;
        if (red_r > 0.0) {
          opts.r = red_r;
        }
        if (red_R > 0.0) {
          opts.R = red_R;
        }
        opts.standardize = red_standardize;
        proj = gdp::dpp_embed(data, red_k, opts);
      } else {
        proj = gdp::pca_embed(data, red_k, !red_no_center, !red_no_scale);
      }
      std::filesystem::create_directories(red_dir);
      const std::filesystem::path dir(red_dir);
      gdp::write_embedding_csv((dir / "embedding.csv").string(), proj, data);
      gdp::write_scree_csv((dir / "scree.csv").string(), proj.eigvals);
      json payload{{"method", red_method},
                   {"N", data.size()},
                   {"d", data.dim()},
                   {"eigvals", std::vector<double>(proj.eigvals.data(),
                                                   proj.eigvals.data() + proj.eigvals.size())},
                   {"eigvecs", gdp::matrix_to_json(proj.eigvecs)}};
      if (red_method == "dpp") {
        payload["r_used"] = proj.r_used;
        payload["log_identity_coef"] = proj.log_identity_coef;
        payload["pair_scale"] = proj.pair_scale;
      }
      gdp::write_json((dir / "reduce.json").string(),
                      gdp::make_envelope("reduce", echo_config(reduce), payload, elapsed()));
    } else if (roc->parsed()) {
      const auto emb = gdp::load_dataset(roc_embedding, std::string("label"), roc_positive);
      const int col = roc_component; // column 0 is the row id
      if (col >= emb.dim()) {
        throw UsageError("--component exceeds the number of coordinates");
      }
      auto scores = gdp::risk_scores(emb.features, col);
      if (roc_flip) {
        for (double& s : scores) {
          s = -s;
        }
      }
      const auto curve = gdp::roc_auc(scores, *emb.binary_labels);
      std::filesystem::create_directories(roc_dir);
      const std::filesystem::path dir(roc_dir);
      gdp::write_roc_csv((dir / "roc.csv").string(), curve);
      gdp::write_json((dir / "auc.json").string(),
                      gdp::make_envelope("roc", echo_config(roc), {{"auc", curve.auc}},
                                         elapsed()));
      std::cout << gdp::format_double(curve.auc) << '\n';
    } else if (validate->parsed()) {
      const auto sigma = make_sigma(val_sigma);
      const auto basis = gdp::build_spectral_basis(sigma, val_L, 1e-6);
      const double R = val_R > 0.0 ? val_R : 0.5 * val_L;
      std::vector<gdp::PointPattern> pats(val_reps);
      gdp::parallel_for(val_reps, val_threads ? val_threads : gdp::default_thread_count(),
                   [&](std::size_t i) {
                     pats[i] = gdp::sample_gdp(basis, sigma.dim(), gdp::replicate_seed(val_seed, i));
                   });
      std::vector<double> edges;
      for (double e = 0.0; e <= val_rmax + 1e-12; e += val_width) {
        edges.push_back(e);
      }
      const auto pcf = gdp::empirical_pair_correlation(pats, edges);
      std::vector<double> counts;
      for (const auto& p : pats) {
        counts.push_back(static_cast<double>(gdp::extract_ball(p, R).size()));
      }
      const double n = gdp::count_expectation(R, sigma.dim());
      json conc = json::array();
      for (double eps : {0.1, 0.2, 0.3}) {
        std::size_t hits = 0;
        for (double c : counts) {
          hits += std::abs(c / n - 1.0) >= eps ? 1 : 0;
        }
        conc.push_back({{"eps", eps},
                        {"frequency", static_cast<double>(hits) / static_cast<double>(counts.size())},
                        {"bernstein", gdp::bernstein_tail(eps, R, sigma.dim())}});
      }
      double mean = 0.0;
      for (double c : counts) {
        mean += c;
      }
      mean /= static_cast<double>(counts.size());
      double var = 0.0;
      for (double c : counts) {
        var += (c - mean) * (c - mean);
      }
      var /= static_cast<double>(counts.size() > 1 ? counts.size() - 1 : 1);

      std::filesystem::create_directories(val_dir);
      const std::filesystem::path dir(val_dir);
      {
        std::ofstream out((dir / "pair_correlation.csv").string());
        out << "t,g\n";
        for (const auto& [t, g] : pcf) {
          out << gdp::format_double(t) << ',' << gdp::format_double(g) << '\n';
        }
      }
      json payload{{"n", n}, {"count_mean", mean}, {"count_variance", var}, {"concentration", conc}};
      gdp::write_json((dir / "validate.json").string(),
                      gdp::make_envelope("validate", echo_config(validate), payload, elapsed()));
    } else if (bounds->parsed()) {
      if (!(b_bern || b_bias || b_var || b_rate)) {
        throw UsageError("choose at least one of --bernstein, --bias, --variance, --rate");
      }
      json payload;
      if (b_bern) {
        payload["bernstein"] = gdp::bernstein_tail(b_eps, b_R, b_sigma.d);
      }
      if (b_bias) {
        const auto v = gdp::bias_bound(make_sigma(b_sigma), b_r);
        payload["bias"] = v ? json(*v) : json(nullptr);
      }
      if (b_var) {
        const auto v = gdp::variance_bound(b_r, b_sigma.d, b_n, b_C);
        payload["variance"] = v ? json(*v) : json(nullptr);
      }
      if (b_rate) {
        payload["rate"] = gdp::risk_rate(b_n, b_sigma.d, b_c);
      }
      emit(b_out, gdp::make_envelope("bounds", echo_config(bounds), payload, elapsed()));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
