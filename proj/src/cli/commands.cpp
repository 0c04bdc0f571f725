#include "rankfeat/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rankfeat/diagnostics.hpp"
#include "rankfeat/error.hpp"
#include "rankfeat/evalkit.hpp"
#include "rankfeat/kernels.hpp"
#include "rankfeat/linalg.hpp"
#include "rankfeat/manifest.hpp"
#include "rankfeat/npy.hpp"
#include "rankfeat/parallel.hpp"
#include "rankfeat/pipeline.hpp"
#include "rankfeat/score_files.hpp"
#include "rankfeat/scoring.hpp"
#include "rankfeat/stats.hpp"
#include "rankfeat/synth.hpp"

namespace rankfeat::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  std::vector<std::string> argv;  // without the program name
  bool record_time = false;
  std::ostream* out = nullptr;
};

RunManifest make_manifest(const Context& ctx, std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.argv = ctx.argv;
  m.kernel_isa = std::string(to_string(kernels::active().isa));
  if (ctx.record_time) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m.timestamp = ts.str();
  }
  return m;
}

// Re-throws library errors with the offending input named.
template <class Fn>
auto with_input(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(what + ": " + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(what + ": " + e.what());
  }
}

struct SpatialShape {
  std::size_t height = 0;  // 0: take H = 1, W = cols
  std::size_t width = 0;
};

std::vector<FeatureMatrix> load_features(const std::string& path, const SpatialShape& shape,
                                         bool post_activation, std::size_t* channels = nullptr) {
  const NpyArray arr = read_npy(path);
  return with_input("features '" + path + "'", [&] {
    if (arr.shape.size() < 2) throw InvalidInputError("expected a (batch, C, HW) or (C, HW) array");
    const std::size_t cols = arr.shape.back();
    if (channels) *channels = arr.shape[arr.shape.size() - 2];
    std::size_t h = 1;
    std::size_t w = cols;
    if (shape.height || shape.width) {
      h = shape.height ? shape.height : cols / std::max<std::size_t>(shape.width, 1);
      w = shape.width ? shape.width : cols / std::max<std::size_t>(shape.height, 1);
      if (h * w != cols) {
        throw InvalidInputError("H x W = " + std::to_string(h) + " x " + std::to_string(w) +
                                " does not match HW = " + std::to_string(cols));
      }
    }
    std::vector<FeatureMatrix> xs;
    std::size_t index = 0;
    for (Matrix& m : to_batch(arr)) {
      try {
        xs.emplace_back(h, w, std::move(m), post_activation);
      } catch (const InvalidInputError& e) {
        throw InvalidInputError("sample " + std::to_string(index) + ": " + e.what());
      }
      ++index;
    }
    return xs;
  });
}

ClassifierHead load_head(const std::vector<std::string>& paths) {
  if (paths.size() != 2) throw InvalidInputError("--head expects two files: W.npy,b.npy");
  Matrix w = to_matrix(read_npy(paths[0]));
  Vector b = to_vector(read_npy(paths[1]));
  return with_input("head '" + paths[0] + "', '" + paths[1] + "'",
                    [&] { return ClassifierHead(std::move(w), std::move(b)); });
}

void check_channels(std::size_t have, std::size_t want, const std::string& what,
                    const std::string& against) {
  if (have != want) {
    throw InvalidInputError(what + " has " + std::to_string(have) + " channels but " + against +
                            " expects " + std::to_string(want));
  }
}

std::string csv_cell(double v) { return format_double(v); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string features;
  std::vector<std::string> head;
  std::string method = "energy";
  std::size_t pi_iters = 0;
  std::string layer;
  std::string react_tau;
  double react_percentile = 90.0;
  double odin_temperature = 1000.0;
  std::string fuse;
  std::vector<std::string> fuse_head;
  std::string out;
  std::size_t jobs = 1;
  SpatialShape shape;
};

void cmd_score(const ScoreArgs& a, const Context& ctx) {
  const auto method = parse_method(a.method);
  if (!method) throw InvalidInputError("unknown method '" + a.method + "'");
  const bool post = *method == Method::kReact;

  std::size_t feat_channels = 0;
  auto xs = load_features(a.features, a.shape, post, &feat_channels);
  ClassifierHead head = load_head(a.head);

  std::optional<LinearLayer> layer;
  if (needs_layer(*method)) {
    if (a.layer.empty()) throw InvalidInputError("method " + a.method + " requires --layer");
    Matrix m = to_matrix(read_npy(a.layer));
    layer = with_input("layer '" + a.layer + "'", [&] { return LinearLayer(std::move(m)); });
    check_channels(feat_channels, layer->mat().cols(), "features '" + a.features + "'",
                   "layer '" + a.layer + "'");
    check_channels(layer->mat().rows(), head.channels(), "layer '" + a.layer + "' output",
                   "head");
  } else {
    check_channels(feat_channels, head.channels(), "features '" + a.features + "'", "head");
  }

  ScoringConfig cfg;
  cfg.method = *method;
  cfg.dominant = a.pi_iters == 0 ? DominantMethod::exact() : DominantMethod::power(a.pi_iters);
  if (!(a.odin_temperature > 0.0) || !std::isfinite(a.odin_temperature)) {
    throw InvalidInputError("--odin-temperature must be positive");
  }
  cfg.odin.temperature = a.odin_temperature;

  json config;
  if (*method == Method::kReact) {
    if (a.react_tau.empty()) throw InvalidInputError("method react requires --react-tau");
    const std::string prefix = "calibrate:";
    if (a.react_tau.rfind(prefix, 0) == 0) {
      const std::string calib = a.react_tau.substr(prefix.size());
      const auto cal = load_features(calib, a.shape, true);
      cfg.react = with_input("calibration features '" + calib + "'", [&] {
        return calibrate_react_tau(cal, a.react_percentile);
      });
    } else {
      double tau = 0.0;
      try {
        std::size_t used = 0;
        tau = std::stod(a.react_tau, &used);
        if (used != a.react_tau.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InvalidInputError("--react-tau: expected a number or calibrate:<path>, got '" +
                                a.react_tau + "'");
      }
      if (!(tau >= 0.0)) throw InvalidInputError("--react-tau must be nonnegative");
      cfg.react.tau = tau;
    }
    config["react_tau"] = cfg.react.tau;
    config["react_percentile"] = a.react_percentile;
  }

  const Scorer scorer(head, cfg, layer);
  std::vector<double> scores;
  if (a.fuse.empty()) {
    scores = with_input("features '" + a.features + "'",
                        [&] { return scorer.score_batch(xs, a.jobs); });
  } else {
    if (!produces_logits(*method)) {
      throw InvalidInputError("--fuse needs a logit-producing method, not " + a.method);
    }
    std::size_t fuse_channels = 0;
    auto fs_xs = load_features(a.fuse, a.shape, post, &fuse_channels);
    if (fs_xs.size() != xs.size()) {
      throw InvalidInputError("fuse features '" + a.fuse + "' have " +
                              std::to_string(fs_xs.size()) + " samples, expected " +
                              std::to_string(xs.size()));
    }
    std::optional<Scorer> second;
    if (!a.fuse_head.empty()) second.emplace(load_head(a.fuse_head), cfg, layer);
    const Scorer& sb = second ? *second : scorer;
    check_channels(fuse_channels, layer ? layer->mat().cols() : sb.head().channels(),
                   "fuse features '" + a.fuse + "'", layer ? "layer" : "fuse head");
    const auto ya = with_input("features '" + a.features + "'",
                               [&] { return scorer.logits_batch(xs, a.jobs); });
    const auto yb = with_input("fuse features '" + a.fuse + "'",
                               [&] { return sb.logits_batch(fs_xs, a.jobs); });
    if (!ya.empty() && ya[0].size() != yb[0].size()) {
      throw InvalidInputError("fuse head produces " + std::to_string(yb[0].size()) +
                              " logits, expected " + std::to_string(ya[0].size()));
    }
    scores.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) scores[i] = fuse_logits(ya[i], yb[i]);
  }

  RunManifest m = make_manifest(ctx, "score");
  config["method"] = std::string(to_string(*method));
  config["pi_iters"] = a.pi_iters;
  config["features"] = a.features;
  config["head"] = a.head;
  config["odin_temperature"] = a.odin_temperature;
  if (layer) config["layer"] = a.layer;
  if (!a.fuse.empty()) {
    config["fuse"] = a.fuse;
    config["fusion"] = "mean";
    if (!a.fuse_head.empty()) config["fuse_head"] = a.fuse_head;
  }
  config["n"] = scores.size();
  m.config = config;
  write_scores(a.out, scores, m);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string id;
  std::string ood;
  double tpr = 0.95;
  std::string out;
};

void cmd_eval(const EvalArgs& a, const Context& ctx) {
  ScoreSet s;
  s.id_scores = read_scores(a.id);
  s.ood_scores = read_scores(a.ood);
  const EvalReport r = evaluate(s, a.tpr);
  json report = {{"fpr95", r.fpr95}, {"auroc", r.auroc}, {"gamma", r.gamma},
                 {"n_id", r.n_id},   {"n_ood", r.n_ood}};
  *ctx.out << report.dump(2) << '\n';
  if (!a.out.empty()) {
    write_json(a.out, report);
    RunManifest m = make_manifest(ctx, "eval");
    m.config = {{"id", a.id}, {"ood", a.ood}, {"tpr", a.tpr}};
    write_json(sidecar_path(a.out), m.to_json());
  }
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string features;
  std::size_t bins = 50;
  double epsilon = 1e-6;
  bool remove_rank1 = false;
  std::size_t explained_k = 1;
  std::size_t top_k = 5;
  std::string out;
  std::string histogram_out;
  std::size_t jobs = 1;
};

struct SampleDiagnosis {
  std::vector<double> top;
  double explained = 0.0;
  MPFit fit;
  HistogramKL before;
  std::optional<HistogramKL> after;
};

void cmd_diagnose(const DiagnoseArgs& a, const Context& ctx) {
  const auto xs = load_features(a.features, {}, false);
  if (xs.empty()) throw InvalidInputError("features '" + a.features + "': no samples");
  if (a.bins == 0) throw InvalidInputError("--bins must be positive");
  const std::size_t rank = std::min(xs[0].mat().rows(), xs[0].mat().cols());
  const std::size_t k = std::min(a.top_k, rank);

  std::vector<SampleDiagnosis> rows(xs.size());
  with_input("features '" + a.features + "'", [&] {
    parallel_for(xs.size(), a.jobs, [&](std::size_t i) {
      const Matrix& x = xs[i].mat();
      SampleDiagnosis& d = rows[i];
      const SvdResult full = svd(x);
      d.top.assign(full.s.values().begin(), full.s.values().begin() + k);
      d.explained = explained_variance(full.s, a.explained_k);
      const Spectrum eigs = sample_covariance_eigs(x);
      d.fit = fit_covariance_mp(eigs, x.rows(), x.cols());
      d.before = kl_to_mp(eigs, d.fit, a.bins, a.epsilon);
      if (a.remove_rank1) {
        const Matrix r = subtract_rank1(x, full.triplet(0));
        const Spectrum er = sample_covariance_eigs(r);
        d.after = kl_to_mp(er, fit_covariance_mp(er, r.rows(), r.cols()), a.bins, a.epsilon);
      }
    });
    return 0;
  });

  const fs::path out_path(a.out);
  std::ofstream out = open_out(out_path);
  out << "sample";
  for (std::size_t j = 0; j < k; ++j) out << ",s" << j + 1;
  out << ",explained_variance,mp_sigma2,mp_lambda_minus,mp_lambda_plus,kl_before,kl_after,kl_drop\n";

  const std::size_t ncols = k + 7;
  std::vector<double> sums(ncols, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& d = rows[i];
    std::vector<double> vals(d.top);
    vals.insert(vals.end(), {d.explained, d.fit.sigma2, d.fit.lambda_minus, d.fit.lambda_plus,
                             d.before.kl});
    if (d.after) vals.insert(vals.end(), {d.after->kl, d.before.kl - d.after->kl});
    out << i;
    for (std::size_t j = 0; j < ncols; ++j) {
      out << ',';
      if (j < vals.size()) {
        out << csv_cell(vals[j]);
        sums[j] += vals[j];
      }
    }
    out << '\n';
  }
  out << "mean";
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < ncols; ++j) {
    out << ',';
    if (j < k + 5 || a.remove_rank1) out << csv_cell(sums[j] / n);
  }
  out << '\n';
  finish(out, out_path);

  if (!a.histogram_out.empty()) {
    const fs::path hpath(a.histogram_out);
    std::ofstream h = open_out(hpath);
    h << "sample,stage,bin,lo,hi,empirical,reference\n";
    auto emit = [&](std::size_t i, const char* stage, const HistogramKL& kl) {
      const double width = kl.range_hi / static_cast<double>(kl.bins);
      for (std::size_t b = 0; b < kl.bins; ++b) {
        h << i << ',' << stage << ',' << b << ',' << csv_cell(width * b) << ','
          << csv_cell(width * (b + 1)) << ',' << csv_cell(kl.empirical[b]) << ','
          << csv_cell(kl.reference[b]) << '\n';
      }
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
      emit(i, "before", rows[i].before);
      if (rows[i].after) emit(i, "after", *rows[i].after);
    }
    finish(h, hpath);
  }

  RunManifest m = make_manifest(ctx, "diagnose");
  m.config = {{"features", a.features},     {"bins", a.bins},   {"epsilon", a.epsilon},
              {"remove_rank1", a.remove_rank1}, {"explained_k", a.explained_k},
              {"top_k", a.top_k},           {"n", rows.size()}};
  write_json(sidecar_path(out_path), m.to_json());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SynthConfig cfg;
  std::size_t n = 1;
  std::string out_dir;
  std::size_t head_classes = 0;
  std::uint64_t head_seed = 0;
  std::size_t layer_out = 0;
  double layer_spike = 0.0;
  std::uint64_t layer_seed = 0;
  std::size_t jobs = 1;
};

void cmd_synth(const SynthArgs& a, const Context& ctx) {
  a.cfg.validate();
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }

  const auto xs = gen_features(a.cfg, a.n, 0, a.jobs);
  std::vector<Matrix> mats;
  mats.reserve(xs.size());
  for (const auto& x : xs) mats.push_back(x.mat());
  const std::size_t hw = a.cfg.height * a.cfg.width;
  write_npy(dir / "features.npy", mats, a.cfg.channels, hw);

  std::vector<double> s1(a.n), s2(a.n);
  parallel_for(a.n, a.jobs, [&](std::size_t i) {
    const Spectrum s = singular_values(mats[i]);
    s1[i] = s[0];
    s2[i] = s.size() > 1 ? s[1] : 0.0;
  });

  json summary;
  summary["n"] = a.n;
  if (a.n > 0) {
    summary["mean_s1"] = mean(s1);
    summary["mean_s2"] = mean(s2);
    const bool finite_ratio = std::all_of(s2.begin(), s2.end(), [](double v) { return v > 0.0; });
    if (finite_ratio) {
      std::vector<double> ratio(a.n);
      for (std::size_t i = 0; i < a.n; ++i) ratio[i] = s1[i] / s2[i];
      summary["mean_sigma_ratio"] = mean(ratio);
    } else {
      summary["mean_sigma_ratio"] = nullptr;
    }
  }

  json files = {{"features", "features.npy"}};
  json config = {{"channels", a.cfg.channels},   {"height", a.cfg.height},
                 {"width", a.cfg.width},         {"spike", a.cfg.spike},
                 {"bulk_scale", a.cfg.bulk_scale}, {"seed", a.cfg.seed},
                 {"nonnegative", a.cfg.nonnegative}, {"n", a.n},
                 {"seed_rule", "sample i uses seed + i"}};
  std::size_t head_channels = a.cfg.channels;
  RunManifest m = make_manifest(ctx, "synth");
  m.seeds.push_back(a.cfg.seed);
  if (a.layer_out > 0) {
    const LinearLayer layer = gen_layer(a.layer_out, a.cfg.channels, a.layer_spike, a.layer_seed);
    write_npy(dir / "layer.npy", layer.mat());
    files["layer"] = "layer.npy";
    config["layer"] = {{"out_channels", a.layer_out}, {"spike", a.layer_spike},
                       {"seed", a.layer_seed}};
    m.seeds.push_back(a.layer_seed);
    head_channels = a.layer_out;
  }
  if (a.head_classes > 0) {
    const ClassifierHead head = gen_head(a.head_classes, head_channels, a.head_seed);
    write_npy(dir / "head_W.npy", head.weight());
    const std::size_t q = head.classes();
    write_npy(dir / "head_b.npy", std::span<const std::size_t>(&q, 1), head.bias());
    files["head_W"] = "head_W.npy";
    files["head_b"] = "head_b.npy";
    config["head"] = {{"classes", a.head_classes}, {"seed", a.head_seed}};
    m.seeds.push_back(a.head_seed);
  }
  m.config = config;
  json j = m.to_json();
  j["files"] = files;
  j["summary"] = summary;
  write_json(dir / "manifest.json", j);
}

// ---------------------------------------------------------------- bench-pi

struct BenchPiArgs {
  std::vector<std::size_t> iters = {5, 10, 20, 50, 100};
  std::string shape = "256x400";
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  double spike = 2.0;
  bool timing = false;
  std::string out;
  std::size_t jobs = 1;
};

std::pair<std::size_t, std::size_t> parse_shape(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t used = 0;
    const auto r = std::stoull(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("rows");
    const std::string rest = s.substr(x + 1);
    const auto c = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("cols");
    if (r == 0 || c == 0) throw std::invalid_argument("zero");
    return {r, c};
  } catch (const std::exception&) {
    throw InvalidInputError("--shape: expected ROWSxCOLS, got '" + s + "'");
  }
}

void cmd_bench_pi(const BenchPiArgs& a, const Context& ctx) {
  const auto [rows, cols] = parse_shape(a.shape);
  if (a.trials == 0) throw InvalidInputError("--trials must be positive");
  if (a.iters.empty()) throw InvalidInputError("--iters must list at least one count");
  for (std::size_t it : a.iters) {
    if (it == 0) throw InvalidInputError("--iters entries must be positive");
  }
  const std::size_t ni = a.iters.size();
  std::vector<double> err(a.trials * ni);
  std::vector<double> ms(a.trials * ni);
  parallel_for(a.trials, a.jobs, [&](std::size_t t) {
    SynthConfig cfg;
    cfg.channels = rows;
    cfg.height = 1;
    cfg.width = cols;
    cfg.spike = a.spike;
    cfg.seed = a.seed + t;
    const Matrix x = gen_feature(cfg).mat();
    const double exact = singular_values(x)[0];
    for (std::size_t j = 0; j < ni; ++j) {
      PowerIterationOptions opt;
      opt.max_iters = a.iters[j];
      opt.tol = std::numeric_limits<double>::min();  // run the full budget
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = power_iteration(x, opt);
      const auto t1 = std::chrono::steady_clock::now();
      err[t * ni + j] = std::abs(r.triplet.s - exact) / exact;
      ms[t * ni + j] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  });

  std::ostringstream table;
  table << "iters,trials,median_rel_error,max_rel_error";
  if (a.timing) table << ",mean_ms_per_matrix";
  table << '\n';
  for (std::size_t j = 0; j < ni; ++j) {
    std::vector<double> e(a.trials), t(a.trials);
    for (std::size_t i = 0; i < a.trials; ++i) {
      e[i] = err[i * ni + j];
      t[i] = ms[i * ni + j];
    }
    table << a.iters[j] << ',' << a.trials << ',' << csv_cell(median(e)) << ','
          << csv_cell(*std::max_element(e.begin(), e.end()));
    if (a.timing) table << ',' << csv_cell(mean(t));
    table << '\n';
  }

  if (a.out.empty()) {
    *ctx.out << table.str();
    return;
  }
  const fs::path path(a.out);
  std::ofstream out = open_out(path);
  out << table.str();
  finish(out, path);
  RunManifest m = make_manifest(ctx, "bench-pi");
  for (std::size_t t = 0; t < a.trials; ++t) m.seeds.push_back(a.seed + t);
  m.config = {{"iters", a.iters}, {"rows", rows},     {"cols", cols},
              {"trials", a.trials}, {"spike", a.spike}, {"timing", a.timing}};
  write_json(sidecar_path(path), m.to_json());
}

// ---------------------------------------------------------------- bench-ood

struct BenchOodArgs {
  std::size_t channels = 64;
  std::size_t height = 14;
  std::size_t width = 14;
  double id_spike = 1.2;
  double ood_spike = 4.0;
  std::size_t n = 500;
  std::size_t classes = 10;
  std::uint64_t seed = 0;
  bool nonnegative = false;
  std::vector<std::string> methods = {"energy", "rankfeat"};
  std::size_t pi_iters = 0;
  double odin_temperature = 1000.0;
  double react_percentile = 90.0;
  std::size_t react_calibration = 100;
  std::size_t layer_in = 0;
  double layer_spike = 3.0;
  std::string out;
  std::string scores_dir;
  std::size_t jobs = 1;
};

// Seed offsets between the independent streams of one benchmark run.
constexpr std::uint64_t kOodSeedOffset = 1'000'000;
constexpr std::uint64_t kHeadSeedOffset = 2'000'000;
constexpr std::uint64_t kLayerSeedOffset = 3'000'000;

void cmd_bench_ood(const BenchOodArgs& a, const Context& ctx) {
  BenchmarkOptions opt;
  opt.methods.clear();
  for (const auto& name : a.methods) {
    const auto m = parse_method(name);
    if (!m) throw InvalidInputError("unknown method '" + name + "'");
    opt.methods.push_back(*m);
  }
  opt.dominant = a.pi_iters == 0 ? DominantMethod::exact() : DominantMethod::power(a.pi_iters);
  opt.odin.temperature = a.odin_temperature;
  opt.react_percentile = a.react_percentile;
  opt.react_calibration = a.react_calibration;
  opt.jobs = a.jobs;

  SynthConfig id;
  id.channels = a.layer_in > 0 ? a.layer_in : a.channels;
  id.height = a.height;
  id.width = a.width;
  id.spike = a.id_spike;
  id.seed = a.seed;
  id.nonnegative = a.nonnegative;
  SynthConfig ood = id;
  ood.spike = a.ood_spike;
  ood.seed = a.seed + kOodSeedOffset;
  if (a.layer_in > 0) {
    opt.pathway = LayerPathway{gen_layer(a.channels, a.layer_in, a.layer_spike,
                                         a.seed + kLayerSeedOffset)};
  }
  const ClassifierHead head = gen_head(a.classes, a.channels, a.seed + kHeadSeedOffset);
  const BenchmarkResult r = gen_benchmark(id, ood, a.n, head, opt);

  RunManifest m = make_manifest(ctx, "bench-ood");
  m.seeds = {id.seed, ood.seed, a.seed + kHeadSeedOffset};
  if (a.layer_in > 0) m.seeds.push_back(a.seed + kLayerSeedOffset);
  m.config = {{"channels", a.channels}, {"height", a.height},     {"width", a.width},
              {"id_spike", a.id_spike}, {"ood_spike", a.ood_spike}, {"n", a.n},
              {"classes", a.classes},   {"nonnegative", a.nonnegative},
              {"methods", a.methods},   {"pi_iters", a.pi_iters},
              {"layer_in", a.layer_in}, {"layer_spike", a.layer_spike}};

  json reports = json::object();
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const EvalReport& e = r.reports[i];
    reports[r.score_sets[i].label] = {{"fpr95", e.fpr95}, {"auroc", e.auroc},
                                      {"gamma", e.gamma}, {"n_id", e.n_id},
                                      {"n_ood", e.n_ood}};
  }
  json j = {{"manifest", m.to_json()}, {"reports", reports}};
  if (std::find(opt.methods.begin(), opt.methods.end(), Method::kReact) != opt.methods.end()) {
    j["react_tau"] = r.react_tau;
  }

  if (!a.scores_dir.empty()) {
    const fs::path dir(a.scores_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
      throw IoError("cannot create scores directory '" + dir.string() + "'");
    }
    for (const auto& s : r.score_sets) {
      std::string stem = s.label;
      std::replace(stem.begin(), stem.end(), '+', '_');
      write_scores(dir / (stem + "_id.csv"), s.id_scores, m);
      write_scores(dir / (stem + "_ood.csv"), s.ood_scores, m);
    }
  }

  if (a.out.empty()) {
    *ctx.out << j.dump(2) << '\n';
  } else {
    write_json(a.out, j);
  }
}

// ---------------------------------------------------------------- replay

json load_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
  return j.contains("manifest") ? j.at("manifest") : j;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat:
    case ErrorKind::kIo:
      return kExitIoOrFormat;
    default:
      return kExitValidation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RankFeat / RankWeight out-of-distribution scoring toolkit", "rankfeat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string isa = "auto";
  bool record_time = false;
  app.add_option("--isa", isa, "Kernel set: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app.add_flag("--record-time", record_time, "Store a UTC timestamp in manifests");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score every sample of a feature batch");
  c_score->add_option("--features", score.features, "(batch, C, HW) feature NPY")->required();
  c_score->add_option("--head", score.head, "Classifier head W.npy,b.npy")
      ->required()
      ->delimiter(',')
      ->expected(2);
  c_score->add_option("--method", score.method,
                      "msp|odin|energy|react|rankfeat|rankweight|rankfeat+rankweight")
      ->capture_default_str();
  c_score->add_option("--pi-iters", score.pi_iters, "Power iterations (0 = exact SVD)")
      ->capture_default_str();
  c_score->add_option("--layer", score.layer, "Layer matrix NPY (C x C_prev)");
  c_score->add_option("--react-tau", score.react_tau, "<real> or calibrate:<features.npy>");
  c_score->add_option("--react-percentile", score.react_percentile)->capture_default_str();
  c_score->add_option("--odin-temperature", score.odin_temperature)->capture_default_str();
  c_score->add_option("--fuse", score.fuse, "Second feature batch to fuse logits with");
  c_score->add_option("--fuse-head", score.fuse_head, "Head for the fused features W.npy,b.npy")
      ->delimiter(',')
      ->expected(2);
  c_score->add_option("--height", score.shape.height, "Spatial height H (HW = H x W)");
  c_score->add_option("--width", score.shape.width, "Spatial width W");
  c_score->add_option("--out", score.out, "Output .csv or .json")->required();
  c_score->add_option("--jobs", score.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "FPR95 and AUROC from two score files");
  c_eval->add_option("--id", ev.id, "ID scores (.csv or .json)")->required();
  c_eval->add_option("--ood", ev.ood, "OOD scores (.csv or .json)")->required();
  c_eval->add_option("--tpr", ev.tpr)->capture_default_str();
  c_eval->add_option("--out", ev.out, "Report JSON");

  DiagnoseArgs dg;
  auto* c_diag = app.add_subcommand("diagnose", "Spectrum, explained variance and KL to MP");
  c_diag->add_option("--features", dg.features)->required();
  c_diag->add_option("--bins", dg.bins)->capture_default_str();
  c_diag->add_option("--epsilon", dg.epsilon)->capture_default_str();
  c_diag->add_flag("--remove-rank1", dg.remove_rank1, "Also report KL after rank-1 removal");
  c_diag->add_option("--explained-k", dg.explained_k)->capture_default_str();
  c_diag->add_option("--top-k", dg.top_k)->capture_default_str();
  c_diag->add_option("--out", dg.out, "Per-sample CSV")->required();
  c_diag->add_option("--histogram-out", dg.histogram_out, "Per-bin histogram CSV");
  c_diag->add_option("--jobs", dg.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Generate spiked synthetic features");
  c_synth->add_option("--channels", sy.cfg.channels)->capture_default_str();
  c_synth->add_option("--height", sy.cfg.height)->capture_default_str();
  c_synth->add_option("--width", sy.cfg.width)->capture_default_str();
  c_synth->add_option("--spike", sy.cfg.spike)->capture_default_str();
  c_synth->add_option("--bulk-scale", sy.cfg.bulk_scale)->capture_default_str();
  c_synth->add_option("--seed", sy.cfg.seed)->capture_default_str();
  c_synth->add_flag("--nonnegative", sy.cfg.nonnegative, "Clamp at zero (post-ReLU)");
  c_synth->add_option("--n", sy.n)->capture_default_str();
  c_synth->add_option("--out-dir", sy.out_dir)->required();
  c_synth->add_option("--head-classes", sy.head_classes, "Also emit a head (0 = none)");
  c_synth->add_option("--head-seed", sy.head_seed)->capture_default_str();
  c_synth->add_option("--layer-out", sy.layer_out, "Also emit a layer with this many outputs");
  c_synth->add_option("--layer-spike", sy.layer_spike)->capture_default_str();
  c_synth->add_option("--layer-seed", sy.layer_seed)->capture_default_str();
  c_synth->add_option("--jobs", sy.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  BenchPiArgs bp;
  auto* c_bpi = app.add_subcommand("bench-pi", "Power iteration accuracy against the exact SVD");
  c_bpi->add_option("--iters", bp.iters)->delimiter(',')->capture_default_str();
  c_bpi->add_option("--shape", bp.shape, "ROWSxCOLS")->capture_default_str();
  c_bpi->add_option("--trials", bp.trials)->capture_default_str();
  c_bpi->add_option("--seed", bp.seed)->capture_default_str();
  c_bpi->add_option("--spike", bp.spike)->capture_default_str();
  c_bpi->add_flag("--timing", bp.timing, "Add a wall-clock column (not reproducible)");
  c_bpi->add_option("--out", bp.out, "CSV output (stdout if omitted)");
  c_bpi->add_option("--jobs", bp.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  BenchOodArgs bo;
  auto* c_bood = app.add_subcommand("bench-ood", "Synthetic ID vs OOD benchmark");
  c_bood->add_option("--channels", bo.channels)->capture_default_str();
  c_bood->add_option("--height", bo.height)->capture_default_str();
  c_bood->add_option("--width", bo.width)->capture_default_str();
  c_bood->add_option("--id-spike", bo.id_spike)->capture_default_str();
  c_bood->add_option("--ood-spike", bo.ood_spike)->capture_default_str();
  c_bood->add_option("--n", bo.n, "Samples per side")->capture_default_str();
  c_bood->add_option("--classes", bo.classes)->capture_default_str();
  c_bood->add_option("--seed", bo.seed)->capture_default_str();
  c_bood->add_flag("--nonnegative", bo.nonnegative);
  c_bood->add_option("--methods", bo.methods)->delimiter(',')->capture_default_str();
  c_bood->add_option("--pi-iters", bo.pi_iters)->capture_default_str();
  c_bood->add_option("--odin-temperature", bo.odin_temperature)->capture_default_str();
  c_bood->add_option("--react-percentile", bo.react_percentile)->capture_default_str();
  c_bood->add_option("--react-calibration", bo.react_calibration)->capture_default_str();
  c_bood->add_option("--layer-in", bo.layer_in,
                     "Route features through a C x layer-in layer (0 = no layer)");
  c_bood->add_option("--layer-spike", bo.layer_spike)->capture_default_str();
  c_bood->add_option("--out", bo.out, "Report JSON (stdout if omitted)");
  c_bood->add_option("--scores-dir", bo.scores_dir, "Also write per-method score CSVs");
  c_bood->add_option("--jobs", bo.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  std::string replay_path;
  auto* c_replay = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  c_replay->add_option("manifest", replay_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  Context ctx;
  ctx.argv.assign(args.begin() + (args.empty() ? 0 : 1), args.end());
  ctx.record_time = record_time;
  ctx.out = &out;

  try {
    if (isa == "auto") {
      kernels::reset_selection();
    } else if (!kernels::select(isa == "avx2" ? kernels::Isa::kAvx2 : kernels::Isa::kScalar)) {
      throw InvalidInputError("--isa " + isa + " is not available on this machine");
    }
    if (*c_score) {
      cmd_score(score, ctx);
    } else if (*c_eval) {
      cmd_eval(ev, ctx);
    } else if (*c_diag) {
      cmd_diagnose(dg, ctx);
    } else if (*c_synth) {
      cmd_synth(sy, ctx);
    } else if (*c_bpi) {
      cmd_bench_pi(bp, ctx);
    } else if (*c_bood) {
      cmd_bench_ood(bo, ctx);
    } else if (*c_replay) {
      const RunManifest m = manifest_from_json(load_manifest_file(replay_path));
      std::vector<std::string> again{args.empty() ? std::string("rankfeat") : args[0]};
      again.insert(again.end(), m.argv.begin(), m.argv.end());
      if (!m.argv.empty() && m.argv[0] == "replay") {
        throw InvalidInputError("manifest records a replay; refusing to recurse");
      }
      return run(again, out, err);
    }
  } catch (const Error& e) {
    err << "rankfeat: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "rankfeat: " << e.what() << '\n';
    return kExitIoOrFormat;
  }
  return kExitOk;
}

}  // namespace rankfeat::cli
