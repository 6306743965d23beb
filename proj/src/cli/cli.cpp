#include "flowbench/cli/cli.hpp"

#include "flowbench/cli/benchmark.hpp"
#include "flowbench/counterintuitive/detector.hpp"
#include "flowbench/data/io.hpp"
#include "flowbench/data/model_io.hpp"
#include "flowbench/data/split.hpp"
#include "flowbench/error.hpp"
#include "flowbench/flow/train.hpp"
#include "flowbench/intrinsic_dim/estimators.hpp"
#include "flowbench/numeric/linalg.hpp"
#include "flowbench/numeric/rng.hpp"
#include "flowbench/scoring/scorers.hpp"
#include "flowbench/synth/anomalies.hpp"
#include "flowbench/synth/gaussian.hpp"
#include "flowbench/theory/theory.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

namespace flowbench {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Bad flag values or combinations that CLI11 cannot see on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0' || !std::isfinite(v))
      throw UsageError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<Index> parse_dims(const std::string& s, const std::string& flag) {
  std::vector<Index> out;
  for (double v : parse_doubles(s, flag)) {
    if (v < 1 || v != std::floor(v)) throw UsageError(flag + ": dimensions must be positive integers");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

std::string with_preamble(const json& provenance, const std::string& csv) {
  return "# " + provenance.dump() + "\n" + csv;
}

void require_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
}

bool is_flag(const CLI::Option* opt) { return opt->get_expected_max() == 0 || opt->get_type_size() == 0; }

// Every flag value the subcommand ended up with, whether from the command
// line, the config file or the default.
json echo_options(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (is_flag(opt))
      cfg[name] = opt->count() > 0;
    else if (opt->count() > 0)
      cfg[name] = opt->as<std::string>();
    else
      cfg[name] = opt->get_default_str();
  }
  return cfg;
}

json make_provenance(const CLI::App* sub, std::uint64_t seed) {
  return {{"tool", "flowbench"},
          {"artifact_version", kArtifactVersion},
          {"command", sub->get_name()},
          {"master_seed", seed},
          {"config", echo_options(sub)}};
}

// Flags shared by every command that trains a flow.
struct TrainFlags {
  std::string kind = "nice";
  std::string scaler = "robust";
  int epochs = TrainConfig{}.epochs;
  int batch = TrainConfig{}.batch_size;
  double lr = TrainConfig{}.learning_rate;
  double wd = TrainConfig{}.weight_decay;
  int coupling = TrainConfig{}.n_coupling;
  int hidden = TrainConfig{}.hidden_dim;
  int layers = TrainConfig{}.n_hidden_layers;

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.learning_rate = lr;
    c.weight_decay = wd;
    c.n_coupling = coupling;
    c.hidden_dim = hidden;
    c.n_hidden_layers = layers;
    c.seed = seed;
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--kind", f.kind, "Flow family")->check(CLI::IsMember({"nice", "realnvp"}));
  sub->add_option("--scaler", f.scaler, "Feature scaler fitted on training rows")
      ->check(CLI::IsMember({"robust", "standard", "minmax", "none"}));
  sub->add_option("--epochs", f.epochs, "Training epochs");
  sub->add_option("--batch", f.batch, "Minibatch size");
  sub->add_option("--lr", f.lr, "Base learning rate");
  sub->add_option("--wd", f.wd, "AdamW weight decay");
  sub->add_option("--coupling", f.coupling, "Number of coupling layers");
  sub->add_option("--hidden", f.hidden, "Hidden width of coupling networks");
  sub->add_option("--layers", f.layers, "Hidden layers per coupling network");
}

// Smaller defaults for the dimension sweep, which trains one flow per d.
TrainFlags desk_flags() {
  TrainFlags f;
  f.scaler = "none";
  f.epochs = 50;
  f.batch = 256;
  f.coupling = 4;
  f.hidden = 128;
  return f;
}

struct Options {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::string data;
  std::string label_col = "label";
  TrainFlags train;
  TrainFlags verify_train = desk_flags();
  double contamination = 0.0;

  // score / eval
  std::string model;
  std::string test = "slt";
  std::string scores;
  std::string matrix;
  double fail_threshold = 9.0;

  // benchmark / counterintuitive
  int trials = 10;
  int jobs = 1;
  std::string meta;
  std::string target = "NF-SLT";
  std::string pool = "all";
  std::string beta_grid;
  std::string gamma_grid;
  bool sweep = false;
  double beta = -1.0;
  double gamma = -1.0;

  // id
  std::string method = "twonn";
  int k = 20;
  double discard = 0.1;
  std::string ratios = "1,0.9,0.8,0.5";
  std::string id_scalers = "none";
  std::string rho;
  std::string dims;
  long rows = 10000;
  int id_trials = 1;

  // synth
  std::string type;
  double mu_p = 0.0, mu_q = 1.5, sigma_p = 1.0, sigma_q = 1.0;
  long n_train = 2000, n_test = 1000;
  long n_normal = 1000, n_anomaly = 100;
  int components = 5;
  double alpha = 0.0;

  // verify
  std::string checks = "gap,concentration,norm-variance,sweep";
  std::string gap_dims = "5,10,20,40";
  std::string sweep_dims = "10,50,100,500,2000";
  long samples = 100000;
  int bins = 50;
  bool full_grid = false;
};

// ---------------------------------------------------------------- train

int cmd_train(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  if (o.data.empty()) throw UsageError("--data is required");
  const LabeledDataset data = load_csv(o.data, o.label_col);
  const ZongSplit split = split_zong(data, {derive_seed(o.seed, 0), o.contamination});
  const ScalerState scaler = fit_scaler(split.train, parse_scaler_kind(o.train.scaler));
  const TrainConfig tc = o.train.config(derive_seed(o.seed, 1));
  TrainResult trained = train_flow(parse_flow_kind(o.train.kind), apply_scaler(scaler, split.train), tc);

  ModelBundle bundle;
  bundle.train_nll_mean = mean_train_nll(trained.model, scaler, split.train);
  bundle.model = std::move(trained.model);
  bundle.scaler = scaler;
  bundle.provenance = make_provenance(sub, o.seed);
  bundle.provenance["train_rows"] = split.train.rows();
  bundle.provenance["contaminants"] = split.contaminants;
  bundle.provenance["final_train_nll"] = number(trained.history.nll.back());
  save_model(o.out, bundle);
  out << "trained " << o.train.kind << " on " << split.train.rows() << " rows, final NLL "
      << fmt(trained.history.nll.back()) << "; wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- score

int cmd_score(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  if (o.data.empty() || o.model.empty()) throw UsageError("--data and --model are required");
  const ModelBundle bundle = load_model(o.model);
  const LabeledDataset data = load_csv(o.data, o.label_col);
  const ScoreVector s = parse_test_kind(o.test) == TestKind::slt
                            ? slt_score(bundle.model, bundle.scaler, data.features)
                            : typicality_score(bundle.model, bundle.scaler, bundle.train_nll_mean, data.features);
  std::string csv = "row_index,score,label\n";
  for (Index i = 0; i < s.values.size(); ++i)
    csv += std::to_string(i) + "," + fmt(s.values(i)) + "," + std::to_string(data.labels[static_cast<std::size_t>(i)]) +
           "\n";
  write_file_atomic(o.out, with_preamble(make_provenance(sub, o.seed), csv));
  out << "scored " << s.values.size() << " rows with " << s.scorer << "; wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

std::string rank_csv(const RankTable& rt) {
  std::string csv = "model,avg_rank,top2_ratio,fail_ratio\n";
  for (std::size_t m = 0; m < rt.models.size(); ++m) {
    const auto i = static_cast<Index>(m);
    csv += rt.models[m] + "," + fmt(rt.avg_rank(i)) + "," + fmt(rt.top2_ratio(i)) + "," + fmt(rt.fail_ratio(i)) + "\n";
  }
  return csv;
}

int cmd_eval(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  if (o.scores.empty() == o.matrix.empty()) throw UsageError("give exactly one of --scores or --matrix");
  const json prov = make_provenance(sub, o.seed);
  if (!o.matrix.empty()) {
    const RankTable rt = rank_table(read_auroc_matrix(o.matrix), o.fail_threshold);
    write_file_atomic(o.out, with_preamble(prov, rank_csv(rt)));
    out << "ranked " << rt.models.size() << " models over " << rt.datasets.size() << " datasets; wrote " << o.out
        << "\n";
    return 0;
  }
  const LabeledDataset s = load_csv(o.scores, "label");
  const auto it = std::find(s.feature_names.begin(), s.feature_names.end(), "score");
  if (it == s.feature_names.end()) throw MissingLabelColumn("no 'score' column in " + o.scores);
  const Vector scores = s.features.col(it - s.feature_names.begin());
  const EvalReport r = evaluate(scores, s.labels, o.seed);
  json j = {{"provenance", prov},
            {"auroc", r.auroc},
            {"auprc", r.auprc},
            {"n_normal", r.n_normal},
            {"n_anomaly", r.n_anomaly}};
  write_file_atomic(o.out, j.dump(2) + "\n");
  out << "AUROC " << fmt(r.auroc) << ", AUPRC " << fmt(r.auprc) << "; wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- counterintuitive

json sweep_to_json(const MatrixSweep& ms) {
  json verdicts = json::array();
  json datasets = json::array();
  for (const auto& ds : ms.datasets) {
    const SweepResult& r = ds.result;
    datasets.push_back({{"dataset", ds.dataset},
                        {"modal_verdict", r.modal_verdict},
                        {"flip_frequency", r.flip_frequency},
                        {"counterintuitive_cells", r.counterintuitive_cells}});
    for (const Verdict& v : r.cells) {
      json names = json::array();
      for (std::size_t i : v.outperform) names.push_back(v.competitors[i].name);
      verdicts.push_back({{"dataset", ds.dataset},
                          {"beta", v.beta},
                          {"gamma", v.gamma},
                          {"auroc0", v.auroc0},
                          {"competitors", v.competitors.size()},
                          {"fraction", v.fraction},
                          {"condition1", v.condition1},
                          {"min_gap", number(v.min_gap)},
                          {"condition2", v.condition2},
                          {"counterintuitive", v.counterintuitive},
                          {"outperform", names}});
    }
  }
  return {{"target", ms.target},
          {"pool", to_string(ms.pool)},
          {"summary",
           {{"counterintuitive_cells", ms.counterintuitive_cells},
            {"total_cells", ms.total_cells},
            {"flip_frequency", ms.flip_frequency},
            {"datasets_with_flips", ms.datasets_with_flips}}},
          {"datasets", datasets},
          {"verdicts", verdicts}};
}

MatrixSweep run_sweep(const Options& o, const AurocMatrix& m) {
  const auto meta = o.meta.empty() ? std::map<std::string, std::string>{} : read_model_meta(o.meta);
  std::vector<double> betas = parse_doubles(o.beta_grid, "--beta-grid");
  std::vector<double> gammas = parse_doubles(o.gamma_grid, "--gamma-grid");
  if (!o.sweep) {
    if (o.beta < 0 || o.gamma < 0) throw UsageError("give --sweep, or both --beta and --gamma");
    betas = {o.beta};
    gammas = {o.gamma};
  }
  return sweep_matrix(m, meta, o.target, parse_pool(o.pool), betas, gammas);
}

int cmd_counterintuitive(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  if (o.matrix.empty()) throw UsageError("--matrix is required");
  const MatrixSweep ms = run_sweep(o, read_auroc_matrix(o.matrix));
  json j = sweep_to_json(ms);
  j["provenance"] = make_provenance(sub, o.seed);
  write_file_atomic(o.out, j.dump(2) + "\n");
  out << ms.counterintuitive_cells << " of " << ms.total_cells << " cells counterintuitive (flip frequency "
      << fmt(ms.flip_frequency) << "); wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- benchmark

// External matrix restricted to the benchmarked datasets, with the target
// column holding the measured mean AUROC.
AurocMatrix merge_matrix(const AurocMatrix& ext, const std::vector<DatasetSummary>& measured,
                         const std::string& target) {
  AurocMatrix m;
  m.models = ext.models;
  Index t = ext.model_index(target);
  if (t < 0) {
    m.models.push_back(target);
    t = static_cast<Index>(m.models.size()) - 1;
  }
  std::vector<Vector> rows;
  for (const auto& s : measured) {
    const auto it = std::find(ext.datasets.begin(), ext.datasets.end(), s.dataset);
    if (it == ext.datasets.end()) continue;
    Vector row = Vector::Constant(static_cast<Index>(m.models.size()), std::nan(""));
    row.head(ext.values.cols()) = ext.values.row(it - ext.datasets.begin()).transpose();
    row(t) = s.auroc_mean;
    m.datasets.push_back(s.dataset);
    rows.push_back(row);
  }
  if (rows.empty()) throw InvalidArgument("none of the benchmarked datasets appears in the AUROC matrix");
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m.models.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) m.values.row(static_cast<Index>(r)) = rows[r].transpose();
  return m;
}

int cmd_benchmark(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  BenchmarkConfig cfg;
  cfg.datasets = split_list(o.data);
  if (cfg.datasets.empty()) throw UsageError("--data is required");
  cfg.label_column = o.label_col;
  cfg.kind = parse_flow_kind(o.train.kind);
  cfg.scaler = parse_scaler_kind(o.train.scaler);
  cfg.test = parse_test_kind(o.test);
  cfg.train = o.train.config(0);
  cfg.trials = o.trials;
  cfg.contamination = o.contamination;
  cfg.master_seed = o.seed;
  cfg.jobs = o.jobs;
  if (o.trials < 1) throw UsageError("--trials must be at least 1");

  const BenchmarkResult res = run_benchmark(cfg);
  const json prov = make_provenance(sub, o.seed);
  fs::create_directories(o.out);

  std::string trials = "dataset,trial,seed,auroc,auprc,n_normal,n_anomaly\n";
  for (const auto& t : res.trials)
    trials += t.dataset + "," + std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + fmt(t.report.auroc) +
              "," + fmt(t.report.auprc) + "," + std::to_string(t.report.n_normal) + "," +
              std::to_string(t.report.n_anomaly) + "\n";
  write_file_atomic(fs::path(o.out) / "trials.csv", with_preamble(prov, trials));

  std::string summary = "dataset,trials,auroc_mean,auroc_std,auprc_mean,auprc_std\n";
  for (const auto& s : res.summary) {
    summary += s.dataset + "," + std::to_string(s.trials) + "," + fmt(s.auroc_mean) + "," + fmt(s.auroc_std) + "," +
               fmt(s.auprc_mean) + "," + fmt(s.auprc_std) + "\n";
    out << s.dataset << ": AUROC " << fmt(s.auroc_mean) << " +- " << fmt(s.auroc_std) << " over " << s.trials
        << " trials\n";
  }
  write_file_atomic(fs::path(o.out) / "summary.csv", with_preamble(prov, summary));

  if (!o.matrix.empty()) {
    const AurocMatrix merged = merge_matrix(read_auroc_matrix(o.matrix), res.summary, o.target);
    write_file_atomic(fs::path(o.out) / "ranks.csv", with_preamble(prov, rank_csv(rank_table(merged, o.fail_threshold))));
    Options so = o;
    so.sweep = true;
    json j = sweep_to_json(run_sweep(so, merged));
    j["provenance"] = prov;
    write_file_atomic(fs::path(o.out) / "counterintuitive.json", j.dump(2) + "\n");
  }
  out << "wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- id

int cmd_id(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  if (o.data.empty() == o.rho.empty()) throw UsageError("give exactly one of --data or --rho");
  RobustnessSpec spec;
  spec.subsample_ratios = parse_doubles(o.ratios, "--ratios");
  spec.scalers.clear();
  for (const auto& s : split_list(o.id_scalers)) spec.scalers.push_back(parse_scaler_kind(s));
  spec.k = o.k;
  spec.discard = o.discard;
  const std::vector<std::string> methods = split_list(o.method);
  if (methods.empty() || spec.scalers.empty() || spec.subsample_ratios.empty())
    throw UsageError("--method, --scaler and --ratios must not be empty");

  struct Input {
    std::string name;
    Matrix x;
    std::uint64_t seed;
  };
  std::vector<Input> inputs;
  if (!o.data.empty()) {
    for (const auto& path : split_list(o.data)) {
      LabeledDataset d = load_csv(path, o.label_col);
      inputs.push_back({d.name, std::move(d.features), o.seed});
    }
  } else {
    const std::vector<Index> dims = parse_dims(o.dims.empty() ? "10" : o.dims, "--dims");
    if (dims.size() != 1) throw UsageError("--dims takes a single dimension with --rho");
    const std::vector<double> rhos = parse_doubles(o.rho, "--rho");
    for (std::size_t r = 0; r < rhos.size(); ++r)
      for (int t = 0; t < std::max(1, o.id_trials); ++t) {
        const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(t);
        Rng rng(derive_seed(seed, r));
        Matrix x = mvn_sample(rng, Vector::Zero(dims[0]), cholesky(ar_covariance(dims[0], rhos[r])), o.rows);
        inputs.push_back({"ar_d" + std::to_string(dims[0]) + "_rho" + fmt(rhos[r]) + "_trial" + std::to_string(t),
                          std::move(x), seed});
      }
  }

  std::string csv = "dataset,method,param,subsample,scaler,estimate,d_ratio,n_points\n";
  for (const auto& in : inputs)
    for (const auto& m : methods) {
      spec.method = parse_id_method(m);
      for (const auto& c : robustness_suite(in.x, spec, in.seed)) {
        const std::string param = spec.method == IdMethod::mle ? std::to_string(spec.k) : fmt(spec.discard);
        csv += in.name + "," + m + "," + param + "," + fmt(c.ratio) + "," + std::string(to_string(c.scaler)) + "," +
               fmt(c.estimate.value) + "," + fmt(d_ratio(c.estimate.value, in.x.cols()).ratio) + "," +
               std::to_string(c.estimate.n_points) + "\n";
      }
    }
  write_file_atomic(o.out, with_preamble(make_provenance(sub, o.seed), csv));
  out << "estimated " << inputs.size() << " dataset(s); wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- synth

void write_dataset(const fs::path& path, const LabeledDataset& d, const json& prov) {
  write_file_atomic(path, with_preamble(prov, to_csv(d.features, d.feature_names, &d.labels)));
}

int cmd_synth(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  json prov = make_provenance(sub, o.seed);
  if (o.type == "gaussian") {
    const std::vector<Index> dims = parse_dims(o.dims.empty() ? "10" : o.dims, "--dims");
    if (dims.size() != 1) throw UsageError("--dims takes a single dimension for --type gaussian");
    const GaussianPair pair =
        gen_gaussian_pair(GaussianSpec::isotropic(dims[0], o.mu_p, o.sigma_p),
                          GaussianSpec::isotropic(dims[0], o.mu_q, o.sigma_q), o.n_train, o.n_test, o.seed);
    fs::create_directories(o.out);
    LabeledDataset train;
    train.features = pair.train;
    train.labels.assign(static_cast<std::size_t>(pair.train.rows()), 0);
    train.feature_names = pair.test.feature_names;
    write_dataset(fs::path(o.out) / "train.csv", train, prov);
    write_dataset(fs::path(o.out) / "test.csv", pair.test, prov);
    write_file_atomic(fs::path(o.out) / "provenance.json", prov.dump(2) + "\n");
    out << "wrote " << o.out << "\n";
    return 0;
  }

  LabeledDataset ds;
  if (o.type == "ar") {
    const std::vector<Index> dims = parse_dims(o.dims.empty() ? "10" : o.dims, "--dims");
    const std::vector<double> rho = parse_doubles(o.rho.empty() ? "0" : o.rho, "--rho");
    if (dims.size() != 1 || rho.size() != 1) throw UsageError("--type ar takes a single --dims and --rho");
    Rng rng(o.seed);
    ds.features = mvn_sample(rng, Vector::Zero(dims[0]), cholesky(ar_covariance(dims[0], rho[0])), o.rows);
    ds.labels.assign(static_cast<std::size_t>(o.rows), 0);
    for (Index j = 0; j < dims[0]; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  } else {
    if (o.data.empty()) throw UsageError("--data (seed rows) is required for anomaly types");
    const LabeledDataset seed_rows = load_csv(o.data, o.label_col);
    Matrix normals(seed_rows.count(0), seed_rows.features.cols());
    for (Index i = 0, r = 0; i < seed_rows.rows(); ++i)
      if (seed_rows.labels[static_cast<std::size_t>(i)] == 0) normals.row(r++) = seed_rows.features.row(i);
    AnomalySuiteSpec spec;
    spec.type = parse_anomaly_type(o.type);
    spec.alpha = o.alpha;
    spec.n_normal = o.n_normal;
    spec.n_anomaly = o.n_anomaly;
    spec.gmm_components = o.components;
    spec.seed = o.seed;
    ds = gen_anomaly_suite(normals, spec);
    if (ds.feature_names.size() != static_cast<std::size_t>(ds.features.cols()))
      ds.feature_names = seed_rows.feature_names;
  }
  write_dataset(o.out, ds, prov);
  write_file_atomic(o.out + ".provenance.json", prov.dump(2) + "\n");
  out << "wrote " << ds.rows() << " rows to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const Options& o, const CLI::App* sub, std::ostream& out) {
  require_out(o.out);
  const json prov = make_provenance(sub, o.seed);
  fs::create_directories(o.out);
  const std::vector<std::string> checks = split_list(o.checks);
  auto wants = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
  for (const auto& c : checks)
    if (c != "gap" && c != "concentration" && c != "norm-variance" && c != "sweep")
      throw UsageError("--checks: unknown check '" + c + "'");

  if (wants("gap")) {
    json reports = json::array();
    for (Index d : parse_dims(o.gap_dims, "--gap-dims")) {
      const GaussianSpec p = GaussianSpec::isotropic(d, o.mu_p, o.sigma_p);
      const GaussianSpec q = GaussianSpec::isotropic(d, o.mu_q, o.sigma_q);
      const GapCondition g = gap_condition(p.mean, p.sigma, q.mean, q.sigma);
      const GapReport r = empirical_likelihood_gap(p, p, q, o.samples, derive_seed(o.seed, static_cast<std::uint64_t>(d)));
      reports.push_back({{"d", d},
                         {"n", r.n},
                         {"entropy_p", r.entropy_p},
                         {"entropy_q", r.entropy_q},
                         {"kl_qp", r.kl_qp},
                         {"mean_ll_p", r.mean_ll_p},
                         {"mean_ll_q", r.mean_ll_q},
                         {"gap", r.gap},
                         {"gap_se", r.gap_se},
                         {"analytic_gap", r.analytic_gap},
                         {"gap_condition_holds", g.holds},
                         {"gap_condition_margin", g.margin},
                         {"routes_agree", g.routes_agree}});
    }
    write_file_atomic(fs::path(o.out) / "gap.json", json{{"provenance", prov}, {"reports", reports}}.dump(2) + "\n");
  }

  if (wants("concentration")) {
    std::string csv = "d,t,n,empirical,bound,se,within_bound\n";
    std::uint64_t cell = 0;
    for (Index d : {5, 20, 50, 100, 200})
      for (double frac : {0.1, 0.3, 0.6, 0.9}) {
        const ConcentrationReport r = concentration_check(d, frac * static_cast<double>(d), o.samples,
                                                          derive_seed(o.seed, 1000 + cell++));
        csv += std::to_string(d) + "," + fmt(r.t) + "," + std::to_string(r.n) + "," + fmt(r.empirical) + "," +
               fmt(r.bound) + "," + fmt(r.se) + "," + (r.within_bound ? "1" : "0") + "\n";
      }
    write_file_atomic(fs::path(o.out) / "concentration.csv", with_preamble(prov, csv));
  }

  if (wants("norm-variance")) {
    std::string csv = "d,ratio,se\n";
    for (const auto& v : norm_variance_ratio({1, 10, 100, 1000}, o.samples, o.seed))
      csv += std::to_string(v.d) + "," + fmt(v.ratio) + "," + fmt(v.se) + "\n";
    write_file_atomic(fs::path(o.out) / "norm_variance.csv", with_preamble(prov, csv));
  }

  if (wants("sweep")) {
    DimensionSweepSpec spec;
    spec.dims = o.full_grid ? DimensionSweepSpec{}.dims : parse_dims(o.sweep_dims, "--dims");
    spec.mu_p = o.mu_p;
    spec.mu_q = o.mu_q;
    spec.sigma_p = o.sigma_p;
    spec.sigma_q = o.sigma_q;
    spec.n_train = o.n_train;
    spec.n_test_each = o.n_test;
    spec.seed = o.seed;
    SweepOptions opt;
    opt.scaler = parse_scaler_kind(o.verify_train.scaler);
    opt.bins = o.bins;
    opt.jobs = o.jobs;
    const auto cells = dimension_sweep_auroc(parse_flow_kind(o.verify_train.kind), spec, o.verify_train.config(0), opt);
    std::string sweep = "d,auroc,norm_w1\n";
    std::string hist = "d,quantity,bin_left,bin_right,count_normal,count_anomaly\n";
    for (const auto& c : cells) {
      sweep += std::to_string(c.d) + "," + fmt(c.auroc) + "," + fmt(c.norm_w1) + "\n";
      std::vector<const Histogram*> hs{&c.histograms.nll, &c.histograms.norm};
      if (c.histograms.logdet) hs.push_back(&*c.histograms.logdet);
      for (const Histogram* h : hs)
        for (std::size_t b = 0; b < h->count_normal.size(); ++b)
          hist += std::to_string(c.d) + "," + h->quantity + "," + fmt(h->edges[b]) + "," + fmt(h->edges[b + 1]) + "," +
                  std::to_string(h->count_normal[b]) + "," + std::to_string(h->count_anomaly[b]) + "\n";
      out << "d=" << c.d << " AUROC " << fmt(c.auroc) << "\n";
    }
    write_file_atomic(fs::path(o.out) / "sweep.csv", with_preamble(prov, sweep));
    write_file_atomic(fs::path(o.out) / "histograms.csv", with_preamble(prov, hist));
  }
  out << "wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- dispatch

std::uint64_t default_seed() {
  const char* env = std::getenv("FLOWBENCH_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || errno != 0 || env[0] == '-')
    throw UsageError("FLOWBENCH_SEED='" + std::string(env) + "' is not an unsigned integer");
  return v;
}

std::string config_token(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + config_token(e, key);
    return s;
  }
  throw UsageError("config key '" + key + "' has an unsupported value type");
}

// Turns the --config file into flag tokens placed before the user's own
// flags, so explicit flags win.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  json cfg;
  try {
    cfg = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config " + path + " must be a JSON object");
  std::vector<std::string> tokens{args[0]};
  for (const auto& [key, value] : cfg.items()) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help")
      throw UsageError("config " + path + ": unknown key '" + key + "' for " + args[0]);
    if (is_flag(opt)) {
      if (!value.is_boolean()) throw UsageError("config key '" + key + "' must be true or false");
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    tokens.push_back(config_token(value, key));
  }
  tokens.insert(tokens.end(), args.begin() + 1, args.end());
  return tokens;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Normalizing-flow anomaly detection benchmark and verification suite", "flowbench"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  try {
    o.seed = default_seed();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  auto base = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--seed", o.seed, "Master seed (default from FLOWBENCH_SEED, else 0)");
    s->add_option("--config", o.config, "JSON file of flag values; explicit flags take precedence");
    s->add_option("--out", o.out, "Output path");
    return s;
  };
  auto data_flags = [&](CLI::App* s) {
    s->add_option("--data", o.data, "Dataset CSV (comma-separate several where supported)");
    s->add_option("--label-col", o.label_col, "Name of the 0/1 label column");
  };

  CLI::App* train = base("train", "Fit a flow on the training half of a dataset");
  data_flags(train);
  add_train_flags(train, o.train);
  train->add_option("--contamination", o.contamination, "Fraction of anomalies mixed into training");

  CLI::App* score = base("score", "Score dataset rows with a saved model");
  data_flags(score);
  score->add_option("--model", o.model, "Model bundle JSON");
  score->add_option("--test", o.test, "Scoring rule")->check(CLI::IsMember({"slt", "typicality"}));

  CLI::App* eval = base("eval", "AUROC/AUPRC of a score file, or a rank table of an AUROC matrix");
  eval->add_option("--scores", o.scores, "Score CSV written by `score`");
  eval->add_option("--matrix", o.matrix, "AUROC matrix CSV (datasets by models)");
  eval->add_option("--fail-threshold", o.fail_threshold, "Rank counted as a failure");

  CLI::App* bench = base("benchmark", "Repeated split/train/score trials over datasets");
  data_flags(bench);
  add_train_flags(bench, o.train);
  bench->add_option("--test", o.test, "Scoring rule")->check(CLI::IsMember({"slt", "typicality"}));
  bench->add_option("--trials", o.trials, "Trials per dataset; trial t uses seed + t");
  bench->add_option("--jobs", o.jobs, "Worker threads");
  bench->add_option("--contamination", o.contamination, "Fraction of anomalies mixed into training");
  bench->add_option("--matrix", o.matrix, "External AUROC matrix for ranks and verdicts");
  bench->add_option("--meta", o.meta, "Model pool CSV (name,pool)");
  bench->add_option("--target", o.target, "Matrix column receiving the measured AUROC");
  bench->add_option("--pool", o.pool, "Competitor pool")->check(CLI::IsMember({"all", "shallow", "deep"}));
  bench->add_option("--beta-grid", o.beta_grid, "Comma-separated beta values (default: pool-size grid)");
  bench->add_option("--gamma-grid", o.gamma_grid, "Comma-separated gamma values (default 0.3..0.6)");
  bench->add_option("--fail-threshold", o.fail_threshold, "Rank counted as a failure");

  CLI::App* id = base("id", "Intrinsic-dimension estimates with the subsampling protocol");
  data_flags(id);
  id->add_option("--method", o.method, "twonn, mle, or both comma-separated");
  id->add_option("--k", o.k, "Neighbours for mle");
  id->add_option("--discard", o.discard, "Fraction of largest TwoNN ratios censored");
  id->add_option("--ratios", o.ratios, "Subsample ratios");
  id->add_option("--scaler", o.id_scalers, "Scalers applied per subsample (comma-separated)");
  id->add_option("--rho", o.rho, "AR correlations for synthetic data instead of --data");
  id->add_option("--dims", o.dims, "Dimension of the synthetic AR data");
  id->add_option("--rows", o.rows, "Rows of synthetic AR data");
  id->add_option("--trials", o.id_trials, "Synthetic replicates per rho");

  CLI::App* synth = base("synth", "Generate synthetic datasets");
  synth->add_option("--type", o.type, "Dataset family")
      ->required()
      ->check(CLI::IsMember({"gaussian", "ar", "local", "global", "dependency", "clustered"}));
  data_flags(synth);
  synth->add_option("--dims", o.dims, "Dimension (gaussian, ar)");
  synth->add_option("--rho", o.rho, "AR correlation");
  synth->add_option("--rows", o.rows, "Rows (ar)");
  synth->add_option("--mu-p", o.mu_p, "Mean of P");
  synth->add_option("--mu-q", o.mu_q, "Mean of Q");
  synth->add_option("--sigma-p", o.sigma_p, "Std of P");
  synth->add_option("--sigma-q", o.sigma_q, "Std of Q");
  synth->add_option("--n-train", o.n_train, "Training rows from P");
  synth->add_option("--n-test", o.n_test, "Test rows from each of P and Q");
  synth->add_option("--n-normal", o.n_normal, "Normal rows (anomaly types)");
  synth->add_option("--n-anomaly", o.n_anomaly, "Anomalous rows (anomaly types)");
  synth->add_option("--components", o.components, "GMM components fitted to the seed rows");
  synth->add_option("--alpha", o.alpha, "Anomaly strength; 0 selects the type's default");

  CLI::App* verify = base("verify", "Numerical checks of the entropy, concentration and dimension results");
  add_train_flags(verify, o.verify_train);
  verify->add_option("--checks", o.checks, "Subset of gap,concentration,norm-variance,sweep");
  verify->add_option("--dims", o.sweep_dims, "Sweep dimensions");
  verify->add_option("--gap-dims", o.gap_dims, "Dimensions for the likelihood-gap report");
  verify->add_flag("--full-grid", o.full_grid, "Sweep the long dimension grid up to 15000");
  verify->add_option("--mu-p", o.mu_p, "Mean of P");
  verify->add_option("--mu-q", o.mu_q, "Mean of Q");
  verify->add_option("--sigma-p", o.sigma_p, "Std of P");
  verify->add_option("--sigma-q", o.sigma_q, "Std of Q");
  verify->add_option("--n-train", o.n_train, "Sweep training rows");
  verify->add_option("--n-test", o.n_test, "Sweep test rows from each of P and Q");
  verify->add_option("--samples", o.samples, "Monte Carlo draws");
  verify->add_option("--bins", o.bins, "Histogram bins");
  verify->add_option("--jobs", o.jobs, "Worker threads for sweep cells");

  CLI::App* ci = base("counterintuitive", "Counterintuitive-failure verdicts over an AUROC matrix");
  ci->add_option("--matrix", o.matrix, "AUROC matrix CSV")->required();
  ci->add_option("--meta", o.meta, "Model pool CSV (name,pool)");
  ci->add_option("--target", o.target, "Likelihood-only model column");
  ci->add_option("--pool", o.pool, "Competitor pool")->check(CLI::IsMember({"all", "shallow", "deep"}));
  ci->add_flag("--sweep", o.sweep, "Evaluate the full (beta, gamma) grid");
  ci->add_option("--beta-grid", o.beta_grid, "Comma-separated beta values (default: pool-size grid)");
  ci->add_option("--gamma-grid", o.gamma_grid, "Comma-separated gamma values (default 0.3..0.6)");
  ci->add_option("--beta", o.beta, "Single beta without --sweep");
  ci->add_option("--gamma", o.gamma, "Single gamma without --sweep");

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' && app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "error: unknown subcommand '" << args[0] << "'\n" << app.help();
    return 2;
  }

  try {
    std::vector<std::string> tokens = expand_config(app, args);
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "train") return cmd_train(o, sub, out);
    if (name == "score") return cmd_score(o, sub, out);
    if (name == "eval") return cmd_eval(o, sub, out);
    if (name == "benchmark") return cmd_benchmark(o, sub, out);
    if (name == "id") return cmd_id(o, sub, out);
    if (name == "synth") return cmd_synth(o, sub, out);
    if (name == "verify") return cmd_verify(o, sub, out);
    return cmd_counterintuitive(o, sub, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace flowbench
