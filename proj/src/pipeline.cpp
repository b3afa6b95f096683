#include "kcode/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace kcode {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

KernelSpec base_kernel_from(const Config& cfg, const std::string& prefix,
                            const std::string& family) {
  if (family == "linear") return KernelSpec::Linear();
  if (family == "gaussian")
    return KernelSpec::Gaussian(cfg.get_double(prefix + ".beta", 1.0));
  if (family == "polynomial")
    return KernelSpec::Polynomial(cfg.get_double(prefix + ".beta", 1.0),
                                  cfg.get_int(prefix + ".degree", 2));
  if (family == "sigmoid")
    return KernelSpec::Sigmoid(cfg.get_double(prefix + ".scale", 1.0),
                               cfg.get_double(prefix + ".offset", 0.0));
  if (family == "logeuclidean_rbf")
    return KernelSpec::LogEuclideanRbf(cfg.get_double(prefix + ".beta", 1.0));
  throw ParseError("unknown kernel family '" + family + "'");
}

struct CodingConfig {
  Scheme scheme = Scheme::ksc;
  double gamma = 0.0;
  double sigma = 1.0;
  Index nB = 1;
  double epsLLC = 1e-6;
};

CodingConfig coding_from_config(const Config& cfg) {
  CodingConfig c;
  c.scheme = scheme_from_name(cfg.get_string("scheme", "ksc"));
  c.gamma = cfg.get_double("gamma", 0.0);
  c.sigma = cfg.get_double("sigma", 1.0);
  c.nB = cfg.get_int("nb", 1);
  c.epsLLC = cfg.get_double("eps_llc", 1e-6);
  return c;
}

CodeMatrix encode_set(const KernelSpec& spec, const DualDictionary& dict,
                      const SampleSet& queries, const CodingConfig& c,
                      int threads) {
  const GramBundle bundle = dict.bundle_for(spec, queries);
  const CodingProblem p{bundle, c.gamma, c.sigma, c.nB, c.epsLLC};
  return encode_batch(p, c.scheme, threads);
}

// Derived stream so generated test data never overlaps the training draw.
std::uint64_t test_seed(std::uint64_t seed) {
  return seed ^ 0x9e3779b97f4a7c15ull;
}

SampleSet load_samples(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".spd")
    return SampleSet::Spd(read_spd_set(path));
  return SampleSet::Vectors(read_matrix(path));
}

void save_samples(const std::string& path, const SampleSet& s,
                  FloatFormat format) {
  if (s.is_spd())
    write_spd_set(path, s.spd(), format);
  else
    write_matrix(path, s.vectors(), format);
}

std::vector<Matrix> isotropic_covs(Index blobs, Index dim, double sd) {
  return std::vector<Matrix>(static_cast<size_t>(blobs),
                             (sd * sd) * Matrix::Identity(dim, dim));
}

// Semicolon-separated rows of space-separated numbers, e.g.
// "1 1; -1 -1" -> 2 x 2 with one center per column.
Matrix centers_from_string(const std::string& text) {
  std::vector<Vector> cols;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    std::vector<double> vals;
    const char* p = part.c_str();
    while (*p) {
      while (*p == ' ' || *p == '\t' || *p == ',') ++p;
      if (!*p) break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ParseError("bad center list: " + text);
      vals.push_back(v);
      p = end;
    }
    if (vals.empty()) continue;
    cols.push_back(Eigen::Map<const Vector>(vals.data(),
                                            static_cast<Index>(vals.size())));
  }
  if (cols.empty()) throw ParseError("empty center list");
  Matrix m(cols.front().size(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != m.rows())
      throw ParseError("centers differ in dimension: " + text);
    m.col(static_cast<Index>(j)) = cols[j];
  }
  return m;
}

struct RunContext {
  Config cfg;
  std::string outDir;
  std::uint64_t seed = 0;
  int threads = 1;
  FloatFormat format = FloatFormat::hex;
  ResultDoc doc;
  std::vector<std::pair<std::string, std::string>> inputHashes;

  Matrix read_input_matrix(const std::string& key) {
    const std::string path = cfg.get_string(key);
    inputHashes.emplace_back(key, hash_file(path));
    return read_matrix(path);
  }
  SampleSet read_input_samples(const std::string& key) {
    const std::string path = cfg.get_string(key);
    inputHashes.emplace_back(key, hash_file(path));
    return load_samples(path);
  }
  std::vector<int> read_input_labels(const std::string& key) {
    const std::string path = cfg.get_string(key);
    inputHashes.emplace_back(key, hash_file(path));
    return read_labels(path);
  }

  void finish(const std::string& command) {
    cfg.require_all_consumed();
    ResultDoc out;
    out.set("result.version", std::string("1"));
    out.set("run.command", command);
    out.set("run.timestamp", iso8601_utc_now());
    for (const auto& [key, hash] : inputHashes)
      out.set("input." + key + ".hash", hash);
    for (const auto& [key, value] : cfg.resolved())
      out.set("config." + key, value);
    atomic_write(join(outDir, "result.txt"),
                 out.to_string() + doc.to_string());
  }
};

RunContext make_context(const CliRun& run) {
  RunContext ctx;
  ctx.cfg = Config::from_file(run.configPath);
  ctx.outDir = run.outDir;
  if (run.seedOverride)
    ctx.cfg.set("seed", std::to_string(*run.seedOverride));
  ctx.seed = ctx.cfg.get_u64("seed", 0);
  ctx.threads = thread_count_from_env();
  ctx.format =
      float_format_from_name(ctx.cfg.get_string("format", "hex"));
  fs::create_directories(ctx.outDir);
  return ctx;
}

DualDictionary dictionary_from_config(RunContext& ctx) {
  if (ctx.cfg.has("in.coeffs")) {
    Matrix coeffs = ctx.read_input_matrix("in.coeffs");
    SampleSet basis = ctx.read_input_samples("in.basis");
    return DualDictionary::Dual(std::move(basis), std::move(coeffs));
  }
  return DualDictionary::Explicit(ctx.read_input_samples("in.dict"));
}

std::vector<double> int_trace(const std::vector<Index>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (Index i : v) out.push_back(static_cast<double>(i));
  return out;
}

void record_fit(RunContext& ctx, const FitReport& rep) {
  ctx.doc.set("fit.objective_trace", rep.objectiveTrace);
  ctx.doc.set_int("fit.iterations", rep.iterations);
  ctx.doc.set_int("fit.converged", rep.converged ? 1 : 0);
  ctx.doc.set_int("fit.dead_atoms", static_cast<long long>(rep.deadAtoms.size()));
  if (!rep.deadAtoms.empty())
    ctx.doc.set("fit.dead_atom_indices", int_trace(rep.deadAtoms));
}

void record_metrics(RunContext& ctx, const Metrics& m) {
  ctx.doc.set("metrics.accuracy", m.accuracy);
  ctx.doc.set("metrics.per_class",
              std::vector<double>(m.perClass.data(),
                                  m.perClass.data() + m.perClass.size()));
  std::vector<double> conf;
  for (Index i = 0; i < m.confusion.rows(); ++i)
    for (Index j = 0; j < m.confusion.cols(); ++j)
      conf.push_back(static_cast<double>(m.confusion(i, j)));
  ctx.doc.set("metrics.confusion_rowmajor", conf);
  ctx.doc.set_int("metrics.classes", m.confusion.rows());
}

// Alternates coding with kernel-parameter (or MKL weight) learning on a
// fixed dictionary; returns the learned kernel and records traces.
KernelSpec learn_kernel_alternating(RunContext& ctx, const KernelSpec& spec0,
                                    const DualDictionary& dict,
                                    const SampleSet& x,
                                    const CodingConfig& coding) {
  const int outer = ctx.cfg.get_int("kernel_learn.outer", 3);
  const int maxIter = ctx.cfg.get_int("kernel_learn.max_iter", 50);
  const double tol = ctx.cfg.get_double("kernel_learn.tol", 1e-8);
  KernelSpec spec = spec0;
  std::vector<double> outerTrace;
  for (int round = 0; round < outer; ++round) {
    const CodeMatrix codes = encode_set(spec, dict, x, coding, ctx.threads);
    if (spec.is_combination()) {
      const MklOptResult mkl =
          optimize_mkl(spec.members, dict, x, codes.y, maxIter, tol);
      spec.weights.assign(mkl.alpha.data(),
                          mkl.alpha.data() + mkl.alpha.size());
      outerTrace.push_back(mkl.trace.back());
      if (round == 0) ctx.doc.set("kernel.first_round_trace", mkl.trace);
    } else {
      const KernelOptResult opt =
          optimize_beta(spec, dict, x, codes.y, maxIter, tol);
      spec = opt.spec;
      outerTrace.push_back(opt.trace.back());
      if (round == 0) ctx.doc.set("kernel.first_round_trace", opt.trace);
    }
  }
  ctx.doc.set("kernel.outer_trace", outerTrace);
  if (spec.is_combination()) {
    ctx.doc.set("kernel.learned_alpha",
                std::vector<double>(spec.weights.begin(), spec.weights.end()));
  } else {
    ctx.doc.set("kernel.learned_beta", spec.beta);
  }
  return spec;
}

std::vector<int> classify_residual_batch(const KernelSpec& spec,
                                         const DualDictionary& dict,
                                         const SampleSet& queries,
                                         const CodingConfig& coding,
                                         const std::vector<int>& atomLabels,
                                         int classCount, int threads) {
  const GramBundle bundle = dict.bundle_for(spec, queries);
  const CodingProblem p{bundle, coding.gamma, coding.sigma, coding.nB,
                        coding.epsLLC};
  const CodeMatrix codes = encode_batch(p, coding.scheme, threads);
  std::vector<int> preds(static_cast<size_t>(queries.size()));
  parallel_for(queries.size(), threads, [&](Index q) {
    preds[static_cast<size_t>(q)] =
        residual_classify(codes.y.col(q), bundle, q, atomLabels, classCount)
            .predicted;
  });
  return preds;
}

}  // namespace

KernelSpec kernel_from_config(const Config& cfg, const std::string& prefix) {
  const std::string family = cfg.get_string(prefix, "gaussian");
  if (family != "combination") {
    KernelSpec s = base_kernel_from(cfg, prefix, family);
    s.validate();
    return s;
  }
  const int bases = cfg.get_int(prefix + ".bases");
  std::vector<KernelSpec> members;
  for (int i = 0; i < bases; ++i) {
    const std::string bp = prefix + ".base" + std::to_string(i);
    members.push_back(base_kernel_from(cfg, bp, cfg.get_string(bp)));
  }
  std::vector<double> weights = cfg.get_doubles(
      prefix + ".weights",
      std::vector<double>(static_cast<size_t>(bases),
                          1.0 / static_cast<double>(bases)));
  KernelSpec s = KernelSpec::Combination(std::move(members),
                                         std::move(weights));
  s.validate();
  return s;
}

Dataset dataset_from_config(const Config& cfg, std::uint64_t seed) {
  const std::string source = cfg.get_string("data.source");
  Dataset d;
  if (source == "circles") {
    const std::vector<double> radii =
        cfg.get_doubles("data.radii", {1.0, 3.0});
    const double noise = cfg.get_double("data.noise", 0.1);
    const Index trainPer = cfg.get_int("data.per_class_train", 50);
    const Index testPer = cfg.get_int("data.per_class_test", 0);
    LabeledVectors tr = gen_circles(trainPer, radii, noise, seed);
    d.train = SampleSet::Vectors(std::move(tr.x));
    d.trainLabels = std::move(tr.labels);
    if (testPer > 0) {
      LabeledVectors te = gen_circles(testPer, radii, noise, test_seed(seed));
      d.test = SampleSet::Vectors(std::move(te.x));
      d.testLabels = std::move(te.labels);
    }
    return d;
  }
  if (source == "blobs") {
    const Matrix centers =
        centers_from_string(cfg.get_string("data.centers", "1 1; -1 -1"));
    const double sd = cfg.get_double("data.blob_std", 0.2);
    std::vector<int> centerLabels;
    if (cfg.has("data.center_labels")) {
      for (double v : cfg.get_doubles("data.center_labels"))
        centerLabels.push_back(static_cast<int>(v));
    }
    const Index trainPer = cfg.get_int("data.per_class_train", 50);
    const Index testPer = cfg.get_int("data.per_class_test", 0);
    const auto covs = isotropic_covs(centers.cols(), centers.rows(), sd);
    LabeledVectors tr =
        gen_blobs(trainPer, centers, covs, seed, centerLabels);
    d.train = SampleSet::Vectors(std::move(tr.x));
    d.trainLabels = std::move(tr.labels);
    if (testPer > 0) {
      LabeledVectors te =
          gen_blobs(testPer, centers, covs, test_seed(seed), centerLabels);
      d.test = SampleSet::Vectors(std::move(te.x));
      d.testLabels = std::move(te.labels);
    }
    return d;
  }
  if (source == "spd") {
    const Index dim = cfg.get_int("data.spd_dim", 3);
    const std::vector<double> aniso =
        cfg.get_doubles("data.spd_anisotropy", {2.0, 8.0});
    const Index trainPer = cfg.get_int("data.per_class_train", 10);
    const Index testPer = cfg.get_int("data.per_class_test", 0);
    std::vector<Matrix> train, test;
    std::uint64_t s = seed;
    for (std::size_t c = 0; c < aniso.size(); ++c, ++s) {
      auto tr = gen_spd(trainPer, dim, aniso[c], s);
      train.insert(train.end(), tr.begin(), tr.end());
      for (Index i = 0; i < trainPer; ++i)
        d.trainLabels.push_back(static_cast<int>(c));
      if (testPer > 0) {
        auto te = gen_spd(testPer, dim, aniso[c], test_seed(s));
        test.insert(test.end(), te.begin(), te.end());
        for (Index i = 0; i < testPer; ++i)
          d.testLabels.push_back(static_cast<int>(c));
      }
    }
    d.train = SampleSet::Spd(std::move(train));
    if (!test.empty()) d.test = SampleSet::Spd(std::move(test));
    return d;
  }
  if (source == "file") {
    SampleSet all = load_samples(cfg.get_string("data.features"));
    std::vector<int> labels = read_labels(cfg.get_string("data.labels"));
    if (static_cast<Index>(labels.size()) != all.size())
      throw DimensionError("dataset: label count differs from sample count");
    const double frac = cfg.get_double("split.train_fraction", 0.5);
    if (frac <= 0.0 || frac > 1.0)
      throw ParseError("split.train_fraction must be in (0, 1]");
    std::vector<Index> order(labels.size());
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    const Index nTrain = std::max<Index>(
        1, static_cast<Index>(frac * static_cast<double>(order.size())));
    std::vector<Index> trainIdx(order.begin(), order.begin() + nTrain);
    std::vector<Index> testIdx(order.begin() + nTrain, order.end());
    d.train = all.subset(trainIdx);
    for (Index i : trainIdx) d.trainLabels.push_back(labels[static_cast<size_t>(i)]);
    d.test = all.subset(testIdx);
    for (Index i : testIdx) d.testLabels.push_back(labels[static_cast<size_t>(i)]);
    return d;
  }
  throw ParseError("unknown data.source '" + source + "'");
}

void write_model(const std::string& path, const SupervisedModel& model) {
  std::string out = "kcode-model 1\n";
  out += std::string("kind = ") +
         (model.kind == ClassifierKind::linear ? "linear" : "bilinear");
  out += '\n';
  out += "eta = " + format_double(model.eta) + '\n';
  out += "rho = " + format_double(model.rho) + '\n';
  const auto appendMatrix = [&out](const Matrix& m) {
    out += std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) + '\n';
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j) out += ' ';
        std::snprintf(buf, sizeof buf, "%a", m(i, j));
        out += buf;
      }
      out += '\n';
    }
  };
  if (model.kind == ClassifierKind::linear) {
    out += "matrices = 1\n";
    appendMatrix(model.w);
  } else {
    out += "matrices = " + std::to_string(model.a.size()) + '\n';
    for (const Matrix& aj : model.a) appendMatrix(aj);
  }
  atomic_write(path, out);
}

SupervisedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open model file");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::istringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != "kcode-model 1")
    throw ParseError(path + ": not a kcode model file");
  SupervisedModel model;
  int matrices = -1;
  while (std::getline(ss, line)) {
    std::istringstream ls(line);
    std::string key, eq, value;
    ls >> key >> eq;
    std::getline(ls, value);
    const auto b = value.find_first_not_of(' ');
    if (b != std::string::npos) value = value.substr(b);
    if (key == "kind") {
      if (value == "linear")
        model.kind = ClassifierKind::linear;
      else if (value == "bilinear")
        model.kind = ClassifierKind::bilinear;
      else
        throw ParseError(path + ": unknown model kind " + value);
    } else if (key == "eta") {
      model.eta = std::strtod(value.c_str(), nullptr);
    } else if (key == "rho") {
      model.rho = std::strtod(value.c_str(), nullptr);
    } else if (key == "matrices") {
      matrices = std::atoi(value.c_str());
      break;
    } else {
      throw ParseError(path + ": unexpected model key " + key);
    }
  }
  if (matrices < 1) throw ParseError(path + ": missing matrices section");
  const auto readMatrix = [&ss, &path]() {
    Index rows = 0, cols = 0;
    if (!(ss >> rows >> cols))
      throw ParseError(path + ": bad matrix header in model");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) {
        std::string tok;
        if (!(ss >> tok))
          throw ParseError(path + ": truncated matrix in model");
        m(i, j) = std::strtod(tok.c_str(), nullptr);
      }
    return m;
  };
  if (model.kind == ClassifierKind::linear) {
    model.w = readMatrix();
  } else {
    model.a.resize(static_cast<size_t>(matrices));
    for (auto& aj : model.a) aj = readMatrix();
  }
  return model;
}

void cmd_gen(const CliRun& run) {
  RunContext ctx = make_context(run);
  const Dataset d = dataset_from_config(ctx.cfg, ctx.seed);
  const std::string ext = d.train.is_spd() ? ".spd" : ".mat";
  save_samples(join(ctx.outDir, "train_features" + ext), d.train, ctx.format);
  write_labels(join(ctx.outDir, "train_labels.txt"), d.trainLabels);
  ctx.doc.set_int("gen.train_count", d.train.size());
  if (d.test.size() > 0) {
    save_samples(join(ctx.outDir, "test_features" + ext), d.test, ctx.format);
    write_labels(join(ctx.outDir, "test_labels.txt"), d.testLabels);
    ctx.doc.set_int("gen.test_count", d.test.size());
  }
  ctx.finish("gen");
}

void cmd_gram(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec = kernel_from_config(ctx.cfg);
  const SampleSet dict = ctx.read_input_samples("in.dict");
  const SampleSet queries = ctx.cfg.has("in.queries")
                                ? ctx.read_input_samples("in.queries")
                                : dict;
  const GramBundle g = gram_bundle(spec, dict, queries);
  write_matrix(join(ctx.outDir, "kdd.mat"), g.kDD, ctx.format);
  write_matrix(join(ctx.outDir, "kxd.mat"), g.kxD, ctx.format);
  write_matrix(join(ctx.outDir, "kxx.mat"), g.kxx, ctx.format);
  ctx.doc.set_int("gram.atoms", g.atoms());
  ctx.doc.set_int("gram.queries", g.queries());
  ctx.finish("gram");
}

void cmd_encode(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec = kernel_from_config(ctx.cfg);
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const DualDictionary dict = dictionary_from_config(ctx);
  const SampleSet queries = ctx.read_input_samples("in.queries");
  const CodeMatrix codes =
      encode_set(spec, dict, queries, coding, ctx.threads);
  write_matrix(join(ctx.outDir, "codes.mat"), codes.y, ctx.format);
  ctx.doc.set("encode.scheme", scheme_name(coding.scheme));
  ctx.doc.set_int("encode.atoms", codes.y.rows());
  ctx.doc.set_int("encode.queries", codes.y.cols());
  ctx.finish("encode");
}

void cmd_learn_dict(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec = kernel_from_config(ctx.cfg);
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const SampleSet train = ctx.read_input_samples("in.train");
  FitParams params;
  params.gamma = coding.gamma;
  params.sigma = coding.sigma;
  params.nB = coding.nB;
  params.epsLLC = coding.epsLLC;
  params.maxIter = ctx.cfg.get_int("fit.max_iter", 20);
  params.tol = ctx.cfg.get_double("fit.tol", 1e-6);
  params.seed = ctx.seed;
  params.threads = ctx.threads;
  const Index atoms = ctx.cfg.get_int("dict.atoms");
  const FitResult res =
      fit_alternating(train, spec, coding.scheme, params, atoms);
  write_matrix(join(ctx.outDir, "coeffs.mat"), res.dict.coeffs, ctx.format);
  write_matrix(join(ctx.outDir, "codes.mat"), res.codes.y, ctx.format);
  record_fit(ctx, res.report);
  ctx.finish("learn-dict");
}

void cmd_learn_kernel(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec0 = kernel_from_config(ctx.cfg);
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const SampleSet train = ctx.read_input_samples("in.train");
  const DualDictionary dict = DualDictionary::Explicit(train);
  const KernelSpec learned =
      learn_kernel_alternating(ctx, spec0, dict, train, coding);
  const CodeMatrix codes =
      encode_set(learned, dict, train, coding, ctx.threads);
  write_matrix(join(ctx.outDir, "codes.mat"), codes.y, ctx.format);
  ctx.finish("learn-kernel");
}

void cmd_learn_mkl(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec0 = kernel_from_config(ctx.cfg);
  if (!spec0.is_combination())
    throw ParseError("learn-mkl requires kernel = combination");
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const SampleSet train = ctx.read_input_samples("in.train");
  const DualDictionary dict = DualDictionary::Explicit(train);
  const KernelSpec learned =
      learn_kernel_alternating(ctx, spec0, dict, train, coding);
  const CodeMatrix codes =
      encode_set(learned, dict, train, coding, ctx.threads);
  write_matrix(join(ctx.outDir, "codes.mat"), codes.y, ctx.format);
  ctx.finish("learn-mkl");
}

void cmd_train_supervised(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec = kernel_from_config(ctx.cfg);
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const SampleSet train = ctx.read_input_samples("in.train");
  const std::vector<int> labels = ctx.read_input_labels("in.train_labels");
  SupervisedFitParams params;
  params.gamma = coding.gamma;
  params.sigma = coding.sigma;
  params.nB = coding.nB;
  params.epsLLC = coding.epsLLC;
  params.eta = ctx.cfg.get_double("eta", 1.0);
  params.rho = ctx.cfg.get_double("rho", 0.0);
  params.maxIter = ctx.cfg.get_int("fit.max_iter", 10);
  params.tol = ctx.cfg.get_double("fit.tol", 1e-6);
  params.seed = ctx.seed;
  params.threads = ctx.threads;
  params.solveCap = ctx.cfg.get_int("solve_cap", 4096);
  const std::string kindName = ctx.cfg.get_string("classifier", "linear");
  const ClassifierKind kind = [&] {
    if (kindName == "linear") return ClassifierKind::linear;
    if (kindName == "bilinear") return ClassifierKind::bilinear;
    throw ParseError("classifier must be linear or bilinear");
  }();
  const Index atoms = ctx.cfg.get_int("dict.atoms");
  const SupervisedFitResult res = fit_supervised(
      train, labels, spec, coding.scheme, kind, params, atoms);
  write_matrix(join(ctx.outDir, "coeffs.mat"), res.dict.coeffs, ctx.format);
  write_matrix(join(ctx.outDir, "codes.mat"), res.codes.y, ctx.format);
  write_model(join(ctx.outDir, "model.txt"), res.model);
  record_fit(ctx, res.report);
  ctx.finish("train-supervised");
}

void cmd_classify(const CliRun& run) {
  RunContext ctx = make_context(run);
  const std::string method = ctx.cfg.get_string("classify.method");
  std::vector<int> preds;
  if (method == "nn") {
    const Matrix codesTrain = ctx.read_input_matrix("in.train_codes");
    const std::vector<int> labels = ctx.read_input_labels("in.train_labels");
    const Matrix codesQuery = ctx.read_input_matrix("in.query_codes");
    preds.resize(static_cast<size_t>(codesQuery.cols()));
    parallel_for(codesQuery.cols(), ctx.threads, [&](Index q) {
      preds[static_cast<size_t>(q)] =
          nn_classify(codesTrain, labels, codesQuery.col(q));
    });
  } else if (method == "residual") {
    const KernelSpec spec = kernel_from_config(ctx.cfg);
    const CodingConfig coding = coding_from_config(ctx.cfg);
    const DualDictionary dict = dictionary_from_config(ctx);
    const std::vector<int> atomLabels =
        ctx.read_input_labels("in.atom_labels");
    const SampleSet queries = ctx.read_input_samples("in.queries");
    int classCount = 0;
    for (int l : atomLabels) classCount = std::max(classCount, l + 1);
    preds = classify_residual_batch(spec, dict, queries, coding, atomLabels,
                                    classCount, ctx.threads);
  } else if (method == "model") {
    const KernelSpec spec = kernel_from_config(ctx.cfg);
    const CodingConfig coding = coding_from_config(ctx.cfg);
    const SupervisedModel model =
        read_model(ctx.cfg.get_string("in.model"));
    ctx.inputHashes.emplace_back("in.model",
                                 hash_file(ctx.cfg.get_string("in.model")));
    const DualDictionary dict = dictionary_from_config(ctx);
    const SampleSet queries = ctx.read_input_samples("in.queries");
    const CodeMatrix codes =
        encode_set(spec, dict, queries, coding, ctx.threads);
    Matrix kq;
    if (model.kind == ClassifierKind::bilinear) {
      if (dict.mode != DualDictionary::Mode::dual)
        throw ParseError("bilinear classification needs in.basis/in.coeffs");
      kq = gram_matrix(spec, dict.trainingSet, queries);
    }
    preds.resize(static_cast<size_t>(queries.size()));
    for (Index q = 0; q < queries.size(); ++q) {
      const Vector kappa =
          model.kind == ClassifierKind::bilinear ? Vector(kq.col(q)) : Vector();
      preds[static_cast<size_t>(q)] = predict(
          model, codes.y.col(q),
          model.kind == ClassifierKind::bilinear ? &kappa : nullptr);
    }
  } else {
    throw ParseError("classify.method must be residual, nn or model");
  }
  write_labels(join(ctx.outDir, "predictions.txt"), preds);
  ctx.doc.set_int("classify.count", static_cast<long long>(preds.size()));
  ctx.finish("classify");
}

void cmd_eval(const CliRun& run) {
  RunContext ctx = make_context(run);
  const std::vector<int> preds = ctx.read_input_labels("in.predictions");
  const std::vector<int> labels = ctx.read_input_labels("in.labels");
  record_metrics(ctx, evaluate(preds, labels));
  ctx.finish("eval");
}

void cmd_pipeline(const CliRun& run) {
  RunContext ctx = make_context(run);
  const KernelSpec spec0 = kernel_from_config(ctx.cfg);
  const CodingConfig coding = coding_from_config(ctx.cfg);
  const Dataset data = dataset_from_config(ctx.cfg, ctx.seed);
  if (data.test.size() == 0)
    throw ParseError("pipeline needs test data (data.per_class_test > 0 "
                     "or a file split)");
  const std::string mode = ctx.cfg.get_string("pipeline.mode", "residual");
  const std::string learn = ctx.cfg.get_string("kernel_learn", "none");
  if (learn != "none" && mode != "residual")
    throw ParseError("kernel_learn applies to pipeline.mode = residual only");

  if (mode == "residual") {
    // All training samples serve as labeled dictionary atoms.
    const DualDictionary dict = DualDictionary::Explicit(data.train);
    KernelSpec spec = spec0;
    if (learn != "none")
      spec = learn_kernel_alternating(ctx, spec0, dict, data.train, coding);
    int classCount = 0;
    for (int l : data.trainLabels) classCount = std::max(classCount, l + 1);
    const std::vector<int> preds =
        classify_residual_batch(spec, dict, data.test, coding,
                                data.trainLabels, classCount, ctx.threads);
    write_labels(join(ctx.outDir, "predictions.txt"), preds);
    record_metrics(ctx, evaluate(preds, data.testLabels));
  } else if (mode == "nn") {
    FitParams params;
    params.gamma = coding.gamma;
    params.sigma = coding.sigma;
    params.nB = coding.nB;
    params.epsLLC = coding.epsLLC;
    params.maxIter = ctx.cfg.get_int("fit.max_iter", 20);
    params.tol = ctx.cfg.get_double("fit.tol", 1e-6);
    params.seed = ctx.seed;
    params.threads = ctx.threads;
    const Index atoms = ctx.cfg.get_int("dict.atoms");
    KernelSpec spec = spec0;
    const FitResult fit =
        fit_alternating(data.train, spec, coding.scheme, params, atoms);
    record_fit(ctx, fit.report);
    const CodeMatrix testCodes =
        encode_set(spec, fit.dict, data.test, coding, ctx.threads);
    std::vector<int> preds(static_cast<size_t>(data.test.size()));
    parallel_for(data.test.size(), ctx.threads, [&](Index q) {
      preds[static_cast<size_t>(q)] =
          nn_classify(fit.codes.y, data.trainLabels, testCodes.y.col(q));
    });
    write_labels(join(ctx.outDir, "predictions.txt"), preds);
    record_metrics(ctx, evaluate(preds, data.testLabels));
  } else if (mode == "supervised") {
    SupervisedFitParams params;
    params.gamma = coding.gamma;
    params.sigma = coding.sigma;
    params.nB = coding.nB;
    params.epsLLC = coding.epsLLC;
    params.eta = ctx.cfg.get_double("eta", 1.0);
    params.rho = ctx.cfg.get_double("rho", 0.0);
    params.maxIter = ctx.cfg.get_int("fit.max_iter", 10);
    params.tol = ctx.cfg.get_double("fit.tol", 1e-6);
    params.seed = ctx.seed;
    params.threads = ctx.threads;
    params.solveCap = ctx.cfg.get_int("solve_cap", 4096);
    const std::string kindName = ctx.cfg.get_string("classifier", "linear");
    const ClassifierKind kind = kindName == "bilinear"
                                    ? ClassifierKind::bilinear
                                    : ClassifierKind::linear;
    const Index atoms = ctx.cfg.get_int("dict.atoms");
    const SupervisedFitResult fit = fit_supervised(
        data.train, data.trainLabels, spec0, coding.scheme, kind, params,
        atoms);
    record_fit(ctx, fit.report);
    write_model(join(ctx.outDir, "model.txt"), fit.model);
    const CodeMatrix testCodes =
        encode_set(spec0, fit.dict, data.test, coding, ctx.threads);
    Matrix kq;
    if (kind == ClassifierKind::bilinear)
      kq = gram_matrix(spec0, data.train, data.test);
    std::vector<int> preds(static_cast<size_t>(data.test.size()));
    for (Index q = 0; q < data.test.size(); ++q) {
      const Vector kappa =
          kind == ClassifierKind::bilinear ? Vector(kq.col(q)) : Vector();
      preds[static_cast<size_t>(q)] =
          predict(fit.model, testCodes.y.col(q),
                  kind == ClassifierKind::bilinear ? &kappa : nullptr);
    }
    write_labels(join(ctx.outDir, "predictions.txt"), preds);
    record_metrics(ctx, evaluate(preds, data.testLabels));
  } else {
    throw ParseError("pipeline.mode must be residual, nn or supervised");
  }
  ctx.finish("pipeline");
}

}  // namespace kcode
