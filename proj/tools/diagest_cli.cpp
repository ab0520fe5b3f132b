// Command-line driver: synthetic matrix generation, single-method diagonal
// estimation, benchmark suites, graph triangle counting, and the bound
// calculators, all writing deterministic CSV keyed by --seed.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diagest/diagest.hpp"

using namespace diagest;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace {

// ---------------------------------------------------------------------------
// CSV output

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ResultRow {
  std::string method;
  std::string kind;
  Index n = 0;
  double eps = 0;
  double delta = 0;
  std::string trial;  // index or "mean"
  long long k = 0;
  long long m = 0;
  long long matvecs = 0;
  double relative_error = 0;
  double wall_time = 0;
};

const char* kRowHeader = "method,kind,n,eps,delta,trial,k,m,matvecs,relative_error,wall_time";

void write_rows(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot open output file '" + path + "'");
  out << kRowHeader << "\n";
  for (const auto& r : rows) {
    out << r.method << "," << r.kind << "," << r.n << "," << fmt17(r.eps) << ","
        << fmt17(r.delta) << "," << r.trial << "," << r.k << "," << r.m << "," << r.matvecs
        << "," << fmt17(r.relative_error) << "," << fmt17(r.wall_time) << "\n";
  }
}

ResultRow mean_row(const std::vector<ResultRow>& rows) {
  ResultRow m = rows.front();
  m.trial = "mean";
  double k = 0, mm = 0, mv = 0, err = 0, wt = 0;
  for (const auto& r : rows) {
    k += double(r.k);
    mm += double(r.m);
    mv += double(r.matvecs);
    err += r.relative_error;
    wt += r.wall_time;
  }
  const double c = double(rows.size());
  m.k = (long long)std::llround(k / c);
  m.m = (long long)std::llround(mm / c);
  m.matvecs = (long long)std::llround(mv / c);
  m.relative_error = err / c;
  m.wall_time = wt / c;
  return m;
}

// ---------------------------------------------------------------------------
// Problem sources

struct Problem {
  std::unique_ptr<LinearOperatorD> op;
  Vec diagonal;       // exact diagonal of the estimated operator
  double fro_sq = 0;  // exact ||A||_F^2
  std::string kind;
};

SpectrumKind parse_kind(const std::string& s) {
  if (s == "flat") return SpectrumKind::flat;
  if (s == "poly") return SpectrumKind::poly;
  if (s == "exp") return SpectrumKind::exp_decay;
  if (s == "step") return SpectrumKind::step;
  if (s == "randint") return SpectrumKind::randint;
  throw invalid_input(std::string() +"unknown kind '" + s + "'");
}

Problem make_synth_problem(const std::string& kind, Index n, std::uint64_t seed) {
  SpectrumSpecD spec{parse_kind(kind), n};
  Problem p;
  p.kind = kind;
  if (n <= 8192) {
    auto sm = synth_matrix(spec, seed);
    p.diagonal = sm.diagonal;
    p.fro_sq = sm.eigenvalues.squaredNorm();
    p.op = std::make_unique<DenseOperatorD>(std::move(sm.dense), "synth-" + kind);
  } else {
    auto op = std::make_unique<SynthOperatorD>(spec, seed);
    p.diagonal = op->diagonal();
    p.fro_sq = op->frobenius_norm_sq();
    p.op = std::move(op);
  }
  return p;
}

Problem make_file_problem(const std::string& path) {
  Problem p;
  p.kind = "file";
  auto data = read_matrix_market<double>(path);
  if (std::holds_alternative<Mat>(data)) {
    Mat m = std::get<Mat>(std::move(data));
    detail::require(m.rows() == m.cols(), "estimate: matrix file must be square");
    p.diagonal = m.diagonal();
    p.fro_sq = m.squaredNorm();
    p.op = std::make_unique<DenseOperatorD>(std::move(m), "file");
  } else {
    Sparse s = std::get<Sparse>(std::move(data));
    detail::require(s.rows() == s.cols(), "estimate: matrix file must be square");
    auto op = std::make_unique<SparseOperatorD>(std::move(s), false, "file");
    p.diagonal = op->diagonal();
    p.fro_sq = op->frobenius_norm_sq();
    p.op = std::move(op);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Shared method dispatch

struct MethodConfig {
  std::string method;
  double eps_rel = 0.25;
  std::optional<double> eps_abs;
  double delta = 0.01;
  long long matvecs = 0;  // budget (m, m~, or adaptive m_max depending on method)
  Index k = 0;
  bool timing = false;
};

struct RunOutput {
  Vec diagonal;
  long long k = 0, m = 0, matvecs = 0;
  std::vector<TraceRow<double>> trace;
};

double resolve_eps_abs(const MethodConfig& cfg, const Vec& diagonal) {
  if (cfg.eps_abs) return *cfg.eps_abs;
  const double scale = diagonal.norm();
  detail::require(scale > 0, "relative eps needs a nonzero exact diagonal; use --eps-absolute");
  return cfg.eps_rel * scale;
}

RunOutput run_method(const Problem& p, const MethodConfig& cfg, std::uint64_t seed) {
  const Index n = p.op->dim();
  const auto dist = cfg.method == "xdiag-r" ? ProbeDistribution::rademacher
                                            : ProbeDistribution::gaussian;
  ProbeStreamD probes(seed, dist, n);
  RunOutput out;
  const long long before = p.op->matvec_count();

  if (cfg.method == "exact") {
    auto r = exact_diagonal(*p.op);
    out.diagonal = r.diagonal;
    out.m = r.matvecs_used;
  } else if (cfg.method == "bekas" || cfg.method == "generalized") {
    detail::require(cfg.matvecs >= 1, "--matvecs must be >= 1 for " + cfg.method);
    auto r = cfg.method == "bekas" ? bekas_estimate(*p.op, probes, Index(cfg.matvecs))
                                   : generalized_estimate(*p.op, probes, Index(cfg.matvecs));
    out.diagonal = r.diagonal;
    out.m = r.matvecs_used;
  } else if (cfg.method == "diagpp") {
    detail::require(cfg.matvecs >= 3, "--matvecs must be >= 3 for diagpp");
    auto r = diagpp_estimate(*p.op, Index(cfg.matvecs), probes);
    out.diagonal = r.diagonal;
    out.k = cfg.matvecs / 3;
    out.m = cfg.matvecs - 2 * (cfg.matvecs / 3);
  } else if (cfg.method == "xdiag-g" || cfg.method == "xdiag-r") {
    detail::require(cfg.matvecs >= 2, "--matvecs must be >= 2 for xdiag");
    auto r = xdiag_estimate(*p.op, Index(cfg.matvecs - cfg.matvecs % 2), probes);
    out.diagonal = r.diagonal;
    out.m = r.matvecs_used / 2;
  } else if (cfg.method == "prototype") {
    ErrorBudgetD budget(resolve_eps_abs(cfg, p.diagonal), cfg.delta, n);
    PrototypeOptions<double> popts;
    if (cfg.matvecs > 0) popts.m_max = cfg.matvecs;
    auto r = prototype_estimate(*p.op, budget, cfg.k, probes, popts);
    out.diagonal = r.diagonal;
    out.k = r.k_chosen;
    out.m = r.m_used;
    out.trace = r.trace;
  } else if (cfg.method == "adaptive") {
    ErrorBudgetD budget(resolve_eps_abs(cfg, p.diagonal), cfg.delta, n);
    AdaptiveOptionsD opts;
    if (cfg.matvecs > 0) opts.m_max = cfg.matvecs;
    if (p.fro_sq > 0) {
      opts.constants.fro_norm_sq = p.fro_sq;
      opts.constants.diagonal = p.diagonal;
    }
    auto r = adaptive_estimate(*p.op, budget, probes, opts);
    out.diagonal = r.diagonal;
    out.k = r.k_chosen;
    out.m = r.m_used;
    out.trace = std::move(r.trace);
  } else {
    throw invalid_input(std::string() +"unknown method '" + cfg.method + "'");
  }
  out.matvecs = p.op->matvec_count() - before;
  return out;
}

void write_trace(const std::string& path, const std::vector<TraceRow<double>>& trace) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot open trace file '" + path + "'");
  out << "stage,index,value,matvecs\n";
  for (const auto& t : trace)
    out << t.stage << "," << t.index << "," << fmt17(t.value) << "," << t.matvecs << "\n";
}

// ---------------------------------------------------------------------------
// Commands

struct CommonArgs {
  std::string kind = "exp";
  Index n = 1000;
  std::string matrix_path, graph_path, out_path, trace_path, counts_path;
  std::string method = "adaptive";
  std::string suite;
  double eps = 0.25;
  double eps_absolute = 0.0;
  double delta = 0.01;
  std::uint64_t seed = 1;
  int trials = 1;
  long long matvecs = 0;
  Index k = 0;
  bool timing = false;
};

MethodConfig method_config(const CommonArgs& a) {
  MethodConfig cfg;
  cfg.method = a.method;
  cfg.eps_rel = a.eps;
  if (a.eps_absolute > 0) cfg.eps_abs = a.eps_absolute;
  cfg.delta = a.delta;
  cfg.matvecs = a.matvecs;
  cfg.k = a.k;
  cfg.timing = a.timing;
  return cfg;
}

int cmd_synth(const CommonArgs& a) {
  detail::require(!a.out_path.empty(), "synth: --out is required");
  SpectrumSpecD spec{parse_kind(a.kind), a.n};
  auto sm = synth_matrix(spec, a.seed);
  write_matrix_market(a.out_path, sm.dense);
  if (!a.counts_path.empty()) {
    std::ofstream out(a.counts_path);
    out << "index,value\n";
    for (Index i = 0; i < a.n; ++i) out << i << "," << fmt17(sm.diagonal[i]) << "\n";
  }
  std::cout << "wrote " << a.n << "x" << a.n << " " << a.kind << " matrix to " << a.out_path
            << "\n";
  return 0;
}

int cmd_estimate(const CommonArgs& a) {
  detail::require(!a.out_path.empty(), "estimate: --out is required");
  detail::require(a.trials >= 1, "estimate: --trials must be >= 1");
  Problem p = a.matrix_path.empty() ? make_synth_problem(a.kind, a.n, derive_seed(a.seed, 0xA))
                                    : make_file_problem(a.matrix_path);
  MethodConfig cfg = method_config(a);
  std::vector<ResultRow> rows;
  for (int t = 0; t < a.trials; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutput r = run_method(p, cfg, derive_seed(a.seed, 0x7000 + t));
    const auto t1 = std::chrono::steady_clock::now();
    ResultRow row;
    row.method = a.method;
    row.kind = p.kind;
    row.n = p.op->dim();
    row.eps = cfg.eps_abs ? *cfg.eps_abs : cfg.eps_rel;
    row.delta = cfg.delta;
    row.trial = std::to_string(t);
    row.k = r.k;
    row.m = r.m;
    row.matvecs = r.matvecs;
    row.relative_error = (r.diagonal - p.diagonal).norm() / p.diagonal.norm();
    row.wall_time = a.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
    rows.push_back(row);
    if (!a.trace_path.empty() && t == 0) write_trace(a.trace_path, r.trace);
  }
  rows.push_back(mean_row(rows));
  write_rows(a.out_path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << a.out_path << "\n";
  return 0;
}

int cmd_bounds(const CommonArgs& a, double fro) {
  ErrorBudgetD budget(a.eps_absolute > 0 ? a.eps_absolute : a.eps, a.delta, a.n);
  const long long g = g_query_count(budget, fro);
  const double l23 = lemma23_bound(budget, fro);
  const long long bas = baston_reference_bound(budget);
  std::printf("%-10s %-22s %-22s %-22s\n", "F", "g_query_count", "lemma23_bound",
              "baston_reference");
  std::printf("%-10s %-22lld %-22s %-22lld\n", fmt17(fro).c_str(), g, fmt17(l23).c_str(), bas);
  if (!a.out_path.empty()) {
    std::ofstream out(a.out_path);
    out << "eps,delta,n,F,g_query_count,lemma23_bound,baston_reference\n";
    out << fmt17(budget.eps) << "," << fmt17(budget.delta) << "," << a.n << "," << fmt17(fro)
        << "," << g << "," << fmt17(l23) << "," << bas << "\n";
  }
  return 0;
}

int cmd_triangles(const CommonArgs& a) {
  detail::require(!a.graph_path.empty(), "triangles: --graph is required");
  detail::require(a.trials >= 1, "triangles: --trials must be >= 1");
  auto g = load_edge_list<double>(a.graph_path);
  const Index n = g.node_count;

  // Exact counts back both the relative-error column and the eps conversion.
  SparseOperatorD adj(g.adjacency, true, "adjacency");
  PowerOperatorD cube(adj, 3);
  Vec exact = exact_diagonal(cube).diagonal / 2.0;
  if (!a.counts_path.empty()) {
    std::ofstream out(a.counts_path);
    out << "vertex,original_id,triangles\n";
    for (Index i = 0; i < n; ++i)
      out << i << "," << g.original_ids[i] << "," << fmt17(exact[i]) << "\n";
  }
  if (a.method == "exact") {
    std::cout << "total triangles: " << fmt17(exact.sum() / 3.0) << " over " << n
              << " vertices\n";
    return 0;
  }

  detail::require(!a.out_path.empty(), "triangles: --out is required for stochastic methods");
  const double eps_abs =
      a.eps_absolute > 0 ? a.eps_absolute : a.eps * Vec(2.0 * exact).norm();
  std::vector<ResultRow> rows;
  for (int t = 0; t < a.trials; ++t) {
    ProbeStreamD probes(derive_seed(a.seed, 0x3000 + t),
                        a.method == "xdiag-r" ? ProbeDistribution::rademacher
                                              : ProbeDistribution::gaussian,
                        n);
    TriangleMethod m;
    if (a.method == "adaptive") m = TriangleMethod::adaptive;
    else if (a.method == "bekas") m = TriangleMethod::bekas;
    else if (a.method == "diagpp") m = TriangleMethod::diagpp;
    else if (a.method == "xdiag-g" || a.method == "xdiag-r") m = TriangleMethod::xdiag;
    else throw invalid_input(std::string() +"unsupported triangles method '" + a.method + "'");

    ErrorBudgetD budget(eps_abs, a.delta, n);
    const long long budget_mv = a.matvecs > 0 ? a.matvecs : 10 * n;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = triangle_counts(g, m, budget, probes, Index(budget_mv));
    const auto t1 = std::chrono::steady_clock::now();
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    ResultRow row;
    row.method = a.method;
    row.kind = "graph";
    row.n = n;
    row.eps = eps_abs;
    row.delta = a.delta;
    row.trial = std::to_string(t);
    row.k = res.k;
    row.m = res.m;
    row.matvecs = res.base_matvecs;
    row.relative_error = (res.counts - exact).norm() / exact.norm();
    row.wall_time = a.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
    rows.push_back(row);
  }
  rows.push_back(mean_row(rows));
  write_rows(a.out_path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << a.out_path << "\n";
  return 0;
}

// The comparison protocol: the adaptive run sets the budget, comparators
// consume exactly that budget (xdiag rounds down to even).
void run_comparison_rows(const Problem& p, double eps_rel, double delta, std::uint64_t seed,
                         int trials, std::vector<ResultRow>& rows,
                         const std::vector<std::string>& methods) {
  const Index n = p.op->dim();
  const double eps_abs = eps_rel * p.diagonal.norm();
  std::map<std::string, std::vector<ResultRow>> per_method;
  for (int t = 0; t < trials; ++t) {
    MethodConfig ada;
    ada.method = "adaptive";
    ada.eps_abs = eps_abs;
    ada.delta = delta;
    RunOutput a = run_method(p, ada, derive_seed(seed, 0x100 + t));
    ResultRow row;
    row.kind = p.kind;
    row.n = n;
    row.eps = eps_rel;
    row.delta = delta;
    row.trial = std::to_string(t);
    row.method = "adaptive";
    row.k = a.k;
    row.m = a.m;
    row.matvecs = a.matvecs;
    row.relative_error = (a.diagonal - p.diagonal).norm() / p.diagonal.norm();
    per_method["adaptive"].push_back(row);

    const long long budget = a.matvecs;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string& name = methods[mi];
      MethodConfig cfg;
      cfg.method = name;
      cfg.eps_abs = eps_abs;
      cfg.delta = delta;
      cfg.matvecs = budget;
      RunOutput r = run_method(p, cfg, derive_seed(seed, 0x9100 + 64 * t + mi));
      if (std::llabs(r.matvecs - budget) > 2)
        throw numerical_error("budget parity violated for " + name + ": used " +
                              std::to_string(r.matvecs) + " vs " + std::to_string(budget));
      ResultRow rr = row;
      rr.method = name;
      rr.k = r.k;
      rr.m = r.m;
      rr.matvecs = r.matvecs;
      rr.relative_error = (r.diagonal - p.diagonal).norm() / p.diagonal.norm();
      per_method[name].push_back(rr);
    }
  }
  for (auto& [name, mrows] : per_method) {
    for (const auto& r : mrows) rows.push_back(r);
    rows.push_back(mean_row(mrows));
  }
}

int cmd_bench(const CommonArgs& a) {
  detail::require(!a.out_path.empty(), "bench: --out is required");
  const int trials = a.trials;
  std::vector<ResultRow> rows;

  auto adaptive_rows = [&](const Problem& p, double eps_rel, std::uint64_t salt) {
    const double eps_abs = eps_rel * p.diagonal.norm();
    std::vector<ResultRow> local;
    for (int t = 0; t < trials; ++t) {
      MethodConfig cfg;
      cfg.method = "adaptive";
      cfg.eps_abs = eps_abs;
      cfg.delta = a.delta;
      RunOutput r = run_method(p, cfg, derive_seed(a.seed, salt + t));
      ResultRow row;
      row.method = "adaptive";
      row.kind = p.kind;
      row.n = p.op->dim();
      row.eps = eps_rel;
      row.delta = a.delta;
      row.trial = std::to_string(t);
      row.k = r.k;
      row.m = r.m;
      row.matvecs = r.matvecs;
      row.relative_error = (r.diagonal - p.diagonal).norm() / p.diagonal.norm();
      local.push_back(row);
    }
    local.push_back(mean_row(local));
    rows.insert(rows.end(), local.begin(), local.end());
  };

  if (a.suite == "table1") {
    std::uint64_t salt = 0x1000;
    for (const std::string kind : {"flat", "poly", "exp", "step"}) {
      Problem p = make_synth_problem(kind, a.n, derive_seed(a.seed, 0xA));
      const int pmax = kind == "flat" ? 5 : 7;
      for (int pw = 2; pw <= pmax; ++pw) adaptive_rows(p, std::pow(2.0, -pw), salt += 0x40);
    }
  } else if (a.suite == "table2" || a.suite == "table3" || a.suite == "table4" ||
             a.suite == "table5") {
    const std::map<std::string, std::string> kind_of{
        {"table2", "flat"}, {"table3", "poly"}, {"table4", "exp"}, {"table5", "step"}};
    const std::string kind = kind_of.at(a.suite);
    Problem p = make_synth_problem(kind, a.n, derive_seed(a.seed, 0xA));
    const int pmax = kind == "flat" ? 5 : 7;
    for (int pw = 2; pw <= pmax; ++pw)
      run_comparison_rows(p, std::pow(2.0, -pw), a.delta, derive_seed(a.seed, 0x2000 + pw),
                          trials, rows, {"bekas", "diagpp", "xdiag-r", "xdiag-g"});
  } else if (a.suite == "figure1") {
    // eigenvalue-concentration experiment: three randint spectra, plain
    // estimator accuracy vs probe count
    const std::vector<std::pair<std::string, std::pair<long, long>>> specs = {
        {"randint-1800-2000", {1800, 2000}},
        {"randint-1000-2000", {1000, 2000}},
        {"randint-0-2000", {0, 2000}}};
    for (const auto& [label, lohi] : specs) {
      SpectrumSpecD spec{SpectrumKind::randint, a.n};
      spec.randint_lo = lohi.first;
      spec.randint_hi = lohi.second;
      auto sm = synth_matrix(spec, derive_seed(a.seed, 0xF1));
      DenseOperatorD op(std::move(sm.dense), label);
      for (Index m : {10L, 20L, 50L, 100L, 200L}) {
        std::vector<ResultRow> local;
        for (int t = 0; t < trials; ++t) {
          ProbeStreamD probes(derive_seed(a.seed, 0x5000 + 131 * m + t),
                              ProbeDistribution::gaussian, a.n);
          auto r = bekas_estimate(op, probes, m);
          ResultRow row;
          row.method = "bekas";
          row.kind = label;
          row.n = a.n;
          row.eps = 0;
          row.delta = a.delta;
          row.trial = std::to_string(t);
          row.m = m;
          row.matvecs = m;
          row.relative_error = (r.diagonal - sm.diagonal).norm() / sm.diagonal.norm();
          local.push_back(row);
        }
        local.push_back(mean_row(local));
        rows.insert(rows.end(), local.begin(), local.end());
      }
    }
  } else if (a.suite == "figure2") {
    // projection-based estimation of the remainder R = A(I-QQ^T) for sketch
    // sizes k in {0,20,40,60}; errors normalized by ||diag(A)||.
    detail::require(a.n <= 8192, "figure2 suite needs a materialized matrix (n <= 8192)");
    for (const std::string kind : {"flat", "poly", "exp", "step"}) {
      Problem p = make_synth_problem(kind, a.n, derive_seed(a.seed, 0xA));
      const auto& dense = dynamic_cast<const DenseOperatorD&>(*p.op).matrix();
      for (Index k : {0L, 20L, 40L, 60L}) {
        for (Index m : {10L, 30L, 100L, 300L}) {
          std::vector<ResultRow> local;
          for (int t = 0; t < trials; ++t) {
            ProbeStreamD probes(derive_seed(a.seed, 0x6000 + 977 * k + 31 * m + t),
                                ProbeDistribution::gaussian, a.n);
            // sketch, then plain estimation of the deflated remainder
            Mat omega = probes.block(k);
            Mat q(dense.rows(), 0);
            if (k > 0) {
              Eigen::ColPivHouseholderQR<Mat> qr(Mat(dense * omega));
              q = qr.householderQ() * Mat::Identity(dense.rows(), qr.rank());
            }
            Vec diag_rem = p.diagonal;
            if (k > 0) diag_rem -= Vec(((dense * q).cwiseProduct(q)).rowwise().sum());
            DiagAccumulator<double> acc(a.n);
            for (Index i = 0; i < m; ++i) {
              Vec w = probes.next();
              Vec y = k > 0 ? Vec(w - q * (q.transpose() * w)) : w;
              acc.add(w, Vec(dense * y));
            }
            ResultRow row;
            row.method = k == 0 ? "wo" : "proj-k" + std::to_string(k);
            row.kind = kind;
            row.n = a.n;
            row.eps = 0;
            row.delta = a.delta;
            row.trial = std::to_string(t);
            row.k = k;
            row.m = m;
            row.matvecs = 2 * k + m;
            row.relative_error = (acc.estimate() - diag_rem).norm() / p.diagonal.norm();
            local.push_back(row);
          }
          local.push_back(mean_row(local));
          rows.insert(rows.end(), local.begin(), local.end());
        }
      }
    }
  } else if (a.suite == "triangles") {
    detail::require(!a.graph_path.empty(), "bench triangles: --graph is required");
    auto g = load_edge_list<double>(a.graph_path);
    SparseOperatorD adj(g.adjacency, true, "adjacency");
    PowerOperatorD cube(adj, 3);
    Problem p;
    p.kind = "graph";
    p.diagonal = exact_diagonal(cube).diagonal;
    p.fro_sq = 0;  // not cheaply available for A^3: adaptive runs sampled
    p.op = std::make_unique<PowerOperatorD>(adj, 3);
    for (int pw = 2; pw <= 4; ++pw)
      run_comparison_rows(p, std::pow(2.0, -pw), a.delta, derive_seed(a.seed, 0x7700 + pw),
                          trials, rows, {"bekas", "diagpp", "xdiag-r"});
  } else {
    throw invalid_input(std::string() +"unknown suite '" + a.suite + "'");
  }

  write_rows(a.out_path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << a.out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix-free stochastic diagonal estimation"};
  app.require_subcommand(1);
  CommonArgs a;

  auto add_common = [&](CLI::App* c, bool with_method) {
    c->add_option("--seed", a.seed, "base seed; all randomness derives from it");
    c->add_option("--eps", a.eps, "relative error target (fraction of ||diag(A)||)")
        ->check(CLI::Range(1e-12, 0.999999));
    c->add_option("--eps-absolute", a.eps_absolute, "absolute error target (overrides --eps)");
    c->add_option("--delta", a.delta, "failure probability")->check(CLI::Range(1e-12, 0.999999));
    c->add_option("--trials", a.trials, "independent repetitions");
    c->add_option("--matvecs", a.matvecs, "matvec budget (m, total budget, or adaptive cap)");
    c->add_option("--out", a.out_path, "output CSV path");
    c->add_flag("--timing", a.timing, "record wall time (breaks byte-level determinism)");
    if (with_method)
      c->add_option("--method", a.method,
                    "bekas|generalized|prototype|adaptive|diagpp|xdiag-g|xdiag-r|exact");
  };

  auto* synth = app.add_subcommand("synth", "generate a test matrix (Matrix Market output)");
  synth->add_option("--kind", a.kind, "flat|poly|exp|step|randint")->required();
  synth->add_option("--n", a.n, "dimension")->required();
  synth->add_option("--seed", a.seed, "generator seed");
  synth->add_option("--out", a.out_path, "output .mtx path")->required();
  synth->add_option("--diag-out", a.counts_path, "also write the exact diagonal as CSV");

  auto* est = app.add_subcommand("estimate", "run one estimator on a matrix");
  add_common(est, true);
  est->add_option("--kind", a.kind, "synthetic spectrum kind");
  est->add_option("--n", a.n, "synthetic dimension");
  est->add_option("--matrix", a.matrix_path, "Matrix Market input (overrides --kind/--n)");
  est->add_option("--k", a.k, "sketch size for --method prototype");
  est->add_option("--trace-out", a.trace_path, "write the first trial's diagnostic trace");

  auto* bench = app.add_subcommand("bench", "reproduce a benchmark suite");
  add_common(bench, false);
  bench->add_option("--suite", a.suite,
                    "table1|table2|table3|table4|table5|figure1|figure2|triangles")
      ->required();
  bench->add_option("--kind", a.kind, "unused for fixed-kind suites");
  bench->add_option("--n", a.n, "matrix dimension");
  bench->add_option("--graph", a.graph_path, "edge-list path for the triangles suite");

  auto* tri = app.add_subcommand("triangles", "per-vertex triangle counts of a graph");
  add_common(tri, true);
  tri->add_option("--graph", a.graph_path, "SNAP-style edge list")->required();
  tri->add_option("--counts-out", a.counts_path, "write exact per-vertex counts CSV");

  auto* bounds = app.add_subcommand("bounds", "query-count bound calculators");
  bounds->add_option("--eps", a.eps, "error target")->check(CLI::Range(1e-12, 0.999999));
  bounds->add_option("--eps-absolute", a.eps_absolute, "absolute error target");
  bounds->add_option("--delta", a.delta, "failure probability")
      ->check(CLI::Range(1e-12, 0.999999));
  bounds->add_option("--n", a.n, "dimension")->required();
  double fro = 1.0;
  bounds->add_option("--fro", fro, "off-diagonal Frobenius norm F")->required();
  bounds->add_option("--out", a.out_path, "optional CSV output");

  if (a.trials < 1) a.trials = 1;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(a);
    if (est->parsed()) return cmd_estimate(a);
    if (bench->parsed()) {
      if (bench->count("--trials") == 0) a.trials = 20;
      return cmd_bench(a);
    }
    if (tri->parsed()) return cmd_triangles(a);
    if (bounds->parsed()) return cmd_bounds(a, fro);
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
