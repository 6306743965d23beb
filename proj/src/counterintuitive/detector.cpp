#include "flowbench/counterintuitive/detector.hpp"

#include "flowbench/data/dataset.hpp"
#include "flowbench/data/io.hpp"
#include "flowbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flowbench {
namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

Verdict detect(double auroc0, const std::vector<Competitor>& competitors, double beta, double gamma) {
  if (competitors.empty()) throw NoCompetitors("no comparison models");
  check_unit(beta, "beta");
  check_unit(gamma, "gamma");
  check_unit(auroc0, "AUROC");
  Verdict v;
  v.auroc0 = auroc0;
  v.competitors = competitors;
  v.beta = beta;
  v.gamma = gamma;
  v.min_gap = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < competitors.size(); ++i) {
    check_unit(competitors[i].auroc, "competitor AUROC");
    if (competitors[i].auroc > auroc0) {
      v.outperform.push_back(i);
      const double gap = competitors[i].auroc - auroc0;
      v.min_gap = std::isnan(v.min_gap) ? gap : std::min(v.min_gap, gap);
    }
  }
  v.fraction = static_cast<double>(v.outperform.size()) / static_cast<double>(competitors.size());
  v.condition1 = v.fraction > beta;
  v.condition2 = !v.outperform.empty() && v.min_gap > gamma;
  v.counterintuitive = v.condition1 && v.condition2;
  return v;
}

SweepResult sweep(double auroc0, const std::vector<Competitor>& competitors, const std::vector<double>& beta_grid,
                  const std::vector<double>& gamma_grid) {
  if (competitors.empty()) throw NoCompetitors("no comparison models");
  if (beta_grid.empty() || gamma_grid.empty()) throw InvalidArgument("sweep grids must be non-empty");
  SweepResult r;
  r.beta_grid = beta_grid;
  r.gamma_grid = gamma_grid;
  for (double b : beta_grid)
    for (double g : gamma_grid) {
      r.cells.push_back(detect(auroc0, competitors, b, g));
      r.counterintuitive_cells += r.cells.back().counterintuitive;
    }
  const std::size_t n = r.cells.size();
  r.modal_verdict = 2 * r.counterintuitive_cells > n;
  const std::size_t minority = r.modal_verdict ? n - r.counterintuitive_cells : r.counterintuitive_cells;
  r.flip_frequency = static_cast<double>(minority) / static_cast<double>(n);
  return r;
}

std::vector<double> default_beta_grid(std::size_t p) {
  if (p == 0) throw EmptyPool("beta grid for an empty pool");
  std::vector<double> g;
  for (std::size_t k = (p + 1) / 2 + 1; k <= p; ++k) g.push_back(static_cast<double>(k) / static_cast<double>(p));
  if (g.empty()) g.push_back(1.0);
  return g;
}

std::vector<double> default_gamma_grid() { return {0.3, 0.4, 0.5, 0.6}; }

Pool parse_pool(const std::string& name) {
  if (name == "all") return Pool::all;
  if (name == "shallow") return Pool::shallow;
  if (name == "deep") return Pool::deep;
  throw InvalidArgument("unknown pool '" + name + "'");
}

std::string to_string(Pool p) {
  switch (p) {
    case Pool::all: return "all";
    case Pool::shallow: return "shallow";
    case Pool::deep: return "deep";
  }
  return "unknown";
}

std::vector<Competitor> pool_filter(const std::vector<Competitor>& competitors, Pool pool) {
  if (pool == Pool::all) return competitors;
  const std::string tag = to_string(pool);
  std::vector<Competitor> out;
  for (const auto& c : competitors)
    if (c.pool == tag) out.push_back(c);
  if (out.empty()) throw EmptyPool("no competitors tagged '" + tag + "'");
  return out;
}

std::map<std::string, std::string> parse_model_meta(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> meta;
  bool header = false;
  std::size_t name_col = 0, pool_col = 1, row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!header) {
      auto n = std::find(cells.begin(), cells.end(), "name");
      auto p = std::find(cells.begin(), cells.end(), "pool");
      if (n == cells.end() || p == cells.end()) throw ParseError(0, 0, "model metadata needs 'name' and 'pool' columns");
      name_col = static_cast<std::size_t>(n - cells.begin());
      pool_col = static_cast<std::size_t>(p - cells.begin());
      header = true;
      continue;
    }
    ++row;
    if (cells.size() <= std::max(name_col, pool_col)) throw ParseError(row, cells.size(), "missing cells");
    const std::string& pool = cells[pool_col];
    if (!pool.empty() && pool != "shallow" && pool != "deep")
      throw ParseError(row, pool_col, "pool must be 'shallow' or 'deep'");
    meta[cells[name_col]] = pool;
  }
  if (!header) throw EmptyDataset("model metadata file is empty");
  return meta;
}

std::map<std::string, std::string> read_model_meta(const std::filesystem::path& path) {
  return parse_model_meta(read_text_file(path));
}

MatrixSweep sweep_matrix(const AurocMatrix& m, const std::map<std::string, std::string>& meta,
                         const std::string& target, Pool pool, std::vector<double> beta_grid,
                         std::vector<double> gamma_grid) {
  const Index t = m.model_index(target);
  if (t < 0) throw InvalidArgument("target model '" + target + "' is not a column of the AUROC matrix");
  MatrixSweep out;
  out.target = target;
  out.pool = pool;
  std::size_t minority = 0;
  for (Index i = 0; i < m.values.rows(); ++i) {
    const std::string& ds = m.datasets[static_cast<std::size_t>(i)];
    if (std::isnan(m.values(i, t))) throw IncompleteMatrix("target AUROC missing on '" + ds + "'");
    std::vector<Competitor> comp;
    for (Index j = 0; j < m.values.cols(); ++j) {
      if (j == t) continue;
      const std::string& name = m.models[static_cast<std::size_t>(j)];
      if (std::isnan(m.values(i, j))) throw IncompleteMatrix("AUROC of '" + name + "' missing on '" + ds + "'");
      auto it = meta.find(name);
      comp.push_back({name, m.values(i, j), it == meta.end() ? "" : it->second});
    }
    comp = pool_filter(comp, pool);
    const auto bg = beta_grid.empty() ? default_beta_grid(comp.size()) : beta_grid;
    const auto gg = gamma_grid.empty() ? default_gamma_grid() : gamma_grid;
    DatasetSweep d{ds, sweep(m.values(i, t), comp, bg, gg)};
    out.counterintuitive_cells += d.result.counterintuitive_cells;
    out.total_cells += d.result.cells.size();
    minority += static_cast<std::size_t>(std::llround(d.result.flip_frequency * static_cast<double>(d.result.cells.size())));
    out.datasets_with_flips += d.result.flip_frequency > 0.0;
    out.datasets.push_back(std::move(d));
  }
  out.flip_frequency = out.total_cells ? static_cast<double>(minority) / static_cast<double>(out.total_cells) : 0.0;
  return out;
}

}  // namespace flowbench
