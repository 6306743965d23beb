#pragma once

#include "flowbench/scoring/metrics.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flowbench {

struct Competitor {
  std::string name;
  double auroc = 0.0;
  std::string pool;  // "shallow", "deep" or empty when untagged
};

/// Outcome of testing one likelihood-only AUROC against a competitor cohort.
struct Verdict {
  double auroc0 = 0.0;
  std::vector<Competitor> competitors;
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<std::size_t> outperform;  // indices into competitors with AUROC > auroc0
  double fraction = 0.0;                // |outperform| / k
  bool condition1 = false;              // fraction > beta
  double min_gap = 0.0;                 // over the outperform set; NaN when it is empty
  bool condition2 = false;              // min_gap > gamma
  bool counterintuitive = false;
};

Verdict detect(double auroc0, const std::vector<Competitor>& competitors, double beta, double gamma);

struct SweepResult {
  std::vector<double> beta_grid;
  std::vector<double> gamma_grid;
  std::vector<Verdict> cells;  // beta-major
  bool modal_verdict = false;
  double flip_frequency = 0.0;
  std::size_t counterintuitive_cells = 0;

  const Verdict& at(std::size_t bi, std::size_t gi) const { return cells[bi * gamma_grid.size() + gi]; }
};

/// Verdicts over every (beta, gamma) pair. The modal verdict breaks an even
/// split towards "not counterintuitive".
SweepResult sweep(double auroc0, const std::vector<Competitor>& competitors, const std::vector<double>& beta_grid,
                  const std::vector<double>& gamma_grid);

/// {(ceil(p/2) + 1)/p, ..., p/p}; for 13 competitors this is 8/13 .. 1.
std::vector<double> default_beta_grid(std::size_t pool_size);
std::vector<double> default_gamma_grid();

enum class Pool { all, shallow, deep };
Pool parse_pool(const std::string& name);
std::string to_string(Pool p);

std::vector<Competitor> pool_filter(const std::vector<Competitor>& competitors, Pool pool);

/// name -> pool tag, from a CSV with columns name,pool.
std::map<std::string, std::string> read_model_meta(const std::filesystem::path& path);
std::map<std::string, std::string> parse_model_meta(const std::string& text);

struct DatasetSweep {
  std::string dataset;
  SweepResult result;
};

struct MatrixSweep {
  std::string target;
  Pool pool = Pool::all;
  std::vector<DatasetSweep> datasets;
  std::size_t counterintuitive_cells = 0;
  std::size_t total_cells = 0;
  double flip_frequency = 0.0;  // over all (dataset, cell) verdicts
  std::size_t datasets_with_flips = 0;
};

/// Runs the sweep for `target` on every dataset of the matrix. Empty grids
/// select the defaults for the filtered pool size.
MatrixSweep sweep_matrix(const AurocMatrix& m, const std::map<std::string, std::string>& meta,
                         const std::string& target, Pool pool, std::vector<double> beta_grid = {},
                         std::vector<double> gamma_grid = {});

}  // namespace flowbench
