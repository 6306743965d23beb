#include "flowbench/scoring/metrics.hpp"

#include "flowbench/data/dataset.hpp"
#include "flowbench/data/io.hpp"
#include "flowbench/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flowbench {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimMismatch("scores and labels differ in length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw InvalidArgument("score " + std::to_string(i) + " is not finite");
    pos += static_cast<std::size_t>(labels[i]);
  }
  if (pos == 0 || pos == labels.size()) throw SingleClass("need both normal and anomalous rows");
}

// Indices sorted by descending value; ties keep input order.
std::vector<std::size_t> order_desc(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// Mean (1-based) ranks in ascending order of v.
std::vector<double> midranks_ascending(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
    i = j + 1;
  }
  return r;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::vector<double> r = midranks_ascending(scores);
  double rank_sum = 0.0, n_pos = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (labels[i] == 1) {
      rank_sum += r[i];
      n_pos += 1.0;
    }
  const double n_neg = static_cast<double>(r.size()) - n_pos;
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto idx = order_desc(scores);
  double n_pos = 0.0;
  for (int l : labels) n_pos += l;
  double tp = 0.0, seen = 0.0, ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]];
      seen += 1.0;
      ++j;
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, std::uint64_t seed) {
  EvalReport r;
  r.auroc = auroc(scores, labels);
  r.auprc = auprc(scores, labels);
  for (int l : labels) (l ? r.n_anomaly : r.n_normal) += 1;
  r.seed = seed;
  return r;
}

Index AurocMatrix::model_index(const std::string& name) const {
  auto it = std::find(models.begin(), models.end(), name);
  return it == models.end() ? -1 : static_cast<Index>(it - models.begin());
}

AurocMatrix parse_auroc_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  AurocMatrix m;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (!have_header) {
      if (cells.size() < 2) throw ParseError(0, 0, "AUROC matrix needs a dataset column and at least one model");
      m.models.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    ++row_no;
    if (cells.size() != m.models.size() + 1)
      throw ParseError(row_no, std::min(cells.size(), m.models.size() + 1), "wrong number of cells");
    m.datasets.push_back(cells[0]);
    std::vector<double> vals;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      if (s.empty() || s == "NA" || s == "nan" || s == "NaN" || s == "-") {
        vals.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !(v >= 0.0 && v <= 1.0))
        throw ParseError(row_no, c, "'" + s + "' is not an AUROC in [0, 1]");
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  if (!have_header || rows.empty()) throw EmptyDataset("AUROC matrix has no rows");
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m.models.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

AurocMatrix read_auroc_matrix(const std::filesystem::path& path) {
  return parse_auroc_matrix(read_text_file(path));
}

RankTable rank_table(const AurocMatrix& m, double fail_threshold) {
  const Index nd = m.values.rows(), nm = m.values.cols();
  if (nd == 0 || nm == 0) throw EmptyDataset("empty AUROC matrix");
  for (Index i = 0; i < nd; ++i)
    for (Index j = 0; j < nm; ++j)
      if (std::isnan(m.values(i, j)))
        throw IncompleteMatrix("missing AUROC for model '" + m.models[static_cast<std::size_t>(j)] +
                               "' on dataset '" + m.datasets[static_cast<std::size_t>(i)] + "'");
  RankTable t;
  t.models = m.models;
  t.datasets = m.datasets;
  t.fail_threshold = fail_threshold;
  t.ranks.resize(nd, nm);
  for (Index i = 0; i < nd; ++i) {
    // Descending AUROC: rank ascending on the negated values.
    std::vector<double> neg(static_cast<std::size_t>(nm));
    for (Index j = 0; j < nm; ++j) neg[static_cast<std::size_t>(j)] = -m.values(i, j);
    const std::vector<double> r = midranks_ascending(neg);
    for (Index j = 0; j < nm; ++j) t.ranks(i, j) = r[static_cast<std::size_t>(j)];
  }
  t.avg_rank = t.ranks.colwise().mean().transpose();
  t.top2_ratio = (t.ranks.array() <= 2.0).cast<double>().colwise().mean().transpose();
  t.fail_ratio = (t.ranks.array() >= fail_threshold).cast<double>().colwise().mean().transpose();
  return t;
}

}  // namespace flowbench
