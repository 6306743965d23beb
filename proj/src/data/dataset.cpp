#include "flowbench/data/dataset.hpp"

#include "flowbench/data/io.hpp"
#include "flowbench/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace flowbench {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_number(const std::string& cell, double& out) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (b != e && *b == '+') ++b;
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

}  // namespace

Index LabeledDataset::count(int label) const {
  return static_cast<Index>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

LabeledDataset parse_csv(const std::string& text, const std::string& label_column, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t label_idx = 0;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (!have_header) {
      header = std::move(cells);
      auto it = std::find(header.begin(), header.end(), label_column);
      if (it == header.end()) throw MissingLabelColumn("no column named '" + label_column + "'");
      label_idx = static_cast<std::size_t>(it - header.begin());
      have_header = true;
      continue;
    }
    ++row_no;
    if (cells.size() != header.size())
      throw ParseError(row_no, std::min(cells.size(), header.size()),
                       "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    std::vector<double> feats;
    feats.reserve(header.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v)) throw ParseError(row_no, c, "'" + cells[c] + "' is not a finite number");
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0) throw ParseError(row_no, c, "label must be 0 or 1");
        labels.push_back(static_cast<int>(v));
      } else {
        feats.push_back(v);
      }
    }
    rows.push_back(std::move(feats));
  }
  if (!have_header) throw EmptyDataset("no header row");
  if (rows.empty()) throw EmptyDataset("no data rows");
  LabeledDataset ds;
  ds.name = name;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) ds.feature_names.push_back(header[c]);
  ds.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(ds.feature_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  ds.labels = std::move(labels);
  return ds;
}

LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  return parse_csv(read_text_file(path), label_column, path.stem().string());
}

std::string to_csv(const Matrix& x, const std::vector<std::string>& names, const std::vector<int>* labels,
                   const std::string& label_column) {
  if (static_cast<Index>(names.size()) != x.cols()) throw DimMismatch("column names do not match matrix");
  if (labels && static_cast<Index>(labels->size()) != x.rows()) throw DimMismatch("labels do not match rows");
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) out += (c ? "," : "") + names[c];
  if (labels) out += (names.empty() ? "" : ",") + label_column;
  out += '\n';
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      if (c) out += ',';
      out += format_double(x(r, c));
    }
    if (labels) out += (x.cols() ? "," : "") + std::to_string((*labels)[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  return out;
}

}  // namespace flowbench
