#include "trimfit/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "trimfit/errors.hpp"

namespace trimfit {

namespace {

// Minimal CSV field splitter: commas, optional double quotes around fields,
// "" as an escaped quote. No embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted)
    throw ParseError("line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(field);
  return out;
}

double parse_double(const std::string& s, int lineno, const std::string& col) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(lineno) + ": column '" + col +
                     "': cannot parse '" + s + "' as a number");
  }
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MEDataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty: no observations");
  const std::vector<std::string> header = split_csv_line(line, 1);

  auto find_col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };

  const int gcol = find_col(schema.group_column);
  if (gcol < 0) throw SchemaError("missing column '" + schema.group_column + "'");
  const int ycol = find_col(schema.y_column);
  if (ycol < 0) throw SchemaError("missing column '" + schema.y_column + "'");
  int scol = -1;
  if (schema.se_column) {
    scol = find_col(*schema.se_column);
    if (scol < 0) throw SchemaError("missing column '" + *schema.se_column + "'");
  }

  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (i == gcol || i == ycol || i == scol) continue;
    cov_cols.push_back(i);
    cov_names.push_back(header[static_cast<size_t>(i)]);
  }

  struct Rows {
    std::vector<double> y, se;
    std::vector<std::vector<double>> cov;  // one vector per row
  };
  std::vector<std::string> order;
  std::map<std::string, Rows> by_group;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line, lineno);
    if (f.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(f.size()));
    const std::string& gid = f[static_cast<size_t>(gcol)];
    auto it = by_group.find(gid);
    if (it == by_group.end()) {
      order.push_back(gid);
      it = by_group.emplace(gid, Rows{}).first;
    }
    Rows& rows = it->second;
    rows.y.push_back(parse_double(f[static_cast<size_t>(ycol)], lineno, schema.y_column));
    if (scol >= 0) {
      double se = parse_double(f[static_cast<size_t>(scol)], lineno, *schema.se_column);
      if (!(se > 0.0))
        throw ValidationError("line " + std::to_string(lineno) + ": se must be > 0");
      rows.se.push_back(se);
    }
    std::vector<double> cov(cov_cols.size());
    for (size_t c = 0; c < cov_cols.size(); ++c)
      cov[c] = parse_double(f[static_cast<size_t>(cov_cols[c])], lineno, cov_names[c]);
    rows.cov.push_back(std::move(cov));
  }
  if (order.empty()) throw ParseError("'" + path + "' contains no observations");

  std::vector<int> z_idx;
  for (const std::string& zc : schema.z_columns) {
    auto it = std::find(cov_names.begin(), cov_names.end(), zc);
    if (it == cov_names.end())
      throw SchemaError("z column '" + zc + "' is not a covariate column");
    z_idx.push_back(static_cast<int>(it - cov_names.begin()));
  }

  std::vector<Group> groups;
  groups.reserve(order.size());
  for (const std::string& gid : order) {
    const Rows& rows = by_group[gid];
    const int n = static_cast<int>(rows.y.size());
    Group g;
    g.id = gid;
    g.y = Eigen::Map<const Eigen::VectorXd>(rows.y.data(), n);
    if (!rows.se.empty()) g.se = Eigen::Map<const Eigen::VectorXd>(rows.se.data(), n);
    g.covariates.resize(n, static_cast<int>(cov_names.size()));
    for (int r = 0; r < n; ++r)
      for (size_t c = 0; c < cov_names.size(); ++c)
        g.covariates(r, static_cast<int>(c)) = rows.cov[static_cast<size_t>(r)][c];
    if (z_idx.empty()) {
      g.Z = Eigen::MatrixXd::Ones(n, 1);
    } else {
      g.Z.resize(n, static_cast<int>(z_idx.size()));
      for (size_t c = 0; c < z_idx.size(); ++c) g.Z.col(static_cast<int>(c)) = g.covariates.col(z_idx[c]);
    }
    groups.push_back(std::move(g));
  }
  return MEDataset(std::move(groups), std::move(cov_names));
}

void save_dataset(const MEDataset& data, const CsvSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");

  out << quote(schema.group_column) << ',' << quote(schema.y_column);
  if (schema.se_column) out << ',' << quote(*schema.se_column);
  for (const std::string& c : data.covariate_names()) out << ',' << quote(c);
  out << '\n';

  if (schema.se_column && !data.has_se())
    throw SchemaError("schema names an se column but the dataset has no se");

  for (const Group& g : data.groups()) {
    for (int r = 0; r < g.n(); ++r) {
      out << quote(g.id) << ',' << format_g17(g.y[r]);
      if (schema.se_column) out << ',' << format_g17(g.se[r]);
      for (int c = 0; c < g.covariates.cols(); ++c) out << ',' << format_g17(g.covariates(r, c));
      out << '\n';
    }
  }
}

}  // namespace trimfit
