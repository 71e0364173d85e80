#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "credalboot/bootstrap.hpp"
#include "credalboot/core.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/em.hpp"
#include "credalboot/gmm.hpp"
#include "credalboot/irqp.hpp"

namespace credalboot::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------- CSV input

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  for (auto cell : split(line)) {
    double v = 0.0;
    if (!parse_double(cell, v)) return false;
    out.push_back(v);
  }
  return true;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  return out;
}

// Numeric table with an optional header row; blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;
};

inline Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  int line_no = 0;
  bool first = true;
  std::vector<double> values;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!parse_row(line, values)) {
      if (first) {
        for (auto cell : split(line)) t.header.emplace_back(cell);
        width = t.header.size();
        first = false;
        continue;
      }
      throw Error(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw Error(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, found " +
                                        std::to_string(values.size()));
    first = false;
    t.rows.push_back(values);
    t.line_numbers.push_back(line_no);
  }
  if (t.rows.empty()) throw Error(ErrorKind::parse, source + ": no data rows");
  return t;
}

inline int as_index(double v, int line, const std::string& source) {
  if (v != std::floor(v) || v < 1.0 || v > 2147483647.0)
    throw Error(ErrorKind::parse, source + ":" + std::to_string(line) + ": index must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Rectangular numeric CSV, ',' separated, optional single header row
/// (a header is present iff the first row does not parse as numbers).
inline Dataset load_csv(std::istream& in, const std::string& source = "<stream>") {
  const auto t = detail::read_table(in, source);
  Matrix x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.rows.front().size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t k = 0; k < t.rows[i].size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = t.rows[i][k];
  return Dataset(std::move(x));
}

inline Dataset load_csv(const std::string& path) {
  auto in = detail::open_in(path);
  return load_csv(in, path);
}

/// Integer labels, one per line (single column, optional header).
inline std::vector<int> load_labels(const std::string& path) {
  auto in = detail::open_in(path);
  const auto t = detail::read_table(in, path);
  std::vector<int> labels;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != 1) throw Error(ErrorKind::parse, path + ":" + std::to_string(t.line_numbers[r]) + ": expected one label");
    const double v = t.rows[r][0];
    if (v != std::floor(v)) throw Error(ErrorKind::parse, path + ":" + std::to_string(t.line_numbers[r]) + ": label must be an integer");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  for (int k = 0; k < data.d(); ++k) os << (k ? ",x" : "x") << k + 1;
  os << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < data.d(); ++k) os << (k ? "," : "") << detail::fmt(data.rows()(i, k));
    os << '\n';
  }
}

inline void write_labels_csv(std::ostream& os, std::span<const int> labels) {
  os << "label\n";
  for (int l : labels) os << l << '\n';
}

// ---------------------------------------------------------------- fit JSON

struct FitRecord {
  MixtureParams params;
  double log_likelihood = 0.0;
  double bic = 0.0;
  int n = 0;
  int n_iter = 0;
  bool converged = false;
};

inline json fit_to_json(const FitResult& fit, int n) {
  const auto& p = fit.params;
  json j;
  j["format"] = "credalboot.fit";
  j["version"] = kFormatVersion;
  j["model"] = std::string(to_string(p.tag()));
  j["c"] = p.c();
  j["d"] = p.d();
  j["n"] = n;
  j["log_likelihood"] = fit.log_likelihood;
  j["bic"] = fit.bic;
  j["n_iter"] = fit.n_iter;
  j["converged"] = fit.converged;
  j["weights"] = std::vector<double>(p.weights().data(), p.weights().data() + p.c());
  json means = json::array();
  json covs = json::array();
  for (int k = 0; k < p.c(); ++k) {
    means.push_back(std::vector<double>(p.mean(k).data(), p.mean(k).data() + p.d()));
    json rows = json::array();
    for (int a = 0; a < p.d(); ++a) {
      std::vector<double> row(static_cast<std::size_t>(p.d()));
      for (int b = 0; b < p.d(); ++b) row[static_cast<std::size_t>(b)] = p.covariance(k)(a, b);
      rows.push_back(row);
    }
    covs.push_back(rows);
  }
  j["means"] = means;
  j["covariances"] = covs;
  return j;
}

namespace detail {

inline void check_format(const json& j, std::string_view format, const std::string& source) {
  if (!j.is_object() || !j.contains("format") || j["format"] != format)
    throw Error(ErrorKind::parse, source + ": not a " + std::string(format) + " document");
  if (!j.contains("version") || j["version"] != kFormatVersion)
    throw Error(ErrorKind::parse, source + ": unsupported format version");
}

inline json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
}

}  // namespace detail

inline FitRecord fit_from_json(const json& j, const std::string& source = "<json>") {
  detail::check_format(j, "credalboot.fit", source);
  try {
    const auto tag = parse_model_tag(j.at("model").get<std::string>());
    if (!tag) throw Error(ErrorKind::parse, source + ": unknown model tag");
    const int c = j.at("c").get<int>();
    const int d = j.at("d").get<int>();
    const auto w = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != c) throw Error(ErrorKind::parse, source + ": weights length mismatch");
    Vector weights = Eigen::Map<const Vector>(w.data(), c);
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    for (int k = 0; k < c; ++k) {
      const auto mu = j.at("means").at(static_cast<std::size_t>(k)).get<std::vector<double>>();
      if (static_cast<int>(mu.size()) != d) throw Error(ErrorKind::parse, source + ": mean length mismatch");
      means.emplace_back(Eigen::Map<const Vector>(mu.data(), d));
      const auto rows = j.at("covariances").at(static_cast<std::size_t>(k)).get<std::vector<std::vector<double>>>();
      Matrix s(d, d);
      if (static_cast<int>(rows.size()) != d) throw Error(ErrorKind::parse, source + ": covariance shape mismatch");
      for (int a = 0; a < d; ++a) {
        if (static_cast<int>(rows[static_cast<std::size_t>(a)].size()) != d)
          throw Error(ErrorKind::parse, source + ": covariance shape mismatch");
        for (int b = 0; b < d; ++b) s(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      }
      covs.push_back(std::move(s));
    }
    FitRecord r{MixtureParams(std::move(weights), std::move(means), std::move(covs), *tag)};
    r.log_likelihood = j.at("log_likelihood").get<double>();
    r.bic = j.at("bic").get<double>();
    r.n = j.at("n").get<int>();
    r.n_iter = j.at("n_iter").get<int>();
    r.converged = j.at("converged").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, source + ": " + e.what());
  }
}

inline FitRecord read_fit(const std::string& path) { return fit_from_json(detail::read_json(path), path); }

// ---------------------------------------------------------------- intervals CSV

inline void write_intervals_csv(std::ostream& os, const PairwiseIntervalMatrix& ci) {
  os << "i,j,point,lower,upper\n";
  std::size_t p = 0;
  for (int i = 0; i < ci.n; ++i)
    for (int j = i + 1; j < ci.n; ++j, ++p)
      os << i + 1 << ',' << j + 1 << ',' << detail::fmt(ci.point[p]) << ',' << detail::fmt(ci.lower[p]) << ','
         << detail::fmt(ci.upper[p]) << '\n';
}

namespace detail {

// Recovers n from the pair count and checks the (i, j) columns are complete
// and in lexicographic order.
inline int check_pair_columns(const Table& t, const std::string& source) {
  const auto pairs = t.rows.size();
  int n = 2;
  while (pair_count(static_cast<std::size_t>(n)) < pairs) ++n;
  if (pair_count(static_cast<std::size_t>(n)) != pairs)
    throw Error(ErrorKind::parse, source + ": row count is not n(n-1)/2 for any n");
  std::size_t p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++p) {
      const int line = t.line_numbers[p];
      if (as_index(t.rows[p][0], line, source) != i + 1 || as_index(t.rows[p][1], line, source) != j + 1)
        throw Error(ErrorKind::parse, source + ":" + std::to_string(line) + ": pairs must be in lexicographic (i, j) order");
    }
  return n;
}

}  // namespace detail

inline PairwiseIntervalMatrix read_intervals_csv(std::istream& in, const std::string& source = "<stream>") {
  const auto t = detail::read_table(in, source);
  if (t.rows.front().size() != 5) throw Error(ErrorKind::parse, source + ": expected columns i,j,point,lower,upper");
  const int n = detail::check_pair_columns(t, source);
  PairwiseIntervalMatrix ci{n, {}, {}, {}};
  for (const auto& r : t.rows) {
    ci.point.push_back(r[2]);
    ci.lower.push_back(r[3]);
    ci.upper.push_back(r[4]);
  }
  for (std::size_t p = 0; p < ci.size(); ++p)
    if (!(0.0 <= ci.lower[p] && ci.lower[p] <= ci.upper[p] && ci.upper[p] <= 1.0))
      throw Error(ErrorKind::parse, source + ":" + std::to_string(t.line_numbers[p]) + ": interval must satisfy 0 <= lower <= upper <= 1");
  return ci;
}

inline PairwiseIntervalMatrix read_intervals(const std::string& path) {
  auto in = detail::open_in(path);
  return read_intervals_csv(in, path);
}

// ---------------------------------------------------------------- credal partition JSON

inline json cluster_set_json(FocalMask mask) {
  json s = json::array();
  for (int k = 0; k < 32; ++k)
    if ((mask >> k) & 1U) s.push_back(k + 1);
  return s;
}

inline FocalMask cluster_set_from_json(const json& s, int c, const std::string& source) {
  FocalMask m = 0;
  for (const auto& v : s) {
    const int k = v.get<int>();
    if (k < 1 || k > c) throw Error(ErrorKind::parse, source + ": cluster index out of range");
    m |= FocalMask{1} << (k - 1);
  }
  return m;
}

inline json partition_to_json(const CredalPartition& partition, const IrqpTrace* trace = nullptr) {
  json j;
  j["format"] = "credalboot.partition";
  j["version"] = kFormatVersion;
  j["c"] = partition.c();
  j["n"] = partition.n();
  json sets = json::array();
  for (FocalMask m : partition.family().sets()) sets.push_back(cluster_set_json(m));
  j["focal_sets"] = sets;
  json masses = json::array();
  for (int i = 0; i < partition.n(); ++i) masses.push_back(partition.row_vector(i));
  j["masses"] = masses;
  if (trace) {
    j["objective"] = trace->J_values.back();
    j["sweeps"] = trace->n_sweeps;
    j["converged"] = trace->converged;
  }
  return j;
}

inline CredalPartition partition_from_json(const json& j, const std::string& source = "<json>") {
  detail::check_format(j, "credalboot.partition", source);
  try {
    const int c = j.at("c").get<int>();
    std::vector<FocalMask> sets;
    for (const auto& s : j.at("focal_sets")) sets.push_back(cluster_set_from_json(s, c, source));
    const std::vector<FocalMask> as_written = sets;
    auto family = std::make_shared<const FocalSetFamily>(c, std::move(sets));
    if (family->sets() != as_written) throw Error(ErrorKind::parse, source + ": focal sets are not in canonical order");
    const auto rows = j.at("masses").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error(ErrorKind::parse, source + ": no objects");
    Matrix m(static_cast<Eigen::Index>(rows.size()), family->f());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != family->f()) throw Error(ErrorKind::parse, source + ": mass row length mismatch");
      for (int k = 0; k < family->f(); ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    }
    return CredalPartition(std::move(family), std::move(m));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, source + ": " + e.what());
  }
}

inline CredalPartition read_partition(const std::string& path) { return partition_from_json(detail::read_json(path), path); }

// ---------------------------------------------------------------- rough summary JSON

inline json rough_to_json(const RoughSummary& rough, int c) {
  json j;
  j["format"] = "credalboot.rough";
  j["version"] = kFormatVersion;
  j["c"] = c;
  json labels = json::array();
  for (FocalMask m : rough.hard_labels) labels.push_back(cluster_set_json(m));
  j["hard_labels"] = labels;
  auto one_based = [](const std::vector<int>& v) {
    std::vector<int> out;
    for (int i : v) out.push_back(i + 1);
    return out;
  };
  json lower = json::array();
  json upper = json::array();
  for (int k = 0; k < c; ++k) {
    lower.push_back(one_based(rough.lower[static_cast<std::size_t>(k)]));
    upper.push_back(one_based(rough.upper[static_cast<std::size_t>(k)]));
  }
  j["lower"] = lower;
  j["upper"] = upper;
  return j;
}

inline RoughSummary rough_from_json(const json& j, const std::string& source = "<json>") {
  detail::check_format(j, "credalboot.rough", source);
  try {
    const int c = j.at("c").get<int>();
    RoughSummary r;
    for (const auto& s : j.at("hard_labels")) r.hard_labels.push_back(cluster_set_from_json(s, c, source));
    auto zero_based = [](std::vector<int> v) {
      for (int& i : v) --i;
      return v;
    };
    for (const auto& v : j.at("lower")) r.lower.push_back(zero_based(v.get<std::vector<int>>()));
    for (const auto& v : j.at("upper")) r.upper.push_back(zero_based(v.get<std::vector<int>>()));
    if (static_cast<int>(r.lower.size()) != c || static_cast<int>(r.upper.size()) != c)
      throw Error(ErrorKind::parse, source + ": approximation count does not match c");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, source + ": " + e.what());
  }
}

// ---------------------------------------------------------------- relational and scatter CSV

inline void write_relational_csv(std::ostream& os, int n, std::span<const PairwiseMass> rel) {
  os << "i,j,m_same,m_diff,m_theta,bel,pl\n";
  std::size_t p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++p) {
      const auto& r = rel[p];
      os << i + 1 << ',' << j + 1 << ',' << detail::fmt(r.m_same) << ',' << detail::fmt(r.m_diff) << ',' << detail::fmt(r.m_theta)
         << ',' << detail::fmt(r.bel()) << ',' << detail::fmt(r.pl()) << '\n';
    }
}

inline std::vector<PairwiseMass> read_relational_csv(std::istream& in, const std::string& source = "<stream>") {
  const auto t = detail::read_table(in, source);
  if (t.rows.front().size() != 7) throw Error(ErrorKind::parse, source + ": expected columns i,j,m_same,m_diff,m_theta,bel,pl");
  detail::check_pair_columns(t, source);
  std::vector<PairwiseMass> out;
  for (const auto& r : t.rows) out.push_back({r[2], r[3], r[4]});
  return out;
}

/// Tidy table for Bel vs P^l and Pl vs P^u scatter plots.
inline void write_scatter_csv(std::ostream& os, const PairwiseIntervalMatrix& ci, std::span<const PairwiseMass> rel) {
  if (rel.size() != ci.size()) throw Error(ErrorKind::dimension, "intervals and relational masses disagree on the pair count");
  os << "i,j,lower,upper,bel,pl\n";
  std::size_t p = 0;
  for (int i = 0; i < ci.n; ++i)
    for (int j = i + 1; j < ci.n; ++j, ++p)
      os << i + 1 << ',' << j + 1 << ',' << detail::fmt(ci.lower[p]) << ',' << detail::fmt(ci.upper[p]) << ','
         << detail::fmt(rel[p].bel()) << ',' << detail::fmt(rel[p].pl()) << '\n';
}

// ---------------------------------------------------------------- helpers

inline void write_json_file(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  auto out = detail::open_out(path);
  writer(out);
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

}  // namespace credalboot::io
