#pragma once

// Entropy analytics over multiplicity tables: hadron entropy, comparison
// against ln(xG)-type structure tables and mutual information of joint
// multiplicities. CSV schemas (header line required):
//
//   histogram  n,p          optional "# key = value" lines for label, x, q2, window
//   joint      n1,n2,p
//   structure  x,q2,value   or z,mu2,value for fragmentation tables

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mel/error.hpp"
#include "mel/quantum_core.hpp"

namespace mel::analysis {

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Provenance {
  std::string input_digest;
  double normalization_sum = 1.0;  ///< sum of probabilities before normalization
};

struct Kinematics {
  double x = 0.0;   ///< or z
  double q2 = 0.0;  ///< or mu^2
  std::optional<std::string> window;
};

struct HistogramEntry {
  int n;
  double p;
};

class MultiplicityHistogram {
 public:
  /// Validates and normalizes; the incoming sum is kept in provenance.
  MultiplicityHistogram(std::vector<HistogramEntry> entries, std::string label = {},
                        std::optional<Kinematics> kin = std::nullopt)
      : entries_(std::move(entries)), label_(std::move(label)), kin_(std::move(kin)) {
    if (entries_.empty()) throw ValidationError("histogram: no entries");
    std::set<int> seen;
    double sum = 0.0;
    for (const auto& e : entries_) {
      if (e.n < 0) throw ValidationError("histogram: multiplicities must be non-negative");
      if (!(e.p >= 0.0) || !std::isfinite(e.p)) throw ValidationError("histogram: probabilities must be non-negative");
      if (!seen.insert(e.n).second) throw ValidationError("histogram: duplicate n = " + std::to_string(e.n));
      sum += e.p;
    }
    if (!(sum > 0.0)) throw ValidationError("histogram: probabilities sum to zero");
    for (auto& e : entries_) e.p /= sum;
    prov_.normalization_sum = sum;
  }

  const std::vector<HistogramEntry>& entries() const noexcept { return entries_; }
  const std::string& label() const noexcept { return label_; }
  const std::optional<Kinematics>& kinematics() const noexcept { return kin_; }
  const Provenance& provenance() const noexcept { return prov_; }
  void set_digest(std::string d) { prov_.input_digest = std::move(d); }

  double mean() const {
    double m = 0.0;
    for (const auto& e : entries_) m += e.n * e.p;
    return m;
  }
  std::vector<double> probabilities() const {
    std::vector<double> p;
    for (const auto& e : entries_) p.push_back(e.p);
    return p;
  }

 private:
  std::vector<HistogramEntry> entries_;
  std::string label_;
  std::optional<Kinematics> kin_;
  Provenance prov_;
};

enum class StructureKind { gluon_xG, F2, diffractive_pdf, fragmentation };

inline std::string to_string(StructureKind k) {
  switch (k) {
    case StructureKind::gluon_xG: return "gluon_xG";
    case StructureKind::F2: return "F2";
    case StructureKind::diffractive_pdf: return "diffractive_pdf";
    case StructureKind::fragmentation: return "fragmentation";
  }
  return "?";
}

inline StructureKind structure_kind_from_string(std::string_view s) {
  if (s == "gluon_xG") return StructureKind::gluon_xG;
  if (s == "F2") return StructureKind::F2;
  if (s == "diffractive_pdf") return StructureKind::diffractive_pdf;
  if (s == "fragmentation") return StructureKind::fragmentation;
  throw ArgumentError("unknown structure kind '" + std::string(s) + "'");
}

struct StructureRow {
  double x;
  double q2;
  double value;
};

class StructureTable {
 public:
  StructureTable(std::vector<StructureRow> rows, StructureKind kind) : rows_(std::move(rows)), kind_(kind) {
    for (const auto& r : rows_) validate(r);
  }

  static void validate(const StructureRow& r) {
    if (!(r.x > 0.0 && r.x < 1.0)) throw ValidationError("structure table: x must lie in (0, 1)");
    if (!(r.q2 > 0.0)) throw ValidationError("structure table: scale must be positive");
    if (!(r.value > 0.0) || !std::isfinite(r.value)) throw ValidationError("structure table: values must be positive");
  }

  const std::vector<StructureRow>& rows() const noexcept { return rows_; }
  StructureKind kind() const noexcept { return kind_; }
  const Provenance& provenance() const noexcept { return prov_; }
  void set_digest(std::string d) { prov_.input_digest = std::move(d); }

 private:
  std::vector<StructureRow> rows_;
  StructureKind kind_;
  Provenance prov_;
};

struct JointEntry {
  int n1;
  int n2;
  double p;
};

class JointMultiplicity {
 public:
  JointMultiplicity(std::vector<JointEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ValidationError("joint distribution: no entries");
    std::set<std::pair<int, int>> seen;
    double sum = 0.0;
    for (const auto& e : entries_) {
      if (!(e.p >= 0.0) || !std::isfinite(e.p))
        throw ValidationError("joint distribution: probabilities must be non-negative");
      if (!seen.insert({e.n1, e.n2}).second) throw ValidationError("joint distribution: duplicate (n1, n2)");
      sum += e.p;
    }
    if (!(sum > 0.0)) throw ValidationError("joint distribution: probabilities sum to zero");
    for (auto& e : entries_) e.p /= sum;
    prov_.normalization_sum = sum;
  }

  const std::vector<JointEntry>& entries() const noexcept { return entries_; }
  const Provenance& provenance() const noexcept { return prov_; }
  void set_digest(std::string d) { prov_.input_digest = std::move(d); }

  std::map<int, double> marginal_first() const {
    std::map<int, double> m;
    for (const auto& e : entries_) m[e.n1] += e.p;
    return m;
  }
  std::map<int, double> marginal_second() const {
    std::map<int, double> m;
    for (const auto& e : entries_) m[e.n2] += e.p;
    return m;
  }

 private:
  std::vector<JointEntry> entries_;
  Provenance prov_;
};

struct HadronEntropy {
  double entropy;
  double geometric_reference;  ///< entropy of the geometric law with the same mean
};

/// Entropy of the maximal-entropy law with the histogram's mean: geometric on
/// n >= 1 if the histogram has no n = 0 entry, geometric on n >= 0 otherwise.
inline double geometric_reference_entropy(double mean, bool starts_at_one) {
  if (starts_at_one) {
    if (mean <= 1.0) return 0.0;
    return std::log(mean) + (mean - 1.0) * std::log(mean / (mean - 1.0));
  }
  if (mean <= 0.0) return 0.0;
  return (1.0 + mean) * std::log1p(mean) - mean * std::log(mean);
}

inline HadronEntropy hadron_entropy(const MultiplicityHistogram& h) {
  const auto p = h.probabilities();
  int n_min = std::numeric_limits<int>::max();
  for (const auto& e : h.entries())
    if (e.p > 0.0) n_min = std::min(n_min, e.n);
  return {shannon_entropy(p), geometric_reference_entropy(h.mean(), n_min >= 1)};
}

struct MelPoint {
  std::string label;
  double x;
  double q2;
  double hadron_entropy;
  double log_value;
  double residual;  ///< S - ln(value) - offset
};

struct SkippedPoint {
  std::string label;
  std::string reason;
};

struct MelComparison {
  std::vector<MelPoint> points;
  std::vector<SkippedPoint> skipped;
  double offset = 0.0;
  double residual_std = 0.0;
};

inline bool relatively_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

/// Joins every histogram to the table row with matching kinematics
/// (relative tolerance on both coordinates) and fits S = ln(value) + c.
inline MelComparison mel_compare(std::span<const MultiplicityHistogram> hists, const StructureTable& table,
                                 double relative_tolerance = 1e-6) {
  MelComparison out;
  for (const auto& h : hists) {
    if (!h.kinematics()) {
      out.skipped.push_back({h.label(), "histogram carries no kinematics"});
      continue;
    }
    const Kinematics& k = *h.kinematics();
    const StructureRow* match = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : table.rows()) {
      if (!relatively_close(r.x, k.x, relative_tolerance) || !relatively_close(r.q2, k.q2, relative_tolerance)) continue;
      const double d = std::abs(std::log(r.x / k.x)) + std::abs(std::log(r.q2 / k.q2));
      if (d < best) best = d, match = &r;
    }
    if (!match) {
      std::ostringstream os;
      os << "no table row within relative tolerance " << relative_tolerance << " of (" << k.x << ", " << k.q2 << ")";
      out.skipped.push_back({h.label(), os.str()});
      continue;
    }
    out.points.push_back({h.label(), k.x, k.q2, hadron_entropy(h).entropy, std::log(match->value), 0.0});
  }
  if (out.points.empty()) return out;
  double c = 0.0;
  for (const auto& p : out.points) c += p.hadron_entropy - p.log_value;
  c /= static_cast<double>(out.points.size());
  out.offset = c;
  double ss = 0.0;
  for (auto& p : out.points) {
    p.residual = p.hadron_entropy - p.log_value - c;
    ss += p.residual * p.residual;
  }
  out.residual_std = out.points.size() > 1 ? std::sqrt(ss / static_cast<double>(out.points.size() - 1)) : 0.0;
  return out;
}

struct MutualInformation {
  double value;          ///< sum p ln(p / (p1 p2))
  double via_entropies;  ///< S1 + S2 - S12
  double s1;
  double s2;
  double s12;
};

inline MutualInformation mutual_information(const JointMultiplicity& joint) {
  const auto m1 = joint.marginal_first();
  const auto m2 = joint.marginal_second();
  double direct = 0.0;
  std::vector<double> pj;
  for (const auto& e : joint.entries()) {
    pj.push_back(e.p);
    if (e.p > 0.0) direct += e.p * std::log(e.p / (m1.at(e.n1) * m2.at(e.n2)));
  }
  std::vector<double> p1, p2;
  for (const auto& [n, p] : m1) p1.push_back(p);
  for (const auto& [n, p] : m2) p2.push_back(p);
  const double s1 = shannon_entropy(p1), s2 = shannon_entropy(p2), s12 = shannon_entropy(pj);
  return {direct, s1 + s2 - s12, s1, s2, s12};
}

// CSV ingest / emit.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_real(std::string_view s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw ParseError(std::string("column '") + column + "': not a number: '" + std::string(s) + "'", line);
  return v;
}

inline int parse_int(std::string_view s, std::size_t line, const char* column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(std::string("column '") + column + "': not an integer: '" + std::string(s) + "'", line);
  return v;
}

struct CsvRows {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  ///< (line, fields)
  std::map<std::string, std::string> meta;                             ///< "# key = value"
  std::string raw;
};

inline CsvRows read_csv(std::istream& in) {
  std::ostringstream all;
  all << in.rdbuf();
  CsvRows out;
  out.raw = all.str();
  std::istringstream ss(out.raw);
  std::string line;
  std::size_t no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string_view body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos)
        out.meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      continue;
    }
    std::vector<std::string> f;
    for (auto v : split(t)) f.emplace_back(v);
    if (out.header.empty()) {
      out.header = std::move(f);
      continue;
    }
    if (f.size() != out.header.size())
      throw ParseError("expected " + std::to_string(out.header.size()) + " fields, got " + std::to_string(f.size()), no);
    out.rows.emplace_back(no, std::move(f));
  }
  if (out.header.empty()) throw ParseError("missing header line", no == 0 ? 1 : no);
  return out;
}

inline void require_header(const CsvRows& c, std::initializer_list<const char*> cols) {
  std::vector<std::string> want(cols.begin(), cols.end());
  if (c.header != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw ParseError("header must be '" + w + "'", 1);
  }
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline MultiplicityHistogram ingest_histogram(std::istream& in, std::string label = {}) {
  const auto c = detail::read_csv(in);
  detail::require_header(c, {"n", "p"});
  std::vector<HistogramEntry> entries;
  for (const auto& [line, f] : c.rows) {
    const int n = detail::parse_int(f[0], line, "n");
    const double p = detail::parse_real(f[1], line, "p");
    if (n < 0) throw ParseError("multiplicity must be non-negative", line);
    if (p < 0.0) throw ValidationError("line " + std::to_string(line) + ": negative probability");
    entries.push_back({n, p});
  }
  if (entries.empty()) throw ParseError("histogram has no rows", 1);
  if (auto it = c.meta.find("label"); it != c.meta.end() && label.empty()) label = it->second;
  std::optional<Kinematics> kin;
  if (c.meta.count("x") && c.meta.count("q2")) {
    Kinematics k;
    k.x = detail::parse_real(c.meta.at("x"), 1, "x");
    k.q2 = detail::parse_real(c.meta.at("q2"), 1, "q2");
    if (auto w = c.meta.find("window"); w != c.meta.end()) k.window = w->second;
    kin = k;
  }
  MultiplicityHistogram h(std::move(entries), std::move(label), kin);
  h.set_digest(digest(c.raw));
  return h;
}

inline JointMultiplicity ingest_joint(std::istream& in) {
  const auto c = detail::read_csv(in);
  detail::require_header(c, {"n1", "n2", "p"});
  std::vector<JointEntry> entries;
  for (const auto& [line, f] : c.rows) {
    const int n1 = detail::parse_int(f[0], line, "n1");
    const int n2 = detail::parse_int(f[1], line, "n2");
    const double p = detail::parse_real(f[2], line, "p");
    if (p < 0.0) throw ValidationError("line " + std::to_string(line) + ": negative probability");
    entries.push_back({n1, n2, p});
  }
  if (entries.empty()) throw ParseError("joint distribution has no rows", 1);
  JointMultiplicity j(std::move(entries));
  j.set_digest(digest(c.raw));
  return j;
}

/// Fragmentation tables use the header z,mu2,value; all other kinds x,q2,value.
inline StructureTable ingest_structure(std::istream& in, StructureKind kind) {
  const auto c = detail::read_csv(in);
  if (kind == StructureKind::fragmentation)
    detail::require_header(c, {"z", "mu2", "value"});
  else
    detail::require_header(c, {"x", "q2", "value"});
  std::vector<StructureRow> rows;
  for (const auto& [line, f] : c.rows) {
    StructureRow r{detail::parse_real(f[0], line, c.header[0].c_str()), detail::parse_real(f[1], line, c.header[1].c_str()),
                   detail::parse_real(f[2], line, "value")};
    try {
      StructureTable::validate(r);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line) + ": " + e.what());
    }
    rows.push_back(r);
  }
  StructureTable t(std::move(rows), kind);
  t.set_digest(digest(c.raw));
  return t;
}

inline MultiplicityHistogram ingest_histogram_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open '" + path + "'");
  return ingest_histogram(f);
}

inline void emit(std::ostream& os, const MultiplicityHistogram& h) {
  if (!h.label().empty()) os << "# label = " << h.label() << "\n";
  if (const auto& k = h.kinematics()) {
    os << "# x = " << detail::fmt(k->x) << "\n# q2 = " << detail::fmt(k->q2) << "\n";
    if (k->window) os << "# window = " << *k->window << "\n";
  }
  os << "n,p\n";
  for (const auto& e : h.entries()) os << e.n << "," << detail::fmt(e.p) << "\n";
}

inline void emit(std::ostream& os, const JointMultiplicity& j) {
  os << "n1,n2,p\n";
  for (const auto& e : j.entries()) os << e.n1 << "," << e.n2 << "," << detail::fmt(e.p) << "\n";
}

inline void emit(std::ostream& os, const StructureTable& t) {
  os << (t.kind() == StructureKind::fragmentation ? "z,mu2,value\n" : "x,q2,value\n");
  for (const auto& r : t.rows()) os << detail::fmt(r.x) << "," << detail::fmt(r.q2) << "," << detail::fmt(r.value) << "\n";
}

}  // namespace mel::analysis
