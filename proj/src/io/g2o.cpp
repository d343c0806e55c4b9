#include "dcfg/io/g2o.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace dcfg::io {

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

double parse_double(std::string_view tok, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw MalformedRecord(line, "expected a number, got '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) {
    throw NonFiniteNumber("line " + std::to_string(line) + ": non-finite number");
  }
  return v;
}

int parse_int(std::string_view tok, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw MalformedRecord(line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

Rot3 parse_quaternion(const std::vector<std::string_view>& tok, std::size_t at, int line) {
  const double qx = parse_double(tok[at], line);
  const double qy = parse_double(tok[at + 1], line);
  const double qz = parse_double(tok[at + 2], line);
  const double qw = parse_double(tok[at + 3], line);
  Eigen::Quaterniond q(qw, qx, qy, qz);
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3) {
    throw UnnormalizedQuaternion("line " + std::to_string(line) + ": |q| = " +
                                 std::to_string(norm));
  }
  q.normalize();
  return Rot3{q};
}

// Expands n*(n+1)/2 upper-triangular row-major entries to a symmetric matrix.
Eigen::MatrixXd expand_upper(const std::vector<std::string_view>& tok, std::size_t at, int n,
                             int line) {
  Eigen::MatrixXd m(n, n);
  std::size_t k = at;
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      const double v = parse_double(tok[k++], line);
      m(r, c) = v;
      m(c, r) = v;
    }
  }
  return m;
}

void check_psd(const Eigen::MatrixXd& info, int line) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw MalformedRecord(line, "information matrix is not positive semidefinite");
  }
}

void set_kind(G2oDocument& doc, bool& kind_fixed, const ManifoldKind& kind, int line) {
  if (!kind_fixed) {
    doc.kind = kind;
    kind_fixed = true;
  } else if (!(doc.kind == kind)) {
    throw MalformedRecord(line, "file mixes SE(2) and SE(3) records");
  }
}

void append(std::string& out, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  out += buf;
}

}  // namespace

Eigen::MatrixXd reorder_information(const Eigen::MatrixXd& info, bool to_library) {
  const int n = static_cast<int>(info.rows());
  const int r = n == 6 ? 3 : 1;  // rotation block size (SE3: 3, SE2: 1)
  const int t = n - r;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  // Library order [rotation; translation] from file order [translation;
  // rotation].
  for (int i = 0; i < r; ++i) p(i, t + i) = 1.0;
  for (int i = 0; i < t; ++i) p(r + i, i) = 1.0;
  if (!to_library) p.transposeInPlace();
  return p * info * p.transpose();
}

G2oDocument parse_g2o(std::string_view text, const G2oParseOptions& options) {
  G2oDocument doc;
  bool kind_fixed = false;
  const bool reorder = options.info_order == G2oInfoOrder::kTranslationRotation;

  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_number;

    const auto tok = tokenize(line);
    if (tok.empty() || tok[0].front() == '#') continue;

    if (tok[0] == "VERTEX_SE2") {
      if (tok.size() != 5) throw MalformedRecord(line_number, "VERTEX_SE2 needs id x y theta");
      set_kind(doc, kind_fixed, ManifoldKind::se2(), line_number);
      G2oVertex v;
      v.id = parse_int(tok[1], line_number);
      v.pose = Pose2(parse_double(tok[4], line_number),
                     Eigen::Vector2d(parse_double(tok[2], line_number),
                                     parse_double(tok[3], line_number)));
      doc.vertices.push_back(std::move(v));
    } else if (tok[0] == "VERTEX_SE3:QUAT") {
      if (tok.size() != 9) {
        throw MalformedRecord(line_number, "VERTEX_SE3:QUAT needs id t(3) q(4)");
      }
      set_kind(doc, kind_fixed, ManifoldKind::se3(), line_number);
      G2oVertex v;
      v.id = parse_int(tok[1], line_number);
      Pose3 p;
      p.translation = Eigen::Vector3d(parse_double(tok[2], line_number),
                                      parse_double(tok[3], line_number),
                                      parse_double(tok[4], line_number));
      p.rotation = parse_quaternion(tok, 5, line_number);
      v.pose = p;
      doc.vertices.push_back(std::move(v));
    } else if (tok[0] == "EDGE_SE2") {
      if (tok.size() != 12) {
        throw MalformedRecord(line_number, "EDGE_SE2 needs i j dx dy dtheta info(6)");
      }
      set_kind(doc, kind_fixed, ManifoldKind::se2(), line_number);
      G2oEdge e;
      e.i = parse_int(tok[1], line_number);
      e.j = parse_int(tok[2], line_number);
      e.measurement = Pose2(parse_double(tok[5], line_number),
                            Eigen::Vector2d(parse_double(tok[3], line_number),
                                            parse_double(tok[4], line_number)));
      Eigen::MatrixXd info = expand_upper(tok, 6, 3, line_number);
      if (reorder) info = reorder_information(info);
      check_psd(info, line_number);
      e.information = std::move(info);
      doc.edges.push_back(std::move(e));
    } else if (tok[0] == "EDGE_SE3:QUAT") {
      if (tok.size() != 31) {
        throw MalformedRecord(line_number, "EDGE_SE3:QUAT needs i j t(3) q(4) info(21)");
      }
      set_kind(doc, kind_fixed, ManifoldKind::se3(), line_number);
      G2oEdge e;
      e.i = parse_int(tok[1], line_number);
      e.j = parse_int(tok[2], line_number);
      Pose3 p;
      p.translation = Eigen::Vector3d(parse_double(tok[3], line_number),
                                      parse_double(tok[4], line_number),
                                      parse_double(tok[5], line_number));
      p.rotation = parse_quaternion(tok, 6, line_number);
      e.measurement = p;
      Eigen::MatrixXd info = expand_upper(tok, 10, 6, line_number);
      if (reorder) info = reorder_information(info);
      check_psd(info, line_number);
      e.information = std::move(info);
      doc.edges.push_back(std::move(e));
    } else {
      ++doc.skipped_records;
    }
  }

  // Edge endpoints must reference declared vertices.
  std::vector<int> ids;
  for (const auto& v : doc.vertices) ids.push_back(v.id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t k = 0; k < doc.edges.size(); ++k) {
    const auto& e = doc.edges[k];
    if (!std::binary_search(ids.begin(), ids.end(), e.i) ||
        !std::binary_search(ids.begin(), ids.end(), e.j)) {
      throw MalformedRecord(0, "edge " + std::to_string(e.i) + " -> " + std::to_string(e.j) +
                                   " references an undeclared vertex");
    }
  }
  return doc;
}

std::string write_g2o(const G2oDocument& doc, const G2oParseOptions& options) {
  const bool reorder = options.info_order == G2oInfoOrder::kTranslationRotation;
  std::string out;
  std::vector<const G2oVertex*> vertices;
  for (const auto& v : doc.vertices) vertices.push_back(&v);
  std::sort(vertices.begin(), vertices.end(),
            [](const G2oVertex* a, const G2oVertex* b) { return a->id < b->id; });
  std::vector<const G2oEdge*> edges;
  for (const auto& e : doc.edges) edges.push_back(&e);
  std::stable_sort(edges.begin(), edges.end(), [](const G2oEdge* a, const G2oEdge* b) {
    return a->i != b->i ? a->i < b->i : a->j < b->j;
  });

  const bool se3 = doc.kind == ManifoldKind::se3();
  for (const auto* v : vertices) {
    if (se3) {
      const Pose3& p = std::get<Pose3>(v->pose);
      out += "VERTEX_SE3:QUAT " + std::to_string(v->id);
      for (int k = 0; k < 3; ++k) append(out, " %.17g", p.translation[k]);
      append(out, " %.17g", p.rotation.q.x());
      append(out, " %.17g", p.rotation.q.y());
      append(out, " %.17g", p.rotation.q.z());
      append(out, " %.17g", p.rotation.q.w());
    } else {
      const Pose2& p = std::get<Pose2>(v->pose);
      out += "VERTEX_SE2 " + std::to_string(v->id);
      append(out, " %.17g", p.t.x());
      append(out, " %.17g", p.t.y());
      append(out, " %.17g", p.theta);
    }
    out += '\n';
  }
  for (const auto* e : edges) {
    Eigen::MatrixXd info = e->information;
    if (reorder) info = reorder_information(info, /*to_library=*/false);
    if (se3) {
      const Pose3& p = std::get<Pose3>(e->measurement);
      out += "EDGE_SE3:QUAT " + std::to_string(e->i) + " " + std::to_string(e->j);
      for (int k = 0; k < 3; ++k) append(out, " %.17g", p.translation[k]);
      append(out, " %.17g", p.rotation.q.x());
      append(out, " %.17g", p.rotation.q.y());
      append(out, " %.17g", p.rotation.q.z());
      append(out, " %.17g", p.rotation.q.w());
    } else {
      const Pose2& p = std::get<Pose2>(e->measurement);
      out += "EDGE_SE2 " + std::to_string(e->i) + " " + std::to_string(e->j);
      append(out, " %.17g", p.t.x());
      append(out, " %.17g", p.t.y());
      append(out, " %.17g", p.theta);
    }
    for (int r = 0; r < info.rows(); ++r) {
      for (int c = r; c < info.cols(); ++c) append(out, " %.17g", info(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace dcfg::io
