#pragma once

#include <string>
#include <string_view>

#include "dcfg/manifold.hpp"
#include "dcfg/noise.hpp"

namespace dcfg::io {

struct G2oVertex {
  int id = 0;
  Value pose;
};

/// Edge with its information matrix expanded to a full symmetric matrix in
/// the library's [rotation; translation] tangent order.
struct G2oEdge {
  int i = 0;
  int j = 0;
  Value measurement;
  Eigen::MatrixXd information;
};

struct G2oDocument {
  ManifoldKind kind = ManifoldKind::se3();
  std::vector<G2oVertex> vertices;
  std::vector<G2oEdge> edges;
  int skipped_records = 0;  // unknown record types
};

/// Tangent order of the information matrices in the file. Files in the wild
/// disagree; translation-first is the common convention.
enum class G2oInfoOrder { kTranslationRotation, kRotationTranslation };

struct G2oParseOptions {
  G2oInfoOrder info_order = G2oInfoOrder::kTranslationRotation;
};

/// Parses VERTEX_SE2 / EDGE_SE2 / VERTEX_SE3:QUAT / EDGE_SE3:QUAT records.
/// Unknown record types are skipped and counted. Quaternions off unit norm by
/// more than 1e-3 raise UnnormalizedQuaternion, smaller deviations are
/// silently renormalized. All failures are structured errors carrying the
/// line number.
G2oDocument parse_g2o(std::string_view text, const G2oParseOptions& options = {});

/// Canonical text form: vertices before edges, ascending ids, 17 significant
/// digits; byte-stable across runs.
std::string write_g2o(const G2oDocument& doc, const G2oParseOptions& options = {});

/// Block permutation from the file's [translation; rotation] tangent order
/// to the library's [rotation; translation] (to_library), or back. With
/// equal-sized blocks (SE(3)) the permutation is its own inverse; for SE(2)
/// the two directions differ.
Eigen::MatrixXd reorder_information(const Eigen::MatrixXd& info, bool to_library = true);

}  // namespace dcfg::io
