#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snum/errors.hpp"

namespace snum {

using Matrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Norm exponents with exact algorithms: 1, 2 and infinity.
enum class NormExp { one, two, inf };

NormExp dual(NormExp p);
std::string to_string(NormExp p);
/// Accepts "1", "2", "inf" (also "infinity", "oo").
NormExp parse_norm_exp(std::string_view text);

/// ell_p^dim over the reals.
class NormedSpace {
 public:
  NormedSpace(int dim, NormExp p);

  int dim() const { return dim_; }
  NormExp p() const { return p_; }
  NormedSpace dual() const { return {dim_, snum::dual(p_)}; }
  bool polyhedral() const { return p_ != NormExp::two; }

  friend bool operator==(const NormedSpace&, const NormedSpace&) = default;

 private:
  int dim_;
  NormExp p_;
};

double norm(const Vec& x, NormExp p);

class Vector {
 public:
  Vector(Vec coords, NormedSpace space);

  const Vec& coords() const { return coords_; }
  const NormedSpace& space() const { return space_; }

 private:
  Vec coords_;
  NormedSpace space_;
};

double vector_norm(const Vector& x);

class LinearOperator {
 public:
  /// matrix is codomain.dim x domain.dim.
  LinearOperator(Matrix matrix, NormedSpace domain, NormedSpace codomain);
  /// Same p on both sides.
  LinearOperator(Matrix matrix, NormExp domain_p, NormExp codomain_p);

  const Matrix& matrix() const { return matrix_; }
  const NormedSpace& domain() const { return domain_; }
  const NormedSpace& codomain() const { return codomain_; }
  int rows() const { return static_cast<int>(matrix_.rows()); }
  int cols() const { return static_cast<int>(matrix_.cols()); }

  /// New operator between the same spaces.
  LinearOperator with_matrix(Matrix m) const { return {std::move(m), domain_, codomain_}; }
  bool hilbert() const { return domain_.p() == NormExp::two && codomain_.p() == NormExp::two; }
  bool polyhedral() const { return domain_.polyhedral() && codomain_.polyhedral(); }

 private:
  Matrix matrix_;
  NormedSpace domain_;
  NormedSpace codomain_;
};

LinearOperator adjoint(const LinearOperator& t);

struct NormBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
  Vec witness;  // ||witness|| <= 1 and ||T witness|| == lower
};

struct NormOptions {
  int vertex_cap = 16;
  bool allow_bracket = true;
  int restarts = 16;
  std::uint64_t seed = 0;
};

inline constexpr double kExactTol = 1e-9;

/// Norm of the formal identity ell_a^d -> ell_b^d.
double identity_norm(int dim, NormExp from, NormExp to);

NormBracket operator_norm(const LinearOperator& t, const NormOptions& opts = {});
/// Exact value or throws VertexCapExceeded.
double exact_operator_norm(const Matrix& m, NormExp domain_p, NormExp codomain_p,
                           int vertex_cap = 16);

/// Vertices of the unit ball of a polyhedral space.
std::vector<Vector> extreme_points(const NormedSpace& s, int vertex_cap = 16);
/// Extreme points modulo sign, as matrix columns (one representative per +/- pair).
Matrix extreme_point_matrix(const NormedSpace& s, int vertex_cap = 16);

/// Point of the p-unit ball maximizing <v, x>.
Vec dual_maximizer(const Vec& v, NormExp p);

}  // namespace snum
