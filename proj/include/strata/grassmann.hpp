#pragma once

// m-planes in R^N represented by orthonormal bases and compared through
// their orthogonal projectors. The projector metric (operator norm of the
// projector difference, i.e. the sine of the largest principal angle)
// metrizes Grassmannian convergence without choosing coset representatives.

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace strata {

class Plane {
 public:
  Plane() = default;

  // basis must have orthonormal columns (or be the N x 0 empty matrix)
  Plane(int ambient_dim, Eigen::MatrixXd basis)
      : ambient_(ambient_dim), basis_(std::move(basis)) {
    if (basis_.rows() != ambient_)
      throw std::invalid_argument("plane basis has wrong ambient dimension");
    if (basis_.cols() > 0) {
      Eigen::MatrixXd gram = basis_.transpose() * basis_;
      double err = (gram - Eigen::MatrixXd::Identity(basis_.cols(), basis_.cols()))
                       .cwiseAbs()
                       .maxCoeff();
      if (err > 1e-10) throw std::invalid_argument("plane basis is not orthonormal");
    }
  }

  static Plane zero(int ambient_dim) {
    return Plane(ambient_dim, Eigen::MatrixXd(ambient_dim, 0));
  }

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }

  Eigen::MatrixXd projector() const {
    if (dim() == 0) return Eigen::MatrixXd::Zero(ambient_, ambient_);
    return basis_ * basis_.transpose();
  }

  // orthogonal projection of a vector onto the plane
  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    if (dim() == 0) return Eigen::VectorXd::Zero(ambient_);
    return basis_ * (basis_.transpose() * v);
  }

 private:
  int ambient_ = 0;
  Eigen::MatrixXd basis_;
};

// Plane spanning the same space as the input vectors; the dimension is the
// numerical rank of the span (singular values below 1e-8 x largest are zero).
inline Plane orthonormalize(const std::vector<Eigen::VectorXd>& spanning) {
  if (spanning.empty()) throw std::invalid_argument("orthonormalize: no vectors");
  int n = static_cast<int>(spanning.front().size());
  Eigen::MatrixXd a(n, static_cast<int>(spanning.size()));
  for (std::size_t j = 0; j < spanning.size(); ++j) {
    if (spanning[j].size() != n)
      throw std::invalid_argument("orthonormalize: mixed vector lengths");
    a.col(static_cast<int>(j)) = spanning[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8 * smax && svd.singularValues()(i) > 0) ++rank;
  return Plane(n, svd.matrixU().leftCols(rank));
}

inline Plane span_of(const Eigen::MatrixXd& columns) {
  std::vector<Eigen::VectorXd> v;
  v.reserve(columns.cols());
  for (int j = 0; j < columns.cols(); ++j) v.push_back(columns.col(j));
  return orthonormalize(v);
}

inline Plane line_through(const Eigen::VectorXd& direction) {
  double n = direction.norm();
  if (n < 1e-300) throw std::invalid_argument("line_through: zero direction");
  Eigen::MatrixXd b(direction.size(), 1);
  b.col(0) = direction / n;
  return Plane(static_cast<int>(direction.size()), b);
}

inline double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// sine of the largest principal angle between equal-dimensional planes
inline double plane_distance(const Plane& a, const Plane& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim())
    throw std::invalid_argument("plane_distance: dimension mismatch");
  if (a.dim() == 0) return 0.0;
  return operator_norm(a.projector() - b.projector());
}

inline bool planes_equal(const Plane& a, const Plane& b, double tol = 1e-9) {
  return a.ambient_dim() == b.ambient_dim() && a.dim() == b.dim() &&
         plane_distance(a, b) <= tol;
}

// operator norm of (I - Pi_P) basis_Q: 0 iff Q is contained in P,
// 1 when some direction of Q is orthogonal to P
inline double containment_defect(const Plane& p, const Plane& q) {
  if (p.ambient_dim() != q.ambient_dim())
    throw std::invalid_argument("containment_defect: ambient dimension mismatch");
  if (q.dim() == 0) return 0.0;
  Eigen::MatrixXd residual = q.basis() - p.projector() * q.basis();
  return operator_norm(residual);
}

struct PlaneSequence {
  std::vector<Plane> planes;
  std::vector<double> labels;  // optional index labels (e.g. sequence radii)

  void push_back(Plane p, double label = 0.0) {
    if (!planes.empty() &&
        (planes.front().ambient_dim() != p.ambient_dim() || planes.front().dim() != p.dim()))
      throw std::invalid_argument("PlaneSequence: mixed (N, m)");
    planes.push_back(std::move(p));
    labels.push_back(label);
  }
  std::size_t size() const { return planes.size(); }
  bool empty() const { return planes.empty(); }
};

struct PlaneLimit {
  Plane limit;
  bool converged = false;
  double tail_defect = 0.0;
};

// The final plane is the limit candidate; convergence means the trailing
// half of the sequence is Cauchy under plane_distance at threshold tol.
inline PlaneLimit limit_of_planes(const PlaneSequence& seq, double tol) {
  if (seq.empty()) throw std::invalid_argument("limit_of_planes: empty sequence");
  std::size_t n = seq.size();
  std::size_t start = n / 2;
  double defect = 0.0;
  for (std::size_t i = start; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      defect = std::max(defect, plane_distance(seq.planes[i], seq.planes[j]));
  return PlaneLimit{seq.planes.back(), defect <= tol, defect};
}

// --- CSV interchange: header row carries N, m; one row per plane with
// column-major basis entries ---

inline void save_planes_csv(const PlaneSequence& seq, const std::string& path) {
  if (seq.empty()) throw std::invalid_argument("save_planes_csv: empty sequence");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  int n = seq.planes.front().ambient_dim();
  int m = seq.planes.front().dim();
  os << n << "," << m << "\n";
  os.precision(17);
  for (const Plane& p : seq.planes) {
    bool first = true;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        if (!first) os << ",";
        os << p.basis()(i, j);
        first = false;
      }
    if (m == 0) os << "";
    os << "\n";
  }
}

inline PlaneSequence load_planes_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty plane CSV");
  int n = 0, m = 0;
  {
    std::istringstream hs(line);
    char comma;
    if (!(hs >> n >> comma >> m)) throw std::runtime_error("bad plane CSV header");
  }
  PlaneSequence seq;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Eigen::MatrixXd basis(n, m);
    std::istringstream ls(line);
    std::string cell;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("short plane CSV row");
        basis(i, j) = std::stod(cell);
      }
    seq.push_back(Plane(n, basis));
  }
  return seq;
}

}  // namespace strata
