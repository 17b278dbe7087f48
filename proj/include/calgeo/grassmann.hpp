#pragma once

// Oriented Grassmannian G(p,n): planes, first-cousin tangent coordinates and
// multi-start Riemannian ascent.
//
// A plane is an orthonormal n x p frame F. Tangent vectors at F are N X with
// N an orthonormal basis of the complement and X in R^{(n-p) x p}; the unit
// tangent N e_k e_i^t is the first cousin obtained from F by replacing column
// i with N_k. For a linear functional a, the gradient entry at (i,k) is
// a(F with column i replaced by N_k) and the Hessian needs only the double
// replacements plus -a(F) on the diagonal blocks.

#include "calgeo/exterior.hpp"
#include "calgeo/parallel.hpp"
#include "calgeo/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace calgeo {

class OrientedPlane {
 public:
  OrientedPlane() = default;

  explicit OrientedPlane(Matrix frame, double tol = 1e-10)
      : frame_(std::move(frame)), plucker_(plucker(frame_, tol)) {}

  /// Orthonormalizes an arbitrary full-rank n x p matrix, keeping orientation.
  static OrientedPlane from_spanning(const Matrix& cols) {
    return OrientedPlane(orthonormalize(cols));
  }

  [[nodiscard]] const Matrix& frame() const { return frame_; }
  [[nodiscard]] const Multivector& multivector() const { return plucker_; }
  [[nodiscard]] int dim() const { return static_cast<int>(frame_.rows()); }
  [[nodiscard]] int degree() const { return static_cast<int>(frame_.cols()); }
  [[nodiscard]] EndoMatrix projector() const { return frame_ * frame_.transpose(); }

  [[nodiscard]] OrientedPlane reversed() const {
    Matrix f = frame_;
    if (f.cols() > 0) f.col(0) *= -1.0;
    return OrientedPlane(std::move(f));
  }

 private:
  Matrix frame_;
  Multivector plucker_;
};

inline double evaluate(const Form& a, const OrientedPlane& xi) {
  return pair(a, xi.multivector());
}

/// Largest principal angle between the planes, or pi when the orientations
/// disagree.
inline double plane_distance(const OrientedPlane& a, const OrientedPlane& b) {
  if (a.dim() != b.dim() || a.degree() != b.degree()) return M_PI;
  if (a.degree() == 0) return 0.0;
  const Matrix c = a.frame().transpose() * b.frame();
  if (detail::small_det(c) < 0.0) return M_PI;
  return largest_principal_angle(a.frame(), b.frame());
}

/// Uniformly distributed oriented plane: Gaussian matrix, then QR.
inline OrientedPlane random_plane(int n, int p, std::uint64_t seed) {
  check_capacity(n, p);
  if (p < 1) throw ShapeError("random_plane: degree must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix g(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = normal(rng);
  return OrientedPlane::from_spanning(g);
}

inline Vector random_unit_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v.normalized();
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a + a.transpose());
}

/// Orthonormal basis of span(F)^perp via a full Householder QR.
inline Matrix complement_frame(const Matrix& F) {
  const Eigen::Index n = F.rows(), p = F.cols();
  if (p == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(F);
  Matrix Q = qr.householderQ();
  return Q.rightCols(n - p);
}

struct CousinBasis {
  OrientedPlane plane;
  Matrix complement;                   // columns b_k spanning span(xi)^perp
  std::vector<Multivector> directions; // index k + (n-p) i: column i -> b_k
};

inline CousinBasis first_cousin_basis(const OrientedPlane& xi) {
  CousinBasis cb;
  cb.plane = xi;
  const int n = xi.dim(), p = xi.degree();
  if (n - p > 0) {
    // Prefer the standard basis order when it is already complementary, so
    // that coordinate planes get coordinate cousins.
    Matrix N = Matrix::Zero(n, 0);
    const EndoMatrix P = xi.projector();
    std::vector<int> picks;
    for (int k = 0; k < n; ++k)
      if (P.col(k).norm() < 1e-14) picks.push_back(k);
    if (static_cast<int>(picks.size()) == n - p) {
      N = Matrix::Zero(n, n - p);
      for (int c = 0; c < n - p; ++c) N(picks[c], c) = 1.0;
    } else {
      N = complement_frame(xi.frame());
    }
    cb.complement = N;
  } else {
    cb.complement = Matrix(n, 0);
  }
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < n - p; ++k) {
      Matrix f = xi.frame();
      f.col(i) = cb.complement.col(k);
      cb.directions.push_back(wedge_columns(f));
    }
  return cb;
}

/// Value, gradient and (optionally) Hessian of F -> a(F) in cousin coordinates.
struct FormJet {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

inline FormJet form_jet(const Form& a, const Matrix& F, const Matrix& N, bool hessian) {
  const int n = static_cast<int>(F.rows());
  const int p = static_cast<int>(F.cols());
  const int q = n - p;
  if (a.dim() != n || a.degree() != p) throw ShapeError("form_jet: shape mismatch");
  FormJet out;
  std::vector<Form> prefix(p + 1);
  prefix[0] = a;
  for (int j = 0; j < p; ++j) prefix[j + 1] = interior(Vector(F.col(j)), prefix[j]);
  out.value = prefix[p].coeff(0);
  out.grad = Vector::Zero(q * p);
  for (int i = 0; i < p; ++i) {
    Form alpha = prefix[i];
    for (int j = i + 1; j < p; ++j) alpha = interior(Vector(F.col(j)), alpha);
    const double s = ((p - 1 - i) & 1) ? -1.0 : 1.0;
    out.grad.segment(q * i, q) = s * (N.transpose() * alpha.coeffs());
  }
  if (!hessian) return out;
  out.hess = Matrix::Zero(q * p, q * p);
  for (int i = 0; i < p; ++i)
    out.hess.block(q * i, q * i, q, q) = -out.value * Matrix::Identity(q, q);
  const auto& masks2 = detail::basis_masks(n, 2);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      Form beta = prefix[i];
      for (int m = i + 1; m < p; ++m)
        if (m != j) beta = interior(Vector(F.col(m)), beta);
      Matrix M = Matrix::Zero(n, n);
      for (std::size_t r = 0; r < masks2.size(); ++r) {
        const unsigned mk = masks2[r];
        const int k = std::countr_zero(mk);
        const int l = std::countr_zero(mk & (mk - 1));
        M(k, l) = beta.coeff(r);
        M(l, k) = -beta.coeff(r);
      }
      const double s = ((i + j + 1) & 1) ? -1.0 : 1.0;
      const Matrix blk = s * (N.transpose() * M * N);
      out.hess.block(q * i, q * j, q, q) = blk;
      out.hess.block(q * j, q * i, q, q) = blk.transpose();
    }
  }
  return out;
}

/// Smooth function of finitely many simple functionals of the plane: linear
/// ones xi -> pair(a, xi) and trace ones xi -> tr(A P_xi). The value is
/// combine(v) where v lists the linear pieces first, then the traces.
struct Objective {
  int n = 0;
  int p = 0;
  std::vector<Form> pieces;
  std::vector<Matrix> traces;  // symmetric
  std::function<double(const Vector&)> combine;
  std::function<Vector(const Vector&)> combine_grad;
  std::function<Matrix(const Vector&)> combine_hess;  // empty: affine combine

  static Objective linear(const Form& a, double scale = 1.0) {
    Objective o;
    o.n = a.dim();
    o.p = a.degree();
    o.pieces = {a};
    o.set_affine(Vector::Constant(1, scale));
    return o;
  }

  /// xi -> scale * tr(A P_xi) on G(p, n).
  static Objective trace(const Matrix& A, int p, double scale = 1.0) {
    Objective o;
    o.n = static_cast<int>(A.rows());
    o.p = p;
    o.traces = {Matrix(0.5 * (A + A.transpose()))};
    o.set_affine(Vector::Constant(1, scale));
    return o;
  }

  void set_affine(const Vector& w) {
    combine = [w](const Vector& v) { return w.dot(v); };
    combine_grad = [w](const Vector&) { return w; };
    combine_hess = nullptr;
  }

  [[nodiscard]] int dim() const { return n; }
  [[nodiscard]] int degree() const { return p; }
  [[nodiscard]] std::size_t size() const { return pieces.size() + traces.size(); }
};

struct ObjectiveJet {
  double value = 0.0;
  Vector grad;
  Matrix hess;
  Vector piece_values;
};

/// Jet of xi -> tr(A P_xi) in cousin coordinates.
inline FormJet trace_jet(const Matrix& A, const Matrix& F, const Matrix& N, bool hessian) {
  const Eigen::Index q = N.cols(), p = F.cols();
  FormJet out;
  const Matrix AF = A * F;
  out.value = (F.transpose() * AF).trace();
  const Matrix G = 2.0 * N.transpose() * AF;  // q x p
  out.grad = Eigen::Map<const Vector>(G.data(), q * p);
  if (!hessian) return out;
  const Matrix ANN = N.transpose() * A * N, AFF = F.transpose() * AF;
  out.hess = Matrix::Zero(q * p, q * p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      auto blk = out.hess.block(q * i, q * j, q, q);
      if (i == j) blk += 2.0 * ANN;
      blk.diagonal().array() -= 2.0 * AFF(i, j);
    }
  return out;
}

inline ObjectiveJet evaluate(const Objective& obj, const Matrix& F, const Matrix& N,
                             bool hessian) {
  const std::size_t m = obj.size();
  std::vector<FormJet> jets;
  jets.reserve(m);
  Vector v(m);
  for (std::size_t j = 0; j < obj.pieces.size(); ++j)
    jets.push_back(form_jet(obj.pieces[j], F, N, hessian));
  for (const auto& A : obj.traces) jets.push_back(trace_jet(A, F, N, hessian));
  for (std::size_t j = 0; j < m; ++j) v[j] = jets[j].value;
  ObjectiveJet out;
  out.piece_values = v;
  out.value = obj.combine(v);
  const Vector w = obj.combine_grad(v);
  const Eigen::Index d = N.cols() * F.cols();
  out.grad = Vector::Zero(d);
  for (std::size_t j = 0; j < m; ++j) out.grad += w[j] * jets[j].grad;
  if (hessian) {
    out.hess = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < m; ++j) out.hess += w[j] * jets[j].hess;
    if (obj.combine_hess) {
      const Matrix W = obj.combine_hess(v);
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
          if (W(j, k) != 0.0) out.hess += W(j, k) * jets[j].grad * jets[k].grad.transpose();
    }
  }
  return out;
}

inline Vector piece_values(const Objective& obj, const Matrix& F) {
  Vector v(obj.size());
  if (!obj.pieces.empty()) {
    const Multivector xi = wedge_columns(F);
    for (std::size_t j = 0; j < obj.pieces.size(); ++j) v[j] = pair(obj.pieces[j], xi);
  }
  for (std::size_t j = 0; j < obj.traces.size(); ++j)
    v[obj.pieces.size() + j] = (F.transpose() * obj.traces[j] * F).trace();
  return v;
}

inline double objective_value(const Objective& obj, const Matrix& F) {
  return obj.combine(piece_values(obj, F));
}

/// QR retraction of the tangent vector N X at F.
inline Matrix retract(const Matrix& F, const Matrix& N, const Vector& x) {
  const Eigen::Index q = N.cols(), p = F.cols();
  if (q == 0) return F;
  const Matrix X = Eigen::Map<const Matrix>(x.data(), q, p);
  return orthonormalize(F + N * X);
}

struct LocalOptions {
  double stat_tol = 1e-9;
  int max_iters = 4000;
  bool newton = true;
  double newton_switch = 1e-3;  // gradient norm below which Newton steps are tried
};

struct LocalResult {
  Matrix frame;
  double value = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  int iters = 0;
};

/// Riemannian ascent with Armijo backtracking, finished by regularized Newton
/// steps once the gradient is small.
inline LocalResult ascend(const Objective& obj, Matrix F, const LocalOptions& opt = {}) {
  LocalResult res;
  double step = 1.0;
  const double armijo = 0.1;
  for (int it = 0; it < opt.max_iters; ++it) {
    res.iters = it;
    const Matrix N = complement_frame(F);
    const bool want_hess = opt.newton && it > 0 && res.grad_norm < opt.newton_switch;
    const ObjectiveJet jet = evaluate(obj, F, N, want_hess);
    res.frame = F;
    res.value = jet.value;
    res.grad_norm = jet.grad.norm();
    if (res.grad_norm <= opt.stat_tol) {
      res.converged = true;
      return res;
    }
    if (jet.grad.size() == 0) {
      res.converged = true;
      return res;
    }
    bool moved = false;
    if (want_hess) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(jet.hess);
      const Vector lam = es.eigenvalues();
      const Matrix U = es.eigenvectors();
      const double scale = 1.0 + lam.cwiseAbs().maxCoeff();
      const Vector gu = U.transpose() * jet.grad;
      Vector du(gu.size());
      for (Eigen::Index k = 0; k < gu.size(); ++k)
        du[k] = gu[k] / std::max(-lam[k], 1e-3 * scale);
      const Vector d = U * du;
      double t = 1.0;
      for (int bt = 0; bt < 8 && !moved; ++bt, t *= 0.5) {
        const Matrix Fn = retract(F, N, t * d);
        const double fn = objective_value(obj, Fn);
        if (fn >= jet.value + armijo * t * jet.grad.dot(d) && fn >= jet.value) {
          F = Fn;
          moved = true;
        }
      }
    }
    if (!moved) {
      const double g2 = jet.grad.squaredNorm();
      double t = step, gain = 0.0;
      for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
        const Matrix Fn = retract(F, N, t * jet.grad);
        const double fn = objective_value(obj, Fn);
        if (fn >= jet.value + armijo * t * g2) {
          F = Fn;
          gain = fn - jet.value;
          moved = true;
          break;
        }
      }
      if (!moved) break;  // no ascent possible at floating-point resolution
      // Next trial step from the 1-D quadratic model through the accepted one.
      const double denom = 2.0 * (g2 * t - gain);
      const double model = denom > 0.0 ? g2 * t * t / denom : 4.0 * t;
      step = std::min(std::clamp(model, 0.5 * t, 4.0 * t), 1e3);
    }
  }
  // Final evaluation at the last accepted frame.
  const Matrix N = complement_frame(F);
  const ObjectiveJet jet = evaluate(obj, F, N, false);
  res.frame = F;
  res.value = jet.value;
  res.grad_norm = jet.grad.norm();
  res.converged = res.grad_norm <= opt.stat_tol;
  return res;
}

/// Levenberg-Marquardt on the gradient field: converges to critical points of
/// any index.
inline LocalResult find_critical(const Objective& obj, Matrix F, const LocalOptions& opt = {}) {
  LocalResult res;
  double mu = 1e-2;
  Matrix N = complement_frame(F);
  ObjectiveJet jet = evaluate(obj, F, N, true);
  for (int it = 0; it < opt.max_iters; ++it) {
    res.iters = it;
    res.frame = F;
    res.value = jet.value;
    res.grad_norm = jet.grad.norm();
    if (res.grad_norm <= opt.stat_tol || jet.grad.size() == 0) {
      res.converged = true;
      return res;
    }
    const Matrix H2 = jet.hess * jet.hess;
    const Vector rhs = -(jet.hess * jet.grad);
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      const Matrix A = H2 + mu * Matrix::Identity(H2.rows(), H2.cols());
      const Vector d = A.ldlt().solve(rhs);
      const Matrix Fn = retract(F, N, d);
      const Matrix Nn = complement_frame(Fn);
      ObjectiveJet jn = evaluate(obj, Fn, Nn, true);
      if (jn.grad.norm() < res.grad_norm) {
        F = Fn;
        N = Nn;
        jet = std::move(jn);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) break;
  }
  res.frame = F;
  res.value = jet.value;
  res.grad_norm = jet.grad.norm();
  res.converged = res.grad_norm <= opt.stat_tol;
  return res;
}

struct OptOptions {
  int restarts = 64;
  double stat_tol = 1e-9;
  double tol_plane = 1e-6;
  double cluster_radius = 1e-3;
  std::uint64_t seed = 0;
  int max_iters = 4000;
  int threads = default_threads();
};

struct OptReport {
  double value = 0.0;
  std::vector<OrientedPlane> argplanes;
  std::vector<double> argvalues;
  int restarts = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::uint64_t seed = 0;
  double stat_tol = 0.0;
  double tol_plane = 0.0;
  bool feasible = true;
  std::string method;
};

namespace detail {

inline bool frame_lex_less(const Matrix& a, const Matrix& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return a.data()[i] < b.data()[i];
  return false;
}

// Sorts by descending value, ties broken by the frame entries.
inline void sort_results(std::vector<LocalResult>& rs) {
  std::stable_sort(rs.begin(), rs.end(), [](const LocalResult& x, const LocalResult& y) {
    if (x.value != y.value) return x.value > y.value;
    return frame_lex_less(x.frame, y.frame);
  });
}

}  // namespace detail

/// Greedy deduplication: keeps a plane if it is farther than radius from all
/// previously kept ones. Input order is preserved.
inline std::vector<std::size_t> cluster_planes(const std::vector<OrientedPlane>& planes,
                                               double radius) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    bool fresh = true;
    for (std::size_t k : kept)
      if (plane_distance(planes[i], planes[k]) <= radius) {
        fresh = false;
        break;
      }
    if (fresh) kept.push_back(i);
  }
  return kept;
}

/// Runs `ascend` from the given starts plus opt.restarts random planes with
/// seeds seed + r. Results are sorted by descending value.
inline std::vector<LocalResult> multistart_ascend(const Objective& obj, const OptOptions& opt,
                                                  const std::vector<Matrix>& extra_starts = {}) {
  const int n = obj.dim(), p = obj.degree();
  const int total = opt.restarts + static_cast<int>(extra_starts.size());
  std::vector<LocalResult> results(total);
  LocalOptions lo;
  lo.stat_tol = opt.stat_tol;
  lo.max_iters = opt.max_iters;
  parallel_for(total, opt.threads, [&](int r) {
    Matrix F0 = r < opt.restarts ? random_plane(n, p, opt.seed + r).frame()
                                 : extra_starts[r - opt.restarts];
    results[r] = ascend(obj, std::move(F0), lo);
  });
  detail::sort_results(results);
  return results;
}

/// Packs sorted local results with value >= best - band into an OptReport.
inline OptReport summarize(const std::vector<LocalResult>& results, double band,
                           const OptOptions& opt, double sign = 1.0) {
  OptReport rep;
  rep.restarts = static_cast<int>(results.size());
  rep.seed = opt.seed;
  rep.stat_tol = opt.stat_tol;
  rep.tol_plane = opt.tol_plane;
  if (results.empty()) return rep;
  rep.value = sign * results.front().value;
  rep.converged = results.front().converged;
  rep.gradient_norm = results.front().grad_norm;
  std::vector<OrientedPlane> near;
  std::vector<double> vals;
  for (const auto& r : results) {
    if (r.value < results.front().value - band) break;
    near.emplace_back(r.frame, 1e-8);
    vals.push_back(sign * r.value);
  }
  for (std::size_t k : cluster_planes(near, opt.cluster_radius)) {
    rep.argplanes.push_back(near[k]);
    rep.argvalues.push_back(vals[k]);
  }
  return rep;
}

/// Comass: the maximum of phi over the oriented Grassmannian, with clustered
/// maximizers.
inline OptReport comass(const Form& phi, const OptOptions& opt = {}) {
  if (phi.degree() < 1) throw ShapeError("comass: degree must be >= 1");
  const auto results = multistart_ascend(Objective::linear(phi), opt);
  OptReport rep = summarize(results, opt.tol_plane, opt);
  rep.method = "multistart riemannian ascent (qr retraction, armijo, newton polish)";
  return rep;
}

struct CriticalPlane {
  OrientedPlane plane;
  double value = 0.0;
  double gradient_norm = 0.0;
};

/// Critical points of phi on G(p,n), from Levenberg-Marquardt runs on the
/// gradient field plus ascent and descent runs (which find the extremes).
inline std::vector<CriticalPlane> critical_planes(const Form& phi, const OptOptions& opt = {}) {
  if (phi.degree() < 1) throw ShapeError("critical_planes: degree must be >= 1");
  const int n = phi.dim(), p = phi.degree();
  const Objective up = Objective::linear(phi, 1.0);
  const Objective down = Objective::linear(phi, -1.0);
  LocalOptions lo;
  lo.stat_tol = opt.stat_tol;
  lo.max_iters = opt.max_iters;
  const int total = opt.restarts;
  std::vector<LocalResult> results(total);
  parallel_for(total, opt.threads, [&](int r) {
    Matrix F0 = random_plane(n, p, opt.seed + r).frame();
    if (r % 4 == 0)
      results[r] = ascend(up, F0, lo);
    else if (r % 4 == 1) {
      results[r] = ascend(down, F0, lo);
      results[r].value = -results[r].value;
    } else {
      results[r] = find_critical(up, F0, lo);
    }
  });
  detail::sort_results(results);
  std::vector<OrientedPlane> planes;
  std::vector<const LocalResult*> src;
  for (const auto& r : results)
    if (r.converged) {
      planes.emplace_back(r.frame, 1e-8);
      src.push_back(&r);
    }
  std::vector<CriticalPlane> out;
  for (std::size_t k : cluster_planes(planes, opt.cluster_radius))
    out.push_back({planes[k], src[k]->value, src[k]->grad_norm});
  return out;
}

/// Norm of the Riemannian gradient of phi at xi (the vector of pairings with
/// the first cousins).
inline double cousin_gradient_norm(const Form& phi, const OrientedPlane& xi) {
  const Matrix N = complement_frame(xi.frame());
  return form_jet(phi, xi.frame(), N, false).grad.norm();
}

}  // namespace calgeo
