#pragma once

// Quaternion and octonion multiplication tables by Cayley-Dickson doubling.
//
// Quaternion basis (1, i, j, k). Octonion basis (1, i, j, k, e, ie, je, ke)
// where e is the doubling unit and (a + b e)(c + d e) = (ac - conj(d) b) +
// (d a + b conj(c)) e.

#include "calgeo/exterior.hpp"

#include <vector>

namespace calgeo {

class AlgebraTable {
 public:
  static AlgebraTable quaternions() {
    AlgebraTable t;
    t.dim_ = 4;
    t.table_.assign(4 * 4, Vector::Zero(4));
    // Hamilton's rules ij = k, jk = i, ki = j.
    const int sgn[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, -1, -1, 1}, {1, 1, -1, -1}};
    const int idx[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) t.table_[a * 4 + b][idx[a][b]] = sgn[a][b];
    return t;
  }

  /// Doubling of an algebra of dimension d to dimension 2d.
  static AlgebraTable double_of(const AlgebraTable& base) {
    AlgebraTable t;
    const int d = base.dim_;
    t.dim_ = 2 * d;
    t.table_.assign(t.dim_ * t.dim_, Vector::Zero(t.dim_));
    for (int x = 0; x < t.dim_; ++x)
      for (int y = 0; y < t.dim_; ++y) {
        Vector ex = Vector::Unit(t.dim_, x), ey = Vector::Unit(t.dim_, y);
        t.table_[x * t.dim_ + y] = doubled_product(base, ex, ey);
      }
    return t;
  }

  static AlgebraTable octonions() { return double_of(quaternions()); }

  [[nodiscard]] int dim() const { return dim_; }

  [[nodiscard]] Vector multiply(const Vector& x, const Vector& y) const {
    Vector out = Vector::Zero(dim_);
    for (int a = 0; a < dim_; ++a) {
      if (x[a] == 0.0) continue;
      for (int b = 0; b < dim_; ++b)
        if (y[b] != 0.0) out += x[a] * y[b] * table_[a * dim_ + b];
    }
    return out;
  }

  [[nodiscard]] static Vector conjugate(const Vector& x) {
    Vector c = -x;
    c[0] = x[0];
    return c;
  }

  /// Matrix of right multiplication q -> q u.
  [[nodiscard]] Matrix right_multiplication(const Vector& u) const {
    Matrix R(dim_, dim_);
    for (int a = 0; a < dim_; ++a) R.col(a) = multiply(Vector::Unit(dim_, a), u);
    return R;
  }

  [[nodiscard]] Matrix left_multiplication(const Vector& u) const {
    Matrix L(dim_, dim_);
    for (int a = 0; a < dim_; ++a) L.col(a) = multiply(u, Vector::Unit(dim_, a));
    return L;
  }

 private:
  static Vector doubled_product(const AlgebraTable& base, const Vector& x, const Vector& y) {
    const int d = base.dim_;
    const Vector a = x.head(d), b = x.tail(d), c = y.head(d), dd = y.tail(d);
    Vector out(2 * d);
    out.head(d) = base.multiply(a, c) - base.multiply(conjugate(dd), b);
    out.tail(d) = base.multiply(dd, a) + base.multiply(b, conjugate(c));
    return out;
  }

  int dim_ = 0;
  std::vector<Vector> table_;
};

}  // namespace calgeo
