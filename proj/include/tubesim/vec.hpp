#pragma once

#include <array>
#include <cmath>

namespace tubesim {

template <int D>
struct Vec {
  std::array<double, D> c{};

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < D; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < D; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < D; ++i) c[i] *= s;
    return *this;
  }
};

template <int D>
inline Vec<D> operator+(Vec<D> a, const Vec<D>& b) { return a += b; }
template <int D>
inline Vec<D> operator-(Vec<D> a, const Vec<D>& b) { return a -= b; }
template <int D>
inline Vec<D> operator*(double s, Vec<D> a) { return a *= s; }

template <int D>
inline double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a.c[i] * b.c[i];
  return s;
}

template <int D>
inline double norm2(const Vec<D>& a) { return dot(a, a); }

template <int D>
inline double norm(const Vec<D>& a) { return std::sqrt(norm2(a)); }

template <int D>
inline double dist2(const Vec<D>& a, const Vec<D>& b) { return norm2(a - b); }

template <int D>
inline Vec<D> normalized(const Vec<D>& a) {
  double n = norm(a);
  Vec<D> r = a;
  for (int i = 0; i < D; ++i) r.c[i] /= n;
  return r;
}

}  // namespace tubesim
