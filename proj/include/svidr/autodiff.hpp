#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace svidr {

// Scalar reverse-mode tape. Every recorded value is a node holding the
// local partials with respect to at most two parents; constants stay off
// the tape entirely. The tape is rebuilt each optimization step.
class Tape {
 public:
  struct Node {
    double w0, w1;
    std::int32_t p0, p1;
  };

  std::int32_t leaf() {
    nodes_.push_back({0.0, 0.0, -1, -1});
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::int32_t unary(double w0, std::int32_t p0) {
    nodes_.push_back({w0, 0.0, p0, -1});
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::int32_t binary(double w0, std::int32_t p0, double w1, std::int32_t p1) {
    nodes_.push_back({w0, w1, p0, p1});
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Adjoints of every node with respect to the node `root`.
  std::vector<double> adjoints(std::int32_t root) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[root] = 1.0;
    for (std::int32_t i = root; i >= 0; --i) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.p0 >= 0) adj[n.p0] += n.w0 * a;
      if (n.p1 >= 0) adj[n.p1] += n.w1 * a;
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
};

// A tracked double. tape == nullptr marks a constant.
struct Var {
  double v = 0.0;
  Tape* tape = nullptr;
  std::int32_t id = -1;

  Var() = default;
  Var(double x) : v(x) {}  // NOLINT: implicit constant lift is intended
  Var(Tape* t, double x) : v(x), tape(t), id(t->leaf()) {}

  bool tracked() const { return tape != nullptr; }
};

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.v; }

namespace detail {
inline Var unary(const Var& x, double val, double dval) {
  if (!x.tracked()) return Var(val);
  Var r;
  r.v = val;
  r.tape = x.tape;
  r.id = x.tape->unary(dval, x.id);
  return r;
}

inline Var binary(const Var& a, const Var& b, double val, double da, double db) {
  Tape* t = a.tracked() ? a.tape : b.tape;
  if (t == nullptr) return Var(val);
  Var r;
  r.v = val;
  r.tape = t;
  if (a.tracked() && b.tracked())
    r.id = t->binary(da, a.id, db, b.id);
  else if (a.tracked())
    r.id = t->unary(da, a.id);
  else
    r.id = t->unary(db, b.id);
  return r;
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, b, a.v + b.v, 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, b, a.v - b.v, 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.v * b.v, b.v, a.v);
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.v;
  return detail::binary(a, b, a.v * inv, inv, -a.v * inv * inv);
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.v, -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return detail::unary(x, e, e);
}
inline Var log(const Var& x) { return detail::unary(x, std::log(x.v), 1.0 / x.v); }
inline Var log1p(const Var& x) {
  return detail::unary(x, std::log1p(x.v), 1.0 / (1.0 + x.v));
}
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.v);
  return detail::unary(x, s, 0.5 / s);
}
inline Var lgamma(const Var& x) {
  return detail::unary(x, std::lgamma(x.v), boost::math::digamma(x.v));
}
inline Var fabs(const Var& x) {
  return detail::unary(x, std::fabs(x.v), x.v >= 0.0 ? 1.0 : -1.0);
}

inline bool isfinite(const Var& x) { return std::isfinite(x.v); }

}  // namespace svidr
