#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "svidr/errors.hpp"
#include "svidr/family.hpp"
#include "svidr/linalg.hpp"

namespace svidr {

struct TermSpec {
  enum class Kind { intercept, linear, pspline };
  Kind kind = Kind::intercept;
  std::string covariate;
  int num_knots = 10;
  int degree = 3;
  int penalty_order = 2;
};

struct ParamTerms {
  std::vector<TermSpec> terms;
};

struct ModelSpec {
  FamilyKind family = FamilyKind::gaussian;
  std::vector<ParamTerms> params;  // one entry per distribution parameter
  double known_sd = 1.0;           // gaussian_known_sd only
  double hyper_concentration = 1.0;
  double hyper_rate = 0.01;
};

struct Dataset {
  std::size_t n = 0;
  std::vector<std::string> names;
  std::vector<Vec<double>> columns;

  const Vec<double>& at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return columns[i];
    throw MissingCovariate("column not found: " + name);
  }
  bool has(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
  }
};

// Equidistant-knot B-spline basis. num_knots equally spaced knot positions
// span [x_min, x_max] (num_knots - 1 interior segments); the knot vector is
// extended by `degree` extra knots of the same spacing on both sides, giving
// num_knots + degree - 1 basis functions.
struct BSplineBasis {
  double x_min = 0.0, x_max = 1.0;
  int num_knots = 10;
  int degree = 3;

  std::size_t size() const {
    return static_cast<std::size_t>(num_knots + degree - 1);
  }

  double spacing() const { return (x_max - x_min) / (num_knots - 1); }

  double knot(int k) const {  // k in [0, num_knots + 2*degree)
    return x_min + (k - degree) * spacing();
  }

  // de Boor's algorithm: the degree+1 nonzero basis values at x, written into
  // the row of `out` at columns span-degree .. span.
  void eval_row(double x, double* out_row) const {
    const int n_knots = num_knots + 2 * degree;
    int span = degree + static_cast<int>(std::floor((x - x_min) / spacing()));
    span = std::clamp(span, degree, n_knots - degree - 2);

    std::vector<double> vals(degree + 1, 0.0);
    std::vector<double> left(degree + 1), right(degree + 1);
    vals[0] = 1.0;
    for (int d = 1; d <= degree; ++d) {
      left[d] = x - knot(span + 1 - d);
      right[d] = knot(span + d) - x;
      double saved = 0.0;
      for (int r = 0; r < d; ++r) {
        const double tmp = vals[r] / (right[r + 1] + left[d - r]);
        vals[r] = saved + right[r + 1] * tmp;
        saved = left[d - r] * tmp;
      }
      vals[d] = saved;
    }
    for (int r = 0; r <= degree; ++r) out_row[span - degree + r] = vals[r];
  }

  Mat<double> eval(const Vec<double>& x) const {
    Mat<double> m(x.size(), size());
    for (std::size_t i = 0; i < x.size(); ++i) eval_row(x[i], m.row(i));
    return m;
  }
};

inline Mat<double> bspline_design(const Vec<double>& x, int num_knots, int degree) {
  if (x.empty()) throw DimensionMismatch("bspline_design: empty input");
  for (double v : x)
    if (!std::isfinite(v)) throw NonFiniteValue("bspline_design: nonfinite covariate");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw DegenerateRange("bspline_design: constant covariate");
  BSplineBasis basis{*lo, *hi, num_knots, degree};
  return basis.eval(x);
}

// K = D^T D with D the order-th difference matrix; rank Q - order.
inline Mat<double> rw_penalty(std::size_t q, int order) {
  if (order < 1 || static_cast<std::size_t>(order) >= q)
    throw OrderTooLarge("rw_penalty: need Q > order >= 1");
  // difference coefficients (-1)^k * C(order, k)
  std::vector<double> coef(order + 1);
  coef[0] = 1.0;
  for (int k = 1; k <= order; ++k) coef[k] = -coef[k - 1] * (order - k + 1) / k;
  Mat<double> d(q - order, q);
  for (std::size_t r = 0; r + order < q; ++r)
    for (int k = 0; k <= order; ++k) d(r, r + k) = coef[k];
  return mat_atb(d, d);
}

// One predictor term after identifiability centering.
struct DesignBlock {
  std::size_t param = 0;  // distribution parameter index p
  std::string label;      // e.g. "loc.s(x1)"
  Mat<double> X;          // N x Qpj, centered
  Mat<double> K;          // Qpj x Qpj penalty, centered
  Mat<double> Zb;         // raw columns -> centered columns map
  std::size_t penalty_rank = 0;
  int tau_index = -1;  // -1 for unpenalized blocks
  std::size_t col_offset = 0;  // offset into the global coefficient vector

  // spline metadata so effect curves can be rebuilt on new grids
  bool is_spline = false;
  BSplineBasis basis;
};

// Projects a raw term design onto the orthogonal complement of its column
// means and maps the penalty accordingly (K_new = Zb^T K Zb). When the
// columns are already centered the projection is the identity.
inline DesignBlock center_term(const Mat<double>& x_raw, const Mat<double>& k_raw) {
  if (x_raw.cols() < 2) throw DimensionMismatch("center_term: need >= 2 columns");
  Vec<double> means(x_raw.cols(), 0.0);
  for (std::size_t i = 0; i < x_raw.rows(); ++i)
    for (std::size_t j = 0; j < x_raw.cols(); ++j) means[j] += x_raw(i, j);
  double mnorm = 0.0;
  for (auto& m : means) {
    m /= x_raw.rows();
    mnorm += m * m;
  }

  DesignBlock block;
  if (std::sqrt(mnorm) <= 1e-14) {
    block.X = x_raw;
    block.K = k_raw;
    block.Zb = Mat<double>::identity(x_raw.cols());
  } else {
    block.Zb = nullspace_basis(means);
    block.X = mat_ab(x_raw, block.Zb);
    block.K = mat_atb(block.Zb, mat_ab(k_raw, block.Zb));
  }
  block.penalty_rank = numeric_rank(block.K, 1e-8);
  return block;
}

// Assembled per-parameter designs plus the flat block list.
struct Design {
  std::size_t n = 0;
  std::size_t P = 0;
  std::size_t Q = 0;                     // total coefficients
  std::vector<Mat<double>> Xp;           // per-parameter N x Qp design
  std::vector<std::size_t> param_offset; // column offset of parameter p
  std::vector<DesignBlock> blocks;       // every term incl. intercepts
  std::size_t n_tau = 0;
  std::vector<std::string> coef_labels;  // length Q
  std::vector<std::string> tau_labels;   // length n_tau
};

inline Design assemble_design(const ModelSpec& spec, const Dataset& data) {
  const std::size_t p_count = family_param_count(spec.family);
  if (spec.params.size() != p_count)
    throw ConfigError("model spec: expected " + std::to_string(p_count) +
                      " parameter term lists, got " + std::to_string(spec.params.size()));
  const auto pnames = family_param_names(spec.family);

  Design d;
  d.n = data.n;
  d.P = p_count;

  for (std::size_t p = 0; p < p_count; ++p) {
    std::vector<DesignBlock> param_blocks;

    // leading intercept column
    DesignBlock icpt;
    icpt.param = p;
    icpt.label = pnames[p] + ".intercept";
    icpt.X = Mat<double>(data.n, 1, 1.0);
    icpt.K = Mat<double>(1, 1, 0.0);
    icpt.Zb = Mat<double>::identity(1);
    param_blocks.push_back(std::move(icpt));

    for (const auto& term : spec.params[p].terms) {
      if (term.kind == TermSpec::Kind::intercept) continue;  // already leading
      const Vec<double>& x = data.at(term.covariate);
      for (double v : x)
        if (!std::isfinite(v))
          throw NonFiniteValue("covariate " + term.covariate + " has nonfinite values");

      if (term.kind == TermSpec::Kind::linear) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= x.size();
        DesignBlock b;
        b.param = p;
        b.label = pnames[p] + "." + term.covariate;
        b.X = Mat<double>(data.n, 1);
        for (std::size_t i = 0; i < data.n; ++i) b.X(i, 0) = x[i] - mean;
        b.K = Mat<double>(1, 1, 0.0);
        b.Zb = Mat<double>::identity(1);
        param_blocks.push_back(std::move(b));
      } else {
        if (term.num_knots < term.penalty_order + 1)
          throw ConfigError("pspline " + term.covariate + ": num_knots < penalty_order + 1");
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        if (*lo == *hi)
          throw DegenerateRange("pspline " + term.covariate + ": constant covariate");
        BSplineBasis basis{*lo, *hi, term.num_knots, term.degree};
        Mat<double> x_raw = basis.eval(x);
        Mat<double> k_raw = rw_penalty(x_raw.cols(), term.penalty_order);
        DesignBlock b = center_term(x_raw, k_raw);
        b.param = p;
        b.label = pnames[p] + ".s(" + term.covariate + ")";
        b.tau_index = static_cast<int>(d.n_tau++);
        b.is_spline = true;
        b.basis = basis;
        param_blocks.push_back(std::move(b));
        d.tau_labels.push_back("tau." + pnames[p] + ".s(" + term.covariate + ")");
      }
    }

    // concatenate the parameter's blocks into X_p
    std::size_t qp = 0;
    for (const auto& b : param_blocks) qp += b.X.cols();
    Mat<double> xp(data.n, qp);
    std::size_t off = 0;
    for (auto& b : param_blocks) {
      b.col_offset = d.Q + off;
      for (std::size_t i = 0; i < data.n; ++i)
        for (std::size_t j = 0; j < b.X.cols(); ++j) xp(i, off + j) = b.X(i, j);
      if (b.X.cols() == 1) {
        d.coef_labels.push_back(b.label);
      } else {
        for (std::size_t j = 0; j < b.X.cols(); ++j)
          d.coef_labels.push_back(b.label + "." + std::to_string(j + 1));
      }
      off += b.X.cols();
      d.blocks.push_back(std::move(b));
    }
    d.param_offset.push_back(d.Q);
    d.Xp.push_back(std::move(xp));
    d.Q += qp;
  }
  return d;
}

}  // namespace svidr
