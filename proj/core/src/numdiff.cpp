#include "finslerlab/numdiff.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "finslerlab/errors.hpp"

namespace finslerlab::numdiff {

namespace {

// Fourth-order first-derivative stencil: offsets and weights (divide by h).
constexpr std::array<int, 4> kOffsets{-2, -1, 1, 2};
constexpr std::array<double, 4> kFirstWeights{1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};

}  // namespace

std::string format_point(const RVec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

std::string format_point(const CVec& u) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    os << (i ? ", " : "") << u[i].real() << (u[i].imag() < 0 ? "-" : "+") << std::abs(u[i].imag())
       << "i";
  }
  os << ")";
  return os.str();
}

double checked_eval(const RealScalarFn& f, const RVec& x) {
  const double value = f(x);
  if (!std::isfinite(value)) {
    throw EvaluationError("non-finite function value at probe point " + format_point(x));
  }
  return value;
}

RMat hessian_central(const RealScalarFn& f, const RVec& x, const RVec& steps) {
  const Eigen::Index m = x.size();
  RMat hess(m, m);
  const double f0 = checked_eval(f, x);
  RVec probe = x;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = steps[i];
    probe[i] = x[i] + h;
    const double fp = checked_eval(f, probe);
    probe[i] = x[i] - h;
    const double fm = checked_eval(f, probe);
    probe[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double hi = steps[i];
      const double hj = steps[j];
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          probe[i] = x[i] + si * hi;
          probe[j] = x[j] + sj * hj;
          acc += si * sj * checked_eval(f, probe);
        }
      }
      probe[i] = x[i];
      probe[j] = x[j];
      hess(i, j) = hess(j, i) = acc / (4.0 * hi * hj);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

RMat hessian_fourth_order(const RealScalarFn& f, const RVec& x, const RVec& steps) {
  const Eigen::Index m = x.size();
  RMat hess(m, m);
  const double f0 = checked_eval(f, x);
  RVec probe = x;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = steps[i];
    std::array<double, 4> vals{};
    for (std::size_t a = 0; a < 4; ++a) {
      probe[i] = x[i] + kOffsets[a] * h;
      vals[a] = checked_eval(f, probe);
    }
    probe[i] = x[i];
    // (-f(-2) + 16 f(-1) - 30 f(0) + 16 f(1) - f(2)) / (12 h^2)
    hess(i, i) = (-vals[0] + 16.0 * vals[1] - 30.0 * f0 + 16.0 * vals[2] - vals[3]) / (12.0 * h * h);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < 4; ++a) {
        probe[i] = x[i] + kOffsets[a] * steps[i];
        for (std::size_t b = 0; b < 4; ++b) {
          probe[j] = x[j] + kOffsets[b] * steps[j];
          acc += kFirstWeights[a] * kFirstWeights[b] * checked_eval(f, probe);
        }
      }
      probe[i] = x[i];
      probe[j] = x[j];
      hess(i, j) = hess(j, i) = acc / (steps[i] * steps[j]);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

RVec gradient_fourth_order(const RealScalarFn& f, const RVec& x, const RVec& steps) {
  const Eigen::Index m = x.size();
  RVec grad(m);
  RVec probe = x;
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      probe[i] = x[i] + kOffsets[a] * steps[i];
      acc += kFirstWeights[a] * checked_eval(f, probe);
    }
    probe[i] = x[i];
    grad[i] = acc / steps[i];
  }
  return grad;
}

CMat complex_hessian_from_real(const RMat& real_hessian) {
  const Eigen::Index m = real_hessian.rows() / 2;
  const auto hxx = real_hessian.topLeftCorner(m, m);
  const auto hyy = real_hessian.bottomRightCorner(m, m);
  const auto hxy = real_hessian.topRightCorner(m, m);     // d x_i d y_j
  const auto hyx = real_hessian.bottomLeftCorner(m, m);   // d y_i d x_j
  CMat out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out(i, j) = 0.25 * cplx(hxx(i, j) + hyy(i, j), hyx(i, j) - hxy(i, j));
    }
  }
  return 0.5 * (out + out.adjoint());
}

CMat complex_hessian(const ComplexScalarFn& f, const CVec& u, const RVec& steps) {
  const Eigen::Index m = u.size();
  RVec real_steps(2 * m);
  real_steps.head(m) = steps;
  real_steps.tail(m) = steps;
  const RealScalarFn g = [&f](const RVec& x) { return f(to_complex(x)); };
  return complex_hessian_from_real(hessian_fourth_order(g, to_real(u), real_steps));
}

}  // namespace finslerlab::numdiff
