#include "finslerlab/errors.hpp"

#include "finslerlab/types.hpp"

namespace finslerlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kEvaluation: return "evaluation";
    case ErrorKind::kNumericalInstability: return "numerical_instability";
  }
  return "unknown";
}

RVec to_real(const CVec& u) {
  const Eigen::Index m = u.size();
  RVec x(2 * m);
  x.head(m) = u.real();
  x.tail(m) = u.imag();
  return x;
}

CVec to_complex(const RVec& x) {
  const Eigen::Index m = x.size() / 2;
  CVec u(m);
  for (Eigen::Index i = 0; i < m; ++i) u[i] = cplx(x[i], x[m + i]);
  return u;
}

}  // namespace finslerlab
