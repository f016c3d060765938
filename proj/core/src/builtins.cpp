#include <cctype>
#include <cmath>
#include <sstream>

#include "finslerlab/bundles.hpp"
#include "finslerlab/errors.hpp"

namespace finslerlab::bundles {

const char* to_string(Family family) {
  switch (family) {
    case Family::kPointSpace: return "point_space";
    case Family::kLineSum: return "line_sum";
    case Family::kTrivialWeighted: return "trivial_weighted";
    case Family::kQuarticFinsler: return "quartic_finsler";
  }
  return "unknown";
}

const char* to_string(MetricVariant variant) {
  return variant == MetricVariant::kFlatFrame ? "flat_frame" : "default";
}

MetricVariant parse_metric_variant(std::string_view name) {
  if (name == "default") return MetricVariant::kDefault;
  if (name == "flat_frame") return MetricVariant::kFlatFrame;
  throw DomainError("unknown metric variant '" + std::string(name) + "' (expected default or flat_frame)");
}

std::vector<std::string> list_builtins() {
  return {
      "point_space(r)                 rank r over a point (n = 0), identity Hermitian metric",
      "line_sum(a,b)                  O(a)+O(b) over P^1, G = |z1|^2/(1+|z|^2)^a + |z2|^2/(1+|z|^2)^b",
      "trivial_weighted(r,(c1,..,cr)[,n])  trivial bundle over the unit polydisc in C^n (n = 1 default), Gram diag(exp(-c_i |z|^2))",
      "quartic_finsler(r[,n])         trivial bundle, G = sqrt(sum |zeta_i|^4) exp(-|z|^2), non-Hermitian",
  };
}

namespace {

std::string fmt_number(double x) {
  if (x == std::floor(x) && std::abs(x) < 1e9) return std::to_string(static_cast<long long>(x));
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

[[noreturn]] void unknown(std::string_view name, const std::string& why) {
  std::string msg = "unknown or malformed builtin '" + std::string(name) + "': " + why + ". Available:";
  for (const auto& line : list_builtins()) msg += "\n  " + line;
  throw DomainError(msg);
}

// Argument grammar: args := arg (',' arg)* ; arg := number | '(' number (',' number)* ')'
struct Arg {
  bool is_list = false;
  std::vector<double> values;
};

class ArgParser {
 public:
  explicit ArgParser(std::string_view text) : s_(text) {}

  std::vector<Arg> parse() {
    std::vector<Arg> args;
    skip();
    if (pos_ == s_.size()) return args;
    while (true) {
      args.push_back(arg());
      skip();
      if (pos_ == s_.size()) break;
      expect(',');
    }
    return args;
  }

 private:
  Arg arg() {
    skip();
    Arg a;
    if (peek() == '(') {
      ++pos_;
      a.is_list = true;
      while (true) {
        a.values.push_back(number());
        skip();
        if (peek() == ')') {
          ++pos_;
          break;
        }
        expect(',');
      }
    } else {
      a.values.push_back(number());
    }
    return a;
  }

  double number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == 'e' || s_[pos_] == 'E')) {
      ++pos_;
    }
    if (start == pos_) throw std::invalid_argument("expected a number");
    std::size_t used = 0;
    const std::string token(s_.substr(start, pos_ - start));
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("bad number '" + token + "'");
    return v;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  void expect(char c) {
    if (peek() != c) throw std::invalid_argument(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

int as_int(const Arg& a, const char* what) {
  if (a.is_list || a.values.size() != 1) throw std::invalid_argument(std::string(what) + " must be a number");
  const double v = a.values[0];
  if (v != std::floor(v)) throw std::invalid_argument(std::string(what) + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

std::string BundleSpec::canonical_name() const {
  std::string out = to_string(family);
  switch (family) {
    case Family::kPointSpace:
      return out + "(" + std::to_string(rank) + ")";
    case Family::kLineSum:
      return out + "(" + std::to_string(degrees.at(0)) + "," + std::to_string(degrees.at(1)) + ")";
    case Family::kTrivialWeighted: {
      out += "(" + std::to_string(rank) + ",(";
      for (std::size_t i = 0; i < weights.size(); ++i) out += (i ? "," : "") + fmt_number(weights[i]);
      out += ")";
      if (base_dim != 1) out += "," + std::to_string(base_dim);
      return out + ")";
    }
    case Family::kQuarticFinsler:
      out += "(" + std::to_string(rank);
      if (base_dim != 1) out += "," + std::to_string(base_dim);
      return out + ")";
  }
  return out;
}

void validate(const BundleSpec& spec) {
  if (spec.rank < 1 || spec.rank > 4) throw DomainError("rank must be in 1..4, got " + std::to_string(spec.rank));
  switch (spec.family) {
    case Family::kPointSpace:
      if (spec.base_dim != 0) throw DomainError("point_space has base dimension 0");
      break;
    case Family::kLineSum:
      if (spec.rank != 2 || spec.base_dim != 1 || spec.degrees.size() != 2) {
        throw DomainError("line_sum is a rank-2 bundle over P^1 with two degrees");
      }
      break;
    case Family::kTrivialWeighted:
      if (spec.base_dim < 1 || spec.base_dim > 2) throw DomainError("trivial_weighted base dimension must be 1 or 2");
      if (spec.weights.size() != static_cast<std::size_t>(spec.rank)) {
        throw DomainError("trivial_weighted needs one weight per fiber coordinate");
      }
      for (double c : spec.weights) {
        if (!std::isfinite(c)) throw DomainError("trivial_weighted weights must be finite");
      }
      break;
    case Family::kQuarticFinsler:
      if (spec.base_dim < 1 || spec.base_dim > 2) throw DomainError("quartic_finsler base dimension must be 1 or 2");
      break;
  }
}

BundleSpec parse_bundle_name(std::string_view name) {
  const auto open = name.find('(');
  if (name.empty() || open == std::string_view::npos || name.back() != ')') unknown(name, "expected family(args)");
  std::string family(name.substr(0, open));
  while (!family.empty() && std::isspace(static_cast<unsigned char>(family.back()))) family.pop_back();

  std::vector<Arg> args;
  try {
    args = ArgParser(name.substr(open + 1, name.size() - open - 2)).parse();
  } catch (const std::exception& e) {
    unknown(name, e.what());
  }

  BundleSpec spec;
  try {
    if (family == "point_space") {
      if (args.size() != 1) throw std::invalid_argument("point_space takes one argument");
      spec.family = Family::kPointSpace;
      spec.rank = as_int(args[0], "rank");
      spec.base_dim = 0;
    } else if (family == "line_sum") {
      if (args.size() != 2) throw std::invalid_argument("line_sum takes two degrees");
      spec.family = Family::kLineSum;
      spec.rank = 2;
      spec.base_dim = 1;
      spec.degrees = {as_int(args[0], "degree"), as_int(args[1], "degree")};
    } else if (family == "trivial_weighted") {
      if (args.size() < 2 || args.size() > 3) throw std::invalid_argument("trivial_weighted takes (r, (weights)[, n])");
      spec.family = Family::kTrivialWeighted;
      spec.rank = as_int(args[0], "rank");
      spec.weights = args[1].values;
      spec.base_dim = args.size() == 3 ? as_int(args[2], "base dimension") : 1;
    } else if (family == "quartic_finsler") {
      if (args.empty() || args.size() > 2) throw std::invalid_argument("quartic_finsler takes (r[, n])");
      spec.family = Family::kQuarticFinsler;
      spec.rank = as_int(args[0], "rank");
      spec.base_dim = args.size() == 2 ? as_int(args[1], "base dimension") : 1;
    } else {
      throw std::invalid_argument("no family named '" + family + "'");
    }
  } catch (const std::invalid_argument& e) {
    unknown(name, e.what());
  }
  validate(spec);
  return spec;
}

namespace {

double norm2(const CVec& z) { return z.squaredNorm(); }

cplx ipow(cplx z, int e) {
  cplx out = 1.0;
  for (int i = 0; i < std::abs(e); ++i) out *= z;
  return e < 0 ? 1.0 / out : out;
}

AtlasPtr point_atlas(const std::string& name, int rank) {
  return std::make_shared<BundleAtlas>(name, rank, 0, BaseKind::kPoint,
                                       std::vector<BaseChart>{{0, 0, BaseKind::kPoint, "single point"}},
                                       std::vector<TransitionMap>{});
}

AtlasPtr polydisc_atlas(const std::string& name, int rank, int n) {
  return std::make_shared<BundleAtlas>(
      name, rank, n, BaseKind::kPolydisc,
      std::vector<BaseChart>{{0, n, BaseKind::kPolydisc, "unit polydisc in C^" + std::to_string(n)}},
      std::vector<TransitionMap>{});
}

// Two standard charts of P^1 glued by z -> 1/z; the fiber transition is
// diag(z^-a, z^-b) in both directions.
AtlasPtr line_sum_atlas(const std::string& name, int a, int b) {
  auto base = [](const CVec& z) {
    CVec w(1);
    w[0] = 1.0 / z[0];
    return w;
  };
  auto fiber = [a, b](const CVec& z) {
    CMat g = CMat::Zero(2, 2);
    g(0, 0) = ipow(z[0], -a);
    g(1, 1) = ipow(z[0], -b);
    return g;
  };
  std::vector<BaseChart> charts{{0, 1, BaseKind::kProjectiveLine, "C (z = [z:1])"},
                                {1, 1, BaseKind::kProjectiveLine, "C (z' = [1:z'])"}};
  std::vector<TransitionMap> transitions{{0, 1, base, fiber}, {1, 0, base, fiber}};
  return std::make_shared<BundleAtlas>(name, 2, 1, BaseKind::kProjectiveLine, std::move(charts), std::move(transitions));
}

finsler::GramFieldFn flat_gram(int rank) {
  return [rank](int, const CVec&) { return CMat(CMat::Identity(rank, rank)); };
}

}  // namespace

std::optional<finsler::GramFieldFn> default_gram_field(const BundleSpec& spec) {
  switch (spec.family) {
    case Family::kPointSpace:
      return flat_gram(spec.rank);
    case Family::kLineSum: {
      const int a = spec.degrees.at(0);
      const int b = spec.degrees.at(1);
      return finsler::GramFieldFn([a, b](int, const CVec& z) {
        const double s = 1.0 + norm2(z);
        CMat h = CMat::Zero(2, 2);
        h(0, 0) = std::pow(s, -a);
        h(1, 1) = std::pow(s, -b);
        return h;
      });
    }
    case Family::kTrivialWeighted: {
      const auto c = spec.weights;
      return finsler::GramFieldFn([c](int, const CVec& z) {
        const double s = norm2(z);
        const auto r = static_cast<Eigen::Index>(c.size());
        CMat h = CMat::Zero(r, r);
        for (Eigen::Index i = 0; i < r; ++i) h(i, i) = std::exp(-c[static_cast<std::size_t>(i)] * s);
        return h;
      });
    }
    case Family::kQuarticFinsler:
      return std::nullopt;
  }
  return std::nullopt;
}

Bundle make_bundle(const BundleSpec& spec, MetricVariant variant) {
  validate(spec);
  const std::string name = spec.canonical_name();
  Bundle out;
  out.spec = spec;
  switch (spec.family) {
    case Family::kPointSpace: out.atlas = point_atlas(name, spec.rank); break;
    case Family::kLineSum: out.atlas = line_sum_atlas(name, spec.degrees[0], spec.degrees[1]); break;
    case Family::kTrivialWeighted:
    case Family::kQuarticFinsler: out.atlas = polydisc_atlas(name, spec.rank, spec.base_dim); break;
  }

  if (variant == MetricVariant::kFlatFrame) {
    out.metric = finsler::make_hermitian(name + " / flat frame |zeta|^2", spec.rank, spec.base_dim, flat_gram(spec.rank));
    return out;
  }
  if (auto gram = default_gram_field(spec)) {
    out.metric = finsler::make_hermitian(name + " / default Hermitian", spec.rank, spec.base_dim, *gram);
  } else {
    out.metric = finsler::make_closed_form(
        name + " / sqrt(sum |zeta_i|^4) exp(-|z|^2)", spec.rank, spec.base_dim,
        [](int, const CVec& z, const CVec& zeta) {
          double q = 0.0;
          for (Eigen::Index i = 0; i < zeta.size(); ++i) {
            const double a = std::norm(zeta[i]);
            q += a * a;
          }
          return std::sqrt(q) * std::exp(-norm2(z));
        });
  }
  return out;
}

Bundle builtin_bundle(std::string_view name) { return make_bundle(parse_bundle_name(name)); }

}  // namespace finslerlab::bundles
