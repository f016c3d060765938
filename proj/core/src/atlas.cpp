#include "finslerlab/atlas.hpp"

#include <set>
#include <utility>

#include "finslerlab/errors.hpp"

namespace finslerlab::bundles {

const char* to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::kPoint: return "point";
    case BaseKind::kPolydisc: return "polydisc";
    case BaseKind::kProjectiveLine: return "projective_line";
  }
  return "unknown";
}

BundleAtlas::BundleAtlas(std::string name, int rank, int base_dim, BaseKind kind,
                         std::vector<BaseChart> charts, std::vector<TransitionMap> transitions)
    : name_(std::move(name)),
      rank_(rank),
      base_dim_(base_dim),
      kind_(kind),
      charts_(std::move(charts)),
      transitions_(std::move(transitions)) {
  if (rank_ < 1) throw DomainError("BundleAtlas: rank must be >= 1");
  if (base_dim_ < 0) throw DomainError("BundleAtlas: base dimension must be >= 0");
  if (charts_.empty()) throw DomainError("BundleAtlas: at least one chart is required");
  if (kind_ == BaseKind::kPoint && (base_dim_ != 0 || charts_.size() != 1)) {
    throw DomainError("BundleAtlas: a point base has dimension 0 and exactly one chart");
  }
  std::set<int> ids;
  for (const auto& c : charts_) {
    if (c.dim != base_dim_) throw DomainError("BundleAtlas: chart dimension differs from base dimension");
    if (!ids.insert(c.id).second) throw DomainError("BundleAtlas: duplicate chart id");
  }
  for (const auto& t : transitions_) {
    if (!ids.count(t.source) || !ids.count(t.target)) throw DomainError("BundleAtlas: transition references unknown chart");
    if (!t.base_map || !t.fiber_matrix) throw DomainError("BundleAtlas: transition without evaluators");
  }
  // Every ordered pair of distinct charts overlaps for the bases in scope.
  for (const auto& a : charts_) {
    for (const auto& b : charts_) {
      if (a.id != b.id && transition(a.id, b.id) == nullptr) {
        throw DomainError("BundleAtlas: missing transition between overlapping charts");
      }
    }
  }
}

const TransitionMap* BundleAtlas::transition(int source, int target) const {
  for (const auto& t : transitions_) {
    if (t.source == source && t.target == target) return &t;
  }
  return nullptr;
}

std::vector<std::string> BundleAtlas::frame_labels() const {
  std::vector<std::string> out;
  for (int i = 1; i <= rank_; ++i) out.push_back("s_" + std::to_string(i));
  return out;
}

std::vector<std::string> BundleAtlas::dual_frame_labels() const {
  std::vector<std::string> out;
  for (int i = 1; i <= rank_; ++i) out.push_back("t_" + std::to_string(i));
  return out;
}

}  // namespace finslerlab::bundles
