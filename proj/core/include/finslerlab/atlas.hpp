#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/types.hpp"

namespace finslerlab::bundles {

enum class BaseKind { kPoint, kPolydisc, kProjectiveLine };
const char* to_string(BaseKind kind);

struct BaseChart {
  int id = 0;
  int dim = 0;
  BaseKind kind = BaseKind::kPoint;
  std::string domain;  // human-readable nominal domain
};

/// Change of trivialization from chart `source` to chart `target`:
/// z_target = base_map(z_source), zeta_target = fiber_matrix(z_source) * zeta_source.
struct TransitionMap {
  int source = 0;
  int target = 0;
  std::function<CVec(const CVec&)> base_map;
  std::function<CMat(const CVec&)> fiber_matrix;
};

/// Holomorphic vector bundle of rank r over a point, a polydisc (n <= 2) or P^1.
class BundleAtlas {
 public:
  BundleAtlas(std::string name, int rank, int base_dim, BaseKind kind, std::vector<BaseChart> charts,
              std::vector<TransitionMap> transitions);

  const std::string& name() const { return name_; }
  int rank() const { return rank_; }
  int base_dim() const { return base_dim_; }
  BaseKind base_kind() const { return kind_; }
  const std::vector<BaseChart>& charts() const { return charts_; }
  const std::vector<TransitionMap>& transitions() const { return transitions_; }
  const TransitionMap* transition(int source, int target) const;

  /// Frame labels s_1..s_r and dual frame labels t_1..t_r.
  std::vector<std::string> frame_labels() const;
  std::vector<std::string> dual_frame_labels() const;

 private:
  std::string name_;
  int rank_;
  int base_dim_;
  BaseKind kind_;
  std::vector<BaseChart> charts_;
  std::vector<TransitionMap> transitions_;
};

using AtlasPtr = std::shared_ptr<const BundleAtlas>;

}  // namespace finslerlab::bundles
