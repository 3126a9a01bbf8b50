#pragma once

#include "seqplace/core.hpp"

#include <limits>

namespace seqplace::nn {

struct SchedulerState {
  double current_lr = 1e-3;
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  static SchedulerState start(double initial_lr) { return {initial_lr, std::numeric_limits<double>::infinity(), 0}; }
};

/// Reduce-on-plateau. An epoch improves only if its loss is strictly below
/// the best so far; after more than `patience` stale epochs lr is scaled
/// by `factor` (floored at min_lr) and the counter restarts.
inline SchedulerState plateau_step(SchedulerState s, double epoch_loss, double factor, int patience, double min_lr) {
  if (!std::isfinite(epoch_loss)) throw NumericalError("plateau_step: non-finite epoch loss");
  if (epoch_loss < s.best_loss) {
    s.best_loss = epoch_loss;
    s.epochs_since_improvement = 0;
    return s;
  }
  if (++s.epochs_since_improvement > patience) {
    s.current_lr = std::max(s.current_lr * factor, min_lr);
    s.epochs_since_improvement = 0;
  }
  return s;
}

}  // namespace seqplace::nn
