#ifndef ATA_ADAPTATION_HPP
#define ATA_ADAPTATION_HPP

/**
 * @file
 * @brief Online specialization update from observed task progress.
 *
 * Each step compares the cost a robot would have reached under its nominal
 * model, V(x_sim), with the cost actually reached, V(x_act). The difference
 * drives
 *
 *   s[k+1] = s[k] + beta1 * alpha[k] * dV[k]                    (proportional)
 *   s[k+1] = s[k] + beta1 * alpha[k] * dV[k] + beta2 * acc[k]   (with integral)
 *   acc[k] = (1 - leak) * (acc[k-1] + (s_bar - s[k]) * dt)
 *
 * and the result is clamped to [0, s_max].
 */

#include "ata/allocator.hpp"
#include "ata/task_models.hpp"
#include "ata/trace.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

enum class AdaptationMode { ProportionalOnly, WithIntegral };

std::string_view to_string(AdaptationMode mode);

struct AdaptationParams {
  double beta1 = 0.1;  ///< 1/m^2
  double beta2 = 0.0;  ///< 1/s
  double dt = 0.033;   ///< s
  Eigen::MatrixXd s_bar;
  AdaptationMode mode = AdaptationMode::ProportionalOnly;
  double leak = 0.0;  ///< in [0, 1)

  /// Soft issues (e.g. beta1 < 10 beta2 in integral mode); empty when none.
  std::vector<std::string> warnings() const;
};

struct IntegralAccumulator {
  Eigen::MatrixXd acc;

  static IntegralAccumulator zeros(Eigen::Index robots, Eigen::Index tasks) {
    return {Eigen::MatrixXd::Zero(robots, tasks)};
  }
};

struct DeviationMatrix {
  Eigen::MatrixXd dv;  ///< N x M
};

/// x_act_prev + u_prev * dt
Vec2 simulate_nominal_step(const Vec2& x_act_prev, const Vec2& u_prev, double dt);

/// V(x_sim) - V(x_act); negative when the robot fell short of its prediction.
double delta_v(const TaskDef& task, const Vec2& x_sim, const Vec2& x_act);

/// Every (robot, task) deviation; rows follow the robot order of the spans.
DeviationMatrix deviations(std::span<const TaskDef> tasks, std::span<const Vec2> x_sim,
                           std::span<const Vec2> x_act);

/**
 * One application of the update law. `assignment` is the allocation whose
 * command produced the observed motion. In integral mode `acc` is advanced
 * first and then used. Throws DimensionError on shape mismatch.
 */
SpecializationState update_specialization(const SpecializationState& spec,
                                          const Assignment& assignment,
                                          const DeviationMatrix& dev,
                                          const AdaptationParams& params,
                                          IntegralAccumulator& acc);

/**
 * Fraction of (robot, step) pairs over consecutive records whose realized
 * velocity differs from the previous command by more than `eps` (m/s).
 * Throws std::invalid_argument for fewer than two records.
 */
double disturbance_occupancy(std::span<const TraceRecord> trace, double dt, double eps);

}  // namespace ata

#endif  // ATA_ADAPTATION_HPP
