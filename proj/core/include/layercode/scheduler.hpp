#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace layercode {

/// First and second moments of one worker's time to compute a whole job.
struct WorkerProfile {
  std::size_t worker_id = 0;
  double mean_job_time = 1.0;        // E[T_p]
  double second_moment = 1.0;        // E[T_p^2]

  /// Moments of an Erlang-`tasks` job built from exponential tasks of mean
  /// per_task_mean. Throws unless per_task_mean > 0 and tasks >= 1.
  static WorkerProfile erlang(std::size_t worker_id, std::size_t tasks, double per_task_mean);

  double variance() const noexcept { return second_moment - mean_job_time * mean_job_time; }
  /// b_p = m_p + γ σ_p^2
  double b(double gamma) const noexcept { return mean_job_time + gamma * variance(); }
  /// Throws std::invalid_argument unless m_p > 0 and σ_p^2 >= 0 (within rounding).
  void validate() const;
};

struct SchedulerConfig {
  double gamma = 1.0;
  std::size_t total_tasks = 1;   // kΩ, already rounded
};

struct LoadSplit {
  std::vector<double> real_kappa;
  std::vector<std::size_t> int_kappa;
  double theta = 0.0;
};

/// Closed-form optimal task count at multiplier θ:
/// κ_p = b_p / (2γ m_p^2) · (−1 + sqrt(1 + 4γ m_p^2 θ / b_p^2)).
double kappa_of_theta(const WorkerProfile& profile, double theta, double gamma);

/// Solves Σ κ_p(θ) = total_tasks by bisection, then integerises with
/// largest-remainder rounding (ties to the lower worker index).
LoadSplit solve_split(std::span<const WorkerProfile> profiles, const SchedulerConfig& config);

}  // namespace layercode
