#include "layercode/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace layercode {

namespace {

double total_kappa(std::span<const WorkerProfile> profiles, double theta, double gamma) {
  double sum = 0.0;
  for (const auto& p : profiles) sum += kappa_of_theta(p, theta, gamma);
  return sum;
}

}  // namespace

WorkerProfile WorkerProfile::erlang(std::size_t worker_id, std::size_t tasks, double per_task_mean) {
  if (tasks == 0 || !(per_task_mean > 0.0)) {
    throw std::invalid_argument("Erlang profile needs tasks >= 1 and a positive task mean");
  }
  const double n = static_cast<double>(tasks);
  const double mean = n * per_task_mean;
  return WorkerProfile{worker_id, mean, mean * mean + n * per_task_mean * per_task_mean};
}

void WorkerProfile::validate() const {
  if (!(mean_job_time > 0.0) || !std::isfinite(mean_job_time)) {
    throw std::invalid_argument("worker " + std::to_string(worker_id) + ": E[T_p] must be positive");
  }
  if (variance() < -1e-9 * mean_job_time * mean_job_time) {
    throw std::invalid_argument("worker " + std::to_string(worker_id) + ": E[T_p^2] < E[T_p]^2");
  }
}

double kappa_of_theta(const WorkerProfile& profile, double theta, double gamma) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const double m = profile.mean_job_time;
  const double b = profile.b(gamma);
  const double x = 4.0 * gamma * m * m * theta / (b * b);
  // −1 + sqrt(1 + x) rewritten as x / (1 + sqrt(1 + x)) to avoid cancellation at small θ.
  return b / (2.0 * gamma * m * m) * (x / (1.0 + std::sqrt(1.0 + x)));
}

LoadSplit solve_split(std::span<const WorkerProfile> profiles, const SchedulerConfig& config) {
  if (profiles.empty()) throw std::invalid_argument("solve_split: no workers");
  if (config.total_tasks == 0) throw std::invalid_argument("solve_split: total_tasks must be >= 1");
  if (!(config.gamma > 0.0)) throw std::invalid_argument("solve_split: gamma must be positive");
  for (const auto& p : profiles) p.validate();

  const double target = static_cast<double>(config.total_tasks);
  const double gamma = config.gamma;
  double lo = 1e-12;
  double hi = 1.0;
  while (total_kappa(profiles, hi, gamma) < target) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::runtime_error("solve_split: could not bracket theta");
  }
  double theta = hi;
  for (int iter = 0; iter < 200; ++iter) {
    theta = 0.5 * (lo + hi);
    const double sum = total_kappa(profiles, theta, gamma);
    if (std::abs(sum - target) < 1e-9) break;
    (sum < target ? lo : hi) = theta;
  }

  LoadSplit split;
  split.theta = theta;
  split.real_kappa.reserve(profiles.size());
  for (const auto& p : profiles) split.real_kappa.push_back(kappa_of_theta(p, theta, gamma));

  split.int_kappa.resize(profiles.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    split.int_kappa[i] = static_cast<std::size_t>(std::floor(split.real_kappa[i]));
    assigned += split.int_kappa[i];
  }
  // Floating error can leave the floors summing one past the target.
  while (assigned > config.total_tasks) {
    const auto it = std::max_element(split.int_kappa.begin(), split.int_kappa.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(profiles.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double fa = split.real_kappa[a] - std::floor(split.real_kappa[a]);
    const double fb = split.real_kappa[b] - std::floor(split.real_kappa[b]);
    if (fa != fb) return fa > fb;
    return profiles[a].worker_id < profiles[b].worker_id;
  });
  for (std::size_t n = 0; assigned < config.total_tasks; ++n) {
    ++split.int_kappa[order[n % order.size()]];
    ++assigned;
  }
  return split;
}

}  // namespace layercode
