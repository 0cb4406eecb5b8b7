#pragma once

#include <span>
#include <vector>

#include "layercode/scheduler.hpp"

namespace layercode {

struct ArrivalProcess {
  double mean_interarrival = 1.0;   // E[T_a]
  double second_moment = 2.0;       // E[T_a^2]

  static ArrivalProcess poisson(double rate);
  /// Squared coefficient of variation c_a^2.
  double scv() const;
};

struct ServiceStats {
  double mean_service = 1.0;        // E[T_s]
  double second_moment = 1.0;       // E[T_s^2]

  /// Builds stats from a mean and a squared coefficient of variation.
  static ServiceStats from_scv(double mean, double scv);
  /// Sample mean and raw second moment. Throws on empty input.
  static ServiceStats from_samples(std::span<const double> samples);
  double scv() const;
  double utilisation(const ArrivalProcess& arrivals) const { return mean_service / arrivals.mean_interarrival; }
};

struct LayerBounds {
  std::vector<double> cumulative_fraction;  // Σ_{i<=l} J(i) / m^2
  std::vector<double> service_bound;        // lower bound on E[T_s^l]
  std::vector<double> delay_approx;         // E[D(l)] approximation
  double queueing_delay = 0.0;              // shared by every layer
};

/// 1 / Σ_p (1 / E[T_p]): the whole cluster viewed as one pooled server.
double service_lower_bound(std::span<const WorkerProfile> profiles);

/// Mean waiting time in queue of the two-moment G/G/1 approximation:
/// E[T_s] · ρ/(1−ρ) · (c_a^2 + c_s^2)/2. Throws std::domain_error("unstable queue") if ρ >= 1.
double kingman_queueing_delay(const ServiceStats& service, const ArrivalProcess& arrivals);

/// E[D] ≈ E[T_s] + kingman_queueing_delay.
double kingman_delay(const ServiceStats& service, const ArrivalProcess& arrivals);

/// Per-layer service bounds and delay approximations for m chunks per element.
/// The queueing term is taken from the full-job `service` statistics.
LayerBounds layer_bounds(std::span<const WorkerProfile> profiles, unsigned m,
                         const ArrivalProcess& arrivals, const ServiceStats& service);

}  // namespace layercode
