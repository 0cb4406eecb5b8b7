#include "layercode/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "layercode/chunking.hpp"

namespace layercode {

ArrivalProcess ArrivalProcess::poisson(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("arrival rate must be positive");
  const double mean = 1.0 / rate;
  return ArrivalProcess{mean, 2.0 * mean * mean};
}

double ArrivalProcess::scv() const {
  if (!(mean_interarrival > 0.0)) throw std::invalid_argument("E[T_a] must be positive");
  return (second_moment - mean_interarrival * mean_interarrival) / (mean_interarrival * mean_interarrival);
}

ServiceStats ServiceStats::from_scv(double mean, double scv) {
  if (!(mean > 0.0) || scv < 0.0) throw std::invalid_argument("service stats need mean > 0, scv >= 0");
  return ServiceStats{mean, mean * mean * (1.0 + scv)};
}

ServiceStats ServiceStats::from_samples(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("no service-time samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double s : samples) {
    sum += s;
    sum_sq += s * s;
  }
  const double n = static_cast<double>(samples.size());
  return ServiceStats{sum / n, sum_sq / n};
}

double ServiceStats::scv() const {
  if (!(mean_service > 0.0)) throw std::invalid_argument("E[T_s] must be positive");
  return std::max(0.0, (second_moment - mean_service * mean_service) / (mean_service * mean_service));
}

double service_lower_bound(std::span<const WorkerProfile> profiles) {
  if (profiles.empty()) throw std::invalid_argument("service_lower_bound: no workers");
  double rate = 0.0;
  for (const auto& p : profiles) {
    p.validate();
    rate += 1.0 / p.mean_job_time;
  }
  return 1.0 / rate;
}

double kingman_queueing_delay(const ServiceStats& service, const ArrivalProcess& arrivals) {
  const double rho = service.utilisation(arrivals);
  if (!(rho < 1.0)) throw std::domain_error("unstable queue");
  return service.mean_service * (rho / (1.0 - rho)) * (arrivals.scv() + service.scv()) / 2.0;
}

double kingman_delay(const ServiceStats& service, const ArrivalProcess& arrivals) {
  return service.mean_service + kingman_queueing_delay(service, arrivals);
}

LayerBounds layer_bounds(std::span<const WorkerProfile> profiles, unsigned m,
                         const ArrivalProcess& arrivals, const ServiceStats& service) {
  if (m == 0) throw std::invalid_argument("layer_bounds: m must be >= 1");
  const double pooled = service_lower_bound(profiles);
  LayerBounds out;
  out.queueing_delay = kingman_queueing_delay(service, arrivals);
  const double total = static_cast<double>(m) * m;
  std::size_t done = 0;
  for (unsigned l = 0; l < 2 * m - 1; ++l) {
    done += mini_job_count(l, m);
    const double fraction = static_cast<double>(done) / total;
    out.cumulative_fraction.push_back(fraction);
    out.service_bound.push_back(fraction * pooled);
    out.delay_approx.push_back(fraction * pooled + out.queueing_delay);
  }
  return out;
}

}  // namespace layercode
