#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layercode/scheduler.hpp"

namespace layercode {

enum class IntraLayer { Concurrent, Serial };
enum class PurgeMode { Preemptive, RunToCompletion };

/// Real matrices pushed through the codec alongside the timing model.
struct PayloadConfig {
  std::size_t rows = 4;   // inner dimension of Aᵀ B
  std::uint64_t q = 2;
  unsigned d = 8;
};

struct SimConfig {
  std::vector<double> rates{385.95, 650.92, 373.40, 415.75, 373.98};  // μ_p, work units per time
  double arrival_rate = 0.01;                                          // λ
  std::size_t k = 1000;
  double omega = 1.0;
  unsigned m = 2;                       // chunks per element; 1 disables layering
  double task_complexity_unlayered = 50.0;
  std::optional<double> deadline;       // computation-time budget, clock starts at service start
  std::size_t num_jobs = 1000;
  std::uint64_t seed = 1;
  double gamma = 1.0;
  IntraLayer intra_layer = IntraLayer::Concurrent;
  PurgeMode purge = PurgeMode::Preemptive;
  bool deterministic_service = false;   // every task takes exactly c_task / μ_p
  std::optional<PayloadConfig> payload;
  bool record_trace = false;

  std::size_t num_workers() const noexcept { return rates.size(); }
  unsigned layers() const noexcept { return 2 * m - 1; }
  /// c / m^2
  double task_complexity() const;
  /// round(k Ω)
  std::size_t tasks_per_mini_job() const;
  /// λ · k c / Σ μ_p; the queue is unstable at or above 1.
  double offered_load() const;
  /// Scheduler inputs: Erlang-k moments of one mini-job at the layered task complexity.
  std::vector<WorkerProfile> worker_profiles() const;
  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

enum class JobStatus { Completed, Terminated };

struct JobRecord {
  std::size_t job_id = 0;
  double arrival_time = 0.0;
  double service_start = 0.0;
  double departure_time = 0.0;               // completion or termination instant
  std::vector<std::optional<double>> delay;  // D(l), measured from arrival
  JobStatus status = JobStatus::Completed;
  int last_completed_layer = -1;             // -1 when no layer finished

  bool layer_done(unsigned layer) const {
    return layer < delay.size() && delay[layer].has_value();
  }
  double waiting_time() const { return service_start - arrival_time; }
  /// D(l) minus queue wait; empty if the layer never completed.
  std::optional<double> compute_time(unsigned layer) const;

  friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

enum class TraceKind {
  JobArrival,
  JobStart,
  TaskStart,
  TaskDone,
  TaskPurged,
  MiniJobResolved,
  LayerDone,
  JobDone,
  JobTerminated,
};

struct TraceEntry {
  double time = 0.0;
  TraceKind kind = TraceKind::JobArrival;
  std::size_t job = 0;
  unsigned layer = 0;
  std::size_t mini_job = 0;  // index within the job's mini-job list
  std::size_t task = 0;
  std::size_t worker = 0;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

std::string to_string(TraceKind kind);

struct SimDiagnostics {
  std::size_t events = 0;
  std::size_t tasks_dispatched = 0;
  std::size_t tasks_completed = 0;   // results accepted by the fusion node
  std::size_t tasks_purged = 0;      // removed from queues or interrupted
  std::size_t late_results = 0;      // finished after their mini-job resolved
  std::size_t terminated_jobs = 0;
  std::size_t payload_checks = 0;
  std::size_t payload_failures = 0;
  double offered_load = 0.0;
  bool unstable = false;
};

struct SimResult {
  std::vector<JobRecord> jobs;
  SimDiagnostics diagnostics;
  LoadSplit split;
  std::vector<TraceEntry> trace;
};

/// Task index -> worker index for one mini-job: worker 0 takes the first
/// int_kappa[0] tasks, worker 1 the next int_kappa[1], and so on.
std::vector<std::size_t> assign_tasks(std::span<const std::size_t> int_kappa);

/// Runs the master/worker/fusion pipeline for config.num_jobs Poisson arrivals.
/// Deterministic in the config, including the seed.
SimResult run(const SimConfig& config);

/// Fraction of jobs whose layer-`layer` result was released. Throws on empty input.
double success_rate(std::span<const JobRecord> records, unsigned layer);

/// Stream ids used with derive_seed(config.seed, id).
inline constexpr std::uint64_t kArrivalStream = 0;
inline constexpr std::uint64_t kPayloadStream = 1;
inline constexpr std::uint64_t worker_stream(std::size_t worker) { return 16 + worker; }

}  // namespace layercode
