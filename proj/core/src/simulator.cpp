#include "layercode/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "layercode/chunking.hpp"
#include "layercode/finite_field.hpp"
#include "layercode/polycode.hpp"
#include "layercode/rng.hpp"

namespace layercode {

double SimConfig::task_complexity() const { return task_complexity_unlayered / (static_cast<double>(m) * m); }

std::size_t SimConfig::tasks_per_mini_job() const { return tasks_for(k, omega); }

double SimConfig::offered_load() const {
  const double total_rate = std::accumulate(rates.begin(), rates.end(), 0.0);
  return arrival_rate * static_cast<double>(k) * task_complexity_unlayered / total_rate;
}

std::vector<WorkerProfile> SimConfig::worker_profiles() const {
  std::vector<WorkerProfile> profiles;
  profiles.reserve(rates.size());
  for (std::size_t p = 0; p < rates.size(); ++p) {
    profiles.push_back(WorkerProfile::erlang(p, k, task_complexity() / rates[p]));
  }
  return profiles;
}

void SimConfig::validate() const {
  if (rates.empty()) throw std::invalid_argument("config: at least one worker rate is required");
  for (std::size_t p = 0; p < rates.size(); ++p) {
    if (!(rates[p] > 0.0) || !std::isfinite(rates[p])) {
      throw std::invalid_argument("config: worker " + std::to_string(p) + " rate must be positive");
    }
  }
  if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) {
    throw std::invalid_argument("config: arrival rate must be positive");
  }
  if (k == 0) throw std::invalid_argument("config: k must be >= 1");
  if (!(omega >= 1.0) || !std::isfinite(omega)) throw std::invalid_argument("config: omega must be >= 1");
  if (m == 0) throw std::invalid_argument("config: m must be >= 1");
  if (!(task_complexity_unlayered > 0.0)) throw std::invalid_argument("config: task complexity must be positive");
  if (deadline && !(*deadline > 0.0)) throw std::invalid_argument("config: deadline must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
  if (payload) {
    ChunkParams{payload->q, payload->d, m}.validate();
    if (payload->rows == 0) throw std::invalid_argument("config: payload rows must be >= 1");
  }
}

std::optional<double> JobRecord::compute_time(unsigned layer) const {
  if (!layer_done(layer)) return std::nullopt;
  return *delay[layer] - waiting_time();
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::JobArrival: return "job_arrival";
    case TraceKind::JobStart: return "job_start";
    case TraceKind::TaskStart: return "task_start";
    case TraceKind::TaskDone: return "task_done";
    case TraceKind::TaskPurged: return "task_purged";
    case TraceKind::MiniJobResolved: return "minijob_resolved";
    case TraceKind::LayerDone: return "layer_done";
    case TraceKind::JobDone: return "job_done";
    case TraceKind::JobTerminated: return "job_terminated";
  }
  return "unknown";
}

std::vector<std::size_t> assign_tasks(std::span<const std::size_t> int_kappa) {
  std::vector<std::size_t> owner;
  for (std::size_t p = 0; p < int_kappa.size(); ++p) owner.insert(owner.end(), int_kappa[p], p);
  return owner;
}

double success_rate(std::span<const JobRecord> records, unsigned layer) {
  if (records.empty()) throw std::invalid_argument("success_rate: no job records");
  const auto ok = std::count_if(records.begin(), records.end(),
                                [&](const JobRecord& r) { return r.layer_done(layer); });
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

namespace {

enum class EventKind : int { TaskCompletion = 0, DeadlineCheck = 1, JobArrival = 2 };

struct Event {
  double time;
  EventKind kind;
  std::uint64_t seq;
  std::size_t target;      // worker for completions, job otherwise
  std::uint64_t token;     // service token for completions

  // Earliest time first, then kind priority, then scheduling order.
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
    return seq > o.seq;
  }
};

struct TaskRef {
  std::size_t mini_job;   // global mini-job index
  std::size_t task;
};

struct WorkerState {
  std::deque<TaskRef> queue;
  std::optional<TaskRef> current;
  std::uint64_t token = 0;
  RandomStream rng;
};

struct MiniJobState {
  std::size_t job;
  std::size_t local_index;  // position in the job's overall mini-job order
  MiniJob desc;
  std::size_t results = 0;
  bool resolved = false;
  bool live = false;
  std::vector<CodedTask> tasks;        // payload mode only
  std::vector<TaskResult> collected;   // payload mode only
};

struct JobPayload {
  IntMatrix a;
  IntMatrix b;
  ChunkedOperand a_chunks;
  ChunkedOperand b_chunks;
  FieldPrime prime;
  CodeParams code;
  LayeredAccumulator accumulator;
  MiniJobResults results;
};

struct JobState {
  std::vector<std::vector<std::size_t>> layer_mini_jobs;  // global indices per layer
  unsigned current_layer = 0;
  std::size_t pending = 0;        // unresolved mini-jobs dispatched in the current layer
  std::size_t next_serial = 0;    // serial mode: next mini-job of the layer to enqueue
  std::size_t local_counter = 0;
  std::unique_ptr<JobPayload> payload;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config) : config_(config) {
    config_.validate();
    task_mean_.reserve(config_.num_workers());
    for (std::size_t p = 0; p < config_.num_workers(); ++p) {
      workers_.push_back(WorkerState{{}, std::nullopt, 0, RandomStream(config_.seed, worker_stream(p))});
      task_mean_.push_back(config_.task_complexity() / config_.rates[p]);
    }
    const auto profiles = config_.worker_profiles();
    result_.split = solve_split(profiles, SchedulerConfig{config_.gamma, config_.tasks_per_mini_job()});
    owner_ = assign_tasks(result_.split.int_kappa);
    result_.diagnostics.offered_load = config_.offered_load();
    result_.diagnostics.unstable = result_.diagnostics.offered_load >= 1.0;
    if (config_.payload) {
      split_k_for_payload();
      payload_rng_.emplace(config_.seed, kPayloadStream);
    }
  }

  SimResult run() {
    RandomStream arrivals(config_.seed, kArrivalStream);
    const double mean_gap = 1.0 / config_.arrival_rate;
    double t = 0.0;
    result_.jobs.resize(config_.num_jobs);
    jobs_.resize(config_.num_jobs);
    for (std::size_t j = 0; j < config_.num_jobs; ++j) {
      t += arrivals.exponential(mean_gap);
      auto& rec = result_.jobs[j];
      rec.job_id = j;
      rec.arrival_time = t;
      rec.delay.assign(config_.layers(), std::nullopt);
      schedule(t, EventKind::JobArrival, j, 0);
    }
    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      ++result_.diagnostics.events;
      now_ = ev.time;
      switch (ev.kind) {
        case EventKind::JobArrival: on_arrival(ev.target); break;
        case EventKind::TaskCompletion: on_task_completion(ev.target, ev.token); break;
        case EventKind::DeadlineCheck: break;  // handled by apply_deadline below
      }
      apply_deadline();
      kick_workers();
    }
    return std::move(result_);
  }

 private:
  void schedule(double time, EventKind kind, std::size_t target, std::uint64_t token) {
    events_.push(Event{time, kind, seq_++, target, token});
  }

  void trace(TraceKind kind, std::size_t job, unsigned layer = 0, std::size_t mini_job = 0,
             std::size_t task = 0, std::size_t worker = 0) {
    if (config_.record_trace) result_.trace.push_back(TraceEntry{now_, kind, job, layer, mini_job, task, worker});
  }

  void on_arrival(std::size_t job) {
    trace(TraceKind::JobArrival, job);
    master_queue_.push_back(job);
    if (!in_service_) start_next_job();
  }

  void start_next_job() {
    if (master_queue_.empty()) return;
    const std::size_t job = master_queue_.front();
    master_queue_.pop_front();
    in_service_ = job;
    result_.jobs[job].service_start = now_;
    trace(TraceKind::JobStart, job);
    if (config_.payload) prepare_payload(job);
    if (config_.deadline && std::isfinite(*config_.deadline)) {
      schedule(now_ + *config_.deadline, EventKind::DeadlineCheck, job, 0);
    }
    dispatch_layer(job, 0);
  }

  void dispatch_layer(std::size_t job, unsigned layer) {
    auto& js = jobs_[job];
    js.current_layer = layer;
    if (js.layer_mini_jobs.size() <= layer) js.layer_mini_jobs.resize(layer + 1);
    auto& ids = js.layer_mini_jobs[layer];
    for (const auto& desc : mini_jobs_of_layer(layer, config_.m)) {
      ids.push_back(mini_jobs_.size());
      mini_jobs_.push_back(MiniJobState{job, js.local_counter++, desc, 0, false, false, {}, {}});
    }
    js.pending = ids.size();
    js.next_serial = 0;
    if (config_.intra_layer == IntraLayer::Concurrent) {
      for (const auto id : ids) enqueue(id);
      js.next_serial = ids.size();
    } else {
      enqueue(ids[js.next_serial++]);
    }
  }

  void enqueue(std::size_t id) {
    auto& mj = mini_jobs_[id];
    mj.live = true;
    if (config_.payload) encode_payload(mj);
    for (std::size_t t = 0; t < owner_.size(); ++t) workers_[owner_[t]].queue.push_back(TaskRef{id, t});
    result_.diagnostics.tasks_dispatched += owner_.size();
  }

  void kick_workers() {
    for (std::size_t p = 0; p < workers_.size(); ++p) {
      auto& w = workers_[p];
      if (w.current || w.queue.empty()) continue;
      const TaskRef ref = w.queue.front();
      w.queue.pop_front();
      w.current = ref;
      ++w.token;
      const double duration = config_.deterministic_service ? task_mean_[p] : w.rng.exponential(task_mean_[p]);
      const auto& mj = mini_jobs_[ref.mini_job];
      trace(TraceKind::TaskStart, mj.job, mj.desc.layer, mj.local_index, ref.task, p);
      schedule(now_ + duration, EventKind::TaskCompletion, p, w.token);
    }
  }

  void on_task_completion(std::size_t worker, std::uint64_t token) {
    auto& w = workers_[worker];
    if (token != w.token || !w.current) return;  // service was interrupted by a purge
    const TaskRef ref = *w.current;
    w.current.reset();
    auto& mj = mini_jobs_[ref.mini_job];
    if (!mj.live) {
      ++result_.diagnostics.late_results;
      return;
    }
    ++mj.results;
    ++result_.diagnostics.tasks_completed;
    trace(TraceKind::TaskDone, mj.job, mj.desc.layer, mj.local_index, ref.task, worker);
    if (config_.payload) mj.collected.push_back(execute(mj.tasks[ref.task]));
    if (mj.results == config_.k) resolve(ref.mini_job);
  }

  // Removes every outstanding task of a mini-job, queued or in service.
  void purge(std::size_t id) {
    auto& mj = mini_jobs_[id];
    mj.live = false;
    for (std::size_t p = 0; p < workers_.size(); ++p) {
      auto& w = workers_[p];
      const auto removed = std::erase_if(w.queue, [&](const TaskRef& r) {
        if (r.mini_job != id) return false;
        trace(TraceKind::TaskPurged, mj.job, mj.desc.layer, mj.local_index, r.task, p);
        return true;
      });
      result_.diagnostics.tasks_purged += removed;
      if (w.current && w.current->mini_job == id) {
        ++result_.diagnostics.tasks_purged;
        if (config_.purge == PurgeMode::Preemptive) {
          trace(TraceKind::TaskPurged, mj.job, mj.desc.layer, mj.local_index, w.current->task, p);
          w.current.reset();
          ++w.token;
        }
      }
    }
    mj.tasks.clear();
    mj.collected.clear();
  }

  void resolve(std::size_t id) {
    auto& mj = mini_jobs_[id];
    mj.resolved = true;
    const std::size_t job = mj.job;
    trace(TraceKind::MiniJobResolved, job, mj.desc.layer, mj.local_index);
    if (config_.payload) decode_payload(mj);
    purge(id);
    auto& js = jobs_[job];
    --js.pending;
    const auto& ids = js.layer_mini_jobs[js.current_layer];
    if (js.next_serial < ids.size()) {
      enqueue(ids[js.next_serial++]);
      return;
    }
    if (js.pending == 0) complete_layer(job);
  }

  void complete_layer(std::size_t job) {
    auto& js = jobs_[job];
    auto& rec = result_.jobs[job];
    const unsigned layer = js.current_layer;
    rec.delay[layer] = now_ - rec.arrival_time;
    rec.last_completed_layer = static_cast<int>(layer);
    trace(TraceKind::LayerDone, job, layer);
    if (js.payload) absorb_payload(job, layer);
    if (layer + 1 < config_.layers()) {
      dispatch_layer(job, layer + 1);
      return;
    }
    rec.status = JobStatus::Completed;
    finish(job);
    trace(TraceKind::JobDone, job, layer);
    start_next_job();
  }

  void finish(std::size_t job) {
    result_.jobs[job].departure_time = now_;
    jobs_[job].payload.reset();
    in_service_.reset();
  }

  void apply_deadline() {
    if (!in_service_ || !config_.deadline || master_queue_.empty()) return;
    const std::size_t job = *in_service_;
    auto& rec = result_.jobs[job];
    if (now_ - rec.service_start < *config_.deadline) return;
    for (const auto& layer : jobs_[job].layer_mini_jobs) {
      for (const auto id : layer) {
        if (mini_jobs_[id].live) purge(id);
      }
    }
    rec.status = JobStatus::Terminated;
    ++result_.diagnostics.terminated_jobs;
    finish(job);
    trace(TraceKind::JobTerminated, job, static_cast<unsigned>(std::max(rec.last_completed_layer, 0)));
    start_next_job();
  }

  // --- payload mode -------------------------------------------------------

  void split_k_for_payload() {
    std::size_t n1 = 1;
    for (std::size_t f = 1; f * f <= config_.k; ++f) {
      if (config_.k % f == 0) n1 = f;
    }
    payload_n1_ = n1;
    payload_n2_ = config_.k / n1;
  }

  IntMatrix random_operand(std::size_t cols, const ChunkParams& params) {
    const u128 limit = params.element_limit();
    IntMatrix out(config_.payload->rows, cols, 0);
    for (auto& e : out.data()) {
      e = limit > std::numeric_limits<std::uint64_t>::max()
              ? payload_rng_->next()
              : payload_rng_->below(static_cast<std::uint64_t>(limit));
    }
    return out;
  }

  void prepare_payload(std::size_t job) {
    const ChunkParams params{config_.payload->q, config_.payload->d, config_.m};
    IntMatrix a = random_operand(payload_n1_, params);
    IntMatrix b = random_operand(payload_n2_, params);
    auto a_chunks = decompose(a, params);
    auto b_chunks = decompose(b, params);
    const FieldPrime prime =
        coding_prime_for(config_.payload->rows, params.q, params.d, config_.tasks_per_mini_job());
    const CodeParams code{payload_n1_, payload_n2_, config_.omega};
    jobs_[job].payload.reset(new JobPayload{std::move(a), std::move(b), std::move(a_chunks),
                                            std::move(b_chunks), prime, code,
                                            LayeredAccumulator(params, payload_n1_, payload_n2_), {}});
  }

  void encode_payload(MiniJobState& mj) {
    const auto& pl = *jobs_[mj.job].payload;
    const auto a = FieldMatrix::from_integers(pl.a_chunks.chunks[mj.desc.i], pl.prime);
    const auto b = FieldMatrix::from_integers(pl.b_chunks.chunks[mj.desc.j], pl.prime);
    mj.tasks = encode(a, b, pl.code, config_.task_complexity());
  }

  void decode_payload(MiniJobState& mj) {
    auto& pl = *jobs_[mj.job].payload;
    const IntMatrix decoded = decode(mj.collected, pl.code).to_integers();
    const IntMatrix expected = mini_job_product(pl.a_chunks, pl.b_chunks, mj.desc);
    ++result_.diagnostics.payload_checks;
    if (decoded != expected) ++result_.diagnostics.payload_failures;
    pl.results.emplace(mj.desc, decoded);
  }

  void absorb_payload(std::size_t job, unsigned layer) {
    auto& pl = *jobs_[job].payload;
    pl.accumulator.absorb_layer(layer, pl.results);
    if (layer + 1 == config_.layers()) {
      ++result_.diagnostics.payload_checks;
      if (pl.accumulator.partial() != int_mul_transpose(pl.a, pl.b)) ++result_.diagnostics.payload_failures;
    }
  }

  SimConfig config_;
  std::vector<WorkerState> workers_;
  std::vector<double> task_mean_;
  std::vector<std::size_t> owner_;
  std::vector<MiniJobState> mini_jobs_;
  std::vector<JobState> jobs_;
  std::deque<std::size_t> master_queue_;
  std::optional<std::size_t> in_service_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  SimResult result_;
  std::optional<RandomStream> payload_rng_;
  std::size_t payload_n1_ = 1;
  std::size_t payload_n2_ = 1;
};

}  // namespace

SimResult run(const SimConfig& config) { return Simulation(config).run(); }

}  // namespace layercode
