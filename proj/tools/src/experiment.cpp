#include "layercode/cli/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "layercode/analysis.hpp"
#include "layercode/chunking.hpp"
#include "layercode/finite_field.hpp"
#include "layercode/polycode.hpp"
#include "layercode/rng.hpp"

#ifndef LAYERCODE_VERSION
#define LAYERCODE_VERSION "v0.1.0"
#endif

namespace layercode::cli {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "inf" || v == "infinity" || v == "none") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid unsigned integer for '" + key + "': '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("'" + key + "' must list at least one value");
  return out;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
  return out;
}

std::string format_fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename Fn>
auto parallel_map(std::size_t count, unsigned threads, Fn fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  // Independent replications; results land by index so ordering is fixed.
  std::size_t next = 0;
  while (next < count) {
    std::vector<std::future<R>> batch;
    const std::size_t end = std::min<std::size_t>(count, next + threads);
    for (std::size_t i = next; i < end; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = next; i < end; ++i) out[i] = batch[i - next].get();
    next = end;
  }
  return out;
}

SimConfig unlayered(SimConfig c) {
  c.m = 1;
  c.payload.reset();
  return c;
}

void write_preamble(std::ostream& out, const ExperimentSpec& spec) {
  out << "# layercode " << version_string() << '\n';
  out << "# mode=" << to_string(spec.mode) << " seed=" << spec.sim.seed
      << " config_hash=" << spec.config_hash() << '\n';
  std::istringstream lines(spec.canonical());
  std::string line;
  out << "# config:";
  while (std::getline(lines, line)) out << ' ' << line;
  out << '\n';
}

json provenance(const ExperimentSpec& spec) {
  json settings = json::object();
  std::istringstream lines(spec.canonical());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    settings[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return json{{"version", version_string()},
              {"mode", to_string(spec.mode)},
              {"seed", spec.sim.seed},
              {"config_hash", spec.config_hash()},
              {"config", settings}};
}

std::vector<double> compute_samples(const SimResult& r, unsigned layer) {
  std::vector<double> out;
  for (const auto& job : r.jobs) {
    if (const auto t = job.compute_time(layer)) out.push_back(*t);
  }
  return out;
}

// Empirical c_s^2 of full-job computation times from an unlayered run.
double empirical_cs2(const SimResult& unlayered_run) {
  const auto samples = compute_samples(unlayered_run, 0);
  if (samples.size() < 2) return 0.0;
  return ServiceStats::from_samples(samples).scv();
}

struct BoundsRow {
  LayerBounds bounds;
  double pooled = 0.0;
};

BoundsRow lower_bounds(const SimConfig& c, double cs2) {
  const auto profiles = unlayered(c).worker_profiles();
  BoundsRow row;
  row.pooled = service_lower_bound(profiles);
  const auto arrivals = ArrivalProcess::poisson(c.arrival_rate);
  row.bounds = layer_bounds(profiles, c.m, arrivals, ServiceStats::from_scv(row.pooled, cs2));
  return row;
}

// --- simulate --------------------------------------------------------------

void write_histogram_csv(std::ostream& out, const SimResult& r, unsigned layers, std::size_t bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& job : r.jobs) {
    for (const auto& d : job.delay) {
      if (d) {
        lo = std::min(lo, *d);
        hi = std::max(hi, *d);
      }
    }
  }
  out << "layer,bin_lo,bin_hi,count\n";
  if (!(lo <= hi) || bins == 0) return;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  for (unsigned l = 0; l < layers; ++l) {
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& job : r.jobs) {
      if (!job.layer_done(l)) continue;
      auto b = static_cast<std::size_t>((*job.delay[l] - lo) / width);
      counts[std::min(b, bins - 1)]++;
    }
    for (std::size_t b = 0; b < bins; ++b) {
      out << l << ',' << format_time(lo + width * b) << ',' << format_time(lo + width * (b + 1)) << ','
          << counts[b] << '\n';
    }
  }
}

int run_simulate(const ExperimentSpec& spec, std::ostream& out) {
  const SimResult r = run(spec.sim);
  const unsigned layers = spec.sim.layers();
  if (!spec.hist_path.empty()) {
    std::ofstream hist(spec.hist_path, std::ios::binary);
    if (!hist) throw std::runtime_error("cannot write histogram file '" + spec.hist_path + "'");
    write_preamble(hist, spec);
    write_histogram_csv(hist, r, layers, spec.hist_bins);
  }
  if (spec.format == Format::Csv) {
    write_preamble(out, spec);
    out << "job_id,arrival_time,service_start,status,last_layer";
    for (unsigned l = 0; l < layers; ++l) out << ",D" << l;
    out << '\n';
    for (const auto& job : r.jobs) {
      out << job.job_id << ',' << format_time(job.arrival_time) << ',' << format_time(job.service_start) << ','
          << (job.status == JobStatus::Completed ? "completed" : "terminated") << ','
          << job.last_completed_layer;
      for (unsigned l = 0; l < layers; ++l) {
        out << ',';
        if (job.layer_done(l)) out << format_time(*job.delay[l]);
      }
      out << '\n';
    }
    return kExitOk;
  }
  json doc;
  doc["provenance"] = provenance(spec);
  json jobs = json::array();
  for (const auto& job : r.jobs) {
    json delays = json::array();
    for (unsigned l = 0; l < layers; ++l) delays.push_back(job.layer_done(l) ? json(*job.delay[l]) : json(nullptr));
    jobs.push_back({{"job_id", job.job_id},
                    {"arrival_time", job.arrival_time},
                    {"service_start", job.service_start},
                    {"status", job.status == JobStatus::Completed ? "completed" : "terminated"},
                    {"last_layer", job.last_completed_layer},
                    {"delay", delays}});
  }
  doc["jobs"] = jobs;
  json summary = json::array();
  if (!r.jobs.empty()) {
    for (const auto& s : summarize(r, layers)) {
      summary.push_back({{"layer", s.layer},
                         {"samples", s.samples},
                         {"mean_delay", s.mean_delay},
                         {"mean_compute", s.mean_compute},
                         {"variance_delay", s.variance_delay},
                         {"success_rate", s.success_rate}});
    }
  }
  doc["summary"] = summary;
  std::ostringstream hist;
  write_histogram_csv(hist, r, layers, spec.hist_bins);
  json histogram = json::array();
  std::istringstream rows(hist.str());
  std::string line;
  std::getline(rows, line);  // header
  while (std::getline(rows, line)) {
    unsigned layer = 0;
    double blo = 0, bhi = 0;
    std::size_t count = 0;
    if (std::sscanf(line.c_str(), "%u,%lf,%lf,%zu", &layer, &blo, &bhi, &count) == 4) {
      histogram.push_back({{"layer", layer}, {"bin_lo", blo}, {"bin_hi", bhi}, {"count", count}});
    }
  }
  doc["histogram"] = histogram;
  doc["diagnostics"] = {{"events", r.diagnostics.events},
                        {"tasks_dispatched", r.diagnostics.tasks_dispatched},
                        {"tasks_completed", r.diagnostics.tasks_completed},
                        {"tasks_purged", r.diagnostics.tasks_purged},
                        {"late_results", r.diagnostics.late_results},
                        {"terminated_jobs", r.diagnostics.terminated_jobs},
                        {"payload_checks", r.diagnostics.payload_checks},
                        {"payload_failures", r.diagnostics.payload_failures},
                        {"offered_load", r.diagnostics.offered_load},
                        {"unstable", r.diagnostics.unstable}};
  out << doc.dump(2) << '\n';
  return r.diagnostics.payload_failures == 0 ? kExitOk : kExitRuntimeError;
}

// --- sweep-omega -----------------------------------------------------------

struct OmegaPoint {
  std::vector<LayerSummary> layered;
  std::vector<LayerSummary> flat;
  BoundsRow bounds;
  double cs2 = 0.0;
};

int run_sweep_omega(const ExperimentSpec& spec, std::ostream& out) {
  const auto points = parallel_map(spec.omega_grid.size(), spec.threads, [&](std::size_t i) {
    SimConfig c = spec.sim;
    c.omega = spec.omega_grid[i];
    OmegaPoint pt;
    const auto layered_run = run(c);
    const auto flat_run = run(unlayered(c));
    pt.layered = summarize(layered_run, c.layers());
    pt.flat = summarize(flat_run, 1);
    pt.cs2 = spec.cs2 ? *spec.cs2 : empirical_cs2(flat_run);
    pt.bounds = lower_bounds(c, pt.cs2);
    return pt;
  });
  json rows = json::array();
  auto emit = [&](double omega, const char* scheme, const LayerSummary& s, double ts_bound, double d_bound,
                  double cs2) {
    rows.push_back({{"omega", omega},
                    {"scheme", scheme},
                    {"layer", s.layer},
                    {"mean_delay", s.mean_delay},
                    {"mean_compute", s.mean_compute},
                    {"ts_bound", ts_bound},
                    {"delay_bound", d_bound},
                    {"cs2", cs2}});
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    const double omega = spec.omega_grid[i];
    for (const auto& s : pt.layered) {
      emit(omega, "layered", s, pt.bounds.bounds.service_bound[s.layer], pt.bounds.bounds.delay_approx[s.layer],
           pt.cs2);
    }
    emit(omega, "unlayered", pt.flat.front(), pt.bounds.pooled, pt.bounds.pooled + pt.bounds.bounds.queueing_delay,
         pt.cs2);
  }
  if (spec.format == Format::Json) {
    out << json{{"provenance", provenance(spec)}, {"rows", rows}}.dump(2) << '\n';
    return kExitOk;
  }
  write_preamble(out, spec);
  out << "omega,scheme,layer,mean_delay,mean_compute,ts_bound,delay_bound,cs2\n";
  for (const auto& r : rows) {
    out << format_fixed(r["omega"].get<double>(), 4) << ',' << r["scheme"].get<std::string>() << ','
        << r["layer"].get<unsigned>() << ',' << format_time(r["mean_delay"].get<double>()) << ','
        << format_time(r["mean_compute"].get<double>()) << ',' << format_time(r["ts_bound"].get<double>()) << ','
        << format_time(r["delay_bound"].get<double>()) << ',' << format_time(r["cs2"].get<double>()) << '\n';
  }
  return kExitOk;
}

// --- sweep-deadline --------------------------------------------------------

struct DeadlinePoint {
  std::vector<double> layered;
  double flat = 0.0;
  std::size_t layered_terminated = 0;
  std::size_t flat_terminated = 0;
};

int run_sweep_deadline(const ExperimentSpec& spec, std::ostream& out) {
  if (spec.sim.num_jobs == 0) throw ConfigError("sweep-deadline needs jobs >= 1");
  const auto points = parallel_map(spec.deadline_grid.size(), spec.threads, [&](std::size_t i) {
    SimConfig c = spec.sim;
    c.deadline = spec.deadline_grid[i];
    DeadlinePoint pt;
    const auto layered_run = run(c);
    const auto flat_run = run(unlayered(c));
    for (unsigned l = 0; l < c.layers(); ++l) pt.layered.push_back(success_rate(layered_run.jobs, l));
    pt.flat = success_rate(flat_run.jobs, 0);
    pt.layered_terminated = layered_run.diagnostics.terminated_jobs;
    pt.flat_terminated = flat_run.diagnostics.terminated_jobs;
    return pt;
  });
  json rows = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double deadline = spec.deadline_grid[i];
    for (std::size_t l = 0; l < points[i].layered.size(); ++l) {
      rows.push_back({{"deadline", deadline},
                      {"scheme", "layered"},
                      {"layer", l},
                      {"success_rate", points[i].layered[l]},
                      {"terminated", points[i].layered_terminated}});
    }
    rows.push_back({{"deadline", deadline},
                    {"scheme", "unlayered"},
                    {"layer", 0},
                    {"success_rate", points[i].flat},
                    {"terminated", points[i].flat_terminated}});
  }
  if (spec.format == Format::Json) {
    out << json{{"provenance", provenance(spec)}, {"rows", rows}}.dump(2) << '\n';
    return kExitOk;
  }
  write_preamble(out, spec);
  out << "deadline,scheme,layer,success_rate,terminated\n";
  for (const auto& r : rows) {
    out << format_time(r["deadline"].get<double>()) << ',' << r["scheme"].get<std::string>() << ','
        << r["layer"].get<std::size_t>() << ',' << format_time(r["success_rate"].get<double>()) << ','
        << r["terminated"].get<std::size_t>() << '\n';
  }
  return kExitOk;
}

// --- bounds ----------------------------------------------------------------

int run_bounds(const ExperimentSpec& spec, std::ostream& out) {
  double cs2 = 0.0;
  std::string source = "config";
  if (spec.cs2) {
    cs2 = *spec.cs2;
  } else {
    if (spec.sim.num_jobs == 0) throw ConfigError("bounds needs cs2 or jobs >= 1 to estimate c_s^2");
    cs2 = empirical_cs2(run(unlayered(spec.sim)));
    source = "empirical";
  }
  const BoundsRow b = lower_bounds(spec.sim, cs2);
  if (spec.format == Format::Json) {
    json rows = json::array();
    for (std::size_t l = 0; l < b.bounds.service_bound.size(); ++l) {
      rows.push_back({{"layer", l},
                      {"cumulative_fraction", b.bounds.cumulative_fraction[l]},
                      {"ts_bound", b.bounds.service_bound[l]},
                      {"delay_bound", b.bounds.delay_approx[l]},
                      {"queueing_delay", b.bounds.queueing_delay}});
    }
    out << json{{"provenance", provenance(spec)},
                {"service_lower_bound", b.pooled},
                {"cs2", cs2},
                {"cs2_source", source},
                {"rows", rows}}
               .dump(2)
        << '\n';
    return kExitOk;
  }
  write_preamble(out, spec);
  out << "# service_lower_bound=" << format_time(b.pooled) << " cs2=" << format_time(cs2)
      << " cs2_source=" << source << '\n';
  out << "layer,cumulative_fraction,ts_bound,delay_bound,queueing_delay\n";
  for (std::size_t l = 0; l < b.bounds.service_bound.size(); ++l) {
    out << l << ',' << format_time(b.bounds.cumulative_fraction[l]) << ',' << format_time(b.bounds.service_bound[l])
        << ',' << format_time(b.bounds.delay_approx[l]) << ',' << format_time(b.bounds.queueing_delay) << '\n';
  }
  return kExitOk;
}

// --- verify-codec -----------------------------------------------------------

struct CheckTally {
  std::string name;
  std::size_t passed = 0;
  std::size_t failed = 0;
  void record(bool ok) { ok ? ++passed : ++failed; }
};

IntMatrix random_int_matrix(RandomStream& rng, std::size_t rows, std::size_t cols, std::uint64_t bound) {
  IntMatrix m(rows, cols, 0);
  for (auto& e : m.data()) e = rng.below(bound);
  return m;
}

int run_verify_codec(const ExperimentSpec& spec, std::ostream& out) {
  RandomStream rng(spec.sim.seed, 0xC0DEC);
  const FieldPrime p(10007);
  CheckTally any_k{"decode_any_k_subset"};
  CheckTally integer{"decode_integer_product"};
  CheckTally interp{"interpolation_roundtrip"};
  CheckTally layering{"resolution_assemble"};
  const double omegas[] = {1.0, 1.5, 2.0};
  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    const CodeParams code{1 + rng.below(3), 1 + rng.below(3), omegas[rng.below(3)]};
    const std::size_t rows = 1 + rng.below(8);
    const std::size_t ca = code.n1 * (1 + rng.below(8 / code.n1));
    const std::size_t cb = code.n2 * (1 + rng.below(8 / code.n2));
    // rows * 31^2 < 10007 keeps every integer product entry a residue.
    const auto ai = random_int_matrix(rng, rows, ca, 32);
    const auto bi = random_int_matrix(rng, rows, cb, 32);
    const auto a = FieldMatrix::from_integers(ai, p);
    const auto b = FieldMatrix::from_integers(bi, p);
    const auto expected = mat_mul_transpose(a, b);
    const auto tasks = encode(a, b, code);
    std::vector<TaskResult> all;
    for (const auto& t : tasks) all.push_back(execute(t));
    // Random k-subset by partial Fisher-Yates.
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t s = 0; s < code.k(); ++s) std::swap(idx[s], idx[s + rng.below(idx.size() - s)]);
    std::vector<TaskResult> subset;
    for (std::size_t s = 0; s < code.k(); ++s) subset.push_back(all[idx[s]]);
    const auto decoded = decode(subset, code);
    any_k.record(decoded == expected);
    const auto wide = int_mul_transpose(ai, bi);
    bool same = true;
    for (std::size_t e = 0; e < wide.size(); ++e) same = same && wide.data()[e] == decoded.entries()[e];
    integer.record(same);

    std::vector<std::pair<residue, residue>> pts;
    for (std::size_t t = 0; t < 1 + rng.below(6); ++t) pts.emplace_back(t + 1 + rng.below(5) * 7, rng.below(p.value()));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](auto& x, auto& y) { return x.first == y.first; }), pts.end());
    const auto coeffs = interpolate_coefficients(pts, p);
    bool through = true;
    for (const auto& [x, y] : pts) {
      residue acc = 0;
      for (std::size_t c = coeffs.size(); c-- > 0;) acc = p.add(p.mul(acc, x), coeffs[c]);
      through = through && acc == y;
    }
    interp.record(through);

    const ChunkParams chunks{2, 8, 2};
    const auto la = random_int_matrix(rng, rows, 1 + rng.below(4), 1 << 16);
    const auto lb = random_int_matrix(rng, rows, 1 + rng.below(4), 1 << 16);
    const auto da = decompose(la, chunks);
    const auto db = decompose(lb, chunks);
    MiniJobResults results;
    for (const auto& mj : all_mini_jobs(chunks.m)) results.emplace(mj, mini_job_product(da, db, mj));
    layering.record(resolution_assemble(results, chunks.layers() - 1, chunks) == int_mul_transpose(la, lb));
  }
  const std::vector<CheckTally> checks{any_k, integer, interp, layering};
  bool ok = true;
  for (const auto& c : checks) ok = ok && c.failed == 0;
  if (spec.format == Format::Json) {
    json rows = json::array();
    for (const auto& c : checks) {
      rows.push_back({{"check", c.name}, {"trials", c.passed + c.failed}, {"passed", c.passed}, {"failed", c.failed}});
    }
    out << json{{"provenance", provenance(spec)}, {"checks", rows}, {"ok", ok}}.dump(2) << '\n';
  } else {
    write_preamble(out, spec);
    out << "check,trials,passed,failed,status\n";
    for (const auto& c : checks) {
      out << c.name << ',' << c.passed + c.failed << ',' << c.passed << ',' << c.failed << ','
          << (c.failed == 0 ? "pass" : "fail") << '\n';
    }
  }
  return ok ? kExitOk : kExitRuntimeError;
}

}  // namespace

std::string format_time(double t) { return format_fixed(t, 6); }

std::string version_string() { return LAYERCODE_VERSION; }

Mode parse_mode(const std::string& name) {
  if (name == "simulate") return Mode::Simulate;
  if (name == "sweep-omega") return Mode::SweepOmega;
  if (name == "sweep-deadline") return Mode::SweepDeadline;
  if (name == "bounds") return Mode::Bounds;
  if (name == "verify-codec") return Mode::VerifyCodec;
  throw ConfigError("unknown mode '" + name + "'");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Simulate: return "simulate";
    case Mode::SweepOmega: return "sweep-omega";
    case Mode::SweepDeadline: return "sweep-deadline";
    case Mode::Bounds: return "bounds";
    case Mode::VerifyCodec: return "verify-codec";
  }
  return "unknown";
}

void ExperimentSpec::set(const std::string& raw_key, const std::string& value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  auto& s = sim;
  if (key == "rates" || key == "mu") {
    s.rates = parse_list(key, value);
  } else if (key == "arrival_rate" || key == "lambda") {
    s.arrival_rate = parse_double(key, value);
  } else if (key == "k") {
    s.k = parse_u64(key, value);
  } else if (key == "omega") {
    s.omega = parse_double(key, value);
  } else if (key == "m") {
    s.m = static_cast<unsigned>(parse_u64(key, value));
  } else if (key == "c" || key == "task_complexity") {
    s.task_complexity_unlayered = parse_double(key, value);
  } else if (key == "gamma") {
    s.gamma = parse_double(key, value);
  } else if (key == "deadline") {
    const double d = parse_double(key, value);
    if (std::isinf(d)) {
      s.deadline.reset();
    } else {
      s.deadline = d;
    }
  } else if (key == "jobs" || key == "num_jobs") {
    s.num_jobs = parse_u64(key, value);
  } else if (key == "seed") {
    s.seed = parse_u64(key, value);
  } else if (key == "intra_layer") {
    const auto v = trim(value);
    if (v == "concurrent") {
      s.intra_layer = IntraLayer::Concurrent;
    } else if (v == "serial") {
      s.intra_layer = IntraLayer::Serial;
    } else {
      throw ConfigError("intra_layer must be 'concurrent' or 'serial', got '" + value + "'");
    }
  } else if (key == "purge") {
    const auto v = trim(value);
    if (v == "preemptive") {
      s.purge = PurgeMode::Preemptive;
    } else if (v == "run-to-completion" || v == "run_to_completion") {
      s.purge = PurgeMode::RunToCompletion;
    } else {
      throw ConfigError("purge must be 'preemptive' or 'run-to-completion', got '" + value + "'");
    }
  } else if (key == "deterministic_service") {
    s.deterministic_service = parse_bool(key, value);
  } else if (key == "with_payload") {
    if (parse_bool(key, value)) {
      if (!s.payload) s.payload.emplace();
    } else {
      s.payload.reset();
    }
  } else if (key == "payload_rows" || key == "payload_q" || key == "payload_d") {
    if (!s.payload) s.payload.emplace();
    const auto v = parse_u64(key, value);
    if (key == "payload_rows") s.payload->rows = v;
    if (key == "payload_q") s.payload->q = v;
    if (key == "payload_d") s.payload->d = static_cast<unsigned>(v);
  } else if (key == "omega_grid") {
    omega_grid = parse_list(key, value);
  } else if (key == "deadline_grid") {
    deadline_grid = parse_list(key, value);
  } else if (key == "out") {
    out_path = trim(value);
  } else if (key == "hist") {
    hist_path = trim(value);
  } else if (key == "hist_bins") {
    hist_bins = parse_u64(key, value);
  } else if (key == "format") {
    const auto v = trim(value);
    if (v == "csv") {
      format = Format::Csv;
    } else if (v == "json") {
      format = Format::Json;
    } else {
      throw ConfigError("format must be 'csv' or 'json', got '" + value + "'");
    }
  } else if (key == "cs2") {
    cs2 = parse_double(key, value);
  } else if (key == "trials") {
    trials = parse_u64(key, value);
  } else if (key == "threads") {
    threads = static_cast<unsigned>(std::max<std::uint64_t>(1, parse_u64(key, value)));
  } else if (key == "mode") {
    mode = parse_mode(trim(value));
  } else {
    throw ConfigError("unknown configuration key '" + raw_key + "'");
  }
}

std::string ExperimentSpec::canonical() const {
  std::ostringstream os;
  const auto& s = sim;
  os << "arrival_rate=" << format_number(s.arrival_rate) << '\n'
     << "c=" << format_number(s.task_complexity_unlayered) << '\n'
     << "deadline=" << (s.deadline ? format_number(*s.deadline) : "inf") << '\n'
     << "deterministic_service=" << (s.deterministic_service ? "true" : "false") << '\n'
     << "gamma=" << format_number(s.gamma) << '\n'
     << "intra_layer=" << (s.intra_layer == IntraLayer::Concurrent ? "concurrent" : "serial") << '\n'
     << "jobs=" << s.num_jobs << '\n'
     << "k=" << s.k << '\n'
     << "m=" << s.m << '\n'
     << "omega=" << format_number(s.omega) << '\n'
     << "purge=" << (s.purge == PurgeMode::Preemptive ? "preemptive" : "run-to-completion") << '\n'
     << "rates=" << join(s.rates) << '\n'
     << "seed=" << s.seed << '\n'
     << "with_payload=" << (s.payload ? "true" : "false") << '\n';
  if (s.payload) {
    os << "payload_d=" << s.payload->d << '\n'
       << "payload_q=" << s.payload->q << '\n'
       << "payload_rows=" << s.payload->rows << '\n';
  }
  switch (mode) {
    case Mode::SweepOmega: os << "omega_grid=" << join(omega_grid) << '\n'; break;
    case Mode::SweepDeadline: os << "deadline_grid=" << join(deadline_grid) << '\n'; break;
    case Mode::VerifyCodec: os << "trials=" << trials << '\n'; break;
    default: break;
  }
  if (cs2) os << "cs2=" << format_number(*cs2) << '\n';
  return os.str();
}

std::string ExperimentSpec::config_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentSpec::validate() const {
  try {
    sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (mode == Mode::SweepOmega) {
    if (omega_grid.empty()) throw ConfigError("omega_grid is empty");
    for (const double o : omega_grid) {
      if (!(o >= 1.0) || !std::isfinite(o)) throw ConfigError("omega_grid values must be >= 1");
    }
  }
  if (mode == Mode::SweepDeadline) {
    if (deadline_grid.empty()) throw ConfigError("deadline_grid is empty");
    for (const double d : deadline_grid) {
      if (!(d > 0.0)) throw ConfigError("deadline_grid values must be positive");
    }
  }
  if (cs2 && !(*cs2 >= 0.0)) throw ConfigError("cs2 must be non-negative");
  if (mode == Mode::Bounds && !(sim.offered_load() < 1.0)) {
    throw ConfigError("bounds: offered load " + format_number(sim.offered_load()) + " makes the queue unstable");
  }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<LayerSummary> summarize(const SimResult& result, unsigned layers) {
  std::vector<LayerSummary> out;
  for (unsigned l = 0; l < layers; ++l) {
    LayerSummary s;
    s.layer = l;
    double sum = 0.0, sum_sq = 0.0, compute = 0.0;
    for (const auto& job : result.jobs) {
      if (!job.layer_done(l)) continue;
      const double d = *job.delay[l];
      ++s.samples;
      sum += d;
      sum_sq += d * d;
      compute += *job.compute_time(l);
    }
    if (s.samples > 0) {
      const double n = static_cast<double>(s.samples);
      s.mean_delay = sum / n;
      s.mean_compute = compute / n;
      s.variance_delay = s.samples > 1 ? (sum_sq - sum * sum / n) / (n - 1.0) : 0.0;
    }
    s.success_rate = result.jobs.empty() ? 0.0 : success_rate(result.jobs, l);
    out.push_back(s);
  }
  return out;
}

int run_experiment(const ExperimentSpec& spec, std::ostream& out) {
  spec.validate();
  switch (spec.mode) {
    case Mode::Simulate: return run_simulate(spec, out);
    case Mode::SweepOmega: return run_sweep_omega(spec, out);
    case Mode::SweepDeadline: return run_sweep_deadline(spec, out);
    case Mode::Bounds: return run_bounds(spec, out);
    case Mode::VerifyCodec: return run_verify_codec(spec, out);
  }
  return kExitRuntimeError;
}

int run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.out_path.empty()) return run_experiment(spec, std::cout);
  std::ofstream file(spec.out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write output file '" + spec.out_path + "'");
  const int code = run_experiment(spec, file);
  file.flush();
  if (!file) throw std::runtime_error("failed writing output file '" + spec.out_path + "'");
  return code;
}

}  // namespace layercode::cli
