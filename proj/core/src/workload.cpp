#include "udcsim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "udcsim/engine/metrics.hpp"
#include "udcsim/error.hpp"

namespace udc::workload {

void WorkloadSpec::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("workload: duration_s must be > 0");
  if (!(sample_period_s > 0.0)) throw ConfigError("workload: sample_period_s must be > 0");
  if (sample_period_s > duration_s) throw ConfigError("workload: sample period exceeds duration");
  if (request_size == 0) throw ConfigError("workload: request_size must be > 0");
  if (partition_size < request_size) throw ConfigError("workload: partition smaller than one request");
}

StorageTarget StorageTarget::single_disk(storage::DiskModel model) {
  model.validate();
  StorageTarget t;
  t.models_.push_back(std::move(model));
  t.states_.resize(1);
  return t;
}

StorageTarget StorageTarget::raid5(std::vector<storage::DiskModel> models,
                                   storage::Raid5Config config) {
  for (const auto& m : models) m.validate();
  StorageTarget t;
  t.array_.emplace(models.size(), config);
  t.states_.resize(models.size());
  t.models_ = std::move(models);
  return t;
}

bool StorageTarget::failed() const noexcept {
  if (array_) return array_->status() == storage::ArrayStatus::kFailed;
  return !states_.front().detected;
}

bool StorageTarget::serving() const {
  if (array_) return array_->can_serve(states_);
  return states_.front().responsive && states_.front().detected;
}

double StorageTarget::baseline_throughput() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : models_) best = std::min(best, m.baseline_throughput);
  return best;
}

double StorageTarget::rate(WorkloadKind kind) const {
  const bool write = is_write(kind);
  if (array_) {
    if (failed()) return 0.0;
    return write ? storage::raid5_throughput(*array_, states_, models_)
                 : storage::raid5_read_throughput(*array_, states_, models_);
  }
  const auto& s = states_.front();
  if (!s.responsive || !s.detected) return 0.0;
  return models_.front().baseline_throughput * (write ? s.current_multiplier : s.read_multiplier);
}

StorageTarget::Step StorageTarget::step(const acoustics::EffectiveExcitation& excitation, double dt,
                                        WorkloadKind kind) {
  Step out;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (array_ && !array_->is_active(i)) continue;
    states_[i] = storage::disk_step(states_[i], models_[i], excitation, excitation.combined_factor, dt);
  }
  if (array_) out.events = storage::raid5_step(*array_, states_, dt);
  out.failed = failed();
  out.serving = !out.failed && serving();
  out.throughput_mb_s = rate(kind);
  return out;
}

ExcitationFeed constant_excitation(double delta_spl, double combined_factor) {
  return [delta_spl, combined_factor](double) {
    return acoustics::EffectiveExcitation{delta_spl, 0.0, combined_factor};
  };
}

std::vector<double> ThroughputTrace::values() const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.mb_s);
  return v;
}

double ThroughputTrace::mean() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += s.mb_s;
  return sum / static_cast<double>(samples.size());
}

void ThroughputTrace::write_csv(std::ostream& out) const {
  out << "# sample_period_s=" << engine::format_number(sample_period_s) << '\n';
  out << "# aborted=" << (aborted ? "true" : "false") << '\n';
  for (const auto& [k, v] : labels) out << "# " << k << '=' << v << '\n';
  out << "t_s,throughput_mb_s\n";
  for (const auto& s : samples) {
    out << engine::format_number(s.t) << ',' << engine::format_number(s.mb_s) << '\n';
  }
}

namespace {

double parse_double(std::string_view text, std::size_t line, const char* field) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(fmt::format("invalid {} '{}'", field, text), line);
  }
  return v;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line, const char* field) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(fmt::format("invalid {} '{}'", field, text), line);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

ThroughputTrace ThroughputTrace::read_csv(std::istream& in) {
  ThroughputTrace trace;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++n;
    const std::string_view l = trim(line);
    if (l.empty()) continue;
    if (!header && l.front() == '#') {
      const auto body = trim(l.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("label line without '='", n);
      const std::string key(body.substr(0, eq));
      const std::string value(body.substr(eq + 1));
      if (key == "sample_period_s") {
        trace.sample_period_s = parse_double(value, n, "sample period");
      } else if (key == "aborted") {
        trace.aborted = value == "true";
      } else {
        trace.labels[key] = value;
      }
      continue;
    }
    if (!header) {
      if (l != "t_s,throughput_mb_s") throw ParseError("expected header 't_s,throughput_mb_s'", n);
      header = true;
      continue;
    }
    const auto fields = split(l, ',');
    if (fields.size() != 2) throw ParseError("expected 2 fields", n);
    ThroughputSample s{parse_double(trim(fields[0]), n, "time"),
                       parse_double(trim(fields[1]), n, "throughput")};
    if (s.mb_s < 0.0) throw ParseError("negative throughput", n);
    if (s.t < prev_t) throw ParseError("time goes backwards", n);
    prev_t = s.t;
    trace.samples.push_back(s);
  }
  if (!header) throw ParseError("missing header", n == 0 ? 1 : n);
  return trace;
}

void ThroughputTrace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out);
}

ThroughputTrace ThroughputTrace::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return read_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
}

ThroughputTrace run_benchmark(const WorkloadSpec& spec, StorageTarget& target,
                              const ExcitationFeed& feed, const NoiseModel& noise,
                              engine::RngStream& rng) {
  spec.validate();
  if (target.failed()) throw UnavailableError("run_benchmark: storage target has failed");
  if (noise.sigma_fraction < 0.0) throw ConfigError("noise sigma must be >= 0");

  ThroughputTrace trace;
  trace.sample_period_s = spec.sample_period_s;
  trace.labels["workload"] = std::string(to_string(spec.kind));

  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s / spec.sample_period_s));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * spec.sample_period_s;
    const auto step = target.step(feed(t), spec.sample_period_s, spec.kind);
    if (step.failed) {
      trace.aborted = true;
      break;
    }
    double v = step.throughput_mb_s;
    if (noise.sigma_fraction > 0.0 && v > 0.0) v *= 1.0 + rng.normal(0.0, noise.sigma_fraction);
    trace.samples.push_back({t, std::max(0.0, v)});
  }
  return trace;
}

std::vector<TraceRequest> parse_msr_trace(std::istream& in, std::size_t max_requests,
                                          std::vector<std::string>* warnings) {
  std::vector<TraceRequest> out;
  std::string line;
  std::size_t n = 0;
  std::uint64_t first_ticks = 0;
  while (out.size() < max_requests && std::getline(in, line)) {
    ++n;
    const std::string_view l = trim(line);
    if (l.empty()) continue;
    const auto f = split(l, ',');
    if (f.size() != 7) throw ParseError(fmt::format("expected 7 fields, got {}", f.size()), n);
    const std::uint64_t ticks = parse_u64(trim(f[0]), n, "timestamp");
    const std::string_view type = trim(f[3]);
    TraceRequest r;
    if (type == "Read" || type == "read" || type == "R") {
      r.operation = IoOp::kRead;
    } else if (type == "Write" || type == "write" || type == "W") {
      r.operation = IoOp::kWrite;
    } else {
      throw ParseError(fmt::format("invalid operation '{}'", type), n);
    }
    parse_u64(trim(f[2]), n, "disk number");
    r.offset = parse_u64(trim(f[4]), n, "offset");
    r.size = parse_u64(trim(f[5]), n, "size");
    parse_u64(trim(f[6]), n, "response time");
    if (out.empty()) first_ticks = ticks;
    if (ticks < first_ticks) throw ParseError("timestamp precedes first request", n);
    r.timestamp_s = static_cast<double>(ticks - first_ticks) * 1e-7;
    if (!out.empty() && r.timestamp_s < out.back().timestamp_s) {
      throw ParseError("timestamps must be non-decreasing", n);
    }
    out.push_back(r);
  }
  if (out.empty() && warnings) warnings->push_back("trace contains no requests");
  return out;
}

std::vector<TraceRequest> load_msr_trace(const std::filesystem::path& path,
                                         std::size_t max_requests,
                                         std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read trace " + path.string());
  try {
    return parse_msr_trace(in, max_requests, warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
}

void write_msr_trace(std::ostream& out, const std::vector<TraceRequest>& requests,
                     const std::string& hostname, std::uint64_t base_ticks) {
  for (const auto& r : requests) {
    const auto ticks = base_ticks + static_cast<std::uint64_t>(std::llround(r.timestamp_s * 1e7));
    out << ticks << ',' << hostname << ",0," << (r.operation == IoOp::kWrite ? "Write" : "Read")
        << ',' << r.offset << ',' << r.size << ",0\n";
  }
}

TraceProfile msr_profile(const std::string& name) {
  if (name == "mds") return {"mds", 50000, 2280.0, 0.35};
  if (name == "prxy") return {"prxy", 50000, 180.0, 0.95};
  if (name == "web") return {"web", 50000, 1320.0, 0.30};
  throw ConfigError("unknown trace profile '" + name + "' (expected mds, prxy or web)");
}

std::vector<TraceRequest> synthesize_trace(const TraceProfile& profile, double service_mb_s,
                                           engine::RngStream& rng) {
  if (profile.requests == 0) throw ConfigError("trace profile: requests must be > 0");
  if (!(profile.span_s > 0.0)) throw ConfigError("trace profile: span must be > 0");
  if (!(service_mb_s > 0.0)) throw ConfigError("trace profile: service rate must be > 0");
  if (profile.write_fraction < 0.0 || profile.write_fraction > 1.0) {
    throw ConfigError("trace profile: write fraction outside [0, 1]");
  }

  std::vector<double> times(profile.requests);
  for (auto& t : times) t = rng.uniform(0.0, profile.span_s);
  std::sort(times.begin(), times.end());
  const double t0 = times.front();

  // Sizes vary +-50% around the mean that makes demand match the rate.
  const double mean_bytes = service_mb_s * 1e6 * profile.span_s / static_cast<double>(profile.requests);
  constexpr std::uint64_t kPartition = 64ull << 30;
  std::vector<TraceRequest> out(profile.requests);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& r = out[i];
    r.timestamp_s = times[i] - t0;
    r.operation = rng.bernoulli(profile.write_fraction) ? IoOp::kWrite : IoOp::kRead;
    const double bytes = mean_bytes * rng.uniform(0.5, 1.5);
    r.size = std::max<std::uint64_t>(512, static_cast<std::uint64_t>(bytes / 512.0) * 512);
    r.offset = rng.below(kPartition / 4096) * 4096;
  }
  return out;
}

ReplayResult replay_trace(const std::vector<TraceRequest>& requests, StorageTarget& target,
                          const ExcitationFeed& feed, double wall_limit_s, double tick_s) {
  if (!(tick_s > 0.0)) throw ValidationError("replay_trace: tick must be > 0");
  if (wall_limit_s < 0.0) throw ValidationError("replay_trace: wall limit must be >= 0");
  for (std::size_t i = 1; i < requests.size(); ++i) {
    if (requests[i].timestamp_s < requests[i - 1].timestamp_s) {
      throw ValidationError("replay_trace: requests must be sorted by timestamp");
    }
  }

  ReplayResult result;
  std::size_t arrived = 0;
  std::size_t head = 0;
  double remaining = requests.empty() ? 0.0 : static_cast<double>(requests.front().size);

  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * tick_s;
    if (head >= requests.size()) break;
    if (t >= wall_limit_s) {
      result.elapsed_s = wall_limit_s;
      break;
    }
    const double dt = std::min(tick_s, wall_limit_s - t);
    const auto step = target.step(feed(t), dt, WorkloadKind::kSequentialWrite);
    for (const auto& e : step.events) result.raid_events.emplace_back(t, e);
    if (step.failed) {
      result.storage_failed = true;
      result.failed_at_s = t;
      result.elapsed_s = t;
      break;
    }

    while (arrived < requests.size() && requests[arrived].timestamp_s < t + dt) ++arrived;
    result.issued = arrived;

    const double write_rate = target.rate(WorkloadKind::kSequentialWrite) * 1e6;
    const double read_rate = target.rate(WorkloadKind::kSequentialRead) * 1e6;
    double budget = dt;
    while (budget > 0.0 && head < arrived) {
      const double rate = requests[head].operation == IoOp::kWrite ? write_rate : read_rate;
      if (rate <= 0.0) break;
      const double need = remaining / rate;
      if (need <= budget) {
        budget -= need;
        ++head;
        if (head < requests.size()) remaining = static_cast<double>(requests[head].size);
      } else {
        remaining -= budget * rate;
        budget = 0.0;
      }
    }
    result.fulfilled = head;
    if (head >= requests.size()) result.elapsed_s = t + (dt - budget);
  }
  result.issued = std::max(result.issued, result.fulfilled);
  return result;
}

double baseline_wall_budget(const std::vector<TraceRequest>& requests,
                            const StorageTarget& pristine_target, double tick_s) {
  StorageTarget copy = pristine_target;
  const double span = requests.empty() ? 0.0 : requests.back().timestamp_s;
  double total_bytes = 0.0;
  for (const auto& r : requests) total_bytes += static_cast<double>(r.size);
  const double limit = span + total_bytes / (copy.baseline_throughput() * 1e6) * 4.0 + 10.0 * tick_s;
  const auto r = replay_trace(requests, copy, constant_excitation(0.0, 0.0), limit, tick_s);
  if (r.fulfilled != requests.size()) {
    throw ValidationError("baseline_wall_budget: pristine target cannot finish the trace");
  }
  // Whole ticks, so a replay against the budget never loses the last
  // request to rounding.
  return std::ceil(r.elapsed_s / tick_s - 1e-9) * tick_s + tick_s;
}

}  // namespace udc::workload
