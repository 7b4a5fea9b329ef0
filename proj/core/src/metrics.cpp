#include "udcsim/engine/metrics.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc::engine {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{:.6f}", value);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void MetricsLog::record(double time, std::string name, double value, std::string tags) {
  if (!records_.empty() && time < records_.back().time) {
    throw ValidationError(fmt::format("metric '{}' recorded at t={} after t={}", name, time,
                                      records_.back().time));
  }
  records_.push_back(MetricRecord{time, std::move(name), value, std::move(tags)});
}

void MetricsLog::write_csv(std::ostream& out) const {
  out << "time,metric,value,tags\n";
  for (const auto& r : records_) {
    out << format_number(r.time) << ',' << r.name << ',' << format_number(r.value) << ','
        << r.tags << '\n';
  }
}

void EventLog::log(double time, EventKind kind, std::string subject, std::string what,
                   std::string detail) {
  events_.push_back(
      LoggedEvent{time, kind, std::move(subject), std::move(what), std::move(detail)});
}

void EventLog::write_csv(std::ostream& out) const {
  out << "time,kind,subject,event,detail\n";
  for (const auto& e : events_) {
    out << format_number(e.time) << ',' << to_string(e.kind) << ',' << e.subject << ','
        << e.what << ',' << e.detail << '\n';
  }
}

void Summary::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void Summary::set(std::string key, double value) { set(std::move(key), format_number(value)); }

void Summary::set(std::string key, long long value) {
  set(std::move(key), std::to_string(value));
}

const std::string* Summary::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Summary::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

}  // namespace udc::engine
