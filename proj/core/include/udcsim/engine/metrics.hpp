#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "udcsim/engine/events.hpp"

namespace udc::engine {

struct MetricRecord {
  double time = 0.0;
  std::string name;
  double value = 0.0;
  std::string tags;  // "key=value;key=value"
};

// Append-only; appends with a time earlier than the last record throw.
class MetricsLog {
 public:
  void record(double time, std::string name, double value, std::string tags = {});

  const std::vector<MetricRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  // Header: time,metric,value,tags
  void write_csv(std::ostream& out) const;

 private:
  std::vector<MetricRecord> records_;
};

struct LoggedEvent {
  double time = 0.0;
  EventKind kind = EventKind::kSampleTick;
  std::string subject;  // e.g. "uw/hdd1"
  std::string what;     // e.g. "unresponsive", "dropped", "removed"
  std::string detail;
};

class EventLog {
 public:
  void log(double time, EventKind kind, std::string subject, std::string what,
           std::string detail = {});

  const std::vector<LoggedEvent>& events() const noexcept { return events_; }

  // Header: time,kind,subject,event,detail
  void write_csv(std::ostream& out) const;

 private:
  std::vector<LoggedEvent> events_;
};

// Flat key-value text record, written in insertion order as "key=value".
class Summary {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, long long value);

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }
  const std::string* find(const std::string& key) const;

  void write(std::ostream& out) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Fixed six-decimal rendering used by every CSV writer.
std::string format_number(double value);

}  // namespace udc::engine
