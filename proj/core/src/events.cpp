#include "udcsim/engine/events.hpp"

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc::engine {

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::kExcitationChange: return "excitation-change";
    case EventKind::kDiskState: return "disk-state";
    case EventKind::kRaid: return "raid-event";
    case EventKind::kNode: return "node-event";
    case EventKind::kVm: return "vm-event";
    case EventKind::kSampleTick: return "sample-tick";
  }
  return "unknown";
}

void EventQueue::schedule(double time, EventKind kind, std::function<void()> action) {
  if (time < now_) {
    throw ValidationError(
        fmt::format("{} scheduled at t={} before current time {}", to_string(kind), time, now_));
  }
  heap_.push(Event{time, kind, next_sequence_++, std::move(action)});
}

void EventQueue::run_next() {
  // priority_queue::top is const; copy out the action before popping.
  Event ev = heap_.top();
  heap_.pop();
  now_ = ev.time;
  if (ev.action) ev.action();
}

void EventQueue::run_until(double horizon) {
  while (!heap_.empty() && heap_.top().time <= horizon) run_next();
}

}  // namespace udc::engine
