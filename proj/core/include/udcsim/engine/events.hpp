#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace udc::engine {

// Declaration order is the tie-break priority for events at equal times:
// excitation changes apply first and sample ticks observe the settled state.
enum class EventKind : std::uint8_t {
  kExcitationChange = 0,
  kDiskState = 1,
  kRaid = 2,
  kNode = 3,
  kVm = 4,
  kSampleTick = 5,
};

std::string_view to_string(EventKind kind) noexcept;

// Ordering for the raid/node/vm group: they share one priority level, so
// only the first three kinds and sample ticks differ in rank.
constexpr int priority(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::kExcitationChange: return 0;
    case EventKind::kDiskState: return 1;
    case EventKind::kRaid:
    case EventKind::kNode:
    case EventKind::kVm: return 2;
    case EventKind::kSampleTick: return 3;
  }
  return 3;
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::kSampleTick;
  std::uint64_t sequence = 0;  // insertion order, assigned by the queue
  std::function<void()> action;
};

// Min-queue ordered by (time, kind priority, insertion order).
class EventQueue {
 public:
  // Throws ValidationError when `time` precedes the current clock.
  void schedule(double time, EventKind kind, std::function<void()> action);

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  double now() const noexcept { return now_; }

  // Pops and executes the next event; advances the clock to its time.
  void run_next();

  // Runs every event with time <= horizon.
  void run_until(double horizon);

  double peek_time() const { return heap_.top().time; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      if (priority(a.kind) != priority(b.kind)) return priority(a.kind) > priority(b.kind);
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_sequence_ = 0;
  double now_ = 0.0;
};

}  // namespace udc::engine
