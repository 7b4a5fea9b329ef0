#pragma once

#include <optional>
#include <string_view>

namespace udc {

enum class WorkloadKind { kSequentialWrite, kSequentialRead, kRandomWrite, kRandomRead };

constexpr std::string_view to_string(WorkloadKind k) noexcept {
  switch (k) {
    case WorkloadKind::kSequentialWrite: return "sequential-write";
    case WorkloadKind::kSequentialRead: return "sequential-read";
    case WorkloadKind::kRandomWrite: return "random-write";
    case WorkloadKind::kRandomRead: return "random-read";
  }
  return "unknown";
}

constexpr bool is_write(WorkloadKind k) noexcept {
  return k == WorkloadKind::kSequentialWrite || k == WorkloadKind::kRandomWrite;
}

// Accepts the long names and the SW/SR/RW/RR abbreviations.
std::optional<WorkloadKind> parse_workload_kind(std::string_view text) noexcept;

}  // namespace udc
