#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>

namespace erouve {

/// Strongly typed index. Tag keeps junction, segment and vehicle ids apart.
template <typename Tag>
struct Id {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  [[nodiscard]] constexpr bool valid() const {
    return value != std::numeric_limits<std::uint32_t>::max();
  }
  constexpr auto operator<=>(const Id&) const = default;
};

struct JunctionTag;
struct SegmentTag;
struct VehicleTag;
struct ReportTag;

using JunctionId = Id<JunctionTag>;
using SegmentId = Id<SegmentTag>;
using VehicleId = Id<VehicleTag>;
using ReportId = Id<ReportTag>;

}  // namespace erouve

template <typename Tag>
struct std::hash<erouve::Id<Tag>> {
  std::size_t operator()(const erouve::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
