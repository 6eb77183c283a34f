#pragma once

#include <vector>

#include "erouve/ids.hpp"

namespace erouve {

/// V2I payload sent when a vehicle leaves a segment.
struct SegmentReport {
  ReportId id;
  VehicleId vehicle;
  SegmentId claimed_segment;
  double tt_s = 0.0;
  double co2_ml = 0.0;
  std::vector<VehicleId> witnesses;  // co-travelers heard, ascending
  SegmentId witness_segment;         // where they were heard; taken from beacons
  double dispatch_time_s = 0.0;      // stamped by the RSU
  double receipt_time_s = 0.0;
};

}  // namespace erouve
