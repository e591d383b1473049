#pragma once

namespace scmprobe {

// Stamped into config snapshots and report footers so an artifact records
// which tool build produced it.
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace scmprobe
