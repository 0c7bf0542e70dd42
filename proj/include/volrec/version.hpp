#pragma once

namespace volrec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace volrec
