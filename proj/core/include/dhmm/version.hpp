#pragma once

namespace dhmm {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace dhmm
