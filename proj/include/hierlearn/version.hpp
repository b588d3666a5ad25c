#pragma once

namespace hierlearn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hierlearn
