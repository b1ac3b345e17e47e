#pragma once

namespace hipexo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hipexo
