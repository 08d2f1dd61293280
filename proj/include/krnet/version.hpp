#pragma once

namespace krnet {

constexpr const char* kVersion = "1.0.0";

}  // namespace krnet
