#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dl {

// Control/frame tick. 22 future frames span exactly 3.0 s.
inline constexpr double kTick = 3.0 / 22.0;
inline constexpr int kHistoryLen = 12;
inline constexpr int kHorizonLen = 22;
inline constexpr double kHorizonSeconds = 3.0;
inline constexpr double kCruiseSpeed = 40.0 / 3.6;  // m/s

inline constexpr const char* kVersion = "driveline 0.1.0";

// Error classes map to CLI exit codes: config 2, data 3, verification 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VerifyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

}  // namespace dl
