#pragma once

namespace stpca {

inline constexpr const char* kSoftwareName = "stpca";
inline constexpr const char* kSoftwareVersion = "0.1.0";

// Identity of the random-number machinery, recorded in all output metadata.
// Per-trial streams: xoshiro256++ state built by a splitmix64 chain over
// (seed, trial_index), Gaussians via Box-Muller.
inline constexpr const char* kRngName = "xoshiro256++/splitmix64+box-muller";
inline constexpr const char* kRngVersion = "1.0";

}  // namespace stpca
