#pragma once

namespace pnpunmix {

/// Name of the environment variable read by threadCount().
inline constexpr const char* kThreadsEnv = "PNPUNMIX_THREADS";

/// Worker threads for pixel- and band-parallel loops. Reads PNPUNMIX_THREADS;
/// unset, empty or 0 means all available cores. Results never depend on it.
int threadCount();

}  // namespace pnpunmix
