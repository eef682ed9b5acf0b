#pragma once

#include <iosfwd>

#include "config.hpp"
#include "report.hpp"

namespace raf::lab {

struct RunOptions {
  Formats formats;
  unsigned threads = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

/// Runs the manifest's command and writes every output under
/// manifest.output_dir. Returns kExitDiverged when any run diverged (its
/// trace and diagnostic are still written).
int dispatch(const RunManifest& manifest, const RunOptions& options, std::ostream& log);

}  // namespace raf::lab
