#pragma once

#include <map>
#include <string>

#include "nscache/training.hpp"

namespace nscache {

// Run configuration parsed from a `key = value` text file. Unknown keys are
// rejected; the resolved config (defaults filled in) is echoed into the run
// directory so every result is reproducible from that directory alone.
struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    std::string dataset_dir;
    std::string out_dir = "out";
    TrainConfig train;
    bool eval_raw = false;  // raw-mode ranking (no filtering); filtered is default
    int threads = 1;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_lines(const std::map<std::string, std::string>& kv);

    // Canonical `key = value` form with every key present.
    std::string resolved_text() const;
};

}  // namespace nscache
