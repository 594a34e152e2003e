#pragma once

#include <string>

#include "sscap/model.hpp"

namespace sscap {

struct Checkpoint {
    ModelConfig config;
    ParamStore params;
};

// JSON document: config header plus role/name -> shape + row-major values.
// Doubles are written in shortest round-trip form, so save/load is lossless.
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParamStore& ps);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sscap
