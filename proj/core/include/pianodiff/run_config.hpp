#pragma once

#include <map>
#include <string>

#include "pianodiff/denoiser.hpp"
#include "pianodiff/diffusion.hpp"
#include "pianodiff/trainer.hpp"

namespace pianodiff {

// Flat `key = value` run configuration. Unknown keys are rejected; the
// fully resolved config can be echoed verbatim into logs.
struct RunConfig {
  DiffusionConfig diffusion;
  DenoiserConfig denoiser;
  TrainConfig train;

  static RunConfig parse(std::istream& is);
  static RunConfig parse_file(const std::string& path);
  // every key with its resolved value, one `key = value` line each
  std::string resolved() const;
};

}  // namespace pianodiff
