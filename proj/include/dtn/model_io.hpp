#pragma once

#include <iosfwd>
#include <string>

#include "dtn/ml.hpp"

namespace dtn::ml {

/// Versioned line-oriented model file: hyperparameters, seeds, and the full
/// tree topology with lossless number formatting. Loading reproduces
/// predictions bit-exactly.
void save_model(const Model& model, std::ostream& out);
void save_model_file(const Model& model, const std::string& path);

Model load_model(std::istream& in);
Model load_model_file(const std::string& path);

}  // namespace dtn::ml
