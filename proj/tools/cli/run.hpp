#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dimdecomp/study.hpp"

namespace dimdecomp::cli {

using Json = nlohmann::ordered_json;

/// Invalid run configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names of the built-in reproduction configs.
std::vector<std::string> reproduce_names();
/// The frozen config of a built-in reproduction.
Json frozen_config(const std::string& name);

/// "tensor_gauss:4", "monte_carlo:100000" or "rqmc:65536x8" (seed set separately).
Json parse_backend(const std::string& text);
IntegrationSpec integration_from_json(const Json& record, std::uint64_t default_seed);

FunctionSpec function_from_json(const Json& config, InputModel& model_out);
InputModel input_model_from_json(const Json& record, std::size_t n);

/// Validates and executes a reproduce or analyze config.
StudyResult run(const Json& config);

/// method,S,N,value,error_indicator,provenance[,x] with 6 significant digits.
std::string to_csv(const StudyResult& result);
std::string render_json(const StudyResult& result, const Json& config);
/// Sidecar with config, metadata and warnings.
std::string meta_json(const StudyResult& result, const Json& config);
/// Human-readable table laid out like the published one.
std::string layout(const StudyResult& result);

/// Entry point shared by the executable and tests. Returns the exit status.
int main_entry(int argc, char** argv);

}  // namespace dimdecomp::cli
