#pragma once

#include <stdexcept>
#include <string>

namespace geoloop {

// Exit codes of the CLI; exceptions carry the matching category so the tool
// can map failures to distinct codes.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kSchema = 4,
  kGeneratorContract = 5,
  kInternal = 6,
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or contract-violating input data (bad JSON schema, bad PLY header,
// invalid configuration values).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pluggable generator violated its interface contract.
class GeneratorContractError : public std::runtime_error {
 public:
  explicit GeneratorContractError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace geoloop
