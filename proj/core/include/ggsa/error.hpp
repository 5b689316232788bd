#pragma once

#include <stdexcept>
#include <string>

namespace ggsa {

// Base of every error the library raises. The category string is stable and
// is what the CLI prints in its machine-readable `error=` line.
class Error : public std::runtime_error {
 public:
  Error(const char* category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  const char* category() const noexcept { return category_; }

 private:
  const char* category_;
};

#define GGSA_DEFINE_ERROR(Name, Base, category)                       \
  class Name : public Base {                                          \
   public:                                                            \
    explicit Name(const std::string& what) : Base(category, what) {}  \
                                                                      \
   protected:                                                         \
    Name(const char* cat, const std::string& what) : Base(cat, what) {} \
  };

GGSA_DEFINE_ERROR(DimensionError, Error, "dimension")
GGSA_DEFINE_ERROR(DegenerateMaskError, Error, "degenerate-mask")
GGSA_DEFINE_ERROR(ConfigError, Error, "config")
GGSA_DEFINE_ERROR(InputError, Error, "input")
GGSA_DEFINE_ERROR(ContractError, Error, "contract")
GGSA_DEFINE_ERROR(DataError, Error, "data")
GGSA_DEFINE_ERROR(TrainingDivergedError, Error, "diverged")
GGSA_DEFINE_ERROR(CheckpointError, Error, "checkpoint")
GGSA_DEFINE_ERROR(ChecksumError, CheckpointError, "checksum")
GGSA_DEFINE_ERROR(VersionError, CheckpointError, "version")
GGSA_DEFINE_ERROR(TruncatedError, CheckpointError, "truncated")
GGSA_DEFINE_ERROR(FormatError, CheckpointError, "format")
GGSA_DEFINE_ERROR(ConfigConflictError, CheckpointError, "config-conflict")

#undef GGSA_DEFINE_ERROR

}  // namespace ggsa
