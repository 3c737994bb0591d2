#ifndef MPRS_ERRORS_H_
#define MPRS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mprs {

// Error classes map one-to-one onto the CLI exit-code partition, see
// tools/mprs_main.cc.
enum class ErrorKind {
  kDimension,
  kContract,
  kTraining,
  kGeometry,
  kObfuscation,
  kFormat,
  kData,
  kConfig,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define MPRS_DEFINE_ERROR(Name, Kind)                                     \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(Kind, message) {}  \
  }

MPRS_DEFINE_ERROR(DimensionError, ErrorKind::kDimension);
MPRS_DEFINE_ERROR(ContractError, ErrorKind::kContract);
MPRS_DEFINE_ERROR(TrainingError, ErrorKind::kTraining);
MPRS_DEFINE_ERROR(GeometryError, ErrorKind::kGeometry);
MPRS_DEFINE_ERROR(ObfuscationError, ErrorKind::kObfuscation);
MPRS_DEFINE_ERROR(FormatError, ErrorKind::kFormat);
MPRS_DEFINE_ERROR(DataError, ErrorKind::kData);
MPRS_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);

#undef MPRS_DEFINE_ERROR

}  // namespace mprs

#endif  // MPRS_ERRORS_H_
