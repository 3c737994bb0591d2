#include "mprs/errors.h"

namespace mprs {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kTraining: return "training";
    case ErrorKind::kGeometry: return "geometry";
    case ErrorKind::kObfuscation: return "obfuscation";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kData: return "data";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace mprs
