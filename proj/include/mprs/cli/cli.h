#ifndef MPRS_CLI_CLI_H_
#define MPRS_CLI_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "mprs/errors.h"

namespace mprs {

// Exit codes: 0 ok, 1 unexpected failure, 2 configuration, 3 data / format /
// shape / contract (including missing artifacts), 4 training / geometry /
// obfuscation. Failures print one line "error: <kind>: <message>" to `err`.
int ExitCodeFor(ErrorKind kind);

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mprs

#endif  // MPRS_CLI_CLI_H_
