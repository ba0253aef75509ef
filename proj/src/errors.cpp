#include "dks/errors.hpp"

namespace dks {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain:
    case ErrorKind::resolution:
    case ErrorKind::index:
      return 2;
    case ErrorKind::divergence:
    case ErrorKind::convergence:
      return 3;
    case ErrorKind::no_signal:
      return 4;
    case ErrorKind::io:
      return 5;
  }
  return 1;
}

}  // namespace dks
