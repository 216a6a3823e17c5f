#pragma once

#include <stdexcept>
#include <string>

namespace fbl {

// Raised on contract violations: shape mismatches, bad configs, parse failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

}  // namespace detail
}  // namespace fbl
