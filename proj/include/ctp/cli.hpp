// The `ctp` command line: classify, check, reduce, lift, discretize,
// simulate and gen.
//
// Exit codes:
//   0  decidable (classify) / reachable (check) / success
//   1  unreachable, with an exhaustive certificate
//   2  unknown: bound or budget exhausted
//   3  input error (parse error, unknown names, failed precondition)
//   4  undecidable (classify)
//   5  open (classify)
//   6  --verify found two engines disagreeing

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctp::cli {

inline constexpr const char *kVersion = "0.1.0";

enum Exit : int {
  kOk = 0,
  kUnreachable = 1,
  kUnknown = 2,
  kInputError = 3,
  kUndecidable = 4,
  kOpen = 5,
  kDifferential = 6,
};

/// Runs one command; args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Hex FNV-1a 64 of a byte string, used as the input digest in reports.
std::string digest(const std::string &bytes);

} // namespace ctp::cli
