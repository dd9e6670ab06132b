// Text format for systems (`.ctp` files).
//
//   system <id> {
//     delay discrete|dense|none;
//     msgs { m1, m2 };
//     accept { channels empty|any; counters zero|any; clocks zero|any; }
//     process p {
//       locations { l0, l1 };
//       init l0; final l1;
//       clocks { x }            # or: counters { x }
//       l0 -> l1 : send(c, m1) when x >= 1 && x < 3 reset { x };
//       l1 -> l1 : tick | tau;  # '|' lists alternatives
//     }
//     channel c : p -> q testable;
//   }
//
// Actions: send(c, m), recv(c, m), empty(c), tick, tau, internal(a),
// inc x, dec x, ztest x.  `#` starts a comment running to end of line.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctp/model.hpp"

namespace ctp::dsl {

enum class ErrorKind { Lexical, Syntax, Semantic };

struct ParseError {
  ErrorKind kind = ErrorKind::Syntax;
  std::string message;
  SourceSpan span;
  std::vector<std::string> expected;  // token descriptions, syntax errors only
};

struct ParseResult {
  std::optional<System> system;
  std::vector<ParseError> errors;

  bool ok() const { return system.has_value(); }
};

/// Parses a whole `.ctp` document. On success the system is canonicalized
/// and passes validate_system().
ParseResult parse(std::string_view text);

/// Deterministic canonical rendering; parse(serialize(s)) == canonical(s).
std::string serialize(const System &sys);

std::string format_error(const ParseError &e);

/// Convenience for tests and tools: throws Error carrying every message.
System parse_or_throw(std::string_view text);

} // namespace ctp::dsl
