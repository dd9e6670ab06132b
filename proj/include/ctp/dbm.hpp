// Difference bound matrices over integer constants.
//
// Index 0 is the reference clock (constant 0); entry (i, j) bounds
// x_i - x_j. Bounds use the usual encoding 2c + 1 for `<= c` and 2c for
// `< c`, so that the plain integer order is the order of constraints.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ctp/model.hpp"

namespace ctp {

// expression templates off: values behave like plain arithmetic types
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

using Bound = std::int64_t;

constexpr Bound kInfinity = std::numeric_limits<Bound>::max();

constexpr Bound bound_le(std::int64_t c) { return 2 * c + 1; }
constexpr Bound bound_lt(std::int64_t c) { return 2 * c; }
constexpr std::int64_t bound_value(Bound b) { return b >> 1; }
constexpr bool bound_strict(Bound b) { return (b & 1) == 0; }

inline Bound bound_add(Bound a, Bound b) {
  if (a == kInfinity || b == kInfinity)
    return kInfinity;
  return ((bound_value(a) + bound_value(b)) << 1) | (a & b & 1);
}

/// Formats a bound as `<=3`, `<-1` or `inf`.
std::string format_bound(Bound b);

class Dbm {
public:
  Dbm() : Dbm(1, bound_le(0)) {}
  /// All clocks equal to zero. `clocks` excludes the reference clock.
  static Dbm zero(std::size_t clocks);
  /// Every non-negative valuation.
  static Dbm universe(std::size_t clocks);

  std::size_t dimension() const { return dim_; }  // clocks + 1
  Bound at(std::size_t i, std::size_t j) const { return m_[i * dim_ + j]; }
  /// Overwrites one entry and marks the matrix non-canonical.
  void set(std::size_t i, std::size_t j, Bound b);

  /// Shortest-path closure (Floyd-Warshall). Empty zones collapse to a
  /// single representation with a negative (0,0) entry.
  Dbm &canonicalize();
  bool is_canonical() const { return canonical_; }
  bool is_empty() const;

  // The following operations expect and keep canonical form.
  Dbm &delay_closure();
  /// Inverse of delay_closure: every valuation from which a delay reaches the zone.
  Dbm &down();
  Dbm &reset(std::size_t x);  // x is a matrix index, clocks start at 1
  Dbm &reset(const std::vector<std::size_t> &indices);
  /// Drops every constraint on x (keeps x >= 0).
  Dbm &free(std::size_t x);
  /// Conjoins x_i - x_j (bound) and re-closes incrementally.
  Dbm &constrain(std::size_t i, std::size_t j, Bound b);
  /// Conjoins `x op c` for matrix index x.
  Dbm &intersect(std::size_t x, Cmp op, std::int64_t c);
  Dbm &intersect(const Dbm &other);
  /// Classic max-bounds extrapolation; max_bounds[0] is ignored.
  Dbm &extrapolate(const std::vector<std::int64_t> &max_bounds);

  /// Set inclusion; both sides canonical.
  bool includes(const Dbm &other) const;
  bool contains(const std::vector<Rational> &valuation) const;  // valuation[0] ignored

  std::string format(const std::vector<std::string> &clock_names) const;
  std::string key() const;

  friend bool operator==(const Dbm &a, const Dbm &b) { return a.dim_ == b.dim_ && a.m_ == b.m_; }

private:
  explicit Dbm(std::size_t dim, Bound fill);
  Bound &ref(std::size_t i, std::size_t j) { return m_[i * dim_ + j]; }
  void mark_empty();

  std::size_t dim_ = 1;
  std::vector<Bound> m_;
  bool canonical_ = true;
};

/// Does value v satisfy the bound (v <= c or v < c)?
bool satisfies(const Rational &v, Bound b);

} // namespace ctp
