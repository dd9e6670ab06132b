#include "ctp/dbm.hpp"

#include <algorithm>
#include <sstream>

namespace ctp {

std::string format_bound(Bound b) {
  if (b == kInfinity)
    return "inf";
  return (bound_strict(b) ? "<" : "<=") + std::to_string(bound_value(b));
}

bool satisfies(const Rational &v, Bound b) {
  if (b == kInfinity)
    return true;
  Rational c = bound_value(b);
  return bound_strict(b) ? v < c : v <= c;
}

Dbm::Dbm(std::size_t dim, Bound fill) : dim_(dim), m_(dim * dim, fill) {}

Dbm Dbm::zero(std::size_t clocks) {
  Dbm d(clocks + 1, bound_le(0));
  return d;
}

Dbm Dbm::universe(std::size_t clocks) {
  Dbm d(clocks + 1, kInfinity);
  for (std::size_t i = 0; i < d.dim_; ++i) {
    d.ref(i, i) = bound_le(0);
    d.ref(0, i) = bound_le(0);
  }
  return d;
}

void Dbm::set(std::size_t i, std::size_t j, Bound b) {
  ref(i, j) = b;
  canonical_ = false;
}

void Dbm::mark_empty() {
  std::fill(m_.begin(), m_.end(), kInfinity);
  ref(0, 0) = bound_lt(0) - 2;  // < -1
  canonical_ = true;
}

bool Dbm::is_empty() const { return at(0, 0) < bound_le(0); }

Dbm &Dbm::canonicalize() {
  if (is_empty()) {
    mark_empty();
    return *this;
  }
  for (std::size_t k = 0; k < dim_; ++k)
    for (std::size_t i = 0; i < dim_; ++i) {
      Bound ik = at(i, k);
      if (ik == kInfinity)
        continue;
      for (std::size_t j = 0; j < dim_; ++j) {
        Bound via = bound_add(ik, at(k, j));
        if (via < at(i, j))
          ref(i, j) = via;
      }
    }
  for (std::size_t i = 0; i < dim_; ++i)
    if (at(i, i) < bound_le(0)) {
      mark_empty();
      return *this;
    }
  canonical_ = true;
  return *this;
}

Dbm &Dbm::delay_closure() {
  if (is_empty())
    return *this;
  for (std::size_t i = 1; i < dim_; ++i)
    ref(i, 0) = kInfinity;
  return *this;
}

Dbm &Dbm::down() {
  if (is_empty())
    return *this;
  // lower bounds relax to the tightest bound still implied by differences
  for (std::size_t j = 1; j < dim_; ++j) {
    Bound b = bound_le(0);
    for (std::size_t i = 1; i < dim_; ++i)
      if (at(i, j) < b)
        b = at(i, j);
    ref(0, j) = b;
  }
  return *this;
}

Dbm &Dbm::reset(std::size_t x) {
  if (is_empty())
    return *this;
  for (std::size_t j = 0; j < dim_; ++j) {
    ref(x, j) = at(0, j);
    ref(j, x) = at(j, 0);
  }
  ref(x, x) = bound_le(0);
  ref(x, 0) = bound_le(0);
  ref(0, x) = bound_le(0);
  return *this;
}

Dbm &Dbm::reset(const std::vector<std::size_t> &indices) {
  for (auto x : indices)
    reset(x);
  return *this;
}

Dbm &Dbm::free(std::size_t x) {
  if (is_empty())
    return *this;
  for (std::size_t j = 0; j < dim_; ++j)
    if (j != x) {
      ref(x, j) = kInfinity;
      ref(j, x) = at(j, 0);
    }
  ref(0, x) = bound_le(0);
  return *this;
}

Dbm &Dbm::constrain(std::size_t i, std::size_t j, Bound b) {
  if (is_empty() || b >= at(i, j))
    return *this;
  if (bound_add(b, at(j, i)) < bound_le(0)) {
    mark_empty();
    return *this;
  }
  ref(i, j) = b;
  // closure restricted to paths through the new edge
  for (std::size_t k = 0; k < dim_; ++k) {
    Bound ki = at(k, i);
    if (ki == kInfinity)
      continue;
    Bound kij = bound_add(ki, b);
    for (std::size_t l = 0; l < dim_; ++l) {
      Bound via = bound_add(kij, at(j, l));
      if (via < at(k, l))
        ref(k, l) = via;
    }
  }
  return *this;
}

Dbm &Dbm::intersect(std::size_t x, Cmp op, std::int64_t c) {
  switch (op) {
  case Cmp::Lt:
    return constrain(x, 0, bound_lt(c));
  case Cmp::Le:
    return constrain(x, 0, bound_le(c));
  case Cmp::Eq:
    constrain(x, 0, bound_le(c));
    return constrain(0, x, bound_le(-c));
  case Cmp::Ge:
    return constrain(0, x, bound_le(-c));
  case Cmp::Gt:
    return constrain(0, x, bound_lt(-c));
  }
  return *this;
}

Dbm &Dbm::intersect(const Dbm &other) {
  if (other.is_empty()) {
    mark_empty();
    return *this;
  }
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      if (other.at(i, j) < at(i, j))
        ref(i, j) = other.at(i, j);
  return canonicalize();
}

Dbm &Dbm::extrapolate(const std::vector<std::int64_t> &max_bounds) {
  if (is_empty())
    return *this;
  bool changed = false;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) {
      if (i == j)
        continue;
      Bound b = at(i, j);
      if (b == kInfinity)
        continue;
      std::int64_t mi = i == 0 ? 0 : max_bounds[i];
      std::int64_t mj = j == 0 ? 0 : max_bounds[j];
      if (i != 0 && b > bound_le(mi)) {
        ref(i, j) = kInfinity;
        changed = true;
      } else if (b < bound_lt(-mj)) {
        ref(i, j) = bound_lt(-mj);
        changed = true;
      }
    }
  if (changed)
    canonicalize();
  return *this;
}

bool Dbm::includes(const Dbm &other) const {
  if (other.is_empty())
    return true;
  if (is_empty())
    return false;
  for (std::size_t i = 0; i < m_.size(); ++i)
    if (other.m_[i] > m_[i])
      return false;
  return true;
}

bool Dbm::contains(const std::vector<Rational> &v) const {
  if (is_empty())
    return false;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) {
      if (i == j)
        continue;
      Rational vi = i == 0 ? Rational(0) : v[i];
      Rational vj = j == 0 ? Rational(0) : v[j];
      if (!satisfies(vi - vj, at(i, j)))
        return false;
    }
  for (std::size_t i = 1; i < dim_; ++i)
    if (v[i] < 0)
      return false;
  return true;
}

std::string Dbm::format(const std::vector<std::string> &names) const {
  if (is_empty())
    return "false";
  auto name = [&](std::size_t i) { return i == 0 ? std::string("0") : names.at(i - 1); };
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) {
      if (i == j || at(i, j) == kInfinity || (i == 0 && at(i, j) == bound_le(0)))
        continue;
      os << (first ? "" : " && ");
      first = false;
      if (j == 0)
        os << name(i);
      else if (i == 0)
        os << "-" << name(j);
      else
        os << name(i) << "-" << name(j);
      os << format_bound(at(i, j));
    }
  return first ? "true" : os.str();
}

std::string Dbm::key() const {
  std::string k(reinterpret_cast<const char *>(m_.data()), m_.size() * sizeof(Bound));
  return k;
}

} // namespace ctp
