#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "prw/direction.hpp"

namespace prw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class SampleCapExceeded : public Error {
 public:
  SampleCapExceeded(Direction dir, std::int64_t cap)
      : Error("run length in direction " + std::string(to_string(dir)) + " exceeds cap " +
              std::to_string(cap)),
        dir_(dir),
        cap_(cap) {}
  Direction direction() const noexcept { return dir_; }
  std::int64_t cap() const noexcept { return cap_; }

 private:
  Direction dir_;
  std::int64_t cap_;
};

class HorizonTooLarge : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class RangeViolation : public Error {
 public:
  RangeViolation(Direction dir, std::int64_t n, double value)
      : Error("perturbed alpha out of [0,1] at n=" + std::to_string(n) + " (" +
              std::string(to_string(dir)) + "): " + std::to_string(value)),
        dir_(dir),
        n_(n),
        value_(value) {}
  Direction direction() const noexcept { return dir_; }
  std::int64_t index() const noexcept { return n_; }
  double value() const noexcept { return value_; }

 private:
  Direction dir_;
  std::int64_t n_;
  double value_;
};

class DivisionByZero : public Error {
 public:
  DivisionByZero(Direction dir, std::int64_t n)
      : Error("base alpha equals 1 at n=" + std::to_string(n) + " (" + std::string(to_string(dir)) +
              "), perturbation ratio undefined"),
        dir_(dir),
        n_(n) {}
  Direction direction() const noexcept { return dir_; }
  std::int64_t index() const noexcept { return n_; }

 private:
  Direction dir_;
  std::int64_t n_;
};

class ContextUnresolvable : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace prw
