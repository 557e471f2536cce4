#pragma once

#include <stdexcept>
#include <string>

namespace capr {

// Root of every error raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyLogError : public Error {
 public:
  EmptyLogError() : Error("empty log: no valid interaction records") {}
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

// A generator/scorer/reformulator/similarity backend failed.
class BackendError : public Error {
 public:
  BackendError(std::string endpoint, int status, const std::string& what)
      : Error(what), endpoint_(std::move(endpoint)), status_(status) {}
  explicit BackendError(const std::string& what) : Error(what) {}

  const std::string& endpoint() const { return endpoint_; }
  int status() const { return status_; }

 private:
  std::string endpoint_;
  int status_ = 0;
};

// A backend responded, but the payload did not match the wire schema.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace capr
