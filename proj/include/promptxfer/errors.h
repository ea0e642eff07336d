// Copyright 2026 The promptxfer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROMPTXFER_ERRORS_H_
#define PROMPTXFER_ERRORS_H_

#include <stdexcept>
#include <string>

namespace promptxfer {

// Root of every error the library raises. The CLI maps the subclasses onto
// its exit-code contract: configuration/data/store problems exit 1, backend
// and budget failures exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

// A persisted run failed validation on reload.
class IntegrityError : public StoreError {
 public:
  using StoreError::StoreError;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, int status = 0,
                        std::string body_excerpt = {})
      : Error(what), status_(status), body_excerpt_(std::move(body_excerpt)) {}

  // HTTP status of the failing response, 0 when no response was received.
  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class BudgetExceeded : public BackendError {
 public:
  using BackendError::BackendError;
};

// Raised by candidate extraction; the optimizer treats it as a discard.
class CandidateRejected : public Error {
 public:
  enum class Reason { kEmpty, kOverCap, kMalformed };
  CandidateRejected(Reason reason, const std::string& what)
      : Error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

}  // namespace promptxfer

#endif  // PROMPTXFER_ERRORS_H_
