// Copyright 2026 The MOSRA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOSRA_ERRORS_H_
#define MOSRA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mosra {

// Root of every error the library throws. Callers that only need a message
// can catch this; the subclasses let tests and the CLI tell failure kinds
// apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its content is not in a supported format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tensor shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Schroeder decay curve never reaches the end of the fit range.
class InsufficientDecay : public Error {
 public:
  using Error::Error;
};

// A numerical estimate is undefined (zero variance, singular fit, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mosra

#endif  // MOSRA_ERRORS_H_
