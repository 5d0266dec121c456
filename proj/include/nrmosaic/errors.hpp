// Copyright 2026 The nrmosaic Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace nrm {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DegenerateDepthError : public Error {
 public:
  using Error::Error;
};

// An arcsine argument left [-1, 1]; usually a sensor fault or a wrong kappa.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

class GrazingTiltError : public Error {
 public:
  using Error::Error;
};

class FoldOverError : public Error {
 public:
  using Error::Error;
};

class TooSmallImageError : public Error {
 public:
  using Error::Error;
};

class DegenerateConfigurationError : public Error {
 public:
  using Error::Error;
};

class InsufficientInliersError : public Error {
 public:
  using Error::Error;
};

class CheiralityError : public Error {
 public:
  using Error::Error;
};

class SingularHomographyError : public Error {
 public:
  using Error::Error;
};

class FrameMismatchError : public Error {
 public:
  using Error::Error;
};

class InsufficientExcitationError : public Error {
 public:
  using Error::Error;
};

class NoMatchesError : public Error {
 public:
  using Error::Error;
};

class TiltedCaptureError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace nrm
