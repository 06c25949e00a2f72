// Copyright 2026 The hypermarl-lab Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace hmlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed argument: wrong shape, out-of-range index, bad distribution.
class InputError : public Error {
 public:
  using Error::Error;
};

// Operation not valid in the current state (e.g. stepping a finished episode).
class StateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation requested on a policy variant that does not support it.
class VariantError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class IncompleteGridError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmlab
