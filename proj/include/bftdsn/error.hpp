/**
 * Copyright 2026 The bftdsn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace bftdsn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic outside the operation's domain (e.g. inverting zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input dimensions or lengths do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds what the field or container can represent.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class InsufficientChunksError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Malformed wire bytes.
class ParseError : public Error {
 public:
  using Error::Error;
};

class LedgerError : public Error {
 public:
  using Error::Error;
};

class ConsensusError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace bftdsn
