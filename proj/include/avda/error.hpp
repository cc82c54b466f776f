/*
 * Copyright 2026 The AVDA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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

namespace avda {

/// Base of every exception thrown by the library. The C API maps each
/// subclass onto one status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or broadcast.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (log of a
/// non-positive entry, KL support violation).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Caller broke an API contract (non-scalar loss, backward twice, unlabeled
/// sample where a label is required).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Invalid hyperparameter or dimension.
class ParameterError : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

/// Malformed input file or configuration; messages carry the row or key.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Binary container problems: bad magic, wrong version, checksum mismatch.
class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// A parameter or loss became NaN/Inf during training.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace avda
