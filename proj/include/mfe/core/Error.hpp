/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/core/Error.hpp
 *
 * Copyright 2026 The mfe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MFE_CORE_ERROR_HPP_
#define MFE_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mfe {

/**
 * Base class of all errors thrown by the library. The derived types let
 * callers (and the CLI) tell input problems apart from numerical failures.
 */
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Sample meshes disagree in vertex count, triangulation or uv layout.
class TopologyError : public Error
{
public:
    using Error::Error;
};

/// A requested number of principal components exceeds the data rank.
class RankError : public Error
{
public:
    using Error::Error;
};

/// Array or coefficient lengths do not match.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Malformed or truncated binary/image/mesh file.
class FormatError : public Error
{
public:
    using Error::Error;
};

/// Text file that failed to parse. line() is 1-based, 0 when not applicable.
class ParseError : public Error
{
public:
    ParseError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line)
    {
    }
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A loss was evaluated over an empty mask.
class DegenerateLossError : public Error
{
public:
    using Error::Error;
};

/// The face does not cover any pixel at the initial parameters.
class InitError : public Error
{
public:
    using Error::Error;
};

/// Nothing usable was observed (no valid texels, zero visibility).
class VisibilityError : public Error
{
public:
    using Error::Error;
};

} // namespace mfe

#endif /* MFE_CORE_ERROR_HPP_ */
