// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file errors.hpp
 *  \brief Error categories; each maps to a CLI exit code.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace debye {

/// Base error; exit_code() is the process exit status used by the CLI.
class Error : public std::runtime_error
{
  public:
    explicit Error(const std::string& what)
        : std::runtime_error(what)
    {
    }
    virtual int exit_code() const
    {
        return 3;
    }
};

/// Invalid input or configuration (exit 2).
class ConfigError : public Error
{
  public:
    using Error::Error;
    int exit_code() const override
    {
        return 2;
    }
};

/// Numerical failure (exit 3).
class NumericalError : public Error
{
  public:
    using Error::Error;
};

/// Regime violation under --strict-regime (exit 4).
class RegimeViolation : public Error
{
  public:
    using Error::Error;
    int exit_code() const override
    {
        return 4;
    }
};

/// Singular or ill-conditioned lattice basis.
class DegenerateLatticeError : public ConfigError
{
  public:
    using ConfigError::ConfigError;
};

/// Source with nonzero mean passed to the periodic Poisson solve.
class SolvabilityError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

/// Chemical potential not inside a spectral gap.
class DielectricityError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

/// Target charge cannot be bracketed.
class UnreachableChargeError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

/// Contour passes too close to a Matsubara pole.
class ContourGeometryError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

} // namespace debye
