// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MIMO_ERRORS_HPP
#define MIMO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mimo {

// Base for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration, dimensions or user input.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Failures of the asymptotic machinery (fixed points, stability, stencils).
class NumericalError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(std::size_t iterations, double residual, const std::string& context = {})
        : NumericalError("fixed point did not converge after " + std::to_string(iterations) +
                         " iterations (residual " + std::to_string(residual) + ")" +
                         (context.empty() ? "" : ": " + context)),
          iterations_(iterations), residual_(residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

// 1 - M_t * M_r <= 0: the saddle point is not a valid (stable) solution.
class StabilityViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A deformation drove I + sqrt(rho) t T J singular or indefinite.
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepTooLarge : public NumericalError {
public:
    StepTooLarge(double step, const std::string& why)
        : NumericalError("finite-difference step " + std::to_string(step) +
                         " leaves the stability region: " + why),
          step_(step) {}
    double step() const noexcept { return step_; }

private:
    double step_;
};

// Monte Carlo batch aborted; carries how many trials had completed.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t completed)
        : Error(what + " (" + std::to_string(completed) + " trials completed)"),
          completed_(completed) {}
    std::size_t completed() const noexcept { return completed_; }

private:
    std::size_t completed_;
};

} // namespace mimo

#endif // MIMO_ERRORS_HPP
