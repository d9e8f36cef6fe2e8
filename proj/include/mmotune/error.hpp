#pragma once

#include <stdexcept>
#include <string>

namespace mmotune {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed option space or configuration.
class SpaceError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV, JSON, trace).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A measurement oracle failed; the run that issued it is invalid.
class MeasurementError : public Error {
public:
    MeasurementError(const std::string& what, std::string transcript = {})
        : Error(what), transcript_(std::move(transcript)) {}

    const std::string& transcript() const noexcept { return transcript_; }

private:
    std::string transcript_;
};

/// The tabular oracle was asked for a configuration it does not hold.
class UnmeasuredConfiguration : public MeasurementError {
public:
    using MeasurementError::MeasurementError;
};

} // namespace mmotune
