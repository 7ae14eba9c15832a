#pragma once

#include <stdexcept>
#include <string>

namespace gsplan {

/// File or document does not match the expected layout.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Well-formed input carrying invalid values (NaN, out-of-range, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller violated a documented precondition.
class PreconditionError : public std::logic_error {
public:
    explicit PreconditionError(const std::string& msg) : std::logic_error(msg) {}
};

/// Orchestration-level failure (missing stage outputs, enhancer failures, ...).
class PipelineError : public std::runtime_error {
public:
    explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gsplan
