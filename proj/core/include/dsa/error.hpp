#pragma once

#include <stdexcept>
#include <string>

namespace dsa {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Invariant or cross-reference violation; `element()` names the offender.
class ValidationError : public Error {
public:
    ValidationError(std::string element, const std::string& what)
        : Error(what), element_(std::move(element)) {}
    const std::string& element() const noexcept { return element_; }

private:
    std::string element_;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class LimitError : public Error {
public:
    using Error::Error;
};

class UnknownElementError : public Error {
public:
    using Error::Error;
};

class AlreadyOutError : public Error {
public:
    using Error::Error;
};

class SingularJacobianError : public Error {
public:
    SingularJacobianError(int iteration, const std::string& what)
        : Error(what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class IslandError : public Error {
public:
    using Error::Error;
};

class NotConvergedError : public Error {
public:
    using Error::Error;
};

class InitError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(double time_s, const std::string& what) : Error(what), time_(time_s) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class NoMachinesError : public Error {
public:
    using Error::Error;
};

class TraceTooShortError : public Error {
public:
    using Error::Error;
};

class EmptyTraceError : public Error {
public:
    using Error::Error;
};

class SingleMachineError : public Error {
public:
    using Error::Error;
};

class BasecaseInsecureError : public Error {
public:
    using Error::Error;
};

class UnknownProfileError : public Error {
public:
    using Error::Error;
};

class EmptyWindowError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A bounded resource (what-if slots) is exhausted.
class BusyError : public Error {
public:
    using Error::Error;
};

/// The service could not bind its listen address.
class BindError : public Error {
public:
    using Error::Error;
};

}  // namespace dsa
