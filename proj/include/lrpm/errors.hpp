#pragma once

#include <stdexcept>
#include <string>

namespace lrpm {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public UsageError {
public:
    using UsageError::UsageError;
};

class InvalidPanel : public UsageError {
public:
    using UsageError::UsageError;
};

/// A rule was requested for a (configuration, component, attribute) cell where it does not exist.
class NotApplicable : public UsageError {
public:
    using UsageError::UsageError;
};

/// No in-bounds instantiation was found for a sampled rule assignment.
class GenerationExhausted : public Error {
public:
    using Error::Error;
};

class NoConsistentRules : public Error {
public:
    using Error::Error;
};

/// Neural rule inference accepted no rule, so options cannot be scored.
class EmptyRuleSet : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class DegenerateLabels : public Error {
public:
    using Error::Error;
};

class MissingNet : public Error {
public:
    using Error::Error;
};

class MissingPrerequisite : public Error {
public:
    using Error::Error;
};

/// Malformed or version-incompatible artifact on disk.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace lrpm
