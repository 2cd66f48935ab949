#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentpool {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class InvalidLabel : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Raised when a gradient or parameter stops being finite.
class NumericFault : public Error {
public:
    NumericFault(std::string tensor, const std::string& what)
        : Error(what), tensor_(std::move(tensor)) {}
    const std::string& tensor() const noexcept { return tensor_; }

private:
    std::string tensor_;
};

// Positioned parse failure. `position` is a byte offset for binary inputs
// and a 1-based line number for line-oriented text inputs.
class ParseError : public Error {
public:
    enum class Unit { byte_offset, line };

    ParseError(Unit unit, std::size_t position, const std::string& what)
        : Error(what), unit_(unit), position_(position) {}

    Unit unit() const noexcept { return unit_; }
    std::size_t position() const noexcept { return position_; }

private:
    Unit unit_;
    std::size_t position_;
};

// Loaded corpus disagrees with its published statistics.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class DivergedError : public Error {
public:
    DivergedError(std::size_t epoch, std::size_t example, const std::string& what)
        : Error(what), epoch_(epoch), example_(example) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t example() const noexcept { return example_; }

private:
    std::size_t epoch_;
    std::size_t example_;
};

// A required input (prepared corpus, embeddings) is absent.
class MissingInput : public Error {
public:
    using Error::Error;
};

// A report was requested over cells that have not completed.
class IncompleteGrid : public Error {
public:
    IncompleteGrid(std::vector<std::string> missing, const std::string& what)
        : Error(what), missing_(std::move(missing)) {}
    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

}  // namespace sentpool
