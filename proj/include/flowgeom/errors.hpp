#ifndef FLOWGEOM_ERRORS_HPP
#define FLOWGEOM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowgeom {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that fails a documented precondition (bad sizes, empty lists, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t a, std::size_t b)
        : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class TooShort : public Error {
public:
    TooShort(std::size_t length, std::size_t required)
        : Error("series too short: length " + std::to_string(length) + ", need at least " +
                std::to_string(required)),
          length_(length) {}
    std::size_t length() const { return length_; }

private:
    std::size_t length_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Formula syntax error with the byte offset and the set of tokens that would
/// have been accepted there.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found);
    std::size_t position() const { return position_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

class RecordError : public Error {
public:
    using Error::Error;
};

class MissingField : public RecordError {
public:
    explicit MissingField(const std::string& field)
        : RecordError("missing field: " + field), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class BadStepPrefix : public RecordError {
public:
    explicit BadStepPrefix(const std::string& line)
        : RecordError("step line lacks a [k] prefix: " + line), line_(line) {}
    const std::string& line() const { return line_; }

private:
    std::string line_;
};

class DuplicateIndex : public RecordError {
public:
    explicit DuplicateIndex(int index)
        : RecordError("duplicate step index [" + std::to_string(index) + "]"), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus contains no accepted records") {}
};

// Flow file format errors.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

class BadMagic : public FormatError {
public:
    BadMagic() : FormatError("flow file: bad magic (expected RFLW)") {}
};

class UnsupportedVersion : public FormatError {
public:
    explicit UnsupportedVersion(unsigned v)
        : FormatError("flow file: unsupported version " + std::to_string(v)) {}
};

class TruncatedPayload : public FormatError {
public:
    explicit TruncatedPayload(const std::string& what) : FormatError("flow file truncated: " + what) {}
};

/// Raised by embedding backends. `failed_index` is the first input index of the
/// request that failed, when known.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what, std::ptrdiff_t failed_index = -1)
        : Error(what), failed_index_(failed_index) {}
    std::ptrdiff_t failed_index() const { return failed_index_; }

private:
    std::ptrdiff_t failed_index_;
};

class EndpointError : public ProviderError {
public:
    EndpointError(int status, const std::string& body_excerpt, std::ptrdiff_t failed_index = -1);
    int status() const { return status_; }

private:
    int status_;
};

class DegenerateTriple : public Error {
public:
    DegenerateTriple() : Error("degenerate triple: points are collinear or coincident") {}
};

class UnknownFlowId : public Error {
public:
    explicit UnknownFlowId(const std::string& id) : Error("unknown flow id: " + id) {}
};

}  // namespace flowgeom

#endif  // FLOWGEOM_ERRORS_HPP
