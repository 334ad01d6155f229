#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aer {

/// Base class for all errors raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; `line` is 1-based, 0 when not line-specific.
class IngestError : public Error {
public:
    IngestError(std::string path, std::size_t line, const std::string& what)
        : Error(path + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          path_(std::move(path)), line_(line) {}
    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// A scoring request referenced a document the index does not contain.
class IndexMismatchError : public Error {
public:
    using Error::Error;
};

/// Remote call failed after all retries.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage could not find the artifact an earlier stage should have written.
class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(std::string path)
        : Error("missing upstream artifact: expected file '" + path + "'"), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace aer
