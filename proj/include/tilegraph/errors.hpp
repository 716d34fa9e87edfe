#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tilegraph {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed edge-list input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A count or id exceeds what the format or id width can represent.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Bytes that do not decode: bad magic, truncation, bad lengths.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Data that decodes but contradicts other data (degrees vs. tiles, ids vs. |V|).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Peer sent a well-formed frame that violates the superstep protocol.
class ProtocolError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// A vertex program threw while processing a tile.
class ProgramError : public Error {
 public:
  ProgramError(const std::string& what, std::uint32_t tile, std::uint32_t vertex)
      : Error("tile " + std::to_string(tile) + ", vertex " + std::to_string(vertex) + ": " + what),
        tile_(tile),
        vertex_(vertex) {}
  std::uint32_t tile() const noexcept { return tile_; }
  std::uint32_t vertex() const noexcept { return vertex_; }

 private:
  std::uint32_t tile_;
  std::uint32_t vertex_;
};

}  // namespace tilegraph
