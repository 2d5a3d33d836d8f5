#pragma once

#include <stdexcept>
#include <string>

namespace taskfft {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A transform length or matrix extent is not usable (zero, not a power of two).
class InvalidSizeError : public Error {
 public:
  using Error::Error;
};

/// Buffer or matrix extents disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A plan was used for a transform kind it was not created for.
class PlanMisuseError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Rows cannot be split evenly across the requested number of parts.
class PartitionError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class RegistryError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure (connect, disconnect, short read). Names the peer.
class CommunicationError : public Error {
 public:
  using Error::Error;
};

/// Peers disagree on collective sequencing or message framing.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A benchmark run produced a spectrum that failed its correctness check.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskfft
