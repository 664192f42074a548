#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace itgkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A graph mutation would break the tree/list structure, or a node violates its kind's rules.
class InvariantError : public Error {
  public:
    using Error::Error;
};

/// Lookup of an id that is not part of the graph or store.
class NotFoundError : public Error {
  public:
    using Error::Error;
};

/// Malformed input. `position` is a byte offset into the input, or npos if not applicable.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t position = npos)
        : Error(position == npos ? what : what + " (at byte " + std::to_string(position) + ")"),
          position_(position) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

  private:
    std::size_t position_;
};

/// Bad arguments or configuration.
class UsageError : public Error {
  public:
    using Error::Error;
};

/// A required input layer (labels, alignment, ...) is absent.
class MissingLayerError : public Error {
  public:
    explicit MissingLayerError(std::string layer)
        : Error("missing layer: " + layer), layer_(std::move(layer)) {}

    [[nodiscard]] const std::string& layer() const noexcept { return layer_; }

  private:
    std::string layer_;
};

}  // namespace itgkit
