#pragma once

#include <stdexcept>
#include <string>

namespace schemalink {

/// Malformed input text (JSON, SQL, DDL). Carries a position when one is known.
class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string& what, std::size_t position = npos)
        : std::runtime_error(what), position_(position) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    bool has_position() const { return position_ != npos; }
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

/// Structurally valid input that violates a cross-reference invariant
/// (dangling key index, unknown column, schema mismatch).
class IntegrityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A name in a query that cannot be resolved: unknown alias, unknown
/// column, or an unqualified column matching more than one table in scope.
class ResolutionError : public IntegrityError {
  public:
    using IntegrityError::IntegrityError;
};

/// Input that fails a declared contract of an operation (bad shapes,
/// out-of-range thresholds, duplicate records).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure: missing file, unreadable path, failed write.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace schemalink
