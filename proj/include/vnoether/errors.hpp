#pragma once

#include <stdexcept>
#include <string>

namespace vnoether
{
    // Base of every error raised by the library.
    class Error : public std::runtime_error
    {
        public:
            using std::runtime_error::runtime_error;
    };

    // Reference to an undeclared symbol, duplicate or inconsistent declaration,
    // parity mismatch between a ghost and its Noether operator.
    class DeclarationError : public Error
    {
        public:
            using Error::Error;
    };

    // An operation would produce a jet variable above the chart's jet cap.
    class TruncationError : public Error
    {
        public:
            using Error::Error;
    };

    // Evaluation with an unassigned variable.
    class EvaluationError : public Error
    {
        public:
            using Error::Error;
    };

    // Input outside the supported fragment (non-vertical derivation where a
    // vertical one is required, ghost-nonlinear expression, ...).
    class UnsupportedError : public Error
    {
        public:
            using Error::Error;
    };

    // A mathematical consistency check failed (invalid witness, broken
    // structural equation, refused identity).
    class ConsistencyError : public Error
    {
        public:
            using Error::Error;
    };

    // Ansatz or search bound exhausted before a witness was found.
    class ResourceError : public Error
    {
        public:
            using Error::Error;
    };

    class ParseError : public Error
    {
        public:
            ParseError(const std::string& message, int line, int column)
                : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
                  line_(line), column_(column)
            {
            }

            int line() const noexcept { return line_; }
            int column() const noexcept { return column_; }

        private:
            int line_;
            int column_;
    };
}
