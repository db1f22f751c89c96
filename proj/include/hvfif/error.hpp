#pragma once

#include <stdexcept>
#include <string>

namespace hvfif {

// Library-wide error type. Messages carry the offending detail
// (byte offset, interval index, config key) verbatim.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse failure with the byte offset into the original expression text.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t offset_)
        : Error(what), offset(offset_) {}
    std::size_t offset;
};

} // namespace hvfif
