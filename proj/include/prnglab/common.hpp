#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace prnglab {

using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// Thrown when a request asks for more values than a parameter family
// contains; the message names the deficient dimension.
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when dataset sizing cannot satisfy the requested record count.
struct sizing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a context is not explainable by any parameter assignment
// under the stated modulus.
struct inconsistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a sequence is too short for the requested measurement.
struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed or corrupted serialized artifacts (bad magic,
// version mismatch, truncation, digest mismatch, broken index arrays).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on filesystem-level failures (open/read/write).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace prnglab
