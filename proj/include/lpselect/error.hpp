#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lpsel {

enum class Errc {
    malformed_line,
    missing_field,
    duplicate_id,
    unknown_id,
    inconsistent_epoch_count,
    non_positive_perplexity,
    epoch_out_of_range,
    duplicate_score,
    dimension_mismatch,
    too_few_points,
    missing_rank,
    missing_cluster,
    id_set_mismatch,
    too_few,
    empty_set,
    empty_corpus,
    invalid_argument,
};

std::string_view to_string(Errc code);

// Validation failure in user-supplied data or arguments. Carries the source
// line (1-based) when the failure came from a JSONL file.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string detail, std::optional<std::size_t> line = std::nullopt);

    Errc code() const noexcept { return code_; }
    const std::optional<std::size_t>& line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
    std::optional<std::size_t> line_;
};

// Filesystem failure: unreadable input, unwritable output.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lpsel
