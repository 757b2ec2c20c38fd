#include "lpselect/error.hpp"

namespace lpsel {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::malformed_line: return "MalformedLine";
        case Errc::missing_field: return "MissingField";
        case Errc::duplicate_id: return "DuplicateId";
        case Errc::unknown_id: return "UnknownId";
        case Errc::inconsistent_epoch_count: return "InconsistentEpochCount";
        case Errc::non_positive_perplexity: return "NonPositivePerplexity";
        case Errc::epoch_out_of_range: return "EpochOutOfRange";
        case Errc::duplicate_score: return "DuplicateScore";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::too_few_points: return "TooFewPoints";
        case Errc::missing_rank: return "MissingRank";
        case Errc::missing_cluster: return "MissingCluster";
        case Errc::id_set_mismatch: return "IdSetMismatch";
        case Errc::too_few: return "TooFew";
        case Errc::empty_set: return "EmptySet";
        case Errc::empty_corpus: return "EmptyCorpus";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

namespace {

std::string format_error(Errc code, const std::string& detail, const std::optional<std::size_t>& line) {
    std::string msg(to_string(code));
    if (line) {
        msg += " (line " + std::to_string(*line) + ")";
    }
    if (!detail.empty()) {
        msg += ": " + detail;
    }
    return msg;
}

}  // namespace

Error::Error(Errc code, std::string detail, std::optional<std::size_t> line)
    : std::runtime_error(format_error(code, detail, line)), code_(code), detail_(std::move(detail)), line_(line) {}

}  // namespace lpsel
