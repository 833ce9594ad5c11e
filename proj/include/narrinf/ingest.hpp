#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "narrinf/data.hpp"
#include "narrinf/graph.hpp"

namespace narrinf {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00)". Returns nullopt when malformed.
std::optional<Timestamp> parse_timestamp(std::string_view text);
/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

struct RetweetRef {
    std::string user_id;
    std::string tweet_id;
};

struct TweetRecord {
    std::string tweet_id;
    Timestamp created_at = 0;
    std::string user_id;
    std::string screen_name;
    std::string text;
    std::string lang = "und";
    std::vector<std::string> hashtags;
    std::optional<long long> followers_count;
    std::optional<RetweetRef> retweet_of;
};

struct ParsedRecords {
    std::vector<TweetRecord> records;
    std::size_t skipped = 0;
};

/// One JSON object per line. Lines that are not valid JSON, lack tweet_id,
/// created_at or user_id, carry an unparseable timestamp, retweet their own
/// author, or repeat an earlier tweet_id are skipped and counted. Throws
/// InputError when no line is valid.
ParsedRecords parse_records(std::istream& lines);

/// Serializes one record as a JSON line (no trailing newline).
std::string to_json_line(const TweetRecord& r);

struct NarrativeSpec {
    std::vector<std::string> hashtags;
    std::vector<std::string> keywords;
    bool case_sensitive = false;

    bool empty() const { return hashtags.empty() && keywords.empty(); }
    static NarrativeSpec from_json(std::string_view json);
};

/// Keeps a record when one of its hashtags equals a spec hashtag (leading '#'
/// ignored), when a spec keyword occurs in its text, or when it retweets a
/// kept tweet. Matching ignores case unless spec.case_sensitive. Throws
/// InputError for an empty spec.
std::vector<TweetRecord> filter_narrative(const std::vector<TweetRecord>& records, const NarrativeSpec& spec);

using VertexIndex = std::unordered_map<std::string, std::size_t>;

struct RetweetGraph {
    InfluenceGraph graph;
    VertexIndex index;
    std::vector<std::string> warnings;
};

/// Vertices are all authors and retweeted accounts in record order. Edge
/// i -> j counts the retweets of i by j made no earlier than i's first tweet
/// in the set; retweets of accounts without a tweet in the set, or made
/// before it, are excluded with a warning.
RetweetGraph build_retweet_graph(const std::vector<TweetRecord>& records);

/// Column "popularity" = log(1 + out_degree), then one-hot columns
/// "lang_<code>" of each account's majority language (ties to the
/// lexicographically smaller code). The most frequent language over all
/// records is the dropped reference; accounts without records fall in it.
CovariateMatrix extract_covariates(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                                   const VertexIndex& index);

/// y_i = number of records authored by vertex i. Throws InputError for an
/// author missing from the index.
OutcomeVector compute_outcomes(const std::vector<TweetRecord>& records, const VertexIndex& index);

/// z_i = 1 when vertex i tweeted and no in-neighbour tweeted strictly
/// earlier. A non-empty `explicit_sources` (user ids or screen names, '@'
/// optional) replaces the rule; unknown entries throw InputError.
SourceVector infer_sources(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                           const VertexIndex& index, const std::vector<std::string>& explicit_sources = {});

/// Per-account activity used by the report.
struct VertexStats {
    std::string screen_name;
    long long tweets = 0;          // records authored
    long long total_retweets = 0;  // retweet records pointing at the account
    long long most_retweeted = 0;  // retweets of the account's most retweeted tweet
    std::optional<long long> followers;
    std::optional<Timestamp> first_time;
};

std::vector<VertexStats> vertex_stats(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                                      const VertexIndex& index);

}  // namespace narrinf
