#include "narrinf/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "narrinf/error.hpp"

namespace narrinf {

using nlohmann::json;

namespace {

std::string fold(std::string_view s, bool case_sensitive) {
    std::string out(s);
    if (!case_sensitive) {
        for (auto& c : out) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::string strip_hash(std::string_view tag) {
    if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
    return std::string(tag);
}

// Accepts strings and integers for identifiers.
std::optional<std::string> id_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (it->is_string()) {
        auto s = it->get<std::string>();
        if (s.empty()) return std::nullopt;
        return s;
    }
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return std::nullopt;
}

std::optional<TweetRecord> parse_line(const std::string& line) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) return std::nullopt;

    TweetRecord r;
    auto tweet_id = id_field(obj, "tweet_id");
    auto user_id = id_field(obj, "user_id");
    auto created = obj.find("created_at");
    if (!tweet_id || !user_id || created == obj.end() || !created->is_string()) return std::nullopt;
    auto ts = parse_timestamp(created->get<std::string>());
    if (!ts) return std::nullopt;
    r.tweet_id = *tweet_id;
    r.user_id = *user_id;
    r.created_at = *ts;

    if (auto it = obj.find("screen_name"); it != obj.end() && it->is_string()) r.screen_name = it->get<std::string>();
    if (auto it = obj.find("text"); it != obj.end() && it->is_string()) r.text = it->get<std::string>();
    if (auto it = obj.find("lang"); it != obj.end() && it->is_string() && !it->get<std::string>().empty()) {
        r.lang = it->get<std::string>();
    }
    if (auto it = obj.find("hashtags"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) return std::nullopt;
        for (const auto& tag : *it) {
            if (!tag.is_string()) return std::nullopt;
            r.hashtags.push_back(tag.get<std::string>());
        }
    }
    if (auto it = obj.find("followers_count"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long long>() < 0) return std::nullopt;
        r.followers_count = it->get<long long>();
    }
    if (auto it = obj.find("retweet_of"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) return std::nullopt;
        auto ru = id_field(*it, "user_id");
        auto rt = id_field(*it, "tweet_id");
        if (!ru || !rt || *ru == r.user_id) return std::nullopt;
        r.retweet_of = RetweetRef{*ru, *rt};
    }
    return r;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, consumed = 0;
    const std::string str(text);
    if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6 ||
        consumed != 19) {
        return std::nullopt;
    }
    std::string_view rest = text.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        rest.remove_prefix(1);
        std::size_t digits = 0;
        while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
        if (digits == 0) return std::nullopt;
        rest.remove_prefix(digits);
    }
    if (rest != "Z" && rest != "+00:00") return std::nullopt;
    if (h > 23 || mi > 59 || s > 60) return std::nullopt;

    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    Timestamp days = t / 86400;
    Timestamp rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                  static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
    return buf;
}

ParsedRecords parse_records(std::istream& lines) {
    ParsedRecords out;
    std::unordered_set<std::string> seen;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto rec = parse_line(line);
        if (!rec || !seen.insert(rec->tweet_id).second) {
            ++out.skipped;
            continue;
        }
        out.records.push_back(std::move(*rec));
    }
    if (out.records.empty()) {
        throw InputError("no valid records (" + std::to_string(out.skipped) + " lines skipped)");
    }
    return out;
}

std::string to_json_line(const TweetRecord& r) {
    json obj = {{"tweet_id", r.tweet_id},       {"created_at", format_timestamp(r.created_at)},
                {"user_id", r.user_id},         {"screen_name", r.screen_name},
                {"text", r.text},               {"lang", r.lang},
                {"hashtags", r.hashtags}};
    if (r.followers_count) obj["followers_count"] = *r.followers_count;
    if (r.retweet_of) obj["retweet_of"] = {{"user_id", r.retweet_of->user_id}, {"tweet_id", r.retweet_of->tweet_id}};
    return obj.dump();
}

NarrativeSpec NarrativeSpec::from_json(std::string_view text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw InputError("narrative spec is not a JSON object");
    NarrativeSpec spec;
    auto strings = [&](const char* key, std::vector<std::string>& dst) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return;
        if (!it->is_array()) throw InputError(std::string("narrative spec field '") + key + "' must be a list");
        for (const auto& v : *it) {
            if (!v.is_string()) throw InputError(std::string("narrative spec field '") + key + "' must hold strings");
            dst.push_back(v.get<std::string>());
        }
    };
    strings("hashtags", spec.hashtags);
    strings("keywords", spec.keywords);
    if (auto it = obj.find("case_sensitive"); it != obj.end() && !it->is_null()) {
        if (!it->is_boolean()) throw InputError("narrative spec field 'case_sensitive' must be a boolean");
        spec.case_sensitive = it->get<bool>();
    }
    if (spec.empty()) throw InputError("narrative spec needs at least one hashtag or keyword");
    return spec;
}

std::vector<TweetRecord> filter_narrative(const std::vector<TweetRecord>& records, const NarrativeSpec& spec) {
    if (spec.empty()) throw InputError("narrative spec needs at least one hashtag or keyword");
    const bool cs = spec.case_sensitive;
    std::unordered_set<std::string> tags;
    for (const auto& t : spec.hashtags) tags.insert(fold(strip_hash(t), cs));
    std::vector<std::string> keywords;
    for (const auto& k : spec.keywords) {
        if (!k.empty()) keywords.push_back(fold(k, cs));
    }

    std::vector<char> direct(records.size(), 0);
    std::unordered_set<std::string> matched_ids;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        bool hit = std::any_of(rec.hashtags.begin(), rec.hashtags.end(),
                               [&](const std::string& h) { return tags.count(fold(strip_hash(h), cs)) > 0; });
        if (!hit && !keywords.empty()) {
            const std::string text = fold(rec.text, cs);
            hit = std::any_of(keywords.begin(), keywords.end(),
                              [&](const std::string& k) { return text.find(k) != std::string::npos; });
        }
        if (hit) {
            direct[r] = 1;
            matched_ids.insert(rec.tweet_id);
        }
    }

    std::vector<TweetRecord> out;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (direct[r] || (rec.retweet_of && matched_ids.count(rec.retweet_of->tweet_id))) out.push_back(rec);
    }
    return out;
}

RetweetGraph build_retweet_graph(const std::vector<TweetRecord>& records) {
    RetweetGraph out;
    std::vector<std::string> ids;
    auto intern = [&](const std::string& id) {
        if (out.index.try_emplace(id, ids.size()).second) ids.push_back(id);
    };
    std::unordered_map<std::string, Timestamp> first_tweet;
    for (const auto& r : records) {
        intern(r.user_id);
        if (r.retweet_of) intern(r.retweet_of->user_id);
        auto [it, inserted] = first_tweet.try_emplace(r.user_id, r.created_at);
        if (!inserted) it->second = std::min(it->second, r.created_at);
    }

    std::vector<WeightedEdge> edges;
    for (const auto& r : records) {
        if (!r.retweet_of) continue;
        const auto& src = r.retweet_of->user_id;
        auto first = first_tweet.find(src);
        if (first == first_tweet.end()) {
            out.warnings.push_back("tweet " + r.tweet_id + ": retweeted account '" + src +
                                   "' has no narrative tweet in the set; edge excluded");
            continue;
        }
        if (r.created_at < first->second) {
            out.warnings.push_back("tweet " + r.tweet_id + ": retweet at " + format_timestamp(r.created_at) +
                                   " precedes first narrative tweet of '" + src + "'; edge excluded");
            continue;
        }
        edges.push_back({src, r.user_id, 1.0});
    }
    auto built = build_influence_graph(ids, edges);
    out.graph = std::move(built.graph);
    out.warnings.insert(out.warnings.end(), built.warnings.begin(), built.warnings.end());
    return out;
}

CovariateMatrix extract_covariates(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                                   const VertexIndex& index) {
    const std::size_t n = g.n_vertices();
    std::map<std::string, long long> overall;
    std::vector<std::map<std::string, long long>> per_vertex(n);
    for (const auto& r : records) {
        auto it = index.find(r.user_id);
        if (it == index.end()) throw InputError("record author '" + r.user_id + "' is not a graph vertex");
        ++overall[r.lang];
        ++per_vertex[it->second][r.lang];
    }

    // std::map iterates keys in order, so strict '>' keeps the smaller code on ties.
    auto argmax = [](const std::map<std::string, long long>& counts) {
        std::string best;
        long long best_count = -1;
        for (const auto& [lang, c] : counts) {
            if (c > best_count) {
                best = lang;
                best_count = c;
            }
        }
        return best;
    };
    const std::string reference = argmax(overall);
    std::vector<std::string> majority(n, reference);
    std::set<std::string> langs;
    for (std::size_t i = 0; i < n; ++i) {
        if (per_vertex[i].empty()) continue;
        majority[i] = argmax(per_vertex[i]);
        if (majority[i] != reference) langs.insert(majority[i]);
    }

    CovariateMatrix cov;
    const auto rows = static_cast<Eigen::Index>(n);
    cov.x = Eigen::MatrixXd::Zero(rows, 1 + static_cast<Eigen::Index>(langs.size()));
    cov.column_names = {"popularity"};
    cov.x.col(0) = degrees(g).out_degree.array().log1p().matrix();
    std::map<std::string, Eigen::Index> column;
    for (const auto& lang : langs) {
        column[lang] = static_cast<Eigen::Index>(cov.column_names.size());
        cov.column_names.push_back("lang_" + lang);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto it = column.find(majority[i]);
        if (it != column.end()) cov.x(static_cast<Eigen::Index>(i), it->second) = 1.0;
    }
    return cov;
}

OutcomeVector compute_outcomes(const std::vector<TweetRecord>& records, const VertexIndex& index) {
    OutcomeVector y{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index.size()))};
    for (const auto& r : records) {
        auto it = index.find(r.user_id);
        if (it == index.end()) throw InputError("record author '" + r.user_id + "' is not in the vertex index");
        if (it->second >= index.size()) throw InputError("vertex index is not contiguous");
        y.y[static_cast<Eigen::Index>(it->second)] += 1.0;
    }
    return y;
}

SourceVector infer_sources(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                           const VertexIndex& index, const std::vector<std::string>& explicit_sources) {
    const std::size_t n = g.n_vertices();
    SourceVector z(n);

    if (!explicit_sources.empty()) {
        std::unordered_map<std::string, std::size_t> by_name;
        for (const auto& r : records) {
            auto it = index.find(r.user_id);
            if (it != index.end() && !r.screen_name.empty()) by_name.emplace(r.screen_name, it->second);
        }
        for (const auto& raw : explicit_sources) {
            if (auto it = index.find(raw); it != index.end()) {
                z.set(it->second, true);
                continue;
            }
            const std::string name = raw.size() > 1 && raw.front() == '@' ? raw.substr(1) : raw;
            auto it = by_name.find(name);
            if (it == by_name.end()) throw InputError("explicit source '" + raw + "' is not in the graph");
            z.set(it->second, true);
        }
        return z;
    }

    std::vector<std::optional<Timestamp>> first(n);
    for (const auto& r : records) {
        auto it = index.find(r.user_id);
        if (it == index.end()) throw InputError("record author '" + r.user_id + "' is not in the vertex index");
        auto& f = first[it->second];
        if (!f || r.created_at < *f) f = r.created_at;
    }
    std::vector<char> preceded(n, 0);
    const auto& a = g.influence();
    for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
        const auto& fi = first[static_cast<std::size_t>(i)];
        if (!fi) continue;
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
            const auto j = static_cast<std::size_t>(it.col());
            if (first[j] && *fi < *first[j]) preceded[j] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) z.set(i, first[i].has_value() && !preceded[i]);
    return z;
}

std::vector<VertexStats> vertex_stats(const std::vector<TweetRecord>& records, const InfluenceGraph& g,
                                      const VertexIndex& index) {
    std::vector<VertexStats> out(g.n_vertices());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].screen_name = g.vertex_ids()[i];
    std::vector<char> named(out.size(), 0);
    std::map<std::pair<std::size_t, std::string>, long long> per_tweet;
    for (const auto& r : records) {
        auto it = index.find(r.user_id);
        if (it == index.end()) throw InputError("record author '" + r.user_id + "' is not in the vertex index");
        auto& st = out[it->second];
        ++st.tweets;
        if (!r.screen_name.empty() && !named[it->second]) {
            st.screen_name = r.screen_name;
            named[it->second] = 1;
        }
        if (r.followers_count) st.followers = std::max(st.followers.value_or(0), *r.followers_count);
        if (!st.first_time || r.created_at < *st.first_time) st.first_time = r.created_at;
        if (r.retweet_of) {
            auto src = index.find(r.retweet_of->user_id);
            if (src == index.end()) continue;
            ++out[src->second].total_retweets;
            const long long c = ++per_tweet[{src->second, r.retweet_of->tweet_id}];
            out[src->second].most_retweeted = std::max(out[src->second].most_retweeted, c);
        }
    }
    return out;
}

}  // namespace narrinf
