#include "narrinf/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "narrinf/data.hpp"
#include "narrinf/error.hpp"

namespace narrinf {

void CovariateMatrix::validate() const {
    if (x.cols() < 1) throw InputError("covariate matrix needs at least one column");
    if (column_names.size() != n_cols()) {
        throw InputError("covariate matrix has " + std::to_string(n_cols()) + " columns but " +
                         std::to_string(column_names.size()) + " names");
    }
    if (!x.allFinite()) throw InputError("covariate matrix has non-finite entries");
}

void OutcomeVector::validate() const {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] >= 0.0) || y[i] != std::floor(y[i]) || !std::isfinite(y[i])) {
            throw InputError("outcome " + std::to_string(i) + " is not a nonnegative integer");
        }
    }
}

namespace io {

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InputError("missing CSV column '" + std::string(name) + "'");
}

namespace {

// Splits one logical record; returns false at end of input.
bool next_record(std::istream& is, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (is.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field.push_back('"');
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

CsvTable read_csv(std::istream& is, const std::string& source_name) {
    CsvTable t;
    if (!next_record(is, t.header)) throw InputError(source_name + ": empty CSV");
    std::vector<std::string> fields;
    std::size_t line = 1;
    while (next_record(is, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != t.header.size()) {
            throw InputError(source_name + ":" + std::to_string(line) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        t.rows.push_back(fields);
    }
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    return read_csv(in, path.string());
}

double parse_double(const std::string& s, const std::string& context) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw InputError(context + ": '" + s + "' is not a number");
    }
    return v;
}

long long parse_int(const std::string& s, const std::string& context) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw InputError(context + ": '" + s + "' is not an integer");
    }
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

AtomicOutputs::AtomicOutputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

AtomicOutputs::~AtomicOutputs() {
    std::error_code ec;
    for (const auto& t : temps_) std::filesystem::remove(t, ec);
}

void AtomicOutputs::add(const std::string& name, std::string contents) {
    files_[dir_ / name] = std::move(contents);
}

void AtomicOutputs::add_path(const std::filesystem::path& path, std::string contents) {
    files_[path] = std::move(contents);
}

void AtomicOutputs::commit() {
    const std::string suffix = ".tmp." + std::to_string(::getpid());
    for (const auto& [path, contents] : files_) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        auto tmp = path;
        tmp += suffix;
        temps_.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.close();
        if (!out) throw InputError("cannot write " + tmp.string());
    }
    std::size_t k = 0;
    for (const auto& [path, contents] : files_) std::filesystem::rename(temps_[k++], path);
    temps_.clear();
    files_.clear();
}

}  // namespace io
}  // namespace narrinf
