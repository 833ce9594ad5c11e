#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace narrinf::io {

/// RFC 4180 quoting, applied only when the field needs it.
std::string csv_escape(std::string_view field);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position; throws InputError when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a header plus rows; every row must have the header's width.
CsvTable read_csv(std::istream& is, const std::string& source_name = "<csv>");
CsvTable read_csv_file(const std::filesystem::path& path);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Collects output files and publishes them together: each is written to a
/// temporary sibling and renamed into place only by commit(). Nothing is
/// published if the object is destroyed before commit().
class AtomicOutputs {
public:
    explicit AtomicOutputs(std::filesystem::path dir);
    AtomicOutputs(const AtomicOutputs&) = delete;
    AtomicOutputs& operator=(const AtomicOutputs&) = delete;
    ~AtomicOutputs();

    void add(const std::string& name, std::string contents);
    void add_path(const std::filesystem::path& path, std::string contents);
    const std::map<std::filesystem::path, std::string>& pending() const { return files_; }

    /// Writes every file to a temp name, then renames all of them.
    void commit();

private:
    std::filesystem::path dir_;
    std::map<std::filesystem::path, std::string> files_;
    std::vector<std::filesystem::path> temps_;
};

}  // namespace narrinf::io
